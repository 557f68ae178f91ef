import pytest

# criterion number -> list of (passed, detail), filled as acceptance tests finish
_VERDICTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when == "teardown" or (rep.when == "setup" and rep.passed):
        return
    msg = dict(item.user_properties).get("detail", "")
    if not rep.passed:
        crash = getattr(rep.longrepr, "reprcrash", None)
        reason = crash.message.splitlines()[0] if crash else "error"
        msg = f"{msg} ({reason})" if msg else reason
    _VERDICTS.setdefault(mark.args[0], []).append((rep.passed, msg))


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_VERDICTS):
        rows = _VERDICTS[n]
        ok = all(p for p, _ in rows)
        detail = "; ".join(m for _, m in rows if m)
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip())
