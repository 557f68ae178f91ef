"""Command-line front end.

Each subcommand reads flat settings from an optional TOML file (``--config``),
lets command-line flags override them, calls the library, and writes
results.json, results.csv and (with ``--plot``) SVG figures to ``--out``.

Exit codes: 0 success, 2 configuration error, 3 runtime (solver) error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import artifacts, plots
from .errors import ConfigError, PhiMeansError
from .experiments import consistency_curve, uniform_consistency_curve, uniqueness_check
from .loss import Measure
from .phi import check_membership, gamma, gamma_estimate, parse_phi
from .sampling import isotropic_sample, parse_profile
from .solvers import Method, SolverConfig, solve
from .spaces import base_point, parse_space

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

COMMANDS = ("solve", "consistency", "uniform-consistency", "uniqueness", "check-phi", "plot")
SOLVER_KEYS = ("max_iters", "tol", "grid_levels", "grid_points_per_level", "step_size",
               "step_rule", "inner_solver", "region_radius", "max_step")
COMMON_DEFAULTS = {"out": "out", "seed": 0, "plot": False, "threads": None, "timing": False}
DEFAULTS = {
    "solve": {"space": None, "phi": None, "measure": None, "profile": None, "n": None,
              "center": None, "init": None, "method": "auto"},
    "consistency": {"space": None, "phi": None, "profile": None, "sizes": None,
                    "replicates": 50, "center": None, "method": "auto"},
    "uniform-consistency": {"space": None, "p_grid": None, "profile": None, "sizes": None,
                            "replicates": 50, "center": None, "method": "auto"},
    "uniqueness": {"space": None, "phis": None, "profile": None, "n": None, "center": None,
                   "method": "auto"},
    "check-phi": {"phi": None, "grid_max": 20.0},
    "plot": {},
}


@dataclass
class RunConfig:
    command: str
    settings: dict
    solver: SolverConfig = field(default_factory=SolverConfig)

    @property
    def out(self) -> Path:
        return Path(self.settings["out"])

    def get(self, key, required: bool = True):
        value = self.settings.get(key)
        if required and value is None:
            raise ConfigError(f"{self.command}: missing required field {key!r}")
        return value


# --------------------------------------------------------------------------
# argument parsing


def _add_common(p: argparse.ArgumentParser, solver: bool = False) -> None:
    p.add_argument("--config", help="TOML file with settings (flags override it)")
    p.add_argument("--out", help="output directory (default: out)")
    p.add_argument("--seed", type=int, help="base RNG seed (default: 0)")
    p.add_argument("--plot", action="store_true", default=None, help="write SVG figures")
    p.add_argument("--threads", type=int, help="worker threads (also capped by PHIMEANS_THREADS)")
    p.add_argument("--timing", action="store_true", default=None,
                   help="record wall-clock times (makes artifacts non-reproducible)")
    if solver:
        p.add_argument("--method", choices=[m.value for m in Method])
        p.add_argument("--max-iters", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--grid-levels", type=int)
        p.add_argument("--grid-points-per-level", type=int)
        p.add_argument("--step-size", type=float)
        p.add_argument("--step-rule", choices=["fixed", "bb"])
        p.add_argument("--inner-solver", choices=["auto", "closed-form", "grid", "gradient"])
        p.add_argument("--region-radius", type=float)
        p.add_argument("--max-step", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="phimeans", description="Generalized Frechet means (phi-means).")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="compute the phi-mean of one measure")
    p.add_argument("--space", help="circle, torus:N, sphere:N, euclidean:N, projective:N")
    p.add_argument("--phi", help="power:P, exp:BASE or linear:SLOPE")
    p.add_argument("--measure", help="CSV (one point per row) or measure JSON file")
    p.add_argument("--profile", help="sample the measure instead: exp:K, linear:R or step:R")
    p.add_argument("--n", type=int, help="sample size when sampling")
    p.add_argument("--center", help="comma-separated center of the sampled law")
    p.add_argument("--init", help="comma-separated starting point")
    _add_common(p, solver=True)

    for name, what in (("consistency", "rho_inf against n for one phi"),
                       ("uniform-consistency", "sup over a power family of rho_inf against n")):
        p = sub.add_parser(name, help=what)
        p.add_argument("--space")
        if name == "consistency":
            p.add_argument("--phi")
        else:
            p.add_argument("--p-grid", help="comma-separated exponents, e.g. 1.25,1.5,2,3")
        p.add_argument("--profile")
        p.add_argument("--sizes", help="comma-separated sample sizes")
        p.add_argument("--replicates", type=int)
        p.add_argument("--center")
        _add_common(p, solver=True)

    p = sub.add_parser("uniqueness", help="distance of several phi-means to the center")
    p.add_argument("--space")
    p.add_argument("--phis", help="comma-separated list, e.g. power:2,exp:2")
    p.add_argument("--profile")
    p.add_argument("--n", type=int)
    p.add_argument("--center")
    _add_common(p, solver=True)

    p = sub.add_parser("check-phi", help="growth constant and membership flags of phi")
    p.add_argument("--phi")
    p.add_argument("--grid-max", type=float)
    _add_common(p)

    p = sub.add_parser("plot", help="regenerate SVG figures from results.csv in --out")
    _add_common(p)
    return ap


def _read_toml(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} does not exist") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return {k.replace("-", "_"): v for k, v in data.items()}


def load_config(args: argparse.Namespace) -> RunConfig:
    cmd = args.command
    known = {**COMMON_DEFAULTS, **DEFAULTS[cmd]}
    if cmd not in ("check-phi", "plot"):
        known.update({k: None for k in SOLVER_KEYS})
    settings = dict(known)
    if args.config:
        file_settings = _read_toml(args.config)
        for key in file_settings:
            if key not in known:
                raise ConfigError(f"{args.config}: unknown field {key!r} for {cmd}")
        settings.update(file_settings)
    for key, value in vars(args).items():
        if key in known and value is not None:
            settings[key] = value
    solver_kw = {k: settings[k] for k in SOLVER_KEYS if settings.get(k) is not None}
    try:
        solver = SolverConfig(**solver_kw)
    except (PhiMeansError, ValueError, TypeError) as exc:
        raise ConfigError(f"solver settings: {exc}") from None
    return RunConfig(cmd, settings, solver)


def _floats(value, name) -> list:
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    try:
        return [float(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected a comma-separated list of numbers") from None


def _ints(value, name) -> list:
    out = _floats(value, name)
    if any(v != int(v) or v < 1 for v in out):
        raise ConfigError(f"{name}: expected positive integers")
    return [int(v) for v in out]


def _strings(value) -> list:
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    return [str(v) for v in value]


def _point(space, value, name):
    if value is None:
        return base_point(space)
    pt = np.asarray(_floats(value, name))
    try:
        return space.validate(space.normalize(pt))
    except PhiMeansError as exc:
        raise ConfigError(f"{name}: {exc}") from None


def _parsed(fn, value, name):
    try:
        return fn(value)
    except PhiMeansError as exc:
        raise ConfigError(f"{name}: {exc}") from None


# --------------------------------------------------------------------------
# commands


def _prepare_out(cfg: RunConfig) -> Path:
    out = cfg.out
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from None
    return out


def _measure(cfg: RunConfig, space) -> Measure:
    path, profile = cfg.get("measure", False), cfg.get("profile", False)
    if (path is None) == (profile is None):
        raise ConfigError("solve: give exactly one of --measure or --profile")
    if path is not None:
        return artifacts.load_measure(path, space)
    prof = _parsed(parse_profile, profile, "profile")
    n = cfg.get("n")
    center = _point(space, cfg.get("center", False), "center")
    return Measure(space, isotropic_sample(space, center, prof, int(n), int(cfg.get("seed"))))


def cmd_solve(cfg: RunConfig) -> int:
    phi = _parsed(parse_phi, cfg.get("phi"), "phi")
    if cfg.get("space", False) is None and cfg.get("measure", False) is not None:
        # a JSON measure carries its own space
        mu = artifacts.load_measure(cfg.get("measure"))
        space = mu.space
    else:
        space = _parsed(parse_space, cfg.get("space"), "space")
        mu = _measure(cfg, space)
    init = cfg.get("init", False)
    init = None if init is None else _point(space, init, "init")
    method = _parsed(Method, cfg.get("method"), "method")
    out = _prepare_out(cfg)
    report = solve(phi, mu, method, cfg.solver, init=init)
    timing = bool(cfg.get("timing"))
    artifacts.write_json(out / "results.json", {
        "command": "solve", "config": _jsonable(cfg.settings),
        "result": artifacts.report_to_json(report, timing)})
    artifacts.write_trace_csv(out / "trace.csv", report, space)
    artifacts.write_csv(out / "results.csv", artifacts.RESULT_COLUMNS, [
        ("solve", 0, len(mu), artifacts.phi_label(phi), None, report.final_loss,
         report.wall_time * 1e3 if timing else None)])
    if cfg.get("plot"):
        write_plots(out)
    print(f"estimate: {' '.join(repr(float(v)) for v in report.estimate)}")
    print(f"loss: {report.final_loss!r}")
    print(f"termination: {report.termination.value} after {report.iterations} iterations")
    return 0


def _curve_inputs(cfg: RunConfig):
    space = _parsed(parse_space, cfg.get("space"), "space")
    profile = _parsed(parse_profile, cfg.get("profile"), "profile")
    center = _point(space, cfg.get("center", False), "center")
    sizes = _ints(cfg.get("sizes"), "sizes")
    replicates = int(cfg.get("replicates"))
    if replicates < 1:
        raise ConfigError("replicates must be positive")
    method = _parsed(Method, cfg.get("method"), "method")
    return space, profile, center, sizes, replicates, method


def _finish_curve(cfg: RunConfig, result, experiment_id: str) -> int:
    out = cfg.out
    timing = bool(cfg.get("timing"))
    artifacts.write_csv(out / "results.csv", artifacts.RESULT_COLUMNS,
                        artifacts.result_rows(experiment_id, result, timing))
    summary = {"sample_sizes": result.sample_sizes, "median": result.median,
               "p90": result.p90, "errors": [c.error for c in result.errors]}
    if len(result.phis) > 1:
        with np.errstate(all="ignore"):
            summary["member_median"] = np.nanmedian(result.per_member_rho, axis=0).T
        summary["phis"] = [artifacts.phi_label(phi) for phi in result.phis]
    artifacts.write_json(out / "results.json", {
        "command": experiment_id, "config": _jsonable(cfg.settings), "summary": summary})
    if cfg.get("plot"):
        write_plots(out)
    for n, med, p90 in zip(result.sample_sizes, result.median, result.p90):
        print(f"n={n}: median rho={float(med)!r} p90={float(p90)!r}")
    for cell in result.errors:
        print(f"error: {cell.error}", file=sys.stderr)
    return 3 if result.errors else 0


def cmd_consistency(cfg: RunConfig) -> int:
    space, profile, center, sizes, reps, method = _curve_inputs(cfg)
    phi = _parsed(parse_phi, cfg.get("phi"), "phi")
    _prepare_out(cfg)
    res = consistency_curve(phi, space, center, profile, sizes, reps, cfg.solver,
                            int(cfg.get("seed")), method, cfg.get("threads", False))
    return _finish_curve(cfg, res, "consistency")


def cmd_uniform(cfg: RunConfig) -> int:
    space, profile, center, sizes, reps, method = _curve_inputs(cfg)
    p_grid = _floats(cfg.get("p_grid"), "p_grid")
    _prepare_out(cfg)
    try:
        res = uniform_consistency_curve(None, space, center, profile, sizes, reps, p_grid,
                                        cfg.solver, int(cfg.get("seed")), method,
                                        cfg.get("threads", False))
    except PhiMeansError as exc:
        if not p_grid or min(p_grid) < 1:
            raise ConfigError(f"p_grid: {exc}") from None
        raise
    return _finish_curve(cfg, res, "uniform-consistency")


def cmd_uniqueness(cfg: RunConfig) -> int:
    space = _parsed(parse_space, cfg.get("space"), "space")
    profile = _parsed(parse_profile, cfg.get("profile"), "profile")
    center = _point(space, cfg.get("center", False), "center")
    phis = [_parsed(parse_phi, s, "phis") for s in _strings(cfg.get("phis"))]
    if not phis:
        raise ConfigError("phis: empty list")
    n = int(cfg.get("n"))
    method = _parsed(Method, cfg.get("method"), "method")
    out = _prepare_out(cfg)
    rep = uniqueness_check(space, center, profile, phis, n, cfg.solver, int(cfg.get("seed")),
                           method, cfg.get("threads", False))
    labels = [artifacts.phi_label(phi) for phi in phis]
    timing = bool(cfg.get("timing"))
    artifacts.write_csv(out / "results.csv", artifacts.RESULT_COLUMNS, [
        ("uniqueness", 0, n, lab, d, r.final_loss, r.wall_time * 1e3 if timing else None)
        for lab, d, r in zip(labels, rep.distances, rep.reports)])
    artifacts.write_json(out / "results.json", {
        "command": "uniqueness", "config": _jsonable(cfg.settings),
        "summary": {"phis": labels, "distances": rep.distances,
                    "max_distance": rep.max_distance, "spread": rep.spread}})
    for lab, d in zip(labels, rep.distances):
        print(f"{lab}: distance to center {float(d)!r}")
    print(f"max distance {rep.max_distance!r}, spread {rep.spread!r}")
    return 0


def cmd_check_phi(cfg: RunConfig) -> int:
    phi = _parsed(parse_phi, cfg.get("phi"), "phi")
    grid_max = float(cfg.get("grid_max"))
    if not grid_max > 0:
        raise ConfigError("grid_max must be positive")
    report = check_membership(phi, np.linspace(0.0, grid_max, 201))
    g = gamma(phi)
    source = "analytic" if phi.analytic_gamma is not None else "numeric lower bound"
    numeric = gamma_estimate(phi).value
    print(f"phi: {artifacts.phi_label(phi)}")
    print(f"gamma_phi = {g:.12g} ({source})")
    print(f"gamma_phi numeric = {numeric:.12g}")
    for name in ("increasing", "convex", "zero_at_zero", "gamma_bounded", "member"):
        print(f"{name}: {str(getattr(report, name)).lower()}")
    return 0


def write_plots(out: Path) -> list:
    """Write SVG figures derived from results.csv (and trace.csv) in ``out``."""
    path = out / "results.csv"
    if not path.exists():
        raise ConfigError(f"{path} does not exist")
    rows = artifacts.read_csv(path)
    artifacts.check_columns(rows, path)
    written = []
    kinds = sorted({r["experiment_id"] for r in rows})
    for kind in kinds:
        sel = [r for r in rows if r["experiment_id"] == kind]
        if kind == "solve":
            trace = artifacts.read_csv(out / "trace.csv")
            svg = plots.trace_svg([r["iteration"] for r in trace], [r["loss"] for r in trace],
                                  [r["distance"] for r in trace],
                                  title=f"solver trace ({sel[0]['p']})")
            target = out / "trace.svg"
        elif kind in ("consistency", "uniform-consistency"):
            sizes, curves = _curve_summary(sel, sup=kind == "uniform-consistency")
            svg = plots.consistency_svg(sizes, curves, title=kind)
            target = out / f"{kind}.svg"
        else:
            continue
        target.write_text(svg)
        written.append(target)
    return written


def _curve_summary(rows, sup: bool):
    sizes = sorted({int(r["n"]) for r in rows})
    labels = list(dict.fromkeys(r["p"] for r in rows))
    reps = sorted({int(r["replicate"]) for r in rows})
    table = np.full((len(labels), len(reps), len(sizes)), np.nan)
    for r in rows:
        table[labels.index(r["p"]), reps.index(int(r["replicate"])),
              sizes.index(int(r["n"]))] = float(r["rho"])
    curves = {}
    with np.errstate(all="ignore"):
        for i, lab in enumerate(labels):
            curves[lab] = (np.nanmedian(table[i], axis=0), np.nanpercentile(table[i], 90, axis=0))
        if sup and len(labels) > 1:
            s = np.max(table, axis=0)
            curves["sup"] = (np.nanmedian(s, axis=0), np.nanpercentile(s, 90, axis=0))
    return sizes, curves


def cmd_plot(cfg: RunConfig) -> int:
    for target in write_plots(cfg.out):
        print(f"wrote {target}")
    return 0


def _jsonable(settings: dict) -> dict:
    # output location, plotting and thread count do not change results, so leaving them
    # out keeps artifacts byte-identical across runs that differ only in those
    skip = {"out", "plot", "threads"}
    return {k: v for k, v in sorted(settings.items()) if v is not None and k not in skip}


HANDLERS = {"solve": cmd_solve, "consistency": cmd_consistency,
            "uniform-consistency": cmd_uniform, "uniqueness": cmd_uniqueness,
            "check-phi": cmd_check_phi, "plot": cmd_plot}


def run(cfg: RunConfig) -> int:
    return HANDLERS[cfg.command](cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        return run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PhiMeansError as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
