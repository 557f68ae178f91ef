"""End-to-end acceptance checks, one test group per criterion.

Run with ``pytest tests/test_acceptance.py``; a PASS/FAIL line per criterion is
printed in the terminal summary.
"""
import itertools
import math

import numpy as np
import pytest

from phimeans import artifacts
from phimeans.cli import main
from phimeans.experiments import consistency_curve, uniform_consistency_curve, uniqueness_check
from phimeans.loss import (Measure, diameter_bound, empirical_loss, loss_gradient, loss_values)
from phimeans.phi import (ExpMinusOne, Linear, Power, Product, Sum, exp_dominator_bound, gamma,
                          gamma_estimate, increment_bound, midpoint_inequality_holds)
from phimeans.sampling import ExpDecay, haar_circle, isotropic_sample, make_rng, uniform_sphere
from phimeans.solvers import (SolverConfig, Termination, solve, tangent_optimality_residual)
from phimeans.spaces import Circle, Euclidean, Sphere, Torus, base_point

S2 = Sphere(2)
NORTH = base_point(S2)
FINE = SolverConfig(grid_levels=14)
SIZES = [10, 100, 1000]
REPLICATES = 50
SEED = 7
P_GRID = [1.25, 1.5, 2, 3]
UNIQUE_PHIS = [Power(1.5), Power(2), Power(4), ExpMinusOne(2)]
UNIQUE_N = 5000


def detail(request, text):
    request.node.user_properties.append(("detail", text))


# --------------------------------------------------------------------------
# shared heavy runs (also consumed by the residual check)


@pytest.fixture(scope="module")
def cross_solver_runs():
    runs = []
    for i in range(20):
        rng = make_rng(6, i)
        center = uniform_sphere(1, 2, 600 + i)[0]
        phi = [Power(2), Power(1.5), Power(3), ExpMinusOne(2)][i % 4]
        kappa = rng.uniform(0.5, 3.0)
        mu = Measure(S2, isotropic_sample(S2, center, ExpDecay(kappa), 200, 6, (i,)))
        reps = {
            "nested-grid": solve(phi, mu, "nested-grid", FINE),
            "gd-fixed": solve(phi, mu, "gradient-descent", SolverConfig(step_size=0.5)),
            "gd-bb": solve(phi, mu, "gradient-descent", SolverConfig(step_rule="bb")),
            "tangent-flip": solve(phi, mu, "tangent-flip"),
        }
        runs.append((phi, mu, reps))
    return runs


@pytest.fixture(scope="module")
def consistency_run():
    return consistency_curve(Power(2), S2, NORTH, ExpDecay(1), SIZES, REPLICATES, FINE, SEED)


@pytest.fixture(scope="module")
def uniform_run():
    return uniform_consistency_curve(None, S2, NORTH, ExpDecay(1), SIZES, REPLICATES,
                                     p_grid=P_GRID, solver_cfg=FINE, seed=SEED)


@pytest.fixture(scope="module")
def uniqueness_runs():
    return {
        "sphere": (S2, NORTH, uniqueness_check(S2, NORTH, ExpDecay(2), UNIQUE_PHIS, UNIQUE_N, FINE)),
        "circle": (Circle(), np.array([0.0]),
                   uniqueness_check(Circle(), [0.0], ExpDecay(2), UNIQUE_PHIS, UNIQUE_N, FINE)),
    }


# --------------------------------------------------------------------------
# 1


@pytest.mark.criterion(1)
def test_growth_constants(request):
    worst = 0.0
    cases = [(Power(p), 2 ** (p - 1)) for p in (1, 1.5, 2, 3, 5)]
    cases += [(ExpMinusOne(b), b) for b in (1.5, 2, 3)]
    for phi, expect in cases:
        est = gamma_estimate(phi).value
        rel = abs(est - expect) / expect
        worst = max(worst, rel)
        assert rel <= 1e-4, f"{phi}: estimated {est}, expected {expect}"
    detail(request, f"max relative error {worst:.2e}")


# --------------------------------------------------------------------------
# 2

TRIALS = 10_000
SLACK = 1e-9


def _random_phi(rng):
    kind = rng.integers(3)
    if kind == 0:
        return Power(float(rng.uniform(1, 5)))
    if kind == 1:
        return ExpMinusOne(float(rng.uniform(1.05, 4)))
    return Linear(float(rng.uniform(0.1, 5)))


@pytest.fixture(scope="module")
def phi_pool():
    rng = make_rng(2)
    return [_random_phi(rng) for _ in range(200)]


@pytest.mark.criterion(2)
def test_increment_bound(request, phi_pool):
    rng = make_rng(2, 1)
    bad = 0
    for k in range(TRIALS):
        phi = phi_pool[k % len(phi_pool)]
        x, h = rng.uniform(0, 10), rng.uniform(1e-6, 1)
        bad += phi(x + h) - phi(x) > increment_bound(phi, x, h) * (1 + SLACK) + SLACK
    assert bad == 0
    detail(request, f"increment 0/{TRIALS}")


@pytest.mark.criterion(2)
def test_midpoint_inequality(request, phi_pool):
    rng = make_rng(2, 2)
    bad = 0
    for k in range(TRIALS):
        phi = phi_pool[k % len(phi_pool)]
        b, c = rng.uniform(0, 10, size=2)
        a = rng.uniform(0, b + c)
        bad += not midpoint_inequality_holds(phi, a, b, c, tol=SLACK * (1 + phi(b) + phi(c)))
    assert bad == 0
    detail(request, f"midpoint 0/{TRIALS}")


@pytest.mark.criterion(2)
def test_exponential_domination(request, phi_pool):
    rng = make_rng(2, 3)
    bad = 0
    for k in range(TRIALS):
        phi = phi_pool[k % len(phi_pool)]
        x = rng.uniform(0, 20)
        bad += phi(x) > exp_dominator_bound(phi, x) * (1 + SLACK) + SLACK
    assert bad == 0
    detail(request, f"domination 0/{TRIALS}")


@pytest.mark.criterion(2)
def test_closure_bounds(request, phi_pool):
    # growth ratio phi(1 + x) / (phi(1) + phi(x)) of sums and products, checked pointwise
    rng = make_rng(2, 4)
    bad = 0
    for k in range(TRIALS):
        a, b = phi_pool[k % len(phi_pool)], phi_pool[(7 * k + 3) % len(phi_pool)]
        x = rng.uniform(0, 10)
        ga, gb = gamma(a), gamma(b)
        for comp, bound in ((Sum(a, b), max(ga, gb)), (Product(a, b), 2 * ga * gb)):
            ratio = comp(1 + x) / (comp(1.0) + comp(x))
            bad += ratio > bound + SLACK
    assert bad == 0
    detail(request, f"closure 0/{2 * TRIALS}")


# --------------------------------------------------------------------------
# 3


@pytest.mark.criterion(3)
def test_haar_tightness(request):
    mu = haar_circle(3600)
    phi = Linear(1)
    xs = make_rng(3).uniform(-math.pi, math.pi, size=(100, 1))
    vals = loss_values(phi, mu, xs)
    assert np.all(np.abs(vals - math.pi / 2) <= 5e-3)
    rep = solve(phi, mu, "nested-grid")
    ms = rep.mean_set
    members = {tuple(p) for p in ms.points}
    assert all(tuple(p) in members for p in rep.final_grid)
    diam = ms.diameter(mu.space)
    target = diameter_bound(phi, ms.min_loss)
    assert abs(diam - math.pi) <= ms.mesh
    assert abs(target - math.pi) <= ms.mesh
    detail(request, f"max |F - pi/2| {np.max(np.abs(vals - math.pi / 2)):.1e}, diam {diam:.6f}")


# --------------------------------------------------------------------------
# 4


def _random_instance(i):
    rng = make_rng(4, i)
    space = [Euclidean(1), Euclidean(2), Circle(), Torus(2), S2][i % 5]
    phi = [Power(1.5), Power(2), Power(3), ExpMinusOne(2), Linear(1)][(i // 5) % 5]
    n = int(rng.integers(1, 31))
    if isinstance(space, Euclidean):
        pts = rng.normal(scale=rng.uniform(0.1, 3), size=(n, space.dim))
    elif isinstance(space, Sphere):
        pts = isotropic_sample(space, uniform_sphere(1, 2, 4000 + i)[0],
                               ExpDecay(float(rng.uniform(0.5, 4))), n, 4, (i,))
    else:
        width = rng.uniform(0.2, 2 * math.pi)
        pts = rng.uniform(-width / 2, width / 2, size=(n, space.dim))
    w = rng.uniform(0.1, 1, size=n)
    return phi, Measure(space, pts, w / w.sum())


@pytest.mark.criterion(4)
def test_diameter_bounds(request):
    worst = -math.inf
    for i in range(200):
        phi, mu = _random_instance(i)
        ms = solve(phi, mu, "nested-grid").mean_set
        diam = ms.diameter(mu.space)
        assert diam <= 2 * float(phi.inverse(ms.min_loss)) + ms.mesh, f"instance {i}"
        assert diam <= mu.support_diameter() + ms.mesh, f"instance {i}"
        worst = max(worst, diam - 2 * float(phi.inverse(ms.min_loss)) - ms.mesh)
    detail(request, f"200 instances, max slack used {worst:+.2e}")


# --------------------------------------------------------------------------
# 5


@pytest.mark.criterion(5)
def test_gradient_finite_differences(request):
    worst = 0.0
    h = 1e-5
    for i in range(100):
        rng = make_rng(5, i)
        space = Euclidean(3) if i % 2 == 0 else S2
        phi = Power(2) if (i // 2) % 2 == 0 else Power(4)
        center = base_point(space)
        basis = space.tangent_basis(center)
        pts = space.exp(center, 0.8 * rng.normal(size=(25, space.dim)) @ basis.T)
        mu = Measure(space, pts)
        x = space.exp(center, 0.4 * basis @ rng.normal(size=space.dim))
        g = loss_gradient(phi, mu, x)
        e = space.tangent_basis(x) @ rng.normal(size=space.dim)
        e /= np.linalg.norm(e)
        fd = (empirical_loss(phi, mu, space.exp(x, h * e))
              - empirical_loss(phi, mu, space.exp(x, -h * e))) / (2 * h)
        err = abs(fd - g @ e) / max(1.0, float(np.linalg.norm(g)))
        worst = max(worst, err)
    assert worst <= 1e-5
    detail(request, f"max relative error {worst:.2e}")


# --------------------------------------------------------------------------
# 6


@pytest.mark.criterion(6)
def test_cross_solver_agreement(request, cross_solver_runs):
    worst = 0.0
    for i, (_, _, reps) in enumerate(cross_solver_runs):
        for (na, a), (nb, b) in itertools.combinations(reps.items(), 2):
            d = float(S2.dist(a.estimate, b.estimate))
            worst = max(worst, d)
            assert d <= 1e-3, f"instance {i}: {na} vs {nb} differ by {d:.2e}"
    detail(request, f"max pairwise distance {worst:.2e}")


# --------------------------------------------------------------------------
# 7, 8


def _strictly_decreasing(v):
    return bool(np.all(np.diff(v) < 0))


@pytest.mark.criterion(7)
def test_consistency_trend(request, consistency_run):
    med = consistency_run.median
    detail(request, "median rho " + ", ".join(f"n={n}: {m:.4f}" for n, m in zip(SIZES, med)))
    assert not consistency_run.errors
    assert _strictly_decreasing(med), f"medians {med}"
    assert med[-1] <= 0.05, f"median at n=1000 is {med[-1]:.4f}"


@pytest.mark.criterion(8)
def test_uniform_consistency_trend(request, uniform_run):
    med = uniform_run.median
    detail(request, "median sup-rho " + ", ".join(f"n={n}: {m:.4f}" for n, m in zip(SIZES, med)))
    assert not uniform_run.errors
    assert np.all(uniform_run.per_replicate_rho[..., None] >= uniform_run.per_member_rho)
    assert _strictly_decreasing(med), f"medians {med}"
    assert med[-1] <= 0.08, f"median at n=1000 is {med[-1]:.4f}"


# --------------------------------------------------------------------------
# 9


@pytest.mark.criterion(9)
@pytest.mark.parametrize("which", ["sphere", "circle"])
def test_uniqueness(request, uniqueness_runs, which):
    _, _, rep = uniqueness_runs[which]
    detail(request, f"{which}: max distance {rep.max_distance:.4f}, spread {rep.spread:.4f}")
    assert rep.max_distance <= 0.05
    assert rep.spread <= 0.05


# --------------------------------------------------------------------------
# 10


def _curve_residuals(result, profile):
    out = []
    for cell in result.cells:
        if cell.report is None or cell.report.termination is not Termination.CONVERGED:
            continue
        pts = isotropic_sample(S2, NORTH, profile, max(SIZES), SEED, (cell.replicate,))
        mu = Measure(S2, pts[:cell.n])
        out.append(tangent_optimality_residual(result.phis[cell.phi_index], mu,
                                               cell.report.estimate, FINE))
    return out


@pytest.mark.criterion(10)
def test_residual_cross_solver(request, cross_solver_runs):
    res = [tangent_optimality_residual(phi, mu, rep.estimate)
           for phi, mu, reps in cross_solver_runs for rep in reps.values()
           if rep.termination is Termination.CONVERGED]
    assert max(res) <= 10 * SolverConfig().tol
    detail(request, f"6: {len(res)} solves, max {max(res):.1e}")


@pytest.mark.criterion(10)
def test_residual_consistency(request, consistency_run, uniform_run):
    res = _curve_residuals(consistency_run, ExpDecay(1)) + _curve_residuals(uniform_run, ExpDecay(1))
    assert max(res) <= 10 * FINE.tol
    detail(request, f"7-8: {len(res)} solves, max {max(res):.1e}")


@pytest.mark.criterion(10)
def test_residual_uniqueness(request, uniqueness_runs):
    res = []
    for space, center, rep in uniqueness_runs.values():
        mu = Measure(space, isotropic_sample(space, center, ExpDecay(2), UNIQUE_N, 0, (0,)))
        for phi, r in zip(rep.phis, rep.reports):
            if r.termination is Termination.CONVERGED:
                res.append(tangent_optimality_residual(phi, mu, r.estimate, FINE))
    assert max(res) <= 10 * FINE.tol
    detail(request, f"9: {len(res)} solves, max {max(res):.1e}")


# --------------------------------------------------------------------------
# 11


@pytest.mark.criterion(11)
def test_line_mean(request):
    worst = 0.0
    for i in range(10):
        x = isotropic_sample(Euclidean(1), [0.0], ExpDecay(1), 101 + 10 * i, 11, (i,))
        mu = Measure(Euclidean(1), x)
        # loss values cannot resolve a quadratic minimum below sqrt(eps), so the
        # derivative-based solvers carry this check
        for method in ("gradient-descent", "tangent-flip"):
            err = abs(solve(Power(2), mu, method).estimate[0] - x.mean())
            worst = max(worst, err)
            assert err <= 1e-8, f"sample {i}, {method}: off by {err:.1e}"
    detail(request, f"mean: max error {worst:.1e}")


@pytest.mark.criterion(11)
def test_line_median(request):
    for i in range(10):
        n = 100 + 10 * i  # even sizes give a nondegenerate median interval
        x = np.sort(isotropic_sample(Euclidean(1), [0.0], ExpDecay(1), n, 11, (100 + i,))[:, 0])
        lo, hi = x[n // 2 - 1], x[n // 2]
        rep = solve(Linear(1), Measure(Euclidean(1), x), "nested-grid")
        # the interval is only gridded at the first level, so that level's mesh is the
        # resolution of the bracket
        mesh = rep.trace[0].step
        got_lo, got_hi = rep.mean_set.points[:, 0].min(), rep.mean_set.points[:, 0].max()
        assert abs(got_lo - lo) <= mesh, f"sample {i}"
        assert abs(got_hi - hi) <= mesh, f"sample {i}"
    detail(request, "median interval bracketed on 10 samples")


# --------------------------------------------------------------------------
# 12


def _cli(*argv):
    return main([str(a) for a in argv])


@pytest.mark.criterion(12)
def test_determinism_consistency(request, tmp_path, consistency_run):
    args = ("consistency", "--space", "sphere:2", "--phi", "power:2", "--profile", "exp:1",
            "--sizes", ",".join(map(str, SIZES)), "--replicates", REPLICATES, "--seed", SEED,
            "--grid-levels", FINE.grid_levels)
    a, b = tmp_path / "a", tmp_path / "b"
    assert _cli(*args, "--out", a, "--threads", 1) == 0
    assert _cli(*args, "--out", b, "--threads", 4) == 0
    for name in ("results.csv", "results.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    rows = artifacts.read_csv(a / "results.csv")
    assert len(rows) == len(SIZES) * REPLICATES
    rho = np.array([float(r["rho"]) for r in rows]).reshape(REPLICATES, len(SIZES))
    np.testing.assert_array_equal(rho, consistency_run.per_replicate_rho)
    detail(request, "consistency artifacts byte-identical")


@pytest.mark.criterion(12)
def test_determinism_uniqueness(request, tmp_path):
    args = ("uniqueness", "--space", "sphere:2", "--phis", "power:1.5,power:2,power:4,exp:2",
            "--profile", "exp:2", "--n", UNIQUE_N, "--grid-levels", FINE.grid_levels)
    a, b = tmp_path / "a", tmp_path / "b"
    assert _cli(*args, "--out", a) == 0
    assert _cli(*args, "--out", b) == 0
    for name in ("results.csv", "results.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    detail(request, "uniqueness artifacts byte-identical")
