"""Monte-Carlo harnesses for consistency, uniform consistency and uniqueness of phi-means.

Every replicate r draws its largest sample from the stream make_rng(seed, r);
smaller sample sizes use prefixes of it.  Replicates may run on several
threads (capped by PHIMEANS_THREADS) and are aggregated in replicate order,
so results do not depend on the thread count.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PhiMeansError
from .loss import Measure, pairwise_diameter, rho_infinity
from .phi import PhiFamily, PhiSpec, Power
from .sampling import RadialProfile, isotropic_sample
from .solvers import SolverConfig, SolverReport, solve, tangent_optimality_residual
from .spaces import Space

__all__ = ["Cell", "ConsistencyResult", "UniquenessReport", "consistency_curve",
           "uniform_consistency_curve", "uniqueness_check", "tangent_optimality_residual",
           "thread_count"]


def thread_count(requested: int | None = None) -> int:
    cap = os.environ.get("PHIMEANS_THREADS")
    n = requested or os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise DomainError(f"PHIMEANS_THREADS={cap!r} is not an integer") from None
    return max(1, n)


def _map(fn, items, threads):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


@dataclass
class Cell:
    """One (replicate, n, phi) solve."""

    replicate: int
    n: int
    phi_index: int
    rho: float
    loss: float
    wall_ms: float
    report: SolverReport | None = field(default=None, repr=False)
    error: str | None = None


@dataclass
class ConsistencyResult:
    sample_sizes: list
    per_replicate_rho: np.ndarray  # (replicates, sizes); sup over members for uniform curves
    per_member_rho: np.ndarray  # (replicates, sizes, members)
    phis: list
    cells: list = field(repr=False, default_factory=list)

    def __post_init__(self):
        r, s, m = self.per_member_rho.shape
        if self.per_replicate_rho.shape != (r, s) or s != len(self.sample_sizes) \
                or m != len(self.phis):
            raise DomainError("inconsistent result dimensions")

    @property
    def median(self) -> np.ndarray:
        return np.nanmedian(self.per_replicate_rho, axis=0)

    @property
    def p90(self) -> np.ndarray:
        return np.nanpercentile(self.per_replicate_rho, 90, axis=0)

    @property
    def errors(self) -> list:
        return [c for c in self.cells if c.error is not None]


def _solve_cell(phi, mu, center, method, cfg, r, n, k) -> Cell:
    t0 = time.perf_counter()
    try:
        rep = solve(phi, mu, method, cfg)
    except PhiMeansError as exc:
        return Cell(r, n, k, float("nan"), float("nan"), 0.0, None,
                    f"replicate {r}, n={n}, phi #{k}: {type(exc).__name__}: {exc}")
    rho = rho_infinity(mu.space, rep.estimate_set, center[None, :])
    return Cell(r, n, k, rho, rep.final_loss, (time.perf_counter() - t0) * 1e3, rep)


def _curve(phis, space, center, profile, sample_sizes, replicates, cfg, seed, method,
           threads) -> ConsistencyResult:
    sizes = [int(n) for n in sample_sizes]
    if not sizes or min(sizes) < 1:
        raise DomainError("sample sizes must be positive")
    if replicates < 1:
        raise DomainError("replicates must be positive")
    center = space.validate(center)
    cfg = cfg or SolverConfig()

    def run(r):
        pts = isotropic_sample(space, center, profile, max(sizes), seed, (r,))
        out = []
        for n in sizes:
            mu = Measure(space, pts[:n])
            out.extend(_solve_cell(phi, mu, center, method, cfg, r, n, k)
                       for k, phi in enumerate(phis))
        return out

    cells = [c for block in _map(run, range(replicates), thread_count(threads)) for c in block]
    member = np.array([c.rho for c in cells]).reshape(replicates, len(sizes), len(phis))
    with np.errstate(all="ignore"):
        sup = np.max(member, axis=2)
    return ConsistencyResult(sizes, sup, member, list(phis), cells)


def consistency_curve(phi: PhiSpec, space: Space, center, profile: RadialProfile,
                      sample_sizes, replicates: int, solver_cfg: SolverConfig | None = None,
                      seed: int = 0, method: str = "auto", threads: int | None = None
                      ) -> ConsistencyResult:
    """rho_inf(phi-mean of an n-sample, {center}) per replicate and sample size.

    The population phi-mean of an isotropic law is its center, so this is the
    largest distance from the estimate set to the center.  Solver failures are
    recorded per cell (rho = nan) rather than raised.
    """
    return _curve([phi], space, center, profile, sample_sizes, replicates, solver_cfg, seed,
                  method, threads)


def uniform_consistency_curve(family: PhiFamily | None, space: Space, center,
                              profile: RadialProfile, sample_sizes, replicates: int,
                              p_grid=None, solver_cfg: SolverConfig | None = None,
                              seed: int = 0, method: str = "auto",
                              threads: int | None = None) -> ConsistencyResult:
    """Sup over a family of rho_inf, with one shared sample per (replicate, n).

    ``p_grid`` builds the family {Power(p)}; otherwise ``family`` is used as is.
    """
    if p_grid is not None:
        ps = [float(p) for p in p_grid]
        if not ps or min(ps) < 1:
            raise DomainError("p_grid must be a nonempty subset of [1, inf)")
        family = PhiFamily([Power(p) for p in ps])
    if family is None:
        raise DomainError("need a family or a p_grid")
    return _curve(list(family.members), space, center, profile, sample_sizes, replicates,
                  solver_cfg, seed, method, threads)


@dataclass
class UniquenessReport:
    phis: list
    distances: np.ndarray
    estimates: list
    reports: list = field(repr=False, default_factory=list)
    space: Space | None = field(default=None, repr=False)

    @property
    def max_distance(self) -> float:
        return float(np.max(self.distances))

    @property
    def spread(self) -> float:
        """Largest distance between points of the estimate sets of different phi."""
        return pairwise_diameter(self.space, np.vstack(self.estimates))


def uniqueness_check(space: Space, center, profile: RadialProfile, phi_list, n: int,
                     solver_cfg: SolverConfig | None = None, seed: int = 0,
                     method: str = "auto", threads: int | None = None) -> UniquenessReport:
    """Solve every phi on one shared n-sample and measure how far each estimate is from center."""
    center = space.validate(center)
    cfg = solver_cfg or SolverConfig()
    mu = Measure(space, isotropic_sample(space, center, profile, n, seed, (0,)))
    reports = _map(lambda phi: solve(phi, mu, method, cfg), phi_list, thread_count(threads))
    sets = [rep.estimate_set for rep in reports]
    dist = np.array([rho_infinity(space, s, center[None, :]) for s in sets])
    return UniquenessReport(list(phi_list), dist, sets, reports, space)
