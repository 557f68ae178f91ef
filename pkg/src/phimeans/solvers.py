"""Three phi-mean solvers: nested grids, Riemannian gradient descent, tangent flipping."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import (CutLocusError, DomainError, InnerSolverError, NonDifferentiableError,
                     RegionRequiredError)
from .loss import (ATOM_TOL, MeanSet, Measure, certified_delta, loss_gradient, loss_values)
from .phi import Power, PhiSpec, Scaled
from .spaces import (Euclidean, ProjectiveSpace, Region, Space, Sphere, _Angular, box_offsets,
                     canonical_sign, check_region, wrap_angle)


class StepRule(str, Enum):
    FIXED = "fixed"
    BB = "bb"


class InnerSolver(str, Enum):
    AUTO = "auto"
    CLOSED_FORM = "closed-form"
    GRID = "grid"
    GRADIENT = "gradient"


class Termination(str, Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max-iters"
    CUT_LOCUS_ABORT = "cut-locus-abort"


class Method(str, Enum):
    AUTO = "auto"
    NESTED_GRID = "nested-grid"
    GRADIENT_DESCENT = "gradient-descent"
    TANGENT_FLIP = "tangent-flip"


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 10_000
    tol: float = 1e-8
    grid_levels: int = 10
    grid_points_per_level: int = 11
    step_size: float = 0.5
    step_rule: StepRule = StepRule.FIXED
    inner_solver: InnerSolver = InnerSolver.AUTO
    # accuracy of flat (tangent-space) sub-problems
    inner_tol: float = 1e-12
    # half-width of the default nested-grid region; None picks one from the data
    region_radius: float | None = None
    # longest single gradient step; half the cut radius always applies as well
    max_step: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "step_rule", StepRule(self.step_rule))
        object.__setattr__(self, "inner_solver", InnerSolver(self.inner_solver))
        for name in ("max_iters", "tol", "grid_levels", "step_size", "inner_tol"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if not self.tol < 1:
            raise DomainError("tol must be < 1")
        if self.grid_points_per_level < 3:
            raise DomainError("grid_points_per_level must be >= 3")
        if self.region_radius is not None and not self.region_radius > 0:
            raise DomainError("region_radius must be positive")
        if self.max_step is not None and not self.max_step > 0:
            raise DomainError("max_step must be positive")


class TraceRow(NamedTuple):
    iteration: int
    loss: float
    step: float  # tangent step norm, or grid mesh for nested grids
    point: np.ndarray


@dataclass(eq=False)
class SolverReport:
    method: str
    estimate: np.ndarray
    final_loss: float
    trace: list
    termination: Termination
    iterations: int
    mean_set: MeanSet | None = None
    wall_time: float = field(default=0.0, compare=False)
    final_grid: np.ndarray | None = field(default=None, repr=False)  # nested grid only

    @property
    def estimate_set(self) -> np.ndarray:
        """All points representing the estimate: the mean set if any, else the estimate."""
        if self.mean_set is not None:
            return self.mean_set.points
        return self.estimate[None, :]


# --------------------------------------------------------------------------
# nested grids


def nested_grid(phi: PhiSpec, mu: Measure, cfg: SolverConfig = SolverConfig(),
                region: Region | None = None) -> SolverReport:
    """Evaluate the loss on a grid, zoom onto [x_{j*-1}, x_{j*+1}] per coordinate, repeat.

    Circles and tori are gridded globally (periodically) when no region is
    given; other spaces are gridded on a coordinate box of half-width
    ``region.radius`` in the chart at ``region.center``.  An argmin on the box
    boundary clamps the next bracket to the box.  The returned mean set holds
    every evaluated point, from any level, whose loss is within the
    certified tolerance of the best loss.
    """
    t0 = time.perf_counter()
    space = mu.space
    k = cfg.grid_points_per_level - 1
    dim = space.dim
    periodic = region is None and isinstance(space, _Angular)
    if periodic:
        center = np.zeros(space.ambient_dim)
        half = math.pi
    else:
        if region is None:
            raise RegionRequiredError(f"nested grid on {space.tag} needs a region")
        center = space.validate(region.center)
        check_region(space, region)
        half = float(region.radius)

    anchor = np.full(dim, -half)
    step = np.full(dim, 2 * half / k)
    offset = np.zeros(dim, dtype=int)  # grid index of the anchor on each axis
    idx = np.arange(k + 1)

    all_pts, all_losses, trace = [], [], []
    level_losses = None
    mesh = float(step.max() / 2 * math.sqrt(dim))
    for level in range(1, cfg.grid_levels + 1):
        axes = [anchor[i] + step[i] * (idx - offset[i]) for i in range(dim)]
        coords = box_offsets(axes)
        pts = space.chart(center, coords)
        level_losses = loss_values(phi, mu, pts)
        best = int(np.argmin(level_losses))
        mesh = float(step.max() / 2 * math.sqrt(dim))
        trace.append(TraceRow(level, float(level_losses[best]), mesh, pts[best]))
        all_pts.append(pts)
        all_losses.append(level_losses)

        j = np.unravel_index(best, (k + 1,) * dim)
        new_anchor = np.array([axes[i][j[i]] for i in range(dim)])
        for i in range(dim):
            if periodic or 0 < j[i] < k:
                step[i] = 2 * step[i] / k
                offset[i] = k // 2
            else:
                step[i] = step[i] / k
                offset[i] = 0 if j[i] == 0 else k
        anchor = new_anchor
        if np.any(step < 8 * np.finfo(float).eps * np.maximum(1.0, np.abs(anchor))):
            break

    pts = np.concatenate(all_pts)
    losses = np.concatenate(all_losses)
    best = int(np.argmin(losses))
    m = float(losses[best])
    delta = certified_delta(phi, m, float(level_losses.max()), mesh)
    keep = np.flatnonzero(losses <= m + delta)
    _, first = np.unique(pts[keep], axis=0, return_index=True)
    keep = keep[np.sort(first)]
    mean_set = MeanSet(pts[keep], delta, m, losses[keep], mesh)
    return SolverReport(Method.NESTED_GRID.value, pts[best], m, trace, Termination.CONVERGED,
                        len(trace), mean_set, time.perf_counter() - t0, all_pts[-1])


# --------------------------------------------------------------------------
# gradient descent


def _has_kink_at_zero(phi: PhiSpec) -> bool:
    return float(phi.derivative(0.0)) > 0.0


def gradient_descent(phi: PhiSpec, mu: Measure, init, cfg: SolverConfig = SolverConfig()
                     ) -> SolverReport:
    """x <- exp_x(-step * grad F(x)), with a fixed step or Barzilai-Borwein steps.

    The BB step <s, s> / <s, y> uses s = -log_{x_k}(x_{k-1}) and the previous
    gradient projected onto the current tangent space.  A BB step that raised
    the loss is followed by one at half its (possibly shortened) length, which
    breaks the two-cycles BB can fall into on curved spaces.  Steps longer than half the cut radius are
    shortened.  Stops when the step norm drops below tol.
    """
    t0 = time.perf_counter()
    space = mu.space
    x = space.validate(init)
    kink = _has_kink_at_zero(phi)

    def grad(p):
        if kink and np.any(space.dist(p, mu.points) < ATOM_TOL):
            raise NonDifferentiableError(
                "iterate sits on an atom where phi(rho) is not differentiable")
        return loss_gradient(phi, mu, p)

    def loss(p):
        return float(loss_values(phi, mu, p)[0])

    try:
        g = grad(x)
    except CutLocusError:
        return SolverReport(Method.GRADIENT_DESCENT.value, x, loss(x), [],
                            Termination.CUT_LOCUS_ABORT, 0, None, time.perf_counter() - t0)
    trace = [TraceRow(0, loss(x), 0.0, x)]
    rate = cfg.step_size
    termination = Termination.MAX_ITERS
    iterations = 0
    max_step = space.cut_radius / 2
    if cfg.max_step is not None:
        max_step = min(max_step, cfg.max_step)
    for it in range(1, cfg.max_iters + 1):
        move = rate * g
        norm = float(np.linalg.norm(move))
        if norm < cfg.tol:
            termination = Termination.CONVERGED
            break
        if norm > max_step:
            move = move * (max_step / norm)
        x_new = space.exp(x, -move)
        try:
            g_new = grad(x_new)
        except CutLocusError:
            termination = Termination.CUT_LOCUS_ABORT
            break
        f_new = loss(x_new)
        if cfg.step_rule is StepRule.BB and f_new > trace[-1].loss:
            rate = 0.5 * float(np.linalg.norm(move)) / float(np.linalg.norm(g))
        elif cfg.step_rule is StepRule.BB:
            try:
                s = -space.log(x_new, x)
            except CutLocusError:
                s = space.to_tangent(x_new, -move)
            y = g_new - space.to_tangent(x_new, g)
            sy = float(s @ y)
            rate = float(s @ s) / sy if sy > 0 else cfg.step_size
        x, g = x_new, g_new
        iterations = it
        trace.append(TraceRow(it, f_new, norm, x))
    return SolverReport(Method.GRADIENT_DESCENT.value, x, trace[-1].loss, trace, termination,
                        iterations, None, time.perf_counter() - t0)


# --------------------------------------------------------------------------
# tangent flipping


def _is_quadratic(phi: PhiSpec) -> bool:
    if isinstance(phi, Scaled):
        return _is_quadratic(phi.inner)
    return isinstance(phi, Power) and phi.p == 2


def flat_mean(phi: PhiSpec, coords: np.ndarray, weights: np.ndarray, cfg: SolverConfig,
              inner: InnerSolver | None = None) -> np.ndarray:
    """phi-mean of a weighted point cloud in R^d (the tangent-space sub-problem).

    The search is confined to the ball of radius max |w| + 1 around the
    origin, which contains every minimiser since the flat loss is convex.
    """
    inner = cfg.inner_solver if inner is None else InnerSolver(inner)
    if inner is InnerSolver.AUTO:
        if _is_quadratic(phi):
            inner = InnerSolver.CLOSED_FORM
        elif _has_kink_at_zero(phi) or not phi.smooth:
            inner = InnerSolver.GRID
        else:
            inner = InnerSolver.GRADIENT
    mean = (weights[:, None] * coords).sum(axis=0)
    if inner is InnerSolver.CLOSED_FORM:
        if not _is_quadratic(phi):
            raise DomainError("the closed-form inner solve needs phi(t) = c t^2")
        return mean

    radius = float(np.linalg.norm(coords, axis=1).max()) + 1.0
    if float(np.ptp(coords, axis=0).max()) == 0.0:
        return coords[0].copy()
    flat = Measure(Euclidean(coords.shape[1]), coords, weights)
    if inner is InnerSolver.GRADIENT:
        sub = SolverConfig(max_iters=cfg.max_iters, tol=cfg.inner_tol, step_size=cfg.step_size,
                           step_rule=StepRule.BB, max_step=radius)
        try:
            rep = gradient_descent(phi, flat, mean, sub)
        except NonDifferentiableError as exc:
            raise InnerSolverError(str(exc)) from exc
        if rep.termination is not Termination.CONVERGED:
            raise InnerSolverError(f"inner gradient descent stopped: {rep.termination.value}")
        v = rep.estimate
    else:
        levels = max(cfg.grid_levels, int(math.ceil(math.log(radius / cfg.inner_tol)
                                                    / math.log(k_contraction(cfg)))) + 1)
        sub = SolverConfig(grid_levels=levels, grid_points_per_level=cfg.grid_points_per_level)
        v = nested_grid(phi, flat, sub, Region(np.zeros(coords.shape[1]), radius)).estimate
    if np.linalg.norm(v) > radius:
        raise InnerSolverError("inner minimiser left the admissible ball")
    return v


def k_contraction(cfg: SolverConfig) -> float:
    """Per-level shrink factor of the nested-grid bracket."""
    return (cfg.grid_points_per_level - 1) / 2


def tangent_coords(space: Space, base: np.ndarray, points: np.ndarray):
    """Atoms pushed to the tangent space at base, in an orthonormal basis of that space."""
    basis = space.tangent_basis(base)
    return space.log(base, points) @ basis, basis


def tangent_flip(phi: PhiSpec, mu: Measure, init, cfg: SolverConfig = SolverConfig()
                 ) -> SolverReport:
    """m <- exp_m(v), v the flat phi-mean of the atoms pushed through log_m; stop once |v| <= tol."""
    t0 = time.perf_counter()
    space = mu.space
    m = space.validate(init)
    trace = [TraceRow(0, float(loss_values(phi, mu, m)[0]), 0.0, m)]
    termination = Termination.MAX_ITERS
    iterations = 0
    for it in range(1, cfg.max_iters + 1):
        try:
            coords, basis = tangent_coords(space, m, mu.points)
        except CutLocusError:
            termination = Termination.CUT_LOCUS_ABORT
            break
        v = basis @ flat_mean(phi, coords, mu.weights, cfg)
        d = float(np.linalg.norm(v))
        m = space.exp(m, v)
        trace.append(TraceRow(it, float(loss_values(phi, mu, m)[0]), d, m))
        if d <= cfg.tol:
            termination = Termination.CONVERGED
            iterations = it - 1
            break
        iterations = it
    return SolverReport(Method.TANGENT_FLIP.value, m, trace[-1].loss, trace, termination,
                        iterations, None, time.perf_counter() - t0)


def tangent_optimality_residual(phi: PhiSpec, mu: Measure, candidate,
                                cfg: SolverConfig = SolverConfig()) -> float:
    """Norm of the flat phi-mean of the atoms pushed to the tangent space at candidate.

    Zero is necessary for candidate to be a phi-mean.
    """
    space = mu.space
    candidate = space.validate(candidate)
    coords, _ = tangent_coords(space, candidate, mu.points)
    return float(np.linalg.norm(flat_mean(phi, coords, mu.weights, cfg)))


# --------------------------------------------------------------------------
# dispatch


def extrinsic_mean(mu: Measure) -> np.ndarray | None:
    """Cheap chart-level average used to seed solvers; None when degenerate."""
    space, pts, w = mu.space, mu.points, mu.weights
    if isinstance(space, ProjectiveSpace):
        scatter = (w[:, None, None] * pts[:, :, None] * pts[:, None, :]).sum(axis=0)
        return canonical_sign(np.linalg.eigh(scatter)[1][:, -1])
    if isinstance(space, Sphere):
        m = (w[:, None] * pts).sum(axis=0)
        n = np.linalg.norm(m)
        return m / n if n > 1e-8 else None
    if isinstance(space, _Angular):
        s = (w[:, None] * np.sin(pts)).sum(axis=0)
        c = (w[:, None] * np.cos(pts)).sum(axis=0)
        if np.any(np.hypot(s, c) < 1e-8):
            return None
        return wrap_angle(np.arctan2(s, c))
    return (w[:, None] * pts).sum(axis=0)


def default_init(phi: PhiSpec, mu: Measure, max_candidates: int = 256) -> np.ndarray:
    """Best of the extrinsic mean and (a strided subset of) the atoms."""
    stride = max(1, len(mu) // max_candidates)
    atoms = mu.points[::stride]
    ext = extrinsic_mean(mu)
    if ext is not None and _has_kink_at_zero(phi):
        return ext
    cands = atoms if ext is None else np.vstack([ext[None, :], atoms])
    return cands[int(np.argmin(loss_values(phi, mu, cands)))].copy()


def default_region(phi: PhiSpec, mu: Measure, cfg: SolverConfig) -> Region:
    center = default_init(phi, mu)
    space = mu.space
    if cfg.region_radius is not None:
        return Region(center, cfg.region_radius)
    reach = float(space.dist(center, mu.points).max())
    if reach == 0.0:
        reach = 1.0
    cap = 0.95 * space.cut_radius / math.sqrt(space.dim)
    return Region(center, min(reach, cap))


def choose_method(space: Space) -> Method:
    return Method.NESTED_GRID if space.dim <= 2 else Method.GRADIENT_DESCENT


def solve(phi: PhiSpec, mu: Measure, method: Method | str = Method.AUTO,
          cfg: SolverConfig = SolverConfig(), init=None, region: Region | None = None
          ) -> SolverReport:
    method = Method(method)
    if method is Method.AUTO:
        method = choose_method(mu.space)
    if method is Method.NESTED_GRID:
        if region is None and not isinstance(mu.space, _Angular):
            region = default_region(phi, mu, cfg)
        return nested_grid(phi, mu, cfg, region)
    if init is None:
        init = default_init(phi, mu)
    if method is Method.GRADIENT_DESCENT:
        return gradient_descent(phi, mu, init, cfg)
    return tangent_flip(phi, mu, init, cfg)
