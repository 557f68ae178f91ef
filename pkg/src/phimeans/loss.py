"""phi-losses of finite measures, their gradients, and the bounds they satisfy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, DomainError, EmptySetError, InvalidPointError, NonDifferentiableError
from .phi import PhiSpec, gamma
from .spaces import Space

ATOM_TOL = 1e-10
DERIV_TOL = 1e-6
MASS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Measure:
    """Finite weighted point set; equal weights when ``weights`` is omitted."""

    space: Space
    points: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1 and self.space.ambient_dim == 1:
            pts = pts[:, None]
        pts = self.space.validate(np.atleast_2d(pts))
        if len(pts) == 0:
            raise EmptySetError("a measure needs at least one atom")
        if self.weights is None:
            w = np.full(len(pts), 1.0 / len(pts))
        else:
            w = np.array(self.weights, dtype=float)
            if w.shape != (len(pts),) or np.any(~(w > 0)):
                raise DomainError("weights must be positive, one per atom")
            if abs(w.sum() - 1.0) > MASS_TOL:
                raise DomainError(f"weights sum to {w.sum()!r}, not 1")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.points)

    def support_diameter(self) -> float:
        return pairwise_diameter(self.space, self.points)


@dataclass
class MeanSet:
    """Finite approximation of the argmin set: candidates with loss <= min_loss + delta."""

    points: np.ndarray
    delta: float
    min_loss: float
    losses: np.ndarray = field(default=None, repr=False)
    mesh: float = 0.0

    def __post_init__(self):
        if len(self.points) == 0:
            raise EmptySetError("mean set must be nonempty")

    def diameter(self, space: Space) -> float:
        return pairwise_diameter(space, self.points)


def pairwise_diameter(space: Space, pts) -> float:
    pts = np.asarray(pts)
    if len(pts) < 2:
        return 0.0
    out = 0.0
    for i in range(0, len(pts), 512):
        out = max(out, float(space.dist(pts[i:i + 512, None, :], pts[None, :, :]).max()))
    return out


def loss_values(phi: PhiSpec, mu: Measure, xs) -> np.ndarray:
    """Loss at each row of ``xs``; fixed-order pairwise summation keeps results bit-stable."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    out = np.empty(len(xs))
    chunk = max(1, 2_000_000 // max(1, len(mu)))
    for i in range(0, len(xs), chunk):
        d = mu.space.dist(xs[i:i + chunk, None, :], mu.points[None, :, :])
        out[i:i + chunk] = (np.asarray(phi(d)) * mu.weights).sum(axis=-1)
    return out


def empirical_loss(phi: PhiSpec, mu: Measure, x) -> float:
    x = mu.space.validate(x)
    if x.ndim != 1:
        raise InvalidPointError("empirical_loss takes a single point")
    return float(loss_values(phi, mu, x)[0])


def loss_gradient(phi: PhiSpec, mu: Measure, x, atom_tol: float = ATOM_TOL,
                  deriv_tol: float = DERIV_TOL) -> np.ndarray:
    """Ascent (Riemannian) gradient of the loss at x, as a tangent vector at x.

    Each atom at distance d contributes -phi'(d) / d * log_x(atom); atoms
    closer than ``atom_tol`` contribute zero, a valid subgradient choice.
    """
    space = mu.space
    logs = space.log(x, mu.points)
    d = space.dist(x, mu.points)
    far = d >= atom_tol
    if not np.any(far):
        return np.zeros_like(np.asarray(x, dtype=float))
    df = np.asarray(phi.derivative(d[far]))
    if not phi.smooth:
        left = np.asarray(phi.derivative(d[far], side="left"))
        if np.any(np.abs(left - df) > deriv_tol * np.maximum(1.0, np.abs(df))):
            raise NonDifferentiableError("phi has a kink at some atom distance")
    coef = np.zeros(len(d))
    coef[far] = mu.weights[far] * df / d[far]
    return -(coef[:, None] * logs).sum(axis=0)


def lipschitz_bound(phi: PhiSpec, sup_loss_on_ball: float) -> float:
    """Lipschitz constant of the loss on pairs at distance <= 1 whose losses are <= sup_loss_on_ball."""
    if not sup_loss_on_ball >= 0 or not math.isfinite(sup_loss_on_ball):
        raise DomainError("sup_loss_on_ball must be finite and non-negative")
    g = gamma(phi)
    return g * phi(1.0) + (g - 1.0) * sup_loss_on_ball


def diameter_bound(phi: PhiSpec, min_loss: float) -> float:
    """2 phi^-1(min loss): upper bound on the diameter of the argmin set."""
    if not min_loss >= 0:
        raise DomainError("min_loss must be non-negative")
    return 2.0 * phi.inverse(min_loss)


def rho_infinity(space: Space, a, b) -> float:
    """sup over a in A of the distance from a to B (one-sided; not symmetric)."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise EmptySetError("rho_infinity needs nonempty sets")
    return float(space.dist(a[:, None, :], b[None, :, :]).min(axis=1).max())


def certified_delta(phi: PhiSpec, min_loss: float, sup_loss: float, mesh: float) -> float:
    """Sublevel tolerance for a grid of covering radius ``mesh``.

    The Lipschitz rule lipschitz_bound * mesh is capped at
    phi(phi^-1(min_loss) + mesh / 2) - min_loss, which keeps every sublevel set
    inside the diameter bound 2 phi^-1(min_loss) + mesh.  When the growth
    constant cannot be certified finite the Lipschitz rule is taken as infinite.
    """
    try:
        lip = lipschitz_bound(phi, sup_loss) * mesh
    except DivergenceError:
        lip = math.inf
    r = phi.inverse(min_loss) + mesh / 2
    if r > phi.t_max:
        if math.isinf(lip):
            raise DivergenceError("no finite sublevel tolerance: gamma unbounded and phi range exceeded")
        return lip
    return max(0.0, min(lip, phi(r) - min_loss))


def sublevel_mean_set(phi: PhiSpec, mu: Measure, candidates, delta: float,
                      losses=None, mesh: float = 0.0) -> MeanSet:
    cands = np.atleast_2d(np.asarray(candidates, dtype=float))
    if cands.size == 0:
        raise EmptySetError("no candidates")
    if not delta >= 0:
        raise DomainError("delta must be non-negative")
    vals = loss_values(phi, mu, cands) if losses is None else np.asarray(losses)
    m = float(vals.min())
    keep = vals <= m + delta
    return MeanSet(cands[keep], float(delta), m, vals[keep], mesh)
