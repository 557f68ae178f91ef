"""Convex growth functions phi and the calculus of their growth constants.

A ``PhiSpec`` is a convex, strictly increasing bijection of [0, inf) with
phi(0) = 0.  The growth constant

    gamma_phi = sup_x phi(1 + x) / (phi(1) + phi(x))

controls Lipschitz bounds and finiteness of phi-losses.  Closed forms exist
for the analytic kinds; everything else is estimated on a log-spaced grid,
in which case the estimate is a lower bound on the true supremum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import DivergenceError, DomainError, NotDominatedError, RangeError

DEFAULT_GRID_MAX = 1e4
DEFAULT_GRID_POINTS = 4096
GRID_MIN = 1e-4
# last-decade growth above this fraction flags phi as not subexponential
DIVERGENCE_SLOPE = 0.01
FD_REL_STEP = 1e-6
INVERSE_TOL = 1e-13


def _checked(t) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError(f"phi is defined on [0, inf); got {t!r}")
    return arr


def _out(t, value):
    return float(value) if np.ndim(t) == 0 else value


class PhiSpec:
    """Base class for members of the class of convex growth functions."""

    analytic_gamma: float | None = None
    t_max: float = math.inf
    # closed-form derivative available and continuous on (0, inf)
    smooth: bool = True

    def __call__(self, t):
        arr = _checked(t)
        if np.any(arr > self.t_max * (1 + 1e-12)):
            raise DomainError(f"t={t!r} outside tabulated range [0, {self.t_max}]")
        return _out(t, self._eval(np.minimum(arr, self.t_max)))

    def log_eval(self, t):
        """log(phi(t)), stable where phi itself overflows."""
        arr = _checked(t)
        with np.errstate(divide="ignore"):
            return _out(t, self._log_eval(np.minimum(arr, self.t_max)))

    def derivative(self, t, side: str = "right"):
        """One-sided derivative; ``side`` is "right" or "left" (left at 0 falls back to right)."""
        if side not in ("right", "left"):
            raise DomainError(f"side must be 'right' or 'left', got {side!r}")
        arr = _checked(t)
        return _out(t, self._derivative(arr, side))

    def inverse(self, y):
        arr = np.asarray(y, dtype=float)
        if np.any(np.isnan(arr)) or np.any(arr < 0):
            raise DomainError(f"phi^-1 is defined on [0, inf); got {y!r}")
        return _out(y, self._inverse(arr))

    def to_json(self) -> dict:
        raise NotImplementedError

    # subclasses override the underscored hooks
    def _eval(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _log_eval(self, t: np.ndarray) -> np.ndarray:
        return np.log(self._eval(t))

    def _derivative(self, t: np.ndarray, side: str) -> np.ndarray:
        return _forward_difference(self, t, side)

    def _inverse(self, y: np.ndarray) -> np.ndarray:
        return np.vectorize(lambda v: _bisect_inverse(self, float(v)), otypes=[float])(y)


def _forward_difference(phi: PhiSpec, t: np.ndarray, side: str) -> np.ndarray:
    h = FD_REL_STEP * np.maximum(1.0, t)
    lo_ok = t - h >= 0
    hi_ok = t + h <= phi.t_max
    right = np.where(hi_ok, (phi._eval(np.minimum(t + h, phi.t_max)) - phi._eval(t)) / h, np.nan)
    left = np.where(lo_ok, (phi._eval(t) - phi._eval(np.maximum(t - h, 0.0))) / h, np.nan)
    if side == "right":
        return np.where(hi_ok, right, left)
    return np.where(lo_ok, left, right)


def _bisect_inverse(phi: PhiSpec, y: float) -> float:
    if y == 0.0:
        return 0.0
    hi = 1.0
    while phi._eval(np.asarray(min(hi, phi.t_max))) < y:
        if hi >= phi.t_max:
            raise RangeError(f"y={y} exceeds phi(t_max)={phi._eval(np.asarray(phi.t_max))}")
        hi *= 2.0
    hi = min(hi, phi.t_max)
    return brentq(lambda t: float(phi._eval(np.asarray(t))) - y, 0.0, hi,
                  xtol=INVERSE_TOL, rtol=4 * np.finfo(float).eps)


@dataclass(frozen=True)
class Power(PhiSpec):
    """phi(t) = t**p, p >= 1."""

    p: float

    def __post_init__(self):
        if not self.p >= 1:
            raise DomainError(f"Power requires p >= 1, got {self.p}")

    @property
    def analytic_gamma(self) -> float:
        return 2.0 ** (self.p - 1)

    def _eval(self, t):
        return t ** self.p

    def _log_eval(self, t):
        return self.p * np.log(t)

    def _derivative(self, t, side):
        if self.p == 1:
            return np.ones_like(t)
        return self.p * t ** (self.p - 1)

    def _inverse(self, y):
        return y ** (1.0 / self.p)

    def to_json(self):
        return {"kind": "power", "p": self.p}


@dataclass(frozen=True)
class ExpMinusOne(PhiSpec):
    """phi(t) = (base**t - 1) / (base - 1), base > 1; normalised so phi(1) = 1."""

    base: float

    def __post_init__(self):
        if not self.base > 1:
            raise DomainError(f"ExpMinusOne requires base > 1, got {self.base}")

    @property
    def analytic_gamma(self) -> float:
        return float(self.base)

    @property
    def _rate(self) -> float:
        return math.log(self.base)

    def _eval(self, t):
        with np.errstate(over="ignore"):
            return np.expm1(self._rate * t) / (self.base - 1)

    def _log_eval(self, t):
        a = self._rate * t
        with np.errstate(divide="ignore", invalid="ignore"):
            small = np.log(np.expm1(np.minimum(a, 1.0)))
            large = a + np.log1p(-np.exp(-np.maximum(a, 1.0)))
        return np.where(a > 1.0, large, small) - math.log(self.base - 1)

    def _derivative(self, t, side):
        with np.errstate(over="ignore"):
            return self._rate * np.exp(self._rate * t) / (self.base - 1)

    def _inverse(self, y):
        return np.log1p((self.base - 1) * y) / self._rate

    def to_json(self):
        return {"kind": "exp", "base": self.base}


@dataclass(frozen=True)
class Linear(PhiSpec):
    """phi(t) = slope * t."""

    slope: float

    def __post_init__(self):
        if not self.slope > 0:
            raise DomainError(f"Linear requires slope > 0, got {self.slope}")

    @property
    def analytic_gamma(self) -> float:
        return 1.0

    def _eval(self, t):
        return self.slope * t

    def _log_eval(self, t):
        return math.log(self.slope) + np.log(t)

    def _derivative(self, t, side):
        return np.full_like(t, self.slope)

    def _inverse(self, y):
        return y / self.slope

    def to_json(self):
        return {"kind": "linear", "slope": self.slope}


@dataclass(frozen=True)
class Tabulated(PhiSpec):
    """Piecewise-linear interpolation of knots (t_i, phi(t_i)); no extrapolation.

    Knots are not required to be convex: ``check_membership`` reports on that.
    """

    knots: tuple

    smooth = False

    def __post_init__(self):
        knots = tuple((float(a), float(b)) for a, b in self.knots)
        object.__setattr__(self, "knots", knots)
        ts = np.array([k[0] for k in knots])
        if len(knots) < 2:
            raise DomainError("Tabulated needs at least two knots")
        if ts[0] != 0.0 or knots[0][1] != 0.0:
            raise DomainError("Tabulated knots must start at (0, 0)")
        if np.any(np.diff(ts) <= 0):
            raise DomainError("Tabulated knot abscissae must be strictly increasing")

    @property
    def ts(self) -> np.ndarray:
        return np.array([k[0] for k in self.knots])

    @property
    def vs(self) -> np.ndarray:
        return np.array([k[1] for k in self.knots])

    @property
    def t_max(self) -> float:
        return self.knots[-1][0]

    def _eval(self, t):
        return np.interp(t, self.ts, self.vs)

    def _inverse(self, y):
        vs = self.vs
        if np.any(np.diff(vs) <= 0):
            raise DomainError("tabulated values are not strictly increasing; no inverse")
        if np.any(y > vs[-1] * (1 + 1e-12)):
            raise RangeError(f"y={y!r} exceeds tabulated range [0, {vs[-1]}]")
        return np.interp(y, vs, self.ts)

    def to_json(self):
        return {"kind": "tabulated", "knots": [list(k) for k in self.knots]}

    @classmethod
    def from_function(cls, fn, ts: Sequence[float]) -> "Tabulated":
        return cls(tuple((float(t), float(fn(t))) for t in ts))


@dataclass(frozen=True)
class Scaled(PhiSpec):
    """phi(t) = c * inner(t); gamma is unchanged by positive scaling."""

    c: float
    inner: PhiSpec

    def __post_init__(self):
        if not self.c > 0:
            raise DomainError(f"Scaled requires c > 0, got {self.c}")

    @property
    def analytic_gamma(self):
        return self.inner.analytic_gamma

    @property
    def t_max(self):
        return self.inner.t_max

    @property
    def smooth(self):
        return self.inner.smooth

    def _eval(self, t):
        return self.c * self.inner._eval(t)

    def _log_eval(self, t):
        return math.log(self.c) + self.inner._log_eval(t)

    def _derivative(self, t, side):
        return self.c * self.inner._derivative(t, side)

    def _inverse(self, y):
        return self.inner._inverse(y / self.c)

    def to_json(self):
        return {"kind": "scaled", "c": self.c, "phi": self.inner.to_json()}


@dataclass(frozen=True)
class Sum(PhiSpec):
    """Pointwise sum; gamma_{phi+psi} <= max(gamma_phi, gamma_psi)."""

    first: PhiSpec
    second: PhiSpec

    @property
    def t_max(self):
        return min(self.first.t_max, self.second.t_max)

    @property
    def smooth(self):
        return self.first.smooth and self.second.smooth

    def _eval(self, t):
        return self.first._eval(t) + self.second._eval(t)

    def _log_eval(self, t):
        return np.logaddexp(self.first._log_eval(t), self.second._log_eval(t))

    def _derivative(self, t, side):
        return self.first._derivative(t, side) + self.second._derivative(t, side)

    def to_json(self):
        return {"kind": "sum", "terms": [self.first.to_json(), self.second.to_json()]}


@dataclass(frozen=True)
class Product(PhiSpec):
    """Pointwise product; gamma_{phi*psi} <= 2 gamma_phi gamma_psi."""

    first: PhiSpec
    second: PhiSpec

    @property
    def t_max(self):
        return min(self.first.t_max, self.second.t_max)

    @property
    def smooth(self):
        return self.first.smooth and self.second.smooth

    def _eval(self, t):
        with np.errstate(invalid="ignore"):
            return self.first._eval(t) * self.second._eval(t)

    def _log_eval(self, t):
        return self.first._log_eval(t) + self.second._log_eval(t)

    def _derivative(self, t, side):
        a, b = self.first, self.second
        return a._derivative(t, side) * b._eval(t) + a._eval(t) * b._derivative(t, side)

    def to_json(self):
        return {"kind": "product", "factors": [self.first.to_json(), self.second.to_json()]}


def evaluate(phi: PhiSpec, t):
    return phi(t)


def inverse(phi: PhiSpec, y):
    return phi.inverse(y)


def phi_from_json(obj: dict) -> PhiSpec:
    kind = obj.get("kind")
    try:
        if kind == "power":
            return Power(float(obj["p"]))
        if kind == "exp":
            return ExpMinusOne(float(obj["base"]))
        if kind == "linear":
            return Linear(float(obj["slope"]))
        if kind == "tabulated":
            return Tabulated(tuple(tuple(k) for k in obj["knots"]))
        if kind == "scaled":
            return Scaled(float(obj["c"]), phi_from_json(obj["phi"]))
        if kind == "sum":
            a, b = obj["terms"]
            return Sum(phi_from_json(a), phi_from_json(b))
        if kind == "product":
            a, b = obj["factors"]
            return Product(phi_from_json(a), phi_from_json(b))
    except KeyError as exc:
        raise DomainError(f"phi JSON of kind {kind!r} is missing field {exc}") from None
    raise DomainError(f"unknown phi kind {kind!r}")


def parse_phi(text: str) -> PhiSpec:
    """Parse the short CLI form ``power:2``, ``exp:3`` or ``linear:1``."""
    kind, _, arg = text.partition(":")
    if not arg:
        raise DomainError(f"expected KIND:PARAM, got {text!r}")
    field = {"power": "p", "exp": "base", "linear": "slope"}.get(kind)
    if field is None:
        raise DomainError(f"unknown phi kind {kind!r} (power, exp, linear)")
    try:
        value = float(arg)
    except ValueError:
        raise DomainError(f"bad phi parameter in {text!r}") from None
    return phi_from_json({"kind": kind, field: value})


# --------------------------------------------------------------------------
# growth constants


class GammaEstimate(NamedTuple):
    value: float
    lower_bound: bool
    argmax: float


def _ratio(phi: PhiSpec, x, t: float):
    lnum = phi._log_eval(np.asarray(x) + t)
    lden = np.logaddexp(phi._log_eval(np.asarray(t, dtype=float)), phi._log_eval(np.asarray(x)))
    return np.exp(lnum - lden)


def gamma_t_estimate(phi: PhiSpec, t: float, grid_max: float = DEFAULT_GRID_MAX,
                     grid_points: int = DEFAULT_GRID_POINTS) -> GammaEstimate:
    """Grid supremum of phi(x + t) / (phi(x) + phi(t)) over x in [0, grid_max].

    The grid is log-spaced, the best grid point is polished with a bounded
    scalar search, and a still-growing last decade raises DivergenceError.
    """
    if not t > 0:
        raise DomainError(f"offset t must be positive, got {t}")
    if grid_max < 10 or grid_points < 100:
        raise DomainError("need grid_max >= 10 and grid_points >= 100")
    x_max = min(grid_max, phi.t_max - t)
    if not x_max > GRID_MIN * 100:
        raise DomainError(f"phi range too short for offset {t}")
    xs = np.concatenate([[0.0], np.geomspace(GRID_MIN, x_max, grid_points - 1)])
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        r = _ratio(phi, xs, t)
    if not np.all(np.isfinite(r)):
        raise DivergenceError(f"ratio overflowed on the grid for {phi}")

    last = r[xs >= x_max / 10]
    prev = r[(xs >= x_max / 100) & (xs <= x_max / 10)]
    if last.max() > (1 + DIVERGENCE_SLOPE) * prev.max():
        raise DivergenceError(
            f"growth ratio still rising at x={x_max:g} ({prev.max():.6g} -> {last.max():.6g})")

    i = int(np.argmax(r))
    best, arg = float(r[i]), float(xs[i])
    if 0 < i < len(xs) - 1:
        res = minimize_scalar(lambda x: -float(_ratio(phi, x, t)), bounds=(xs[i - 1], xs[i + 1]),
                              method="bounded", options={"xatol": 1e-10 * max(1.0, arg)})
        if -res.fun > best:
            best, arg = float(-res.fun), float(res.x)
    return GammaEstimate(max(best, 1.0), True, arg)


def gamma_estimate(phi: PhiSpec, grid_max: float = DEFAULT_GRID_MAX,
                   grid_points: int = DEFAULT_GRID_POINTS) -> GammaEstimate:
    return gamma_t_estimate(phi, 1.0, grid_max, grid_points)


def gamma(phi: PhiSpec, grid_max: float = DEFAULT_GRID_MAX,
          grid_points: int = DEFAULT_GRID_POINTS, numeric: bool = False) -> float:
    """Growth constant gamma_phi; closed form when known unless ``numeric``."""
    if not numeric and phi.analytic_gamma is not None:
        return float(phi.analytic_gamma)
    return gamma_estimate(phi, grid_max, grid_points).value


def gamma_t(phi: PhiSpec, t: float, grid_max: float = DEFAULT_GRID_MAX,
            grid_points: int = DEFAULT_GRID_POINTS) -> float:
    return gamma_t_estimate(phi, t, grid_max, grid_points).value


# --------------------------------------------------------------------------
# membership and inequalities


@dataclass(frozen=True)
class MembershipReport:
    increasing: bool
    convex: bool
    zero_at_zero: bool
    gamma_bounded: bool

    @property
    def member(self) -> bool:
        return self.increasing and self.convex and self.zero_at_zero and self.gamma_bounded


def check_membership(phi: PhiSpec, grid: Sequence[float], tol: float = 1e-12) -> MembershipReport:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or len(g) < 3 or np.any(np.diff(g) < 0) or g[0] != 0.0:
        raise DomainError("grid must be sorted, have >= 3 points and start at 0")
    v = np.asarray(phi(g))
    increasing = bool(np.all(np.diff(v) > 0))
    i, j = np.triu_indices(len(g), k=1)
    mid = np.asarray(phi((g[i] + g[j]) / 2))
    slack = tol * (1.0 + np.abs(v[i]) + np.abs(v[j]))
    convex = bool(np.all(mid <= (v[i] + v[j]) / 2 + slack))
    try:
        gamma(phi)
        bounded = True
    except DivergenceError:
        bounded = False
    return MembershipReport(increasing, convex, bool(phi(0.0) == 0.0), bounded)


def exp_dominator_bound(phi: PhiSpec, x):
    """gamma * (gamma**x - 1) / (gamma - 1) * phi(1); the linear limit x * phi(1) at gamma = 1."""
    x = _checked(x)
    g = gamma(phi)
    if g - 1.0 < 1e-12:
        return _out(x, x * phi(1.0))
    with np.errstate(over="ignore"):
        return _out(x, g * np.expm1(x * math.log(g)) / (g - 1.0) * phi(1.0))


def increment_bound(phi: PhiSpec, x, h):
    """Upper bound on phi(x + h) - phi(x) for h in (0, 1]."""
    h_arr = np.asarray(h, dtype=float)
    if np.any(~(h_arr > 0)) or np.any(h_arr > 1):
        raise DomainError(f"h must lie in (0, 1], got {h!r}")
    g = gamma(phi)
    bound = h_arr * (g * phi(1.0) + (g - 1.0) * np.asarray(phi(x)))
    return float(bound) if np.ndim(bound) == 0 else bound


def midpoint_inequality_holds(phi: PhiSpec, a: float, b: float, c: float, tol: float = 1e-9) -> bool:
    """2 phi(a/2) <= phi(b) + phi(c) whenever a <= b + c."""
    if a > b + c:
        raise DomainError(f"need a <= b + c, got a={a}, b={b}, c={c}")
    return bool(2 * phi(a / 2) <= phi(b) + phi(c) + tol)


# --------------------------------------------------------------------------
# families


@dataclass(frozen=True)
class PhiFamily:
    members: tuple

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise DomainError("empty family")

    @property
    def gamma_sup(self) -> float:
        out = 1.0
        for m in self.members:
            try:
                out = max(out, gamma(m))
            except DivergenceError:
                return math.inf
        return out

    @property
    def phi1_sup(self) -> float:
        return max(float(m(1.0)) for m in self.members)

    @property
    def dominated(self) -> bool:
        return math.isfinite(self.gamma_sup) and math.isfinite(self.phi1_sup)


def dominate_family(family: PhiFamily, grid: Sequence[float] | None = None,
                    eps: float | None = None) -> PhiSpec:
    """A single psi with phi(t) < psi(t) for every member and every t > 0 on ``grid``.

    psi(t) = (phi1_sup + eps) * gamma * (gamma**t - 1) / (gamma - 1), which
    degenerates to (phi1_sup + eps) * t when every member is linear.
    """
    g, p1 = family.gamma_sup, family.phi1_sup
    if not (math.isfinite(g) and math.isfinite(p1)):
        raise NotDominatedError(f"family not dominated: gamma_sup={g}, phi1_sup={p1}")
    ts = np.linspace(0.0, 20.0, 2001)[1:] if grid is None else np.asarray(grid, dtype=float)
    ts = ts[ts > 0]
    eps = 1e-9 * p1 if eps is None else eps
    for _ in range(64):
        c = p1 + eps
        psi = Linear(c) if g - 1.0 < 1e-12 else Scaled(c * g, ExpMinusOne(g))
        bound = np.asarray(psi(ts))
        if all(np.all(np.asarray(m(np.minimum(ts, m.t_max))) < bound) for m in family.members):
            return psi
        eps *= 2.0
    raise NotDominatedError("could not certify strict domination on the verification grid")
