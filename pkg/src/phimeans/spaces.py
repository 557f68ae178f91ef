"""Metric spaces with closed-form geodesics.

Points are plain float arrays in a per-kind chart:

* ``Euclidean(n)``: coordinates in R^n
* ``Circle()``: one angle in (-pi, pi]
* ``Torus(n)``: n angles in (-pi, pi], flat product metric
* ``Sphere(n)``: unit vector in R^(n+1)
* ``ProjectiveSpace(n)``: unit vector in R^(n+1), first nonzero coordinate positive

Tangent vectors at a base point are arrays in the same ambient coordinates
(orthogonal to the base on spheres and projective spaces).  Methods without
a leading underscore-free public wrapper (``dist``, ``exp``, ``log``) do no
validation and broadcast over leading axes; the module-level functions
``distance``, ``exp_map`` and ``log_map`` validate their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (CutLocusError, DomainError, InvalidPointError, RegionRequiredError,
                     ResolutionError)

CUT_LOCUS_TOL = 1e-8
UNIT_TOL = 1e-12
GRID_CAP = 2_000_000


def wrap_angle(theta):
    """Map angles to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(theta, dtype=float), 2 * np.pi)


def _norm(v):
    # rescale by the largest entry so tiny (or huge) vectors do not under/overflow when squared
    v = np.asarray(v, dtype=float)
    scale = np.max(np.abs(v), axis=-1, keepdims=True)
    safe = np.where(scale > 0, scale, 1.0)
    return safe[..., 0] * np.linalg.norm(v / safe, axis=-1)


def _sphere_dist(x, y):
    # equals arccos(<x, y>) but stays accurate near 0 and pi
    return 2.0 * np.arctan2(_norm(y - x), _norm(y + x))


def _householder_basis(m: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of the orthogonal complement of unit vector m."""
    a = len(m)
    e0 = np.zeros(a)
    e0[0] = 1.0
    u = m - e0
    nu = float(u @ u)
    if nu < 1e-24:
        return np.eye(a)[:, 1:]
    h = np.eye(a) - 2.0 * np.outer(u, u) / nu
    return h[:, 1:]


class Space:
    kind: str = ""
    dim: int = 0
    ambient_dim: int = 0
    cut_radius: float = math.inf
    diameter: float = math.inf
    compact: bool = False

    @property
    def tag(self) -> str:
        return f"{self.kind}:{self.dim}"

    def normalize(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float)

    def validate(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=float)
        if arr.shape[-1:] != (self.ambient_dim,):
            raise InvalidPointError(
                f"{self.tag} points have {self.ambient_dim} coordinates, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidPointError("non-finite coordinates")
        return arr

    def dist(self, x, y):
        raise NotImplementedError

    def exp(self, base, v):
        raise NotImplementedError

    def log(self, base, y, tol: float = CUT_LOCUS_TOL):
        raise NotImplementedError

    def tangent_basis(self, base) -> np.ndarray:
        return np.eye(self.ambient_dim)

    def to_tangent(self, base, v):
        """Orthogonal projection of an ambient vector onto the tangent space at base."""
        return np.asarray(v, dtype=float)

    def chart(self, center, offsets) -> np.ndarray:
        """Map coordinate offsets (..., dim) around center to points."""
        raise NotImplementedError

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Euclidean(Space):
    n: int

    kind = "euclidean"

    @property
    def dim(self):
        return self.n

    @property
    def ambient_dim(self):
        return self.n

    def dist(self, x, y):
        return _norm(np.asarray(y) - np.asarray(x))

    def exp(self, base, v):
        return np.asarray(base) + np.asarray(v)

    def log(self, base, y, tol=CUT_LOCUS_TOL):
        return np.asarray(y) - np.asarray(base)

    def chart(self, center, offsets):
        return np.asarray(center) + np.asarray(offsets)

    def random_point(self, rng):
        return rng.normal(size=self.n)


class _Angular(Space):
    cut_radius = math.pi
    compact = True

    def normalize(self, x):
        return wrap_angle(x)

    def validate(self, x):
        arr = super().validate(x)
        if np.any(arr <= -np.pi) or np.any(arr > np.pi):
            raise InvalidPointError("angles must lie in (-pi, pi]")
        return arr

    def dist(self, x, y):
        return _norm(wrap_angle(np.asarray(y) - np.asarray(x)))

    def exp(self, base, v):
        return wrap_angle(np.asarray(base) + np.asarray(v))

    def log(self, base, y, tol=CUT_LOCUS_TOL):
        delta = wrap_angle(np.asarray(y) - np.asarray(base))
        if np.any(np.abs(delta) > np.pi - tol):
            raise CutLocusError("target is antipodal to the base in some angle")
        return delta

    def chart(self, center, offsets):
        return wrap_angle(np.asarray(center) + np.asarray(offsets))

    def random_point(self, rng):
        return wrap_angle(rng.uniform(-np.pi, np.pi, size=self.ambient_dim))


@dataclass(frozen=True)
class Circle(_Angular):
    kind = "circle"
    dim = 1
    ambient_dim = 1
    diameter = math.pi

    @property
    def tag(self):
        return "circle"


@dataclass(frozen=True)
class Torus(_Angular):
    n: int

    kind = "torus"

    @property
    def dim(self):
        return self.n

    @property
    def ambient_dim(self):
        return self.n

    @property
    def diameter(self):
        return math.pi * math.sqrt(self.n)


@dataclass(frozen=True)
class Sphere(Space):
    n: int

    kind = "sphere"
    cut_radius = math.pi
    diameter = math.pi
    compact = True

    @property
    def dim(self):
        return self.n

    @property
    def ambient_dim(self):
        return self.n + 1

    def normalize(self, x):
        x = np.asarray(x, dtype=float)
        return x / _norm(x)[..., None]

    def validate(self, x):
        arr = super().validate(x)
        if np.any(np.abs(_norm(arr) - 1.0) > UNIT_TOL):
            raise InvalidPointError("sphere points must have unit norm")
        return arr

    def dist(self, x, y):
        return _sphere_dist(np.asarray(x), np.asarray(y))

    def exp(self, base, v):
        base = np.asarray(base, dtype=float)
        v = np.asarray(v, dtype=float)
        nv = _norm(v)[..., None]
        safe = np.where(nv > 0, nv, 1.0)
        out = np.cos(nv) * base + np.where(nv > 0, np.sin(nv) / safe, 1.0) * v
        out = out / _norm(out)[..., None]
        return np.where(nv > 0, out, base)

    def log(self, base, y, tol=CUT_LOCUS_TOL):
        base = np.asarray(base, dtype=float)
        y = np.asarray(y, dtype=float)
        d = _sphere_dist(base, y)
        if np.any(d > self.cut_radius - tol):
            raise CutLocusError("target within cut-locus tolerance of the antipode")
        w = y - np.sum(y * base, axis=-1, keepdims=True) * base
        nw = _norm(w)[..., None]
        return np.where(nw > 0, d[..., None] / np.where(nw > 0, nw, 1.0) * w, 0.0)

    def tangent_basis(self, base):
        return _householder_basis(np.asarray(base, dtype=float))

    def to_tangent(self, base, v):
        base = np.asarray(base, dtype=float)
        v = np.asarray(v, dtype=float)
        return v - np.sum(v * base, axis=-1, keepdims=True) * base

    def chart(self, center, offsets):
        return self.exp(center, np.asarray(offsets) @ self.tangent_basis(center).T)

    def random_point(self, rng):
        return self.normalize(rng.normal(size=self.ambient_dim))


@dataclass(frozen=True)
class ProjectiveSpace(Sphere):
    """Real projective space as the sphere modulo x ~ -x."""

    kind = "projective"
    cut_radius = math.pi / 2
    diameter = math.pi / 2

    def normalize(self, x):
        return canonical_sign(super().normalize(x))

    def validate(self, x):
        arr = super().validate(x)
        if not np.array_equal(arr, canonical_sign(arr)):
            raise InvalidPointError("projective points need a positive first nonzero coordinate")
        return arr

    def _lift(self, x, y):
        # representative of y in the hemisphere around x
        s = np.sign(np.sum(np.asarray(x) * np.asarray(y), axis=-1, keepdims=True))
        return np.where(s < 0, -np.asarray(y), np.asarray(y))

    def dist(self, x, y):
        return _sphere_dist(np.asarray(x), self._lift(x, y))

    def exp(self, base, v):
        return canonical_sign(super().exp(base, v))

    def log(self, base, y, tol=CUT_LOCUS_TOL):
        return super().log(base, self._lift(base, y), tol)

    def random_point(self, rng):
        return self.normalize(rng.normal(size=self.ambient_dim))


def canonical_sign(x, eps: float = 1e-15) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    nz = np.abs(x) > eps
    first = np.argmax(nz, axis=-1)
    lead = np.take_along_axis(x, first[..., None], axis=-1)
    return np.where(lead < 0, -x, x)


SPACE_KINDS = {"euclidean": Euclidean, "torus": Torus, "sphere": Sphere,
               "projective": ProjectiveSpace}


def parse_space(text: str) -> Space:
    """Parse ``circle``, ``sphere:2``, ``torus:3``, ``euclidean:1`` or ``projective:2``."""
    kind, _, arg = text.strip().partition(":")
    if kind == "circle":
        return Circle()
    if kind not in SPACE_KINDS:
        raise DomainError(f"unknown space kind {kind!r}")
    try:
        n = int(arg)
    except ValueError:
        raise DomainError(f"space {text!r} needs an integer dimension") from None
    if n < 1:
        raise DomainError("space dimension must be positive")
    return SPACE_KINDS[kind](n)


def base_point(space: Space) -> np.ndarray:
    """Canonical reference point: the origin, angle 0, or the last basis vector (north pole)."""
    if isinstance(space, Sphere):
        x = np.zeros(space.ambient_dim)
        x[-1] = 1.0
        return x
    return np.zeros(space.ambient_dim)


# --------------------------------------------------------------------------
# validated entry points


def distance(space: Space, x, y) -> float:
    return float(space.dist(space.validate(x), space.validate(y)))


def exp_map(space: Space, base, v) -> np.ndarray:
    base = space.validate(base)
    v = np.asarray(v, dtype=float)
    if isinstance(space, Sphere) and abs(float(v @ base)) > 1e-12 * max(1.0, _norm(v)):
        raise InvalidPointError("tangent vector is not orthogonal to its base point")
    return space.exp(base, v)


def log_map(space: Space, base, target, tol: float = CUT_LOCUS_TOL) -> np.ndarray:
    return space.log(space.validate(base), space.validate(target), tol)


# --------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class Region:
    center: np.ndarray
    radius: float


class Grid(NamedTuple):
    points: np.ndarray
    mesh: float  # covering radius: every region point lies within mesh of a grid point


def box_offsets(axes: list) -> np.ndarray:
    """Cartesian product of per-axis coordinate arrays, shape (prod(len), len(axes))."""
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def check_region(space: Space, region: Region) -> None:
    if not region.radius > 0:
        raise DomainError("region radius must be positive")
    if region.radius * math.sqrt(space.dim) >= space.cut_radius:
        raise DomainError(
            f"tangent box of half-width {region.radius} reaches the cut locus of {space.tag}")


def make_grid(space: Space, resolution: int, region: Region | None = None,
              cap: int = GRID_CAP) -> Grid:
    """Uniform grid over a whole torus/circle or over a coordinate box around a center.

    Global angular grids use angles -pi + 2 pi (k + 1) / resolution per axis and
    have mesh (pi / resolution) sqrt(dim).  Region grids use ``resolution``
    points per axis on [-radius, radius] in the chart at the center (the tangent
    space for spheres, mapped through exp) and have mesh
    radius / (resolution - 1) * sqrt(dim); the exponential map of the sphere is
    1-Lipschitz inside its cut radius, so the mesh is preserved.
    """
    if resolution < 1:
        raise ResolutionError("resolution must be positive")
    if resolution ** space.dim > cap:
        raise ResolutionError(f"{resolution}^{space.dim} grid points exceed the cap {cap}")
    if region is None:
        if not isinstance(space, _Angular):
            raise RegionRequiredError(f"{space.tag} needs a region to grid")
        axis = -np.pi + 2 * np.pi * (np.arange(resolution) + 1) / resolution
        pts = wrap_angle(box_offsets([axis] * space.dim))
        return Grid(pts, math.pi / resolution * math.sqrt(space.dim))
    if resolution < 2:
        raise ResolutionError("region grids need at least 2 points per axis")
    center = space.validate(region.center)
    check_region(space, region)
    axis = np.linspace(-region.radius, region.radius, resolution)
    pts = space.chart(center, box_offsets([axis] * space.dim))
    return Grid(pts, region.radius / (resolution - 1) * math.sqrt(space.dim))
