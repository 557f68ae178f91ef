"""Seeded samples: uniform sphere points, Haar circle quadrature, isotropic densities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import DomainError, EmptySetError, UnsupportedSpaceError
from .loss import Measure
from .spaces import Circle, Euclidean, ProjectiveSpace, Space, Sphere, Torus, wrap_angle

QUADRATURE_POINTS = 4096


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Philox generator keyed by (seed, *stream).

    Philox is counter-based, so a stream id picks a disjoint, platform-independent
    sequence; replicate r of experiment e can be drawn as make_rng(seed, e, r)
    regardless of which thread runs it.
    """
    key = [int(seed), *map(int, stream)]
    if any(k < 0 for k in key):
        raise DomainError("seeds and stream ids must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


@dataclass(frozen=True)
class RadialProfile:
    """Decreasing radial density profile f.

    kind ``exp``: f(r) = exp(-param r); ``linear``: f(r) = max(0, 1 - r/param);
    ``step``: f(r) = 1 for r <= param, else 0.
    """

    kind: str
    param: float

    def __post_init__(self):
        if self.kind not in ("exp", "linear", "step"):
            raise DomainError(f"unknown profile kind {self.kind!r}")
        if not (self.param > 0 and math.isfinite(self.param)):
            raise DomainError("profile parameter must be positive and finite")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "exp":
            return np.exp(-self.param * r)
        if self.kind == "linear":
            return np.maximum(0.0, 1.0 - r / self.param)
        return (r <= self.param).astype(float)

    @property
    def support(self) -> float:
        return math.inf if self.kind == "exp" else self.param

    def to_json(self) -> dict:
        return {"kind": self.kind, "param": self.param}


def ExpDecay(rate: float) -> RadialProfile:
    return RadialProfile("exp", rate)


def LinearDecay(cutoff: float) -> RadialProfile:
    return RadialProfile("linear", cutoff)


def StepDecay(radius: float) -> RadialProfile:
    return RadialProfile("step", radius)


def parse_profile(text: str) -> RadialProfile:
    """``exp:1``, ``linear:0.5`` or ``step:1e-6``."""
    kind, _, arg = text.strip().partition(":")
    try:
        return RadialProfile(kind, float(arg))
    except ValueError:
        raise DomainError(f"bad profile {text!r}") from None


def profile_from_json(obj: dict) -> RadialProfile:
    return RadialProfile(obj["kind"], float(obj["param"]))


def uniform_sphere(n: int, dim: int, seed: int) -> np.ndarray:
    """n iid uniform points on Sphere(dim), as normalized Gaussian vectors."""
    if n < 1 or dim < 1:
        raise DomainError("n and dim must be positive")
    g = make_rng(seed).standard_normal((n, dim + 1))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def haar_circle(n: int, seed: int | None = None) -> Measure:
    """Equal-weight quadrature of the Haar measure at angles 2 pi k / n - pi.

    Deterministic; ``seed`` is accepted for a uniform sampler signature and ignored.
    """
    if n < 1:
        raise DomainError("n must be positive")
    return Measure(Circle(), wrap_angle(2 * np.pi * np.arange(n) / n - np.pi))


def _radius_range(space: Space, profile: RadialProfile) -> float:
    if isinstance(space, ProjectiveSpace):
        raise UnsupportedSpaceError("isotropic sampling on projective space is not implemented")
    if isinstance(space, Torus):
        if not profile.support <= math.pi:
            raise UnsupportedSpaceError(
                "torus sampling needs a profile supported within radius pi")
        return profile.support
    if isinstance(space, (Sphere, Circle)):
        return min(math.pi, profile.support)
    if isinstance(space, Euclidean):
        if profile.kind == "exp":
            # e^-60 of the mass beyond; the r^(d-1) factor is absorbed by 2d
            return (60.0 + 2.0 * space.dim) / profile.param
        return profile.support
    raise UnsupportedSpaceError(f"no isotropic sampler for {space.tag}")


def _jacobian(space: Space, r: np.ndarray) -> np.ndarray:
    d = space.dim
    if isinstance(space, Sphere):
        return np.sin(r) ** (d - 1)
    return r ** (d - 1)


def radial_cdf(space: Space, profile: RadialProfile, n_quad: int = QUADRATURE_POINTS):
    """(radii, cdf) on a quadrature grid for the radius law f(r) J(r) dr."""
    rmax = _radius_range(space, profile)
    r = np.linspace(0.0, rmax, n_quad)
    dens = profile(r) * _jacobian(space, r)
    cdf = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) / 2 * np.diff(r))])
    if not cdf[-1] > 0:
        raise DomainError("profile has no mass on the space")
    if profile.kind == "step" and not profile.param < space.diameter:
        raise DomainError("profile is constant on the radius range of the space")
    return r, cdf / cdf[-1]


def isotropic_sample(space: Space, center, profile: RadialProfile, n: int, seed: int,
                     stream: tuple = ()) -> np.ndarray:
    """n iid draws from the density proportional to f(dist(x, center)).

    Radius by inverse CDF of f(r) J(r) on a 4096-point quadrature, direction
    uniform in the tangent space at center, point = exp_center(radius * direction).
    Samples are prefix-stable: a smaller n gives the leading rows of a larger n.
    """
    if n < 1:
        raise DomainError("n must be positive")
    center = space.validate(center)
    radii, cdf = radial_cdf(space, profile)
    # one row of uniforms per point (radius, then direction), so the first m
    # points of an n-sample are exactly the m-sample from the same stream
    u = make_rng(seed, *stream).random((n, space.dim + 1))
    r = np.interp(u[:, 0], cdf, radii)
    g = ndtri(np.clip(u[:, 1:], 2.0 ** -60, None))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    direction = g / np.where(norms > 0, norms, 1.0)
    v = (r[:, None] * direction) @ space.tangent_basis(center).T
    return space.exp(center, v)


def empirical_measure(points, space: Space) -> Measure:
    """Equal weights 1/n; repeated points stay separate atoms."""
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise EmptySetError("no points")
    return Measure(space, pts)
