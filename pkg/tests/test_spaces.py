import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phimeans.errors import (CutLocusError, DomainError, InvalidPointError, RegionRequiredError,
                             ResolutionError)
from phimeans.sampling import make_rng
from phimeans.spaces import (Circle, Euclidean, ProjectiveSpace, Region, Sphere, Torus,
                             base_point, distance, exp_map, log_map, make_grid, parse_space,
                             wrap_angle)

SPACES = [Euclidean(1), Euclidean(3), Circle(), Torus(2), Torus(3), Sphere(1), Sphere(2),
          Sphere(4), ProjectiveSpace(2)]


def random_points(space, n, seed):
    rng = make_rng(seed)
    if isinstance(space, Euclidean):
        return rng.normal(size=(n, space.ambient_dim)) * 3
    return np.array([space.random_point(rng) for _ in range(n)])


def random_tangent(space, base, rng, max_norm):
    v = rng.normal(size=space.dim)
    v *= rng.uniform(0, max_norm) / np.linalg.norm(v)
    return space.tangent_basis(base) @ v


class TestDistance:
    def test_examples(self):
        north = base_point(Sphere(2))
        assert distance(Sphere(2), north, north) == 0
        assert distance(Circle(), [-3.0], [3.0]) == pytest.approx(2 * math.pi - 6)
        assert distance(Sphere(1), [1, 0], [0, 1]) == pytest.approx(math.pi / 2)

    def test_projective_identifies_antipodes(self):
        rp = ProjectiveSpace(2)
        x = rp.normalize([1.0, 0.2, 0.0])
        y = rp.normalize([-1.0, -0.2, 0.0])
        assert distance(rp, x, y) == 0
        assert distance(rp, [1.0, 0, 0], [0, 1.0, 0]) == pytest.approx(math.pi / 2)

    @pytest.mark.parametrize("space", SPACES, ids=lambda s: s.tag)
    def test_metric_axioms(self, space):
        x, y, z = (random_points(space, 1000, s) for s in (1, 2, 3))
        dxy, dyx = space.dist(x, y), space.dist(y, x)
        assert np.all(np.abs(dxy - dyx) <= 1e-12)
        assert np.all(space.dist(x, z) <= dxy + space.dist(y, z) + 1e-9)
        assert np.all(space.dist(x, x) <= 1e-12)
        assert np.all(dxy <= space.diameter + 1e-12)

    def test_invalid_points(self):
        with pytest.raises(InvalidPointError):
            distance(Sphere(2), [1, 1, 0], [0, 0, 1])
        with pytest.raises(InvalidPointError):
            distance(Circle(), [4.0], [0.0])
        with pytest.raises(InvalidPointError):
            distance(Euclidean(2), [1.0], [0.0, 0.0])
        with pytest.raises(InvalidPointError):
            distance(ProjectiveSpace(1), [-1.0, 0.0], [1.0, 0.0])

    def test_tiny_euclidean_gap(self):
        assert Euclidean(2).dist(np.zeros(2), np.array([3e-240, 4e-240])) == pytest.approx(5e-240)
        assert Euclidean(1).dist(np.zeros(1), np.array([1e200])) == 1e200

    def test_sphere_distance_accurate_near_zero(self):
        s = Sphere(2)
        x = base_point(s)
        y = s.exp(x, np.array([1e-9, 0, 0]))
        assert s.dist(x, y) == pytest.approx(1e-9, rel=1e-6)


class TestExpLog:
    def test_examples(self):
        north = base_point(Sphere(2))
        np.testing.assert_array_equal(exp_map(Sphere(2), north, [0, 0, 0]), north)
        np.testing.assert_allclose(exp_map(Sphere(2), north, [math.pi / 2, 0, 0]), [1, 0, 0],
                                   atol=1e-15)
        np.testing.assert_allclose(exp_map(Euclidean(3), [1, 1, 1], [1, 0, -1]), [2, 1, 0])
        np.testing.assert_allclose(log_map(Sphere(2), north, [1, 0, 0]), [math.pi / 2, 0, 0],
                                   atol=1e-15)
        assert log_map(Circle(), [0.0], [1.0])[0] == pytest.approx(1)

    @pytest.mark.parametrize("space", SPACES, ids=lambda s: s.tag)
    def test_log_of_base_is_zero(self, space):
        x = random_points(space, 1, 4)[0]
        assert np.all(log_map(space, x, x) == 0)

    def test_exp_rejects_non_tangent(self):
        with pytest.raises(InvalidPointError):
            exp_map(Sphere(2), base_point(Sphere(2)), [0, 0, 1])

    @pytest.mark.parametrize("space", SPACES, ids=lambda s: s.tag)
    def test_radial_isometry_and_round_trip(self, space):
        rng = make_rng(11)
        radius = min(space.cut_radius, 10.0) - 1e-6
        for base in random_points(space, 50, 12):
            v = random_tangent(space, base, rng, radius)
            y = space.exp(base, v)
            assert space.dist(base, y) == pytest.approx(np.linalg.norm(v), abs=1e-9)
            np.testing.assert_allclose(space.log(base, y), v, atol=1e-9)

    def test_cut_locus(self):
        with pytest.raises(CutLocusError):
            log_map(Sphere(2), [0, 0, 1.0], [0, 0, -1.0])
        with pytest.raises(CutLocusError):
            log_map(Circle(), [0.0], [math.pi])
        with pytest.raises(CutLocusError):
            log_map(ProjectiveSpace(1), [1.0, 0.0], [0.0, 1.0])

    @given(st.floats(-50, 50))
    def test_wrap_angle_range(self, theta):
        w = wrap_angle(theta)
        assert -math.pi < w <= math.pi
        assert math.cos(w) == pytest.approx(math.cos(theta), abs=1e-9)


class TestGrid:
    def test_circle(self):
        g = make_grid(Circle(), 4)
        np.testing.assert_allclose(np.sort(g.points[:, 0]), [-math.pi / 2, 0, math.pi / 2, math.pi])
        assert g.mesh == pytest.approx(math.pi / 4)

    def test_torus_count(self):
        assert len(make_grid(Torus(2), 3).points) == 9

    def test_euclidean_region(self):
        g = make_grid(Euclidean(1), 11, Region(np.zeros(1), 1.0))
        np.testing.assert_allclose(g.points[:, 0], np.linspace(-1, 1, 11))

    def test_region_required(self):
        with pytest.raises(RegionRequiredError):
            make_grid(Sphere(2), 5)

    def test_resolution_cap(self):
        with pytest.raises(ResolutionError):
            make_grid(Torus(3), 200, cap=10**6)

    def test_region_beyond_cut_locus(self):
        with pytest.raises(DomainError):
            make_grid(Sphere(2), 5, Region(base_point(Sphere(2)), 3.0))

    @pytest.mark.parametrize("space,region", [
        (Circle(), None),
        (Torus(2), None),
        (Euclidean(2), Region(np.array([1.0, -1.0]), 2.0)),
        (Sphere(2), Region(np.array([0.0, 0.0, 1.0]), 1.0)),
    ], ids=lambda v: getattr(v, "tag", ""))
    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10**6))
    def test_mesh_covers(self, space, region, seed):
        grid = make_grid(space, 9, region)
        rng = make_rng(seed)
        if region is None:
            x = space.random_point(rng)
        else:
            off = rng.uniform(-region.radius, region.radius, size=space.dim)
            x = space.chart(region.center, off)
        assert space.dist(x, grid.points).min() <= grid.mesh + 1e-12


def test_parse_space():
    assert parse_space("circle") == Circle()
    assert parse_space("sphere:2") == Sphere(2)
    assert parse_space("torus:3").dim == 3
    assert parse_space("projective:2").cut_radius == pytest.approx(math.pi / 2)
    for bad in ("cube:2", "sphere", "sphere:0"):
        with pytest.raises(DomainError):
            parse_space(bad)
