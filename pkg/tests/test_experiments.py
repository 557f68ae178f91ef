import numpy as np
import pytest

from phimeans.errors import DomainError
from phimeans.experiments import (consistency_curve, thread_count, uniform_consistency_curve,
                                  uniqueness_check)
from phimeans.phi import ExpMinusOne, Linear, PhiFamily, Power
from phimeans.sampling import ExpDecay, StepDecay, isotropic_sample
from phimeans.solvers import SolverConfig
from phimeans.spaces import Circle, Euclidean, Sphere, base_point

S2 = Sphere(2)
NORTH = base_point(S2)


class TestConsistency:
    def test_shapes_and_trend(self):
        res = consistency_curve(Power(2), S2, NORTH, ExpDecay(1), [10, 100, 1000], 12, seed=7)
        assert res.per_replicate_rho.shape == (12, 3)
        assert np.all(res.per_replicate_rho >= 0)
        assert res.median[0] > res.median[1] > res.median[2]
        assert np.all(res.p90 >= res.median)
        assert not res.errors

    def test_collapsed_profile(self):
        res = consistency_curve(Power(2), S2, NORTH, StepDecay(1e-6), [10, 100], 3, seed=1)
        assert np.all(res.per_replicate_rho <= 2e-6)

    def test_line_oracle(self):
        res = consistency_curve(Power(2), Euclidean(1), [0.0], ExpDecay(1), [1000], 3, seed=2,
                                method="gradient-descent")
        for r in range(3):
            x = isotropic_sample(Euclidean(1), [0.0], ExpDecay(1), 1000, 2, (r,))
            assert res.per_replicate_rho[r, 0] == pytest.approx(abs(x.mean()), abs=1e-8)

    def test_prefix_samples(self):
        # n=10 in a run with sizes (10, 50) is the same sample as in a run with (10,)
        a = consistency_curve(Power(2), S2, NORTH, ExpDecay(1), [10, 50], 2, seed=3)
        b = consistency_curve(Power(2), S2, NORTH, ExpDecay(1), [10], 2, seed=3)
        np.testing.assert_array_equal(a.per_replicate_rho[:, :1], b.per_replicate_rho)

    def test_thread_independence(self):
        a = consistency_curve(Power(2), S2, NORTH, ExpDecay(1), [10, 40], 6, seed=4, threads=1)
        b = consistency_curve(Power(2), S2, NORTH, ExpDecay(1), [10, 40], 6, seed=4, threads=4)
        np.testing.assert_array_equal(a.per_replicate_rho, b.per_replicate_rho)

    def test_errors_recorded(self):
        # Linear phi on gradient descent lands on an atom for a one-point sample
        res = consistency_curve(Linear(1), Euclidean(1), [0.0], ExpDecay(1), [1], 2, seed=0,
                                method="gradient-descent")
        assert len(res.errors) == 2
        assert np.all(np.isnan(res.per_replicate_rho))
        assert "replicate 0" in res.errors[0].error

    def test_bad_inputs(self):
        with pytest.raises(DomainError):
            consistency_curve(Power(2), S2, NORTH, ExpDecay(1), [], 2)
        with pytest.raises(DomainError):
            consistency_curve(Power(2), S2, NORTH, ExpDecay(1), [10], 0)


class TestUniform:
    def test_sup_dominates(self):
        res = uniform_consistency_curve(None, S2, NORTH, ExpDecay(1), [10, 100], 5,
                                        p_grid=[1.25, 1.5, 2, 3], seed=7)
        assert res.per_member_rho.shape == (5, 2, 4)
        assert np.all(res.per_replicate_rho[..., None] >= res.per_member_rho)

    def test_singleton_matches(self):
        a = uniform_consistency_curve(None, S2, NORTH, ExpDecay(1), [10, 30], 3, p_grid=[2],
                                      seed=5)
        b = consistency_curve(Power(2), S2, NORTH, ExpDecay(1), [10, 30], 3, seed=5)
        np.testing.assert_array_equal(a.per_replicate_rho, b.per_replicate_rho)

    def test_family_argument(self):
        fam = PhiFamily([Power(2), ExpMinusOne(2)])
        res = uniform_consistency_curve(fam, S2, NORTH, ExpDecay(1), [20], 2, seed=1)
        assert res.per_member_rho.shape == (2, 1, 2)

    def test_bad_grid(self):
        with pytest.raises(DomainError):
            uniform_consistency_curve(None, S2, NORTH, ExpDecay(1), [10], 2, p_grid=[0.5])


class TestUniqueness:
    PHIS = [Power(1.5), Power(2), Power(4), ExpMinusOne(2)]

    def test_sphere(self):
        rep = uniqueness_check(S2, NORTH, ExpDecay(2), self.PHIS, 2000, seed=1)
        assert rep.max_distance <= 0.08
        assert rep.spread <= 0.08

    def test_circle(self):
        rep = uniqueness_check(Circle(), [0.0], ExpDecay(1), self.PHIS, 2000, seed=2)
        assert rep.max_distance <= 0.05

    def test_collapsed(self):
        rep = uniqueness_check(S2, NORTH, StepDecay(1e-6), self.PHIS, 200, seed=3,
                               solver_cfg=SolverConfig(grid_levels=14))
        assert rep.max_distance <= 2e-6


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("PHIMEANS_THREADS", "2")
    assert thread_count(8) == 2
    monkeypatch.setenv("PHIMEANS_THREADS", "many")
    with pytest.raises(DomainError):
        thread_count()
