"""Transport distances against the exact LP oracle and metric axioms."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikelab.wasserstein import (
    EmpiricalDistribution,
    exact_ot_cost,
    sinkhorn,
    sliced_w2,
    squared_euclidean_cost,
    w2_1d,
)


def dirac(x):
    return EmpiricalDistribution.dirac(x)


def uniform_on(points):
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    return EmpiricalDistribution(pts, np.full(pts.shape[0], 1.0 / pts.shape[0]))


def random_distribution(rng, n, d=1, weighted=True):
    pts = rng.normal(size=(n, d)) * rng.uniform(0.5, 3.0)
    if weighted:
        w = rng.random(n) + 0.05
        w /= w.sum()
    else:
        w = np.full(n, 1.0 / n)
    return EmpiricalDistribution(pts, w)


class TestW2OneD:
    def test_dirac_transport(self):
        assert w2_1d(dirac(0.0), dirac(3.0)) == pytest.approx(3.0, abs=1e-12)

    def test_identity(self):
        p = uniform_on([0.3, 1.2, -0.5])
        assert w2_1d(p, p) == 0.0

    def test_translation(self):
        p = uniform_on([0.0, 1.0])
        q = uniform_on([1.0, 2.0])
        assert w2_1d(p, q) == pytest.approx(1.0, abs=1e-12)

    def test_matches_lp_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            p = random_distribution(rng, int(rng.integers(2, 8)))
            q = random_distribution(rng, int(rng.integers(2, 8)))
            lp = math.sqrt(exact_ot_cost(p, q))
            assert w2_1d(p, q) == pytest.approx(lp, abs=1e-8)

    def test_weighted_vs_duplicated_support(self):
        # Weight 2/3 on one atom equals the same atom listed twice.
        p = EmpiricalDistribution(np.array([[0.0], [1.0]]), np.array([2 / 3, 1 / 3]))
        p_dup = uniform_on([0.0, 0.0, 1.0])
        q = uniform_on([0.5, 0.7, 2.0])
        assert w2_1d(p, q) == pytest.approx(w2_1d(p_dup, q), abs=1e-12)

    def test_dimension_mismatch(self):
        p2 = EmpiricalDistribution(np.zeros((3, 2)), np.full(3, 1 / 3))
        with pytest.raises(ValueError):
            w2_1d(p2, dirac(0.0))


class TestMetricAxioms:
    def test_symmetry_exact(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            p = random_distribution(rng, 6)
            q = random_distribution(rng, 9)
            assert abs(w2_1d(p, q) - w2_1d(q, p)) <= 1e-12

    def test_triangle_inequality(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            p = random_distribution(rng, 5)
            q = random_distribution(rng, 6)
            r = random_distribution(rng, 7)
            assert w2_1d(p, r) <= w2_1d(p, q) + w2_1d(q, r) + 1e-9

    def test_translation_equivariance(self):
        rng = np.random.default_rng(3)
        p = random_distribution(rng, 6)
        q = random_distribution(rng, 8)
        base = w2_1d(p, q)
        shift = 2.37
        p_s = EmpiricalDistribution(p.support + shift, p.weights)
        q_s = EmpiricalDistribution(q.support + shift, q.weights)
        assert w2_1d(p_s, q_s) == pytest.approx(base, abs=1e-12)

    def test_shifting_a_translate_changes_distance_by_shift(self):
        p = uniform_on([0.1, 0.9, 1.7])
        v = 1.25
        q = EmpiricalDistribution(p.support + v, p.weights)
        assert w2_1d(p, q) == pytest.approx(v, abs=1e-12)


class TestSliced:
    def test_identity(self):
        rng = np.random.default_rng(4)
        p = random_distribution(rng, 10, d=3, weighted=False)
        assert sliced_w2(p, p, n_projections=16, rng_seed=0) == 0.0

    def test_one_dimension_equals_w2(self):
        rng = np.random.default_rng(5)
        p = random_distribution(rng, 7)
        q = random_distribution(rng, 9)
        assert sliced_w2(p, q, n_projections=4, rng_seed=1) == pytest.approx(
            w2_1d(p, q), abs=1e-12
        )

    def test_monte_carlo_convergence(self):
        rng = np.random.default_rng(6)
        p = random_distribution(rng, 24, d=2, weighted=False)
        q = random_distribution(rng, 24, d=2, weighted=False)
        coarse = sliced_w2(p, q, n_projections=64, rng_seed=2)
        fine = sliced_w2(p, q, n_projections=4096, rng_seed=3)
        assert abs(coarse - fine) / fine < 0.05

    def test_sliced_below_full_w2(self):
        # Projections contract distances, so sliced W2 <= the LP distance.
        rng = np.random.default_rng(7)
        for _ in range(10):
            p = random_distribution(rng, 6, d=2)
            q = random_distribution(rng, 6, d=2)
            full = math.sqrt(exact_ot_cost(p, q))
            assert sliced_w2(p, q, n_projections=256, rng_seed=8) <= full + 1e-9

    def test_rejects_zero_projections(self):
        p = uniform_on([[0.0, 0.0]])
        with pytest.raises(ValueError):
            sliced_w2(p, p, n_projections=0)

    def test_dimension_mismatch(self):
        p = uniform_on([[0.0, 0.0]])
        with pytest.raises(ValueError):
            sliced_w2(p, dirac(0.0))

    def test_fast_path_matches_weighted_path(self):
        # Equal-size uniform clouds take the sorted-difference shortcut;
        # it must agree with the general quantile integral exactly.
        rng = np.random.default_rng(9)
        x = rng.normal(size=12)
        y = rng.normal(size=12)
        fast = w2_1d(uniform_on(x), uniform_on(y))
        eps = 1e-13  # tiny weight perturbation forces the general path
        w = np.full(12, 1.0 / 12)
        w[0] += eps
        w /= w.sum()
        slow = w2_1d(EmpiricalDistribution(x[:, None], w), uniform_on(y))
        assert fast == pytest.approx(slow, abs=1e-6)


class TestSinkhorn:
    def test_matched_diracs(self):
        assert sinkhorn(dirac(0.7), dirac(0.7), reg=1e-2) == pytest.approx(0.0, abs=1e-9)

    def test_dirac_pair_distance(self):
        assert sinkhorn(dirac(-1.0), dirac(2.5), reg=1e-2) == pytest.approx(3.5, abs=1e-9)

    def test_small_problems_near_exact(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            p = random_distribution(rng, 5)
            q = random_distribution(rng, 5)
            exact = w2_1d(p, q)
            approx = sinkhorn(p, q, reg=1e-3, max_iters=20000)
            assert abs(approx - exact) / max(exact, 1e-12) < 0.02

    def test_rejects_bad_reg(self):
        with pytest.raises(ValueError):
            sinkhorn(dirac(0.0), dirac(1.0), reg=0.0)


class TestValidation:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            EmpiricalDistribution(np.zeros((2, 1)), np.array([0.5, 0.6]))

    def test_weights_must_be_nonnegative(self):
        with pytest.raises(ValueError):
            EmpiricalDistribution(np.zeros((2, 1)), np.array([1.5, -0.5]))

    def test_empty_support_rejected(self):
        with pytest.raises(ValueError):
            EmpiricalDistribution(np.zeros((0, 1)), np.zeros(0))


@settings(max_examples=40, deadline=None)
@given(
    xs=st.lists(st.floats(-50, 50), min_size=1, max_size=12),
    ys=st.lists(st.floats(-50, 50), min_size=1, max_size=12),
)
def test_w2_nonnegative_and_zero_iff_equal_support(xs, ys):
    p = uniform_on(xs)
    q = uniform_on(ys)
    d = w2_1d(p, q)
    assert d >= 0.0
    if sorted(xs) == sorted(ys) and len(xs) == len(ys):
        assert d == 0.0
