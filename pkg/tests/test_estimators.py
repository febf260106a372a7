import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orthant.bandwidth import adaptive_bayes_gamma_closed
from orthant.data import Dataset, SupportKind
from orthant.errors import DomainError, EvaluationUnderflow, InsufficientData, StartSupportError
from orthant.estimators import (
    DensityEstimate,
    GlobalBandwidth,
    PerObservation,
    evaluate_grid,
    loo_at,
    nonparametric_at,
    normalizing_constant,
    normalizing_constant_report,
    semiparametric_at,
    weight_at,
)
from orthant.kernels import density, product_density
from orthant.parametric import ConstantOne, ExponentialProduct, GammaUniv, MarshallOlkin, fit_exponential_product


def _small():
    return Dataset([[0.5, 1.0], [1.5, 0.2], [2.0, 3.0], [0.0, 0.7]])


class TestBandwidths:
    def test_global_rows(self):
        assert GlobalBandwidth((0.1, 0.2)).rows(3).shape == (3, 2)

    def test_rejects_negative(self):
        with pytest.raises(DomainError):
            GlobalBandwidth((-0.1,))
        with pytest.raises(DomainError):
            PerObservation([[np.nan]])

    def test_row_count_checked(self):
        with pytest.raises(DomainError):
            DensityEstimate(_small(), ["gamma"], PerObservation(np.ones((3, 2))))


class TestPointEstimates:
    def test_single_observation(self):
        data = Dataset([[1.3, 0.4]])
        est = DensityEstimate(data, ["gamma"], GlobalBandwidth((0.2, 0.3)))
        x = np.array([1.0, 0.5])
        expect = product_density(x, [0.2, 0.3], ["gamma", "gamma"], data.values[0])
        assert nonparametric_at(est, x) == pytest.approx(expect, rel=1e-14)

    def test_dirac_gives_frequencies(self):
        data = Dataset([0, 1, 1, 2, 1, 0], support_kind=SupportKind.COUNT)
        est = DensityEstimate(data, ["dirdu:4"], GlobalBandwidth((0.0,)))
        np.testing.assert_allclose(nonparametric_at(est, [[0], [1], [2], [3]]), [2 / 6, 3 / 6, 1 / 6, 0], rtol=1e-15)

    def test_constant_one_start_is_nonparametric(self, wp):
        est = DensityEstimate(wp, ["gamma"], GlobalBandwidth((3.0, 5.0, 2.0)), ConstantOne(3))
        x = wp.values[:7] + 0.5
        np.testing.assert_array_equal(semiparametric_at(est, x), nonparametric_at(est, x))
        np.testing.assert_array_equal(weight_at(est, x), nonparametric_at(est, x))

    def test_single_term_semiparametric(self):
        data = Dataset([[1.3]])
        start = ExponentialProduct((0.8,))
        est = DensityEstimate(data, ["gamma"], GlobalBandwidth((0.2,)), start)
        expect = start.pdf([2.0]) / start.pdf([1.3]) * density("gamma", 2.0, 0.2, 1.3)
        assert semiparametric_at(est, [2.0]) == pytest.approx(expect, rel=1e-14)

    def test_direct_summation_oracle(self, wp):
        data = wp.select([0])
        start = fit_exponential_product(data)
        bw = adaptive_bayes_gamma_closed(data, start).bandwidths
        est = DensityEstimate(data, ["gamma"], bw, start)
        mu = start.mu[0]
        X, H = data.values[:, 0], bw.h[:, 0]
        for x in (0.0, 3.0, 46.0, 150.0):
            direct = math.fsum(
                math.exp(-mu * x) / math.exp(-mu * X[i]) * float(density("gamma", x, H[i], X[i])) for i in range(42)
            ) / 42
            assert semiparametric_at(est, [x]) == pytest.approx(direct, rel=1e-12)

    def test_weight_identity(self, wp):
        start = fit_exponential_product(wp)
        est = DensityEstimate(wp, ["gamma"], GlobalBandwidth((4.0, 3.0, 2.0)), start)
        x = wp.values + 0.25
        lhs = start.pdf(x) * weight_at(est, x)
        np.testing.assert_allclose(lhs, semiparametric_at(est, x), rtol=1e-14)

    def test_weight_near_one_for_true_start(self):
        n = 10_000
        data = Dataset(np.random.default_rng(3).exponential(1.0, n))
        est = DensityEstimate(data, ["gamma"], GlobalBandwidth((n**-0.4,)), ExponentialProduct((1.0,)))
        w = weight_at(est, [[0.5], [1.0], [1.5]])
        np.testing.assert_allclose(w, 1.0, atol=0.2)

    def test_start_must_cover_data(self):
        data = Dataset([0.0, 1.0, 2.0])
        with pytest.raises(StartSupportError):
            DensityEstimate(data, ["gamma"], GlobalBandwidth((0.5,)), GammaUniv(3.0, 1.0))

    def test_weight_underflow(self):
        est = DensityEstimate(Dataset([1.0, 2.0]), ["gamma"], GlobalBandwidth((0.3,)), ExponentialProduct((1.0,)))
        with pytest.raises(EvaluationUnderflow):
            weight_at(est, [1e4])

    def test_target_dimension(self, wp):
        est = DensityEstimate(wp, ["gamma"], GlobalBandwidth((1.0, 1.0, 1.0)))
        with pytest.raises(DomainError):
            nonparametric_at(est, [1.0, 2.0])
        with pytest.raises(DomainError):
            nonparametric_at(est, [1.0, -2.0, 1.0])

    @settings(max_examples=40, deadline=None)
    @given(
        st.lists(st.floats(0, 50), min_size=2, max_size=3),
        st.floats(0.01, 5),
    )
    def test_nonnegative(self, x, h):
        data = _small() if len(x) == 2 else Dataset(np.random.default_rng(0).exponential(2, (6, 3)))
        est = DensityEstimate(data, ["gamma"], GlobalBandwidth((h,) * len(x)))
        assert nonparametric_at(est, x) >= 0

    def test_duplication_invariance(self, wp):
        start = fit_exponential_product(wp)
        twice = Dataset(np.vstack([wp.values, wp.values]))
        a = DensityEstimate(wp, ["gamma"], GlobalBandwidth((4.0, 3.0, 2.0)), start)
        b = DensityEstimate(twice, ["gamma"], GlobalBandwidth((4.0, 3.0, 2.0)), start)
        x = wp.values[:10] + 1.0
        np.testing.assert_allclose(semiparametric_at(a, x), semiparametric_at(b, x), rtol=1e-14)

    def test_deterministic_and_thread_independent(self, wp):
        est = DensityEstimate(wp, ["gamma"], GlobalBandwidth((4.0, 3.0, 2.0)))
        grid = np.random.default_rng(4).uniform(0, 100, (3000, 3))
        a = evaluate_grid(est, grid)
        b = evaluate_grid(est, grid)
        c = evaluate_grid(est, grid, threads=4)
        np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(a, c)


class TestLeaveOneOut:
    def test_two_points(self):
        data = Dataset([1.0, 2.0])
        est = DensityEstimate(data, ["gamma"], GlobalBandwidth((0.4,)))
        assert loo_at(est, 0) == pytest.approx(density("gamma", 1.0, 0.4, 2.0), rel=1e-15)

    def test_duplicates_raise_value(self):
        x = np.array([0.5, 1.7, 3.2])
        single = DensityEstimate(Dataset(x), ["gamma"], GlobalBandwidth((0.3,)))
        double = DensityEstimate(Dataset(np.concatenate([x, x])), ["gamma"], GlobalBandwidth((0.3,)))
        for i in range(3):
            assert loo_at(double, i) >= loo_at(single, i)

    def test_matches_reduced_estimate(self, wp):
        start = fit_exponential_product(wp)
        H = adaptive_bayes_gamma_closed(wp, start).h
        est = DensityEstimate(wp, ["gamma"], PerObservation(H), start)
        for i in (0, 17, 41):
            keep = np.arange(42) != i
            hi = np.broadcast_to(H[i], (41, 3))
            reduced = DensityEstimate(Dataset(wp.values[keep]), ["gamma"], PerObservation(hi), start)
            assert loo_at(est, i) == pytest.approx(float(semiparametric_at(reduced, wp.values[i])), rel=1e-14)

    def test_needs_two_rows(self):
        est = DensityEstimate(Dataset([1.0]), ["gamma"], GlobalBandwidth((0.4,)))
        with pytest.raises(InsufficientData):
            loo_at(est, 0)


class TestNormalizingConstant:
    def test_dirdu_exact(self):
        data = Dataset([0, 1, 1, 2, 4], support_kind=SupportKind.COUNT)
        est = DensityEstimate(data, ["dirdu:5"], GlobalBandwidth((0.3,)))
        assert normalizing_constant(est) == pytest.approx(1.0, abs=1e-14)

    def test_binomial_near_one(self):
        x = np.random.default_rng(8).poisson(5, 50).clip(0, 20)
        est = DensityEstimate(Dataset(x, support_kind="count"), ["binomial"], GlobalBandwidth((0.2,)))
        assert 0.9 <= normalizing_constant(est) <= 1.1

    def test_gamma_waterpumps(self, wp):
        data = wp.select([0])
        est = DensityEstimate(data, ["gamma"], GlobalBandwidth((5.0,)))
        assert abs(normalizing_constant(est) - 1) < 0.1
        grid = np.linspace(0, 400, 40_001)
        riemann = np.sum(nonparametric_at(est, grid[:, None])) * (grid[1] - grid[0])
        assert riemann == pytest.approx(normalizing_constant(est), abs=1e-3)

    def test_normalized_has_unit_mass(self, wp):
        est = DensityEstimate(wp.select([2]), ["gamma"], GlobalBandwidth((2.0,)), fit_exponential_product(wp.select([2])))
        assert normalizing_constant(est.normalized()) == pytest.approx(1.0, rel=1e-10)

    def test_marshall_olkin_tensor_rule(self):
        data = Dataset(np.random.default_rng(2).exponential(1.0, (30, 2)))
        est = DensityEstimate(data, ["gamma"], GlobalBandwidth((0.2, 0.2)), MarshallOlkin((0.6, 0.7), 0.3))
        rep = normalizing_constant_report(est)
        assert rep.method == "tensor-gauss-legendre"
        assert abs(rep.value - 1) < 0.1

    def test_shrinks_with_sample_size(self):
        rng = np.random.default_rng(21)
        gaps = []
        for n in (50, 200, 1000):
            data = Dataset(rng.exponential(1.0, n))
            est = DensityEstimate(data, ["gamma"], GlobalBandwidth((n**-0.4,)))
            gaps.append(abs(normalizing_constant(est) - 1))
        assert gaps[1] <= gaps[0] + 0.02 and gaps[2] <= gaps[1] + 0.02
