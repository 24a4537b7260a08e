import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvadjust.exceptions import DomainError, InvalidCostError
from nvadjust.forecast import ForecastResult
from nvadjust.nvp import (CostParams, DemandDistribution, critical_quantile, norm_cdf, norm_ppf,
                          profit, quantile, quantile_multiplier, textbook_order)


def bisect_normal_quantile(tau, lo=-40.0, hi=40.0):
    """Quantile by bisection on mpmath's normal CDF (independent of the library)."""
    mpmath.mp.dps = 40
    lo, hi = mpmath.mpf(lo), mpmath.mpf(hi)
    for _ in range(200):
        mid = (lo + hi) / 2
        if mpmath.ncdf(mid) < tau:
            lo = mid
        else:
            hi = mid
    return float((lo + hi) / 2)


def fc(mu, sigma):
    return ForecastResult(mu, sigma, {})


# (v, margin p - v, c_h, c_s) with v > 0 so that both overage and underage are positive
costs_st = st.tuples(
    st.floats(0.01, 100), st.floats(0.01, 100), st.floats(0.0, 10), st.floats(0.0, 10)
).map(lambda t: CostParams(t[0] + t[1], t[0], t[2], t[3]))


class TestCostParams:
    @pytest.mark.parametrize("fields,expected", [
        ((2.96, 1.28, 0.49, 0.51), 0.55),
        ((11.98, 4.13, 2.49, 1.33), 0.58),
        ((2.86, 1.96, 0.78, 0.56), 0.35),
        ((4.29, 3.24, 1.03, 0.21), 0.23),
    ])
    def test_product_quantiles(self, fields, expected):
        assert round(critical_quantile(CostParams(*fields)), 2) == expected

    def test_symmetric_costs(self):
        assert critical_quantile(CostParams(2, 1, 1, 1)) == 0.5

    def test_overage_underage(self, costs_a):
        assert costs_a.overage == pytest.approx(1.77)
        assert costs_a.underage == pytest.approx(2.19)

    @pytest.mark.parametrize("fields", [(-1, 1, 0, 0), (2, 1, math.nan, 0), (1, 1, 0, 0),
                                        (2, 0, 0, 0)])
    def test_invalid(self, fields):
        with pytest.raises(InvalidCostError):
            CostParams(*fields)

    @pytest.mark.parametrize("tau", [0.1, 0.3, 0.5, 0.7, 0.9])
    def test_from_quantile_round_trip(self, tau):
        c = CostParams.from_quantile(tau)
        assert c.p - c.v == pytest.approx(1.0)
        assert critical_quantile(c) == pytest.approx(tau, abs=1e-12)

    @given(costs_st, st.floats(1e-3, 1e3))
    def test_scale_invariance(self, c, k):
        scaled = CostParams(k * c.p, k * c.v, k * c.c_h, k * c.c_s)
        assert critical_quantile(scaled) == pytest.approx(critical_quantile(c), rel=1e-12)


class TestProfit:
    def test_exact_order(self, costs_a):
        assert profit(costs_a, 100, 100) == pytest.approx(168.0)

    def test_overage(self, costs_a):
        assert profit(costs_a, 100, 80) == pytest.approx(2.96 * 80 - 1.28 * 100 - 0.49 * 20)
        assert profit(costs_a, 100, 80) == pytest.approx(99.0)

    def test_underage(self, costs_a):
        assert profit(costs_a, 80, 100) == pytest.approx(124.2)

    def test_vectorised(self, costs_a):
        out = profit(costs_a, np.array([100.0, 80.0]), np.array([80.0, 100.0]))
        np.testing.assert_allclose(out, [99.0, 124.2])

    def test_negative_rejected(self, costs_a):
        with pytest.raises(DomainError):
            profit(costs_a, -1, 10)

    @given(costs_st, st.floats(0, 1e5), st.floats(0, 1e5))
    def test_ex_post_optimum(self, c, x, d):
        best = profit(c, d, d)
        assert best == pytest.approx((c.p - c.v) * d, rel=1e-12, abs=1e-9)
        assert profit(c, x, d) <= best + 1e-9 * max(1.0, abs(best))


class TestQuantile:
    def test_median(self):
        assert quantile(DemandDistribution("normal", 10000, 100), 0.5) == pytest.approx(10000)

    def test_normal_07_against_bisection(self):
        z = bisect_normal_quantile(0.7)
        assert z == pytest.approx(0.524401, abs=1e-6)
        x = quantile(DemandDistribution("normal", 10000, 100), 0.7)
        assert x == pytest.approx(10000 + 100 * z, abs=1e-8)
        assert x == pytest.approx(10052.44, abs=0.01)

    def test_laplace_closed_form(self):
        assert quantile(DemandDistribution("laplace", 0, 1), 0.9) == pytest.approx(math.log(5))

    @pytest.mark.parametrize("tau", [1e-10, 1e-6, 0.001, 0.02425, 0.1, 0.3, 0.5, 0.77, 0.97575,
                                     0.999, 1 - 1e-6, 1 - 1e-10])
    def test_norm_ppf_matches_bisection(self, tau):
        assert norm_ppf(tau) == pytest.approx(bisect_normal_quantile(tau), abs=1e-9, rel=1e-9)

    @given(st.floats(1e-8, 1 - 1e-8))
    @settings(max_examples=200)
    def test_cdf_inverts_quantile(self, tau):
        assert float(mpmath.ncdf(norm_ppf(tau))) == pytest.approx(tau, abs=1e-8)
        lap = DemandDistribution("laplace", 3.0, 2.0)
        assert lap.cdf(quantile(lap, tau)) == pytest.approx(tau, abs=1e-8)

    @given(st.floats(0.001, 0.998), st.floats(1e-4, 1e-3))
    def test_strictly_increasing(self, tau, dt):
        for family in ("normal", "laplace"):
            dist = DemandDistribution(family, 0.0, 1.0)
            assert quantile(dist, tau + dt) > quantile(dist, tau)

    def test_norm_cdf_values(self):
        for z in (-8.0, -1.0, 0.0, 0.5, 3.0):
            assert norm_cdf(z) == pytest.approx(float(mpmath.ncdf(z)), rel=1e-13)

    @pytest.mark.parametrize("tau", [0.0, 1.0, -0.1, math.nan])
    def test_tau_domain(self, tau):
        with pytest.raises(DomainError):
            quantile(DemandDistribution("normal", 0, 1), tau)

    def test_matching_scale(self):
        d = DemandDistribution.matching("laplace", 0, 100)
        assert d.scale == pytest.approx(100 / math.sqrt(2))
        assert d.sd == pytest.approx(100)


class TestTextbookOrder:
    def test_symmetric(self):
        assert textbook_order(fc(10000, 100), CostParams(2, 1, 1, 1)).quantity == pytest.approx(10000)

    def test_normal(self):
        x = textbook_order(fc(10000, 100), CostParams.from_quantile(0.7)).quantity
        assert x == pytest.approx(10052.44, abs=0.01)

    def test_laplace(self):
        x = textbook_order(fc(10000, 100), CostParams.from_quantile(0.7), "laplace").quantity
        assert x == pytest.approx(10000 - 100 / math.sqrt(2) * math.log(0.6), abs=1e-8)
        assert x == pytest.approx(10036.12, abs=0.01)

    def test_clamped_at_zero(self):
        order = textbook_order(fc(1.0, 100.0), CostParams.from_quantile(0.1))
        assert order.quantity == 0.0 and order.clamped

    @given(st.floats(0.01, 0.99), st.sampled_from(["normal", "laplace"]))
    def test_side_of_mean(self, tau, family):
        x = textbook_order(fc(1000.0, 10.0), CostParams.from_quantile(tau), family).quantity
        if tau > 0.5:
            assert x > 1000.0
        elif tau < 0.5:
            assert x < 1000.0

    def test_multiplier(self):
        assert quantile_multiplier("normal", 0.7) == pytest.approx(bisect_normal_quantile(0.7))
        assert quantile_multiplier("laplace", 0.9) == pytest.approx(math.log(5) / math.sqrt(2))
