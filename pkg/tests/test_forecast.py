import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvadjust import _kernels
from nvadjust.exceptions import DomainError, FitError, InsufficientHistoryError
from nvadjust.forecast import (AUTO_SMOOTHING_CANDIDATES, ForecastModelSpec, auto_select,
                               coefs_to_pacf, fit, fit_arma, forecast_one, forecast_path,
                               pacf_to_coefs)
from nvadjust.simulate import ArmaSpec, simulate

ALL_KINDS = ["mean", "seasonal_mean", "seasonal_naive", "ses", "holt", "auto_smoothing",
             "arma(1,1)", "ar(1)", "ma(1)"]


def spec(text):
    return ForecastModelSpec.parse(text)


class TestSpecParsing:
    @pytest.mark.parametrize("text,expected", [
        ("arma(1,1)", ForecastModelSpec("arma", 1, 1)),
        ("ARIMA(2, 0, 1)", ForecastModelSpec("arma", 2, 1)),
        ("ma(1)", ForecastModelSpec("arma", 0, 1)),
        ("ar(2)", ForecastModelSpec("arma", 2, 0)),
        ("seasonal_mean(7)", ForecastModelSpec("seasonal_mean", period=7)),
        ("seasonal_naive", ForecastModelSpec("seasonal_naive", period=7)),
        ("ses", ForecastModelSpec("ses")),
    ])
    def test_parse(self, text, expected):
        assert spec(text) == expected

    @pytest.mark.parametrize("text", ["arima(1,1,1)", "arma(0,0)", "prophet", "seasonal_mean(1)"])
    def test_reject(self, text):
        with pytest.raises(DomainError):
            spec(text)

    def test_label_round_trip(self):
        for text in ALL_KINDS:
            assert spec(spec(text).label) == spec(text)


class TestClosedForm:
    def test_mean(self):
        res = forecast_one(spec("mean"), [10, 20, 30])
        assert res.mu_hat == 20 and res.sigma_hat == pytest.approx(10)

    def test_seasonal_naive(self):
        y = np.arange(1.0, 15.0) ** 2
        assert forecast_one(spec("seasonal_naive"), y).mu_hat == y[14 - 7]

    def test_seasonal_mean(self):
        y = np.tile([1.0, 2.0, 3.0], 4)
        res = forecast_one(spec("seasonal_mean(3)"), y[:-1])
        assert res.mu_hat == pytest.approx(3.0)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_constant_history(self, kind):
        res = forecast_one(spec(kind), np.full(40, 37.5))
        assert res.mu_hat == pytest.approx(37.5, abs=1e-9)
        assert 0 < res.sigma_hat <= 1e-4

    def test_empty(self):
        with pytest.raises(InsufficientHistoryError):
            forecast_one(spec("mean"), [])

    def test_short_arma(self):
        with pytest.raises(InsufficientHistoryError):
            fit_arma(np.arange(10.0), 1, 1)


class TestArma:
    def test_ar1_recovery(self):
        y = simulate(ArmaSpec(ar=(0.8,), ma=()), 2000, 21).values
        fm = fit(spec("ar(1)"), y)
        phi = fm.params["ar"][0]
        assert 0.75 <= phi <= 0.85
        yc = y - y.mean()
        r1 = np.dot(yc[1:], yc[:-1]) / np.dot(yc, yc)
        assert phi == pytest.approx(r1, abs=0.02)
        se_mean = 100 / (1 - 0.8) / math.sqrt(2000)
        assert abs(fm.params["mean"] - 10_000) <= 3 * se_mean

    def test_arma11_residual_sd(self):
        y = simulate(ArmaSpec(), 2000, 5).values
        fm = fit(spec("arma(1,1)"), y)
        assert fm.sigma == pytest.approx(100, rel=0.05)
        resid = _kernels.css_residuals(y, fm.params["mean"], np.array(fm.params["ar"]),
                                       np.array(fm.params["ma"]))
        assert abs(resid.mean()) <= 3 * resid.std() / math.sqrt(resid.size)

    def test_white_noise(self):
        y = simulate(ArmaSpec(ar=(), ma=()), 300, 9).values
        res = forecast_one(spec("arma(1,1)"), y)
        assert abs(res.mu_hat - y.mean()) <= 3 * y.std() / math.sqrt(y.size)

    @pytest.mark.parametrize("seed", range(5))
    def test_never_worse_than_start(self, seed):
        y = simulate(ArmaSpec(), 60, seed).values
        fm = fit_arma(y, 1, 1)
        assert fm.loglik >= fm.info["init_loglik"]

    def test_stationary_invertible(self):
        y = simulate(ArmaSpec(ar=(0.95,), ma=(-0.9,)), 80, 3).values
        fm = fit_arma(y, 1, 1)
        assert abs(fm.params["ar"][0]) < 1 and abs(fm.params["ma"][0]) < 1

    @given(st.lists(st.floats(-0.99, 0.99), min_size=1, max_size=4))
    def test_pacf_round_trip(self, r):
        phi = pacf_to_coefs(r)
        np.testing.assert_allclose(coefs_to_pacf(phi), r, atol=1e-8)
        # reciprocal roots of the AR polynomial lie inside the unit circle
        assert np.all(np.abs(np.roots(np.r_[1.0, -phi])) < 1)

    def test_matches_statsmodels_css(self):
        sm = pytest.importorskip("statsmodels.tsa.arima.model")
        y = simulate(ArmaSpec(), 1000, 17).values
        ours = fit_arma(y, 1, 1)
        ref = sm.ARIMA(y, order=(1, 0, 1)).fit()
        assert ours.params["ar"][0] == pytest.approx(ref.params[1], abs=0.03)
        assert ours.params["ma"][0] == pytest.approx(ref.params[2], abs=0.03)


class TestAutoSelect:
    def test_iid_prefers_mean(self):
        y = np.random.default_rng(1).normal(50, 5, 500)
        cands = (spec("mean"), spec("ses"))
        chosen = auto_select(y, cands)
        aics = {c.kind: fit(c, y).aic for c in cands}
        assert chosen.spec.kind == min(aics, key=aics.get) == "mean"
        assert chosen.info["selected_by"] == "aic"

    def test_single_candidate(self):
        y = np.random.default_rng(2).normal(50, 5, 30)
        assert auto_select(y, (spec("holt"),)).spec.kind == "holt"

    def test_ar_data_prefers_arma(self):
        picks = sum(auto_select(simulate(ArmaSpec(ar=(0.9,), ma=()), 500, s).values,
                                (spec("arma(1,1)"), spec("mean"))).spec.kind == "arma"
                    for s in range(20))
        assert picks >= 18

    def test_all_fail(self):
        with pytest.raises(FitError):
            auto_select([1.0, 2.0], (spec("holt"), spec("arma(1,1)")))

    def test_default_candidates(self):
        assert [c.kind for c in AUTO_SMOOTHING_CANDIDATES] == ["mean", "ses", "holt"]


@pytest.mark.parametrize("kind", ALL_KINDS)
@settings(max_examples=10, deadline=None)
@given(k=st.floats(-5000, 5000))
def test_shift_equivariance(kind, k):
    y = simulate(ArmaSpec(), 40, 123).values
    a = forecast_one(spec(kind), y)
    b = forecast_one(spec(kind), y + k)
    assert b.mu_hat == pytest.approx(a.mu_hat + k, abs=1e-6 * 1e4)
    assert b.sigma_hat == pytest.approx(a.sigma_hat, rel=1e-5)


class TestForecastPath:
    def test_alignment(self):
        y = simulate(ArmaSpec(), 30, 1).values
        path = forecast_path(y, spec("mean"), 20)
        assert path.mu.size == 10
        assert path.mu[0] == pytest.approx(y[:20].mean())
        assert path.mu[-1] == pytest.approx(y[:29].mean())
        assert not path.fallback.any()

    def test_errors(self):
        with pytest.raises(InsufficientHistoryError):
            forecast_path(np.ones(20), spec("mean"), 20)
        with pytest.raises(InsufficientHistoryError):
            forecast_path(np.ones(40), spec("arma(1,1)"), 10)
