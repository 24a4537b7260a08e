"""One-step-ahead demand forecasters.

Every forecaster produces a mean ``mu_hat`` and a standard deviation
``sigma_hat`` for the period following the supplied history. ARMA models are
estimated by conditional sum of squares (CSS), maximised with the package's
Nelder-Mead routine over a partial-autocorrelation parameterisation that
keeps every candidate stationary and invertible.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .exceptions import (
    DomainError,
    FitError,
    InsufficientHistoryError,
    NonFiniteObjectiveError,
)
from .optimize import OptimizeProblem, maximize

KINDS = ("arma", "mean", "seasonal_mean", "seasonal_naive", "ses", "holt", "auto_smoothing")
LOG_2PI = math.log(2.0 * math.pi)
PACF_BOUND = 4.0  # tanh(4) ~ 0.9993


@dataclass(frozen=True)
class ForecastModelSpec:
    """Which forecaster to use.

    ``p`` and ``q`` are only meaningful for ``arma``; ``period`` only for
    the seasonal kinds.
    """

    kind: str
    p: int = 0
    q: int = 0
    period: int = 7

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown forecaster kind {self.kind!r}")
        if self.kind == "arma":
            if self.p < 0 or self.q < 0 or self.p + self.q < 1:
                raise DomainError("arma needs p, q >= 0 and p + q >= 1")
        if self.kind in ("seasonal_mean", "seasonal_naive") and self.period < 2:
            raise DomainError("seasonal period must be >= 2")

    @classmethod
    def parse(cls, text: str) -> "ForecastModelSpec":
        """Parse ``"arma(1,1)"``, ``"ma(1)"``, ``"ar(2)"``, ``"seasonal_mean(7)"``, ``"ses"``..."""
        s = text.strip().lower().replace(" ", "")
        m = re.fullmatch(r"(arma|arima)\((\d+),(?:0,)?(\d+)\)", s)
        if m:
            return cls("arma", int(m.group(2)), int(m.group(3)))
        m = re.fullmatch(r"(ar|ma)\((\d+)\)", s)
        if m:
            k = int(m.group(2))
            return cls("arma", k, 0) if m.group(1) == "ar" else cls("arma", 0, k)
        m = re.fullmatch(r"(seasonal_mean|seasonal_naive)(?:\((\d+)\))?", s)
        if m:
            return cls(m.group(1), period=int(m.group(2) or 7))
        if s in ("mean", "ses", "holt", "auto_smoothing"):
            return cls(s)
        raise DomainError(f"cannot parse forecaster {text!r}")

    @property
    def label(self) -> str:
        if self.kind == "arma":
            return f"arma({self.p},{self.q})"
        if self.kind.startswith("seasonal"):
            return f"{self.kind}({self.period})"
        return self.kind

    @property
    def min_history(self) -> int:
        if self.kind == "arma":
            return max(20, 3 * (self.p + self.q + 2))
        if self.kind.startswith("seasonal"):
            return self.period + 1
        if self.kind == "mean":
            return 2
        return 4


@dataclass(frozen=True)
class ForecastResult:
    mu_hat: float
    sigma_hat: float
    model_info: dict = field(default_factory=dict, compare=False)


def sigma_floor(sigma: float, mu: float) -> float:
    return max(sigma, 1e-6 * max(1.0, abs(mu)))


def gaussian_loglik(ssr: float, n: int) -> float:
    """Concentrated Gaussian log-likelihood of ``n`` residuals with sum of squares ``ssr``."""
    var = max(ssr / n, 1e-300)
    return -0.5 * n * (LOG_2PI + math.log(var) + 1.0)


@dataclass(frozen=True)
class FittedModel:
    """A forecaster fitted to a particular history.

    ``sigma`` is the in-sample one-step residual standard deviation and
    ``n_params`` counts every free parameter, including the variance.
    """

    spec: ForecastModelSpec
    params: dict
    sigma: float
    loglik: float
    n_params: int
    n_resid: int
    info: dict = field(default_factory=dict, compare=False)

    @property
    def aic(self) -> float:
        return 2.0 * self.n_params - 2.0 * self.loglik

    def forecast(self, history) -> ForecastResult:
        """One-step forecast after ``history`` with the fitted parameters held fixed."""
        y = np.asarray(history, dtype=float)
        kind = self.spec.kind
        pr = self.params
        if kind == "mean":
            mu = pr["mean"]
        elif kind == "seasonal_mean":
            mu = pr["phase_means"][y.size % self.spec.period]
        elif kind == "seasonal_naive":
            if y.size < self.spec.period:
                raise InsufficientHistoryError("history shorter than the seasonal period")
            mu = float(y[y.size - self.spec.period])
        elif kind in ("ses", "holt"):
            _, level, trend = _kernels.holt_filter(y, pr["alpha"], pr.get("beta", 0.0),
                                                   pr["l0"], pr.get("b0", 0.0))
            mu = level + trend
        elif kind == "arma":
            mu = _arma_next(y, pr["mean"], np.asarray(pr["ar"]), np.asarray(pr["ma"]))
        else:  # pragma: no cover - auto_smoothing resolves to a concrete kind
            raise DomainError(kind)
        info = {"model": self.spec.label, **self.info}
        return ForecastResult(float(mu), sigma_floor(self.sigma, float(mu)), info)


def _arma_next(y, mu, phi, theta):
    p = phi.size
    e = _kernels.css_residuals(y, mu, phi, theta)
    nxt = mu
    for i in range(p):
        nxt += phi[i] * (y[-1 - i] - mu)
    for j in range(theta.size):
        if j < e.size:
            nxt += theta[j] * e[-1 - j]
    return nxt


def pacf_to_coefs(r: Sequence[float]) -> np.ndarray:
    """Map partial autocorrelations in (-1, 1) to stationary AR coefficients (Durbin-Levinson)."""
    return _kernels.pacf_to_coefs(np.asarray(r, dtype=float))


def coefs_to_pacf(phi: Sequence[float]) -> np.ndarray:
    """Inverse of :func:`pacf_to_coefs`."""
    a = np.asarray(phi, dtype=float).copy()
    r = np.zeros(a.size)
    for k in range(a.size - 1, -1, -1):
        rk = a[k]
        r[k] = rk
        if k:
            a = (a[:k] + rk * a[:k][::-1]) / (1.0 - rk * rk)
    return r


def _unpack(raw, p, q):
    phi = pacf_to_coefs(np.tanh(raw[1:1 + p]))
    # MA polynomial 1 + theta(z) is invertible iff 1 - (-theta)(z) is stationary
    theta = -pacf_to_coefs(np.tanh(raw[1 + p:1 + p + q]))
    return raw[0], phi, theta


def fit_arma(history, p: int, q: int, max_evals: Optional[int] = None,
             tolerance: float = 1e-6, restarts: int = 1) -> FittedModel:
    """Fit ARMA(p, q) with a constant mean by conditional sum of squares.

    Starts at the sample mean with all coefficients zero. If the objective
    turns non-finite, two further attempts start from perturbed points.
    """
    y = np.asarray(history, dtype=float)
    spec = ForecastModelSpec("arma", p, q)
    if y.size < spec.min_history:
        raise InsufficientHistoryError(
            f"arma({p},{q}) needs at least {spec.min_history} observations, got {y.size}")
    ybar = float(np.mean(y))
    sd = float(np.std(y))
    n_resid = y.size - p
    if sd <= 1e-12 * max(1.0, abs(ybar)):
        return FittedModel(spec, {"mean": ybar, "ar": [0.0] * p, "ma": [0.0] * q},
                           sigma=0.0, loglik=gaussian_loglik(0.0, n_resid),
                           n_params=p + q + 2, n_resid=n_resid,
                           info={"converged": True, "degenerate": True})

    def objective(raw):
        return -_kernels.css_ssr_raw(y, raw, p, q)

    span = 10.0 * sd
    lower = np.r_[ybar - span, np.full(p + q, -PACF_BOUND)]
    upper = np.r_[ybar + span, np.full(p + q, PACF_BOUND)]
    start = np.r_[ybar, np.zeros(p + q)]
    # Scale so the objective spread tolerance is in log-likelihood units.
    scale = 0.5 * n_resid / max(float(np.sum((y - ybar) ** 2)), 1e-300)

    def loglik_like(raw):
        return scale * objective(raw)

    last_error = None
    for attempt in range(3):
        init = start if attempt == 0 else np.clip(
            start + np.r_[0.1 * sd * (-1) ** attempt, np.full(p + q, 0.1 * attempt)],
            lower, upper)
        problem = OptimizeProblem(loglik_like, lower, upper, init, tolerance=tolerance,
                                  max_evals=max_evals or 500 * (p + q + 1), restarts=restarts)
        try:
            res = maximize(problem)
        except NonFiniteObjectiveError as exc:
            last_error = exc
            continue
        ssr = -objective(res.x)
        if not math.isfinite(ssr):
            last_error = FitError("non-finite sum of squares at optimum")
            continue
        mu, phi, theta = _unpack(res.x, p, q)
        params = {"mean": float(mu), "ar": phi.tolist(), "ma": theta.tolist()}
        return FittedModel(spec, params, sigma=math.sqrt(ssr / n_resid),
                           loglik=gaussian_loglik(ssr, n_resid), n_params=p + q + 2,
                           n_resid=n_resid,
                           info={"converged": res.converged, "n_evals": res.n_evals,
                                 "init_loglik": gaussian_loglik(-objective(init), n_resid)})
    raise FitError(f"arma({p},{q}) fit failed after restarts: {last_error}")


def _fit_smoothing(y, with_trend: bool) -> FittedModel:
    kind = "holt" if with_trend else "ses"
    spec = ForecastModelSpec(kind)
    if y.size < spec.min_history:
        raise InsufficientHistoryError(f"{kind} needs at least {spec.min_history} observations")
    sd = float(np.std(y))
    if sd <= 1e-12 * max(1.0, abs(float(np.mean(y)))):
        params = {"alpha": 0.5, "l0": float(y[0])}
        if with_trend:
            params.update(beta=0.0, b0=0.0)
        k = 5 if with_trend else 3
        return FittedModel(spec, params, 0.0, gaussian_loglik(0.0, y.size), k, y.size,
                           info={"degenerate": True})
    scale = 0.5 / max(float(np.sum((y - y.mean()) ** 2)) / y.size, 1e-300)

    if with_trend:
        def objective(w):
            return -scale * _kernels.holt_profile(y, w[0], w[1], True)[0]
        problem = OptimizeProblem(objective, [0.0, 0.0], [1.0, 1.0], [0.5, 0.1])
    else:
        def objective(w):
            return -scale * _kernels.holt_profile(y, w[0], 0.0, False)[0]
        problem = OptimizeProblem(objective, [0.0], [1.0], [0.5])
    res = maximize(problem)
    alpha = float(res.x[0])
    beta = float(res.x[1]) if with_trend else 0.0
    sse, l0, b0 = _kernels.holt_profile(y, alpha, beta, with_trend)
    params = {"alpha": alpha, "l0": float(l0)}
    k = 3
    if with_trend:
        params.update(beta=beta, b0=float(b0))
        k = 5
    return FittedModel(spec, params, math.sqrt(sse / y.size), gaussian_loglik(sse, y.size),
                       k, y.size, info={"converged": res.converged})


def fit(spec: ForecastModelSpec, history) -> FittedModel:
    """Fit ``spec`` to ``history``. ``auto_smoothing`` runs :func:`auto_select`."""
    y = np.asarray(history, dtype=float)
    if y.size == 0:
        raise InsufficientHistoryError("empty history")
    kind = spec.kind
    if kind == "arma":
        return fit_arma(y, spec.p, spec.q)
    if kind == "auto_smoothing":
        return auto_select(y, AUTO_SMOOTHING_CANDIDATES)
    if kind in ("ses", "holt"):
        return _fit_smoothing(y, kind == "holt")
    if y.size < spec.min_history:
        raise InsufficientHistoryError(
            f"{spec.label} needs at least {spec.min_history} observations, got {y.size}")
    n = y.size
    if kind == "mean":
        mean = float(np.mean(y))
        ssr = float(np.sum((y - mean) ** 2))
        return FittedModel(spec, {"mean": mean}, math.sqrt(ssr / (n - 1)),
                           gaussian_loglik(ssr, n), 2, n)
    m = spec.period
    if kind == "seasonal_mean":
        phases = np.arange(n) % m
        means = np.array([y[phases == k].mean() for k in range(m)])
        resid = y - means[phases]
        ssr = float(np.sum(resid ** 2))
        return FittedModel(spec, {"phase_means": means.tolist()},
                           math.sqrt(ssr / max(n - m, 1)), gaussian_loglik(ssr, n), m + 1, n)
    # seasonal_naive
    resid = y[m:] - y[:-m]
    ssr = float(np.sum(resid ** 2))
    return FittedModel(spec, {}, math.sqrt(ssr / resid.size), gaussian_loglik(ssr, resid.size),
                       1, resid.size)


def forecast_one(model, history) -> ForecastResult:
    """One-step forecast; ``model`` is a :class:`FittedModel` or a spec to fit on ``history``."""
    y = np.asarray(history, dtype=float)
    if y.size == 0:
        raise InsufficientHistoryError("empty history")
    if isinstance(model, ForecastModelSpec):
        model = fit(model, y)
    return model.forecast(y)


AUTO_SMOOTHING_CANDIDATES = (ForecastModelSpec("mean"), ForecastModelSpec("ses"),
                             ForecastModelSpec("holt"))


def auto_select(history, candidates: Sequence[ForecastModelSpec]) -> FittedModel:
    """Fit every candidate and keep the one with the smallest AIC.

    Ties go to fewer parameters, then to the earlier candidate.
    """
    y = np.asarray(history, dtype=float)
    if not candidates:
        raise DomainError("no candidate models")
    best = None
    best_key = None
    errors = []
    for order, spec in enumerate(candidates):
        try:
            fm = fit(spec, y)
        except (FitError, InsufficientHistoryError) as exc:
            errors.append(f"{spec.label}: {exc}")
            continue
        key = (fm.aic, fm.n_params, order)
        if best is None or key < best_key:
            best, best_key = fm, key
    if best is None:
        raise FitError("all candidate models failed: " + "; ".join(errors))
    info = dict(best.info)
    info["selected_by"] = "aic"
    info["candidates"] = [c.label for c in candidates]
    return FittedModel(best.spec, best.params, best.sigma, best.loglik, best.n_params,
                       best.n_resid, info=info)


@dataclass
class ForecastPath:
    """Forecasts for periods ``warmup + 1 .. n`` (1-based) of one series.

    ``mu[i]`` and ``sigma[i]`` belong to period ``warmup + 1 + i``, fitted on
    ``d_1 .. d_{warmup + i}``. ``fallback[i]`` marks periods where the
    requested model failed and the sample mean model was used instead.
    """

    warmup: int
    mu: np.ndarray
    sigma: np.ndarray
    fallback: np.ndarray


def forecast_path(values, spec: ForecastModelSpec, warmup: int = 20) -> ForecastPath:
    """Refit ``spec`` at every period after the warm-up and forecast one step ahead."""
    y = np.asarray(values, dtype=float)
    n = y.size
    if n <= warmup:
        raise InsufficientHistoryError(f"series length {n} does not exceed warm-up {warmup}")
    if warmup < spec.min_history:
        raise InsufficientHistoryError(
            f"warm-up {warmup} is shorter than the {spec.min_history} observations "
            f"{spec.label} needs")
    k = n - warmup
    mu = np.empty(k)
    sigma = np.empty(k)
    fallback = np.zeros(k, dtype=bool)
    for i in range(k):
        hist = y[:warmup + i]
        try:
            res = forecast_one(spec, hist)
        except FitError:
            res = forecast_one(ForecastModelSpec("mean"), hist)
            fallback[i] = True
        mu[i] = res.mu_hat
        sigma[i] = res.sigma_hat
    return ForecastPath(warmup, mu, sigma, fallback)
