"""Rolling-origin evaluation of tuned order adjustments on product demand data."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..adjust import AdjustmentParams, unified_adjust
from ..exceptions import DataError, FitError, InsufficientHistoryError, NonFiniteObjectiveError
from ..forecast import ForecastModelSpec, fit
from ..metrics import summarize
from ..nvp import CostParams, critical_quantile, profit, textbook_order
from ..tune import TunerConfig, tune_parameters
from .config import DEFAULT_PRODUCTS, EvaluationConfig
from .io import ProductSeries

log = logging.getLogger(__name__)

ROLLING_COLUMNS = ("product", "origin", "x_star", "x_tuned", "demand", "profit_star",
                   "profit_tuned", "rpi")
SERVICE_COLUMNS = ("product", "target", "pre_tuning", "tuned")
PRODUCT_COLUMNS = ("product", "tau", "n_origins", "n_failed", "n_excluded", "mean_beta",
                   "mean_gamma", "in_sample_rpi", "out_of_sample_rpi", "min", "q1", "median",
                   "q3", "max")

_RECOVERABLE = (FitError, NonFiniteObjectiveError, InsufficientHistoryError, FloatingPointError)


@dataclass
class OriginResult:
    origin: int
    x_star: float
    x: float
    demand: float
    profit_star: float
    profit_x: float
    rpi: float
    ppl_star: float
    ppl_x: float
    params: AdjustmentParams
    in_sample_rpi: float = math.nan


@dataclass
class ProductEvaluation:
    product: str
    costs: CostParams
    window: int
    warmup: int
    origins: List[OriginResult] = field(default_factory=list)
    failures: List[tuple] = field(default_factory=list)

    @property
    def tau(self) -> float:
        return critical_quantile(self.costs)

    def _arr(self, name) -> np.ndarray:
        return np.array([getattr(o, name) for o in self.origins], dtype=float)

    def service_levels(self):
        d = self._arr("demand")
        if d.size == 0:
            return math.nan, math.nan
        return float(np.mean(self._arr("x_star") >= d)), float(np.mean(self._arr("x") >= d))

    def out_of_sample_rpi(self) -> float:
        """Pooled RPI over origins with positive demand."""
        ok = self._arr("demand") > 0
        den = float(np.sum(self._arr("ppl_star")[ok]))
        return 1.0 - float(np.sum(self._arr("ppl_x")[ok])) / den if den > 0 else math.nan

    def in_sample_rpi(self) -> float:
        vals = self._arr("in_sample_rpi")
        vals = vals[~np.isnan(vals)]
        return float(np.mean(vals)) if vals.size else math.nan

    def summary_row(self) -> tuple:
        s = summarize(self._arr("rpi"))
        betas = [o.params.beta for o in self.origins]
        gammas = [o.params.gamma for o in self.origins]
        return (self.product, self.tau, len(self.origins), len(self.failures), s.n_excluded,
                float(np.mean(betas)) if betas else math.nan,
                float(np.mean(gammas)) if gammas else math.nan,
                self.in_sample_rpi(), self.out_of_sample_rpi(),
                s.min, s.q1, s.median, s.q3, s.max)


@dataclass
class RollingResult:
    products: Dict[str, ProductEvaluation]

    def tables(self):
        rolling, service, summary = [], [], []
        for name, ev in self.products.items():
            for o in ev.origins:
                rolling.append((name, o.origin, o.x_star, o.x, o.demand, o.profit_star,
                                o.profit_x, o.rpi))
            pre, tuned = ev.service_levels()
            service.append((name, ev.tau, pre, tuned))
            summary.append(ev.summary_row())
        return {
            "rolling": (ROLLING_COLUMNS, rolling),
            "service": (SERVICE_COLUMNS, service),
            "products": (PRODUCT_COLUMNS, summary),
        }


def default_warmup(window: int, spec: ForecastModelSpec) -> int:
    """In-window warm-up: a third of the window, at least the model minimum."""
    return max(spec.min_history, window // 3)


def _period_metrics(costs: CostParams, x_star: float, x: float, d: float):
    p_star = float(profit(costs, x_star, d))
    p_x = float(profit(costs, x, d))
    best = (costs.p - costs.v) * d
    if best <= 0:
        return p_star, p_x, math.nan, math.nan, math.nan
    ppl_star = 100.0 * (best - p_star) / best
    ppl_x = 100.0 * (best - p_x) / best
    r = 1.0 - ppl_x / ppl_star if ppl_star > 0 else math.nan
    return p_star, p_x, ppl_star, ppl_x, r


def evaluate_product(product: str, demand, costs: CostParams, cfg: EvaluationConfig) -> ProductEvaluation:
    d = np.asarray(demand, dtype=float)
    n = d.size
    window = int(round(cfg.train_fraction * n))
    warmup = cfg.warmup if cfg.warmup is not None else default_warmup(window, cfg.forecaster)
    if window < warmup + 2 or window < cfg.forecaster.min_history or n - window < 2:
        raise DataError(
            f"product {product}: {n} periods are too few for a {window}-period window "
            f"with warm-up {warmup} and at least 2 origins")
    tuner = TunerConfig(train_end=window, warmup=warmup, box=cfg.box)
    ev = ProductEvaluation(product, costs, window, warmup)

    params = AdjustmentParams()
    x_prev: Optional[float] = None
    tuned_once = False
    for origin in range(window, n):
        train = d[origin - window:origin]
        try:
            in_rpi = math.nan
            if cfg.tuning and (cfg.retune_every_origin or not tuned_once):
                res = tune_parameters(train, cfg.forecaster, costs, tuner, cfg.assumed_family)
                params, in_rpi, tuned_once = res.params, res.in_sample_rpi, True
                if x_prev is None:
                    x_prev = res.x_last
            fc = fit(cfg.forecaster, train).forecast(train)
            x_star = textbook_order(fc, costs, cfg.assumed_family).quantity
        except _RECOVERABLE as exc:
            ev.failures.append((origin + 1, f"{type(exc).__name__}: {exc}"))
            log.warning("product %s origin %d skipped: %s", product, origin + 1, exc)
            x_prev = None
            continue
        if x_prev is None:
            x_prev = train[-1]
        x = unified_adjust(x_star, fc.mu_hat, x_prev, train[-1], params).quantity
        p_star, p_x, ppl_star, ppl_x, r = _period_metrics(costs, x_star, x, d[origin])
        ev.origins.append(OriginResult(origin + 1, x_star, x, float(d[origin]), p_star, p_x, r,
                                       ppl_star, ppl_x, params, in_rpi))
        x_prev = x
    return ev


def run_rolling_origin(data: Dict[str, object], cfg: EvaluationConfig,
                       products: Optional[Dict[str, CostParams]] = None) -> RollingResult:
    """Slide a fixed-size training window over each product's demand.

    ``data`` maps product ids to demand arrays or :class:`ProductSeries`.
    Costs come from ``products`` (default ``cfg.products``); every product in
    ``data`` needs an entry.
    """
    cfg.validate()
    costs = products if products is not None else cfg.products
    missing = sorted(set(data) - set(costs))
    if missing:
        raise DataError(f"no cost parameters for product(s) {', '.join(missing)}")
    out = {}
    for name in data:
        series = data[name]
        values = series.demand if isinstance(series, ProductSeries) else series
        out[name] = evaluate_product(name, values, costs[name], cfg)
    return RollingResult(out)


def synthetic_products(seed: int = 20230101, length: int = 365,
                       names: Sequence[str] = tuple(DEFAULT_PRODUCTS)) -> Dict[str, np.ndarray]:
    """Daily count demand with a persistent local level and a weekly cycle.

    Each product's log-level follows an AR(1) with coefficient 0.9; weekend
    days are busier than weekdays and counts are Poisson around the product
    of level and weekday factor.
    """
    root = np.random.SeedSequence(seed)
    out = {}
    for i, (name, child) in enumerate(zip(names, root.spawn(len(names)))):
        rng = np.random.default_rng(child)
        base = 40.0 + 15.0 * i
        weekly = np.array([0.85, 0.9, 0.9, 0.95, 1.1, 1.35, 1.2])
        z = np.empty(length)
        z_prev = 0.0
        for t in range(length):
            z_prev = 0.9 * z_prev + rng.normal(0.0, 0.12)
            z[t] = z_prev
        lam = base * np.exp(z) * weekly[np.arange(length) % 7]
        out[name] = rng.poisson(lam).astype(float)
    return out
