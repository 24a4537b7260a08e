"""Profit-maximising choice of the adjustment parameters on a training window."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .adjust import DEFAULT_BOX, AdjustmentParams, orders_from_path, textbook_path
from .exceptions import ConfigError
from .forecast import ForecastModelSpec, ForecastPath, forecast_path
from .nvp import CostParams, Family, critical_quantile, profit
from .optimize import OptimizeProblem, maximize


@dataclass(frozen=True)
class TunerConfig:
    """Training window ``t = 1 .. train_end`` and the search box.

    The objective sums profit over ``t = warmup + 1 .. train_end``.
    ``tolerance`` is relative to ``|J(0, 0)|``.
    """

    train_end: int
    warmup: int = 20
    box: Tuple[Tuple[float, float], Tuple[float, float]] = DEFAULT_BOX
    init: Tuple[float, float] = (0.1, 0.1)
    tolerance: float = 1e-9
    max_evals: int = 1000
    restarts: int = 2

    def __post_init__(self):
        if self.train_end < self.warmup + 2:
            raise ConfigError(
                f"training window ends at {self.train_end}, need at least warm-up + 2 "
                f"= {self.warmup + 2}")
        (blo, bhi), (glo, ghi) = self.box
        if blo > bhi or glo > ghi:
            raise ConfigError("empty tuning box")
        b0, g0 = self.init
        if not (blo <= b0 <= bhi and glo <= g0 <= ghi):
            raise ConfigError("tuner init lies outside the box")


@dataclass
class TuneResult:
    params: AdjustmentParams
    profit: float
    baseline_profit: float
    in_sample_rpi: float
    n_evals: int
    converged: bool
    path: ForecastPath = field(repr=False)
    x_last: float = field(default=math.nan, repr=False)


class ProfitObjective:
    """In-sample profit ``J(beta, gamma)`` of adjusted orders on a fixed forecast path."""

    def __init__(self, values, path: ForecastPath, costs: CostParams, family: Family = "normal"):
        self.d = np.asarray(values, dtype=float)
        self.path = path
        self.costs = costs
        self.x_star = textbook_path(path, critical_quantile(costs), family)
        self.demand = self.d[path.warmup:]

    def orders(self, beta: float, gamma: float) -> np.ndarray:
        return orders_from_path(self.d, self.path, self.x_star, AdjustmentParams(beta, gamma))[1]

    def __call__(self, w) -> float:
        x = self.orders(float(w[0]), float(w[1]))
        return float(np.sum(profit(self.costs, x, self.demand)))

    def losses(self, x) -> np.ndarray:
        """Profit shortfall against the ex-post optimal order, per period."""
        best = (self.costs.p - self.costs.v) * self.demand
        return best - profit(self.costs, x, self.demand)


def _seed_simplex(init, anchor, lo, hi, step=0.05):
    init = np.asarray(init, dtype=float)
    anchor = np.asarray(anchor, dtype=float)
    width = hi - lo
    third = init.copy()
    third[0] = init[0] + step * width[0] if init[0] + step * width[0] <= hi[0] else init[0] - step * width[0]
    pts = np.array([anchor, init, third])
    u, v = pts[1] - pts[0], pts[2] - pts[0]
    area = abs(u[0] * v[1] - u[1] * v[0])
    if area > 1e-12 * max(width[0] * width[1], 1e-300):
        return pts
    pts = np.array([anchor, anchor.copy(), anchor.copy()])
    pts[1][0] = anchor[0] + step * width[0] if anchor[0] + step * width[0] <= hi[0] else anchor[0] - step * width[0]
    pts[2][1] = anchor[1] + step * width[1] if anchor[1] + step * width[1] <= hi[1] else anchor[1] - step * width[1]
    return pts


def tune_parameters(series, forecaster: ForecastModelSpec, costs: CostParams, cfg: TunerConfig,
                    family: Family = "normal", path: Optional[ForecastPath] = None) -> TuneResult:
    """Maximise in-sample profit over ``(beta, gamma)`` with Nelder-Mead.

    The initial simplex contains the unadjusted point ``(0, 0)`` (clamped
    into the box), so the tuned profit is never below the unadjusted one.
    """
    values = np.asarray(getattr(series, "values", series), dtype=float)
    if values.size < cfg.train_end:
        raise ConfigError(f"series has {values.size} periods, training window needs {cfg.train_end}")
    train = values[:cfg.train_end]
    if path is None:
        path = forecast_path(train, forecaster, cfg.warmup)
    objective = ProfitObjective(train, path, costs, family)

    lo = np.array([cfg.box[0][0], cfg.box[1][0]])
    hi = np.array([cfg.box[0][1], cfg.box[1][1]])
    anchor = np.clip([0.0, 0.0], lo, hi)
    baseline = objective(anchor)
    problem = OptimizeProblem(objective, lo, hi, cfg.init,
                              tolerance=cfg.tolerance * max(1.0, abs(baseline)),
                              max_evals=cfg.max_evals, restarts=cfg.restarts,
                              simplex=_seed_simplex(cfg.init, anchor, lo, hi))
    res = maximize(problem)
    params = AdjustmentParams(float(res.x[0]), float(res.x[1]))
    x_opt = objective.orders(*params.as_tuple())
    loss_opt = float(np.sum(objective.losses(x_opt)))
    loss_star = float(np.sum(objective.losses(objective.x_star)))
    in_rpi = 1.0 - loss_opt / loss_star if loss_star > 0 else math.nan
    return TuneResult(params, res.value, baseline, in_rpi, res.n_evals, res.converged, path,
                      x_last=float(x_opt[-1]))


def grid_search(series, forecaster: ForecastModelSpec, costs: CostParams, cfg: TunerConfig,
                step: float = 0.01, family: Family = "normal",
                path: Optional[ForecastPath] = None) -> Tuple[AdjustmentParams, float]:
    """Exhaustive evaluation of ``J`` on a regular grid over the box."""
    values = np.asarray(getattr(series, "values", series), dtype=float)[:cfg.train_end]
    if path is None:
        path = forecast_path(values, forecaster, cfg.warmup)
    objective = ProfitObjective(values, path, costs, family)
    (blo, bhi), (glo, ghi) = cfg.box
    betas = np.linspace(blo, bhi, int(round((bhi - blo) / step)) + 1)
    gammas = np.linspace(glo, ghi, int(round((ghi - glo) / step)) + 1)
    best, best_val = None, -math.inf
    for b in betas:
        for g in gammas:
            val = objective((b, g))
            if val > best_val:
                best, best_val = AdjustmentParams(float(b), float(g)), val
    return best, best_val
