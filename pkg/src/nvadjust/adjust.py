"""Demand chasing, pull-to-centre and the combined order adjustment.

The combined rule first pulls the textbook order toward the forecast mean
and then chases the previous period's demand error::

    x'_t = (1 - gamma) x*_t + gamma mu_t
    x_t  = x'_t + beta (d_{t-1} - x_{t-1})
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import _kernels
from .exceptions import DomainError, InsufficientHistoryError
from .forecast import ForecastModelSpec, ForecastPath, forecast_path
from .nvp import CostParams, Family, Order, critical_quantile, quantile_multiplier

DEFAULT_BOX = ((0.0, 0.5), (0.0, 0.5))


@dataclass(frozen=True)
class AdjustmentParams:
    """Demand-chasing strength ``beta`` and pull-to-centre strength ``gamma``."""

    beta: float = 0.0
    gamma: float = 0.0

    def check_box(self, box=DEFAULT_BOX) -> "AdjustmentParams":
        (blo, bhi), (glo, ghi) = box
        if not (blo <= self.beta <= bhi and glo <= self.gamma <= ghi):
            raise DomainError(f"(beta, gamma) = ({self.beta}, {self.gamma}) outside box {box}")
        return self

    def as_tuple(self) -> Tuple[float, float]:
        return (self.beta, self.gamma)


def dc_adjust(x_prev: float, d_prev: float, beta: float) -> float:
    return x_prev + beta * (d_prev - x_prev)


def ptc_adjust(x_star: float, mu_hat: float, gamma: float) -> float:
    return (1.0 - gamma) * x_star + gamma * mu_hat


def unified_adjust(x_star: float, mu_hat: float, x_prev: float, d_prev: float,
                   params: AdjustmentParams) -> Order:
    x = ptc_adjust(x_star, mu_hat, params.gamma) + params.beta * (d_prev - x_prev)
    if x < 0:
        return Order(0.0, clamped=True)
    return Order(x)


@dataclass
class OrderTrajectory:
    """Orders for periods ``t = warmup + 1 .. n`` (1-based) of one series.

    The order before the first evaluated period is ``x_warmup = d_warmup``.
    """

    warmup: int
    t: np.ndarray
    x_star: np.ndarray
    x_prime: np.ndarray
    x: np.ndarray
    mu_hat: np.ndarray
    sigma_hat: np.ndarray
    demand: np.ndarray
    clamped: np.ndarray
    fallback: np.ndarray

    def __len__(self):
        return self.t.size


def textbook_path(path: ForecastPath, tau: float, family: Family = "normal") -> np.ndarray:
    """Vectorised textbook orders ``max(mu + z_tau * sigma, 0)`` along a forecast path."""
    return np.maximum(path.mu + quantile_multiplier(family, tau) * path.sigma, 0.0)


def orders_from_path(values, path: ForecastPath, x_star: np.ndarray,
                     params: AdjustmentParams) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Apply the combined adjustment along precomputed forecasts.

    Returns ``(x_prime, x, clamped)`` aligned with ``path``.
    """
    d = np.asarray(values, dtype=float)
    w = path.warmup
    x_prime = (1.0 - params.gamma) * x_star + params.gamma * path.mu
    d_prev = d[w - 1:d.size - 1]
    x, clamped = _kernels.adjust_path(x_prime, d_prev, d[w - 1], float(params.beta))
    return x_prime, x, clamped


def simulate_orders(series, forecaster: ForecastModelSpec, costs: CostParams,
                    params: AdjustmentParams, family: Family = "normal", warmup: int = 20,
                    path: Optional[ForecastPath] = None) -> OrderTrajectory:
    """Order trajectory of one demand series under the combined adjustment.

    At each period after the warm-up the forecaster is refitted on all
    earlier demands. A precomputed ``path`` for the same series, forecaster
    and warm-up may be passed to skip refitting.
    """
    d = np.asarray(getattr(series, "values", series), dtype=float)
    if warmup < 1:
        raise InsufficientHistoryError("warm-up must be at least one period")
    if path is None:
        path = forecast_path(d, forecaster, warmup)
    elif path.warmup != warmup or path.mu.size != d.size - warmup:
        raise DomainError("forecast path does not match the series and warm-up")
    x_star = textbook_path(path, critical_quantile(costs), family)
    x_prime, x, clamped = orders_from_path(d, path, x_star, params)
    return OrderTrajectory(
        warmup=warmup,
        t=np.arange(warmup + 1, d.size + 1),
        x_star=x_star,
        x_prime=x_prime,
        x=x,
        mu_hat=path.mu.copy(),
        sigma_hat=path.sigma.copy(),
        demand=d[warmup:].copy(),
        clamped=clamped,
        fallback=path.fallback.copy(),
    )
