"""Newsvendor economics: realised profit, critical quantile and textbook orders.

Profit for an order ``x`` facing demand ``d`` is::

    p*d - v*x - c_h*(x - d)    if x >= d
    p*x - v*x - c_s*(d - x)    if x <  d

and the expected-profit maximising order is the ``tau`` quantile of the demand
distribution, ``tau = c_u / (c_o + c_u)`` with overage cost ``c_o = v + c_h``
and underage cost ``c_u = p - v + c_s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .exceptions import DomainError, InvalidCostError

Family = Literal["normal", "laplace"]
FAMILIES = ("normal", "laplace")

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class CostParams:
    """Per-unit price and costs of a single product."""

    p: float
    v: float
    c_h: float
    c_s: float

    def __post_init__(self):
        for name in ("p", "v", "c_h", "c_s"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise InvalidCostError(f"{name} must be finite and >= 0, got {value}")
        if self.underage <= 0:
            raise InvalidCostError(f"underage cost p - v + c_s must be > 0, got {self.underage}")
        if self.overage <= 0:
            raise InvalidCostError(f"overage cost v + c_h must be > 0, got {self.overage}")

    @property
    def overage(self) -> float:
        return self.v + self.c_h

    @property
    def underage(self) -> float:
        return self.p - self.v + self.c_s

    @property
    def tau(self) -> float:
        return critical_quantile(self)

    @classmethod
    def from_quantile(cls, tau: float, margin: float = 1.0) -> "CostParams":
        """Representative costs with ``p - v = margin`` and critical quantile ``tau``.

        Holding and purchase costs absorb the overage side (``v = c_o``,
        ``c_h = 0``) and the shortage cost is zero, so ``c_u = margin``.
        PPL and RPI depend on costs only through ``c_u : c_o`` and the margin,
        so any representative with the right quantile gives identical metrics.
        """
        if not 0.0 < tau < 1.0:
            raise DomainError(f"tau must lie in (0, 1), got {tau}")
        if margin <= 0:
            raise InvalidCostError("margin must be positive")
        overage = margin * (1.0 - tau) / tau
        return cls(p=overage + margin, v=overage, c_h=0.0, c_s=0.0)


@dataclass(frozen=True)
class DemandDistribution:
    family: Family
    loc: float
    scale: float  # standard deviation for normal, b for laplace

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown distribution family {self.family!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise DomainError(f"dispersion must be positive, got {self.scale}")

    @property
    def sd(self) -> float:
        return self.scale * SQRT2 if self.family == "laplace" else self.scale

    @classmethod
    def matching(cls, family: Family, mean: float, sd: float) -> "DemandDistribution":
        """Distribution of the given family with the given mean and standard deviation."""
        scale = sd / SQRT2 if family == "laplace" else sd
        return cls(family, mean, scale)

    def cdf(self, x: float) -> float:
        z = (x - self.loc) / self.scale
        if self.family == "normal":
            return norm_cdf(z)
        if z < 0:
            return 0.5 * math.exp(z)
        return 1.0 - 0.5 * math.exp(-z)


def critical_quantile(costs: CostParams) -> float:
    """Return ``c_u / (c_o + c_u)``."""
    c_o, c_u = costs.overage, costs.underage
    if c_o <= 0 or c_u <= 0:
        raise InvalidCostError("overage and underage costs must both be positive")
    return c_u / (c_o + c_u)


def profit(costs: CostParams, x, d):
    """Realised single-period profit of ordering ``x`` when demand is ``d``.

    Accepts scalars or numpy arrays (broadcast elementwise).
    """
    x_arr = np.asarray(x, dtype=float)
    d_arr = np.asarray(d, dtype=float)
    if np.any(x_arr < 0) or np.any(d_arr < 0):
        raise DomainError("order and demand must be non-negative")
    # Written as the ex-post optimum minus a non-negative penalty so that
    # profit(x, d) <= profit(d, d) also holds in floating point.
    gap = x_arr - d_arr
    penalty = np.where(gap >= 0, costs.overage * gap, -costs.underage * gap)
    out = (costs.p - costs.v) * d_arr - penalty
    return float(out) if out.ndim == 0 else out


# Acklam's rational approximation to the standard normal quantile.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / SQRT2)


def norm_ppf(q: float) -> float:
    """Standard normal quantile.

    Acklam's approximation (relative error about 1.2e-9) followed by one
    Halley step against ``erfc``, which brings the error to machine level.
    """
    if not 0.0 < q < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {q}")
    if q < _P_LOW:
        r = math.sqrt(-2.0 * math.log(q))
        z = ((((( _C[0] * r + _C[1]) * r + _C[2]) * r + _C[3]) * r + _C[4]) * r + _C[5]) / \
            ((((_D[0] * r + _D[1]) * r + _D[2]) * r + _D[3]) * r + 1.0)
    elif q <= 1.0 - _P_LOW:
        s = q - 0.5
        r = s * s
        z = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * s / \
            (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    else:
        r = math.sqrt(-2.0 * math.log1p(-q))
        z = -((((( _C[0] * r + _C[1]) * r + _C[2]) * r + _C[3]) * r + _C[4]) * r + _C[5]) / \
            ((((_D[0] * r + _D[1]) * r + _D[2]) * r + _D[3]) * r + 1.0)

    # Halley refinement; the upper tail is refined on the complement to keep precision.
    if q > 0.5:
        err = 0.5 * math.erfc(z / SQRT2) - (1.0 - q)
        u = -err * math.sqrt(2.0 * math.pi) * math.exp(0.5 * z * z)
    else:
        err = 0.5 * math.erfc(-z / SQRT2) - q
        u = err * math.sqrt(2.0 * math.pi) * math.exp(0.5 * z * z)
    return z - u / (1.0 + 0.5 * z * u)


def quantile(dist: DemandDistribution, tau: float) -> float:
    """Inverse CDF of ``dist`` at level ``tau``."""
    if not 0.0 < tau < 1.0:
        raise DomainError(f"tau must lie in (0, 1), got {tau}")
    if dist.family == "normal":
        return dist.loc + dist.scale * norm_ppf(tau)
    if tau <= 0.5:
        return dist.loc + dist.scale * math.log(2.0 * tau)
    return dist.loc - dist.scale * math.log(2.0 * (1.0 - tau))


@dataclass(frozen=True)
class Order:
    """A textbook order; ``clamped`` marks a negative quantile cut to zero."""

    quantity: float
    clamped: bool = False

    def __float__(self):
        return self.quantity


def textbook_order(forecast, costs: CostParams, family: Family = "normal") -> Order:
    """Expected-profit maximising order given a mean/sd forecast.

    ``forecast`` is anything with ``mu_hat`` and ``sigma_hat`` attributes.
    For the laplace family the scale is moment-matched, ``b = sigma_hat / sqrt(2)``.
    """
    if not forecast.sigma_hat > 0:
        raise DomainError("forecast sigma_hat must be positive")
    dist = DemandDistribution.matching(family, forecast.mu_hat, forecast.sigma_hat)
    x = quantile(dist, critical_quantile(costs))
    if x < 0:
        return Order(0.0, clamped=True)
    return Order(x)


def quantile_multiplier(family: Family, tau: float) -> float:
    """Order offset in units of the forecast standard deviation.

    ``textbook_order`` equals ``mu_hat + sigma_hat * quantile_multiplier(family, tau)``
    before clamping; used for vectorised order paths.
    """
    return quantile(DemandDistribution.matching(family, 0.0, 1.0), tau)
