"""Profit-loss metrics and their aggregation across series.

PPL is the percentage of the ex-post optimal profit ``(p - v) d`` lost by
ordering ``x``; RPI compares the adjusted order's loss with the textbook
order's loss, ``1 - PPL(x) / PPL(x*)``. RPI is undefined when the textbook
order happened to equal demand; such periods are excluded and counted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .exceptions import DomainError
from .nvp import CostParams, profit


def ppl(costs: CostParams, x, d):
    """Percentage profit loss of order ``x`` against demand ``d``."""
    d_arr = np.asarray(d, dtype=float)
    best = (costs.p - costs.v) * d_arr
    if np.any(best <= 0):
        raise DomainError("PPL needs a positive ex-post optimal profit (p > v and d > 0)")
    out = 100.0 * (best - profit(costs, x, d_arr)) / best
    return float(out) if np.ndim(out) == 0 else out


def rpi(costs: CostParams, x, x_star, d):
    """Relative profit improvement of ``x`` over ``x_star``; NaN where undefined."""
    base = np.asarray(ppl(costs, x_star, d))
    adj = np.asarray(ppl(costs, x, d))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(base > 0, 1.0 - adj / np.where(base > 0, base, 1.0), np.nan)
    return float(out) if out.ndim == 0 else out


def service_level(trajectory, series=None) -> float:
    """Fraction of evaluated periods in which the order covered demand.

    ``series`` defaults to the demands stored on the trajectory; when given,
    it must be the full series the trajectory was computed on.
    """
    x = np.asarray(trajectory.x, dtype=float)
    if series is None:
        d = np.asarray(trajectory.demand, dtype=float)
    else:
        values = np.asarray(getattr(series, "values", series), dtype=float)
        d = values[np.asarray(trajectory.t) - 1]
    if x.shape != d.shape or x.size == 0:
        raise DomainError("trajectory and series are not aligned")
    return float(np.mean(x >= d))


@dataclass
class RunRecord:
    """Per-period metrics of one series under one parameter setting."""

    series_id: int
    t: np.ndarray
    x_star: np.ndarray
    x: np.ndarray
    d: np.ndarray
    ppl_star: np.ndarray
    ppl_x: np.ndarray
    rpi: np.ndarray
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_trajectory(cls, costs: CostParams, trajectory, series_id: int = 0, **meta):
        d = np.asarray(trajectory.demand, dtype=float)
        return cls.from_arrays(costs, trajectory.t, trajectory.x_star, trajectory.x, d,
                               series_id, **meta)

    @classmethod
    def from_arrays(cls, costs, t, x_star, x, d, series_id=0, **meta):
        ppl_star = np.asarray(ppl(costs, x_star, d), dtype=float)
        ppl_x = np.asarray(ppl(costs, x, d), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(ppl_star > 0, 1.0 - ppl_x / np.where(ppl_star > 0, ppl_star, 1.0),
                         np.nan)
        return cls(series_id, np.asarray(t), np.asarray(x_star, dtype=float),
                   np.asarray(x, dtype=float), d, ppl_star, ppl_x, r, dict(meta))

    def window(self, lo: int, hi: int) -> np.ndarray:
        return (self.t >= lo) & (self.t <= hi)


@dataclass(frozen=True)
class Summary:
    """Statistics of per-period RPI values, plus the pooled RPI.

    ``pooled`` is ``1 - sum PPL(x) / sum PPL(x*)`` over the same cells. Unlike
    the cell mean it has finite variance, because a single period with
    ``x*`` almost equal to demand cannot dominate it.
    """

    mean: float
    median: float
    q1: float
    q3: float
    min: float
    max: float
    n: int
    n_excluded: int
    pooled: float

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1


def summarize(values: Iterable[float], ppl_x=None, ppl_star=None) -> Summary:
    v = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
    ok = ~np.isnan(v)
    excluded = int(v.size - ok.sum())
    vals = v[ok]
    if ppl_x is not None and ppl_star is not None:
        denom = float(np.sum(ppl_star))
        pooled = 1.0 - float(np.sum(ppl_x)) / denom if denom > 0 else math.nan
    else:
        pooled = math.nan
    if vals.size == 0:
        nan = math.nan
        return Summary(nan, nan, nan, nan, nan, nan, 0, excluded, pooled)
    # numpy's default "linear" method is the inclusive interpolation convention
    q1, med, q3 = np.quantile(vals, [0.25, 0.5, 0.75])
    return Summary(float(np.mean(vals)), float(med), float(q1), float(q3),
                   float(vals.min()), float(vals.max()), int(vals.size), excluded, pooled)


def aggregate(records: Sequence[RunRecord], window: Optional[Tuple[int, int]] = None) -> Summary:
    """Summarise RPI over the periods of ``window`` (inclusive) across all records."""
    if not records:
        raise DomainError("no records to aggregate")
    rs, px, ps = [], [], []
    for rec in records:
        mask = np.ones(rec.t.size, dtype=bool) if window is None else rec.window(*window)
        rs.append(rec.rpi[mask])
        px.append(rec.ppl_x[mask])
        ps.append(rec.ppl_star[mask])
    return summarize(np.concatenate(rs), np.concatenate(px), np.concatenate(ps))
