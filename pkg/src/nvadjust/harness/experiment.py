"""Simulation experiments over ARMA demand batches.

Forecasts do not depend on the adjustment parameters or on ``tau``, so each
series is fitted once per period and every ``(tau, beta, gamma)`` cell reuses
the same forecast path.

Reported "mean RPI" values are pooled: ``1 - sum PPL(x) / sum PPL(x*)`` over
all series and periods in the slice. Per-cell RPI has a Cauchy-like lower
tail (periods where ``x*`` lands almost exactly on demand), so its plain
average does not settle as the number of series grows; quartiles in
``rpi_tau`` are still taken over per-series cell values.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import json
import numpy as np

from ..adjust import AdjustmentParams, orders_from_path, textbook_path
from ..forecast import ForecastPath, forecast_path
from ..metrics import ppl, summarize
from ..nvp import CostParams
from ..simulate import simulate_batch
from .config import ExperimentConfig
from .io import write_table

log = logging.getLogger(__name__)

GRID_COLUMNS = ("window", "beta", "gamma", "mean_rpi", "n_excluded")
LENGTH_COLUMNS = ("t", "beta", "gamma", "mean_rpi")
HEATMAP_COLUMNS = ("t", "beta", "gamma", "mean_rpi", "n_excluded")
TAU_COLUMNS = ("tau", "beta", "gamma", "min", "q1", "median", "q3", "max", "mean")
SERIES_COLUMNS = ("series_id", "tau", "window", "beta", "gamma", "mean_rpi", "n_excluded")


def pooled_rpi(ppl_x: np.ndarray, ppl_star: np.ndarray, axis=None):
    num = np.sum(ppl_x, axis=axis)
    den = np.sum(ppl_star, axis=axis)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, 1.0 - num / np.where(den > 0, den, 1.0), np.nan)


def _fit_one(args):
    values, spec, warmup = args
    try:
        return forecast_path(values, spec, warmup), None
    except Exception as exc:  # noqa: BLE001 - counted as a series failure
        return None, f"{type(exc).__name__}: {exc}"


def forecast_paths(batch, spec, warmup: int, threads: int = 1):
    """Forecast paths for every series; results are independent of ``threads``."""
    jobs = [(s.values, spec, warmup) for s in batch]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_fit_one, jobs, chunksize=max(1, len(jobs) // (4 * threads))))
    return [_fit_one(j) for j in jobs]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    tables: Dict[str, Tuple[Sequence[str], List[tuple]]]
    failures: List[Tuple[int, str]] = field(default_factory=list)
    n_fallback: int = 0

    def rows(self, name: str) -> List[dict]:
        cols, rows = self.tables[name]
        return [dict(zip(cols, r)) for r in rows]

    def value(self, name: str, column: str = "mean_rpi", **match) -> float:
        hits = [r for r in self.rows(name)
                if all(_same(r[k], v) for k, v in match.items())]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} rows in {name} match {match}")
        return hits[0][column]

    def grid_matrix(self, window: str) -> Tuple[List[float], List[float], np.ndarray]:
        rows = [r for r in self.rows("rpi_grid") if r["window"] == window]
        betas = sorted({r["beta"] for r in rows})
        gammas = sorted({r["gamma"] for r in rows})
        m = np.full((len(betas), len(gammas)), np.nan)
        for r in rows:
            m[betas.index(r["beta"]), gammas.index(r["gamma"])] = r["mean_rpi"]
        return betas, gammas, m

    def summary(self) -> dict:
        cfg = self.config
        return {
            "n_series": cfg.n_series,
            "n_failed": len(self.failures),
            "failures": [{"series_id": i, "error": msg} for i, msg in self.failures],
            "n_fallback_periods": self.n_fallback,
            "fit_model": cfg.fit_model.label,
            "dgp": {"mean": cfg.dgp.mean, "ar": list(cfg.dgp.ar), "ma": list(cfg.dgp.ma),
                    "innovation_family": cfg.dgp.innovation_family,
                    "innovation_sd": cfg.dgp.innovation_sd},
            "tau_values": list(cfg.tau_values),
            "assumed_family": cfg.assumed_family,
            "master_seed": cfg.master_seed,
            "mean_rpi": "pooled: 1 - sum PPL(x) / sum PPL(x*)",
        }

    def write(self, out_dir=None, fmt: str = "csv") -> List[Path]:
        out_dir = Path(out_dir or self.config.output_dir)
        paths = [write_table(out_dir, name, cols, rows, fmt)
                 for name, (cols, rows) in self.tables.items()]
        summary = out_dir / "summary.json"
        summary.write_text(json.dumps(self.summary(), indent=1, sort_keys=True) + "\n",
                           encoding="utf-8")
        paths.append(summary)
        return paths


def _same(a, b) -> bool:
    if isinstance(a, float) or isinstance(b, float):
        return abs(float(a) - float(b)) < 1e-9
    return a == b


def _unique_pairs(*groups) -> List[Tuple[float, float]]:
    seen, out = set(), []
    for group in groups:
        for pair in group:
            key = (round(pair[0], 10), round(pair[1], 10))
            if key not in seen:
                seen.add(key)
                out.append(key)
    return out


def run_simulation_experiment(cfg: ExperimentConfig, threads: int = 1,
                              paths: Optional[List[ForecastPath]] = None,
                              batch=None) -> ExperimentResult:
    """Run every series through every ``(tau, beta, gamma)`` cell and tabulate RPI.

    ``batch`` and ``paths`` may be supplied to reuse simulated series and
    forecasts (they must correspond to ``cfg``).
    """
    cfg.validate()
    if batch is None:
        batch = simulate_batch(cfg.dgp, cfg.n_series, cfg.length, cfg.master_seed)
    failures: List[Tuple[int, str]] = []
    if paths is None:
        fitted = forecast_paths(batch, cfg.fit_model, cfg.warmup, threads)
        ok_series, paths = [], []
        for s, (path, err) in zip(batch, fitted):
            if path is None:
                failures.append((s.series_id, err))
                log.warning("series %d failed: %s", s.series_id, err)
            else:
                ok_series.append(s)
                paths.append(path)
        batch = ok_series
    n_fallback = int(sum(int(p.fallback.sum()) for p in paths))

    w = cfg.warmup
    t_axis = np.arange(w + 1, cfg.length + 1)
    demand = np.array([s.values[w:] for s in batch])
    ids = [s.series_id for s in batch]
    grid = _unique_pairs(cfg.adjustment_grid)
    figure_pairs = _unique_pairs(cfg.boxplot_pairs)
    all_pairs = _unique_pairs(grid, figure_pairs)
    primary = cfg.tau_values[0]

    tables: Dict[str, Tuple[Sequence[str], List[tuple]]] = {
        "rpi_grid": (GRID_COLUMNS, []),
        "rpi_vs_length": (LENGTH_COLUMNS, []),
        "rpi_heatmap": (HEATMAP_COLUMNS, []),
        "rpi_tau": (TAU_COLUMNS, []),
        "rpi_series": (SERIES_COLUMNS, []),
    }
    windows = [(win, (t_axis >= win.lo) & (t_axis <= win.hi)) for win in cfg.windows]
    heat_i = int(cfg.heatmap_t - w - 1)
    box_i = int(cfg.boxplot_t - w - 1)

    for tau in cfg.tau_values:
        costs = CostParams.from_quantile(tau)
        x_star = np.array([textbook_path(p, tau, cfg.assumed_family) for p in paths])
        ppl_star = ppl(costs, x_star, demand)
        undefined = ppl_star <= 0
        for pair in all_pairs:
            params = AdjustmentParams(*pair)
            x = np.array([orders_from_path(s.values, p, xs, params)[1]
                          for s, p, xs in zip(batch, paths, x_star)])
            ppl_x = ppl(costs, x, demand)
            b, g = pair
            if pair in figure_pairs:
                cell = summarize(_cell_rpi(ppl_x[:, box_i], ppl_star[:, box_i]),
                                 ppl_x[:, box_i], ppl_star[:, box_i])
                tables["rpi_tau"][1].append(
                    (tau, b, g, cell.min, cell.q1, cell.median, cell.q3, cell.max, cell.pooled))
            if pair in grid:
                for win, mask in windows:
                    per_series = pooled_rpi(ppl_x[:, mask], ppl_star[:, mask], axis=1)
                    excl = undefined[:, mask].sum(axis=1)
                    for sid, r, e in zip(ids, per_series, excl):
                        tables["rpi_series"][1].append((sid, tau, win.label, b, g, float(r), int(e)))
            if tau != primary:
                continue
            if pair in grid:
                for win, mask in windows:
                    tables["rpi_grid"][1].append(
                        (win.label, b, g, float(pooled_rpi(ppl_x[:, mask], ppl_star[:, mask])),
                         int(undefined[:, mask].sum())))
                tables["rpi_heatmap"][1].append(
                    (cfg.heatmap_t, b, g,
                     float(pooled_rpi(ppl_x[:, heat_i], ppl_star[:, heat_i])),
                     int(undefined[:, heat_i].sum())))
            if pair in figure_pairs:
                curve = pooled_rpi(ppl_x, ppl_star, axis=0)
                for t, r in zip(t_axis, curve):
                    tables["rpi_vs_length"][1].append((int(t), b, g, float(r)))

    tables["rpi_vs_length"][1].sort(key=lambda r: (r[1], r[2], r[0]))
    return ExperimentResult(cfg, tables, failures, n_fallback)


def _cell_rpi(ppl_x, ppl_star):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(ppl_star > 0, 1.0 - ppl_x / np.where(ppl_star > 0, ppl_star, 1.0), np.nan)
