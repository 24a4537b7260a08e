"""Demand CSV input and result table output."""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np

from ..exceptions import DataError

Period = Union[int, dt.date]


@dataclass
class ProductSeries:
    product: str
    periods: List[Period]
    demand: np.ndarray

    def __len__(self):
        return self.demand.size


def _parse_period(text: str, lineno: int) -> Period:
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise DataError(f"line {lineno}: period {text!r} is neither an integer nor an ISO date") from None


def load_demand_csv(path) -> Dict[str, ProductSeries]:
    """Read ``product,period,demand`` rows grouped by product.

    Periods must be all integers or all ISO dates and, per product, form a
    gap-free run of consecutive integers or days. Rows may appear in any order.
    """
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from None
    rows: Dict[str, Dict[Period, float]] = {}
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError("no rows")
        if [h.strip().lower() for h in header] != ["product", "period", "demand"]:
            raise DataError(f"line 1: expected header product,period,demand, got {','.join(header)}")
        kinds = set()
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != 3:
                raise DataError(f"line {lineno}: expected 3 fields, got {len(rec)}")
            product, period_text, demand_text = (c.strip() for c in rec)
            if not product:
                raise DataError(f"line {lineno}: empty product id")
            period = _parse_period(period_text, lineno)
            kinds.add(type(period))
            if len(kinds) > 1:
                raise DataError(f"line {lineno}: mixes integer and date periods")
            if not demand_text:
                raise DataError(f"line {lineno}: missing demand value")
            try:
                demand = float(demand_text)
            except ValueError:
                raise DataError(f"line {lineno}: demand {demand_text!r} is not a number") from None
            if not math.isfinite(demand) or demand < 0:
                raise DataError(f"line {lineno}: demand must be a non-negative number, got {demand_text}")
            per_product = rows.setdefault(product, {})
            if period in per_product:
                raise DataError(f"line {lineno}: duplicate period {period_text} for product {product}")
            per_product[period] = demand
    if not rows:
        raise DataError("no rows")

    out = {}
    for product, recs in rows.items():
        periods = sorted(recs)
        for a, b in zip(periods, periods[1:]):
            step = (b - a).days if isinstance(a, dt.date) else b - a
            if step != 1:
                raise DataError(f"product {product}: gap between periods {a} and {b}")
        out[product] = ProductSeries(product, periods, np.array([recs[p] for p in periods]))
    return out


def write_demand_csv(series: Dict[str, np.ndarray], path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["product", "period", "demand"])
        for product, values in series.items():
            for t, d in enumerate(np.asarray(values, dtype=float), start=1):
                w.writerow([product, t, _fmt(d)])
    return path


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def _json_value(value):
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_table(out_dir, name: str, columns: Sequence[str], rows, fmt: str = "csv") -> Path:
    """Write rows (sequences aligned with ``columns``) as ``<name>.csv`` or ``<name>.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        path = out_dir / f"{name}.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        return path
    if fmt == "json":
        path = out_dir / f"{name}.json"
        records = [{c: _json_value(v) for c, v in zip(columns, row)} for row in rows]
        path.write_text(json.dumps(records, indent=1) + "\n", encoding="utf-8")
        return path
    raise ValueError(f"unknown output format {fmt!r}")
