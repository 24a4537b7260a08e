"""Seeded simulation of ARMA demand series.

Random numbers come from numpy's PCG64 bit generator seeded through
``SeedSequence``. Series ``i`` of a batch uses ``SeedSequence(master_seed,
spawn_key=(i,))``, so each series is reproducible on its own and a batch does
not depend on the order or number of workers producing it.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.signal import lfilter

from .exceptions import DomainError, SpecError

BURN_IN = 200


def _roots_outside_unit_circle(coefs: Sequence[float], sign: float) -> bool:
    # polynomial 1 + sign*c_1 z + ... + sign*c_k z^k
    if not len(coefs):
        return True
    poly = np.r_[1.0, sign * np.asarray(coefs, dtype=float)]
    roots = np.roots(poly[::-1])
    return bool(np.all(np.abs(roots) > 1.0 + 1e-10))


@dataclass(frozen=True)
class ArmaSpec:
    """ARMA(p, q) demand process ``d_t - mean = sum ar_i (d_{t-i} - mean) + e_t + sum ma_j e_{t-j}``."""

    mean: float = 10_000.0
    ar: tuple = (0.5,)
    ma: tuple = (0.3,)
    innovation_family: str = "normal"
    innovation_sd: float = 100.0

    def __post_init__(self):
        object.__setattr__(self, "ar", tuple(float(a) for a in self.ar))
        object.__setattr__(self, "ma", tuple(float(m) for m in self.ma))
        if self.innovation_family not in ("normal", "laplace"):
            raise SpecError(f"unknown innovation family {self.innovation_family!r}")
        if not (self.innovation_sd > 0 and math.isfinite(self.innovation_sd)):
            raise SpecError("innovation_sd must be positive")
        if not _roots_outside_unit_circle(self.ar, -1.0):
            raise SpecError(f"AR coefficients {self.ar} are not stationary")
        if not _roots_outside_unit_circle(self.ma, 1.0):
            raise SpecError(f"MA coefficients {self.ma} are not invertible")


@dataclass
class DemandSeries:
    values: np.ndarray
    series_id: int = 0
    seed: object = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    def __len__(self):
        return self.values.size


def innovations(rng: np.random.Generator, family: str, sd: float, n: int) -> np.ndarray:
    if family == "normal":
        return sd * rng.standard_normal(n)
    # Laplace by inverse CDF; b = sd / sqrt(2) gives the requested standard deviation.
    b = sd / math.sqrt(2.0)
    u = rng.random(n) - 0.5
    return -b * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def simulate(spec: ArmaSpec, n: int, seed, series_id: int = 0) -> DemandSeries:
    """Simulate ``n`` demands from ``spec`` after discarding a burn-in prefix.

    ``seed`` may be an int or a ``numpy.random.SeedSequence``.
    """
    if n < 1:
        raise DomainError("series length must be >= 1")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rng = np.random.Generator(np.random.PCG64(ss))
    e = innovations(rng, spec.innovation_family, spec.innovation_sd, BURN_IN + n)
    dev = lfilter(np.r_[1.0, spec.ma], np.r_[1.0, -np.asarray(spec.ar, dtype=float)], e)
    return DemandSeries(spec.mean + dev[BURN_IN:], series_id=series_id, seed=seed)


def child_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(index,))


def simulate_batch(spec: ArmaSpec, count: int, length: int, master_seed: int,
                   threads: int = 1) -> list[DemandSeries]:
    if count < 1:
        raise DomainError("count must be >= 1")

    def one(i):
        s = simulate(spec, length, child_seed(master_seed, i), series_id=i)
        s.seed = (master_seed, i)
        return s

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, range(count)))
    return [one(i) for i in range(count)]


def write_batch_csv(batch: Sequence[DemandSeries], path) -> Path:
    """Write ``series_id,t,demand`` rows, ``t`` starting at 1."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series_id", "t", "demand"])
        for s in batch:
            for t, d in enumerate(s.values, start=1):
                w.writerow([s.series_id, t, repr(float(d))])
    return path
