"""Box-constrained Nelder-Mead maximisation.

Trial points that leave the box are clamped componentwise before the
objective is evaluated, so every evaluated point, and the returned argmax,
lies inside the box. The run is deterministic: the initial simplex is built
from fixed per-dimension offsets and no randomness is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import ConfigError, NonFiniteObjectiveError

REFLECT = 1.0
EXPAND = 2.0
CONTRACT = 0.5
SHRINK = 0.5


@dataclass
class OptimizeProblem:
    """A maximisation problem over a box.

    Attributes
    ----------
    objective : callable
        Maps a 1-D parameter array to a finite float. Maximised.
    lower, upper : sequence of float
        Box bounds per dimension.
    init : sequence of float
        Starting point inside the box.
    tolerance : float
        Stop when max - min of the simplex objective values falls below this.
    max_evals : int, optional
        Total evaluation budget across restarts; defaults to ``500 * dim``.
    restarts : int
        Number of restarts from the best point with a re-inflated simplex.
    step : float
        Initial simplex offset as a fraction of the box width.
    simplex : sequence of points, optional
        Explicit initial simplex (``dim + 1`` points) for the first run;
        ``init`` is then only used for validation.
    """

    objective: Callable[[np.ndarray], float]
    lower: Sequence[float]
    upper: Sequence[float]
    init: Sequence[float]
    tolerance: float = 1e-6
    max_evals: Optional[int] = None
    restarts: int = 1
    step: float = 0.05
    simplex: Optional[Sequence[Sequence[float]]] = None

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        self.init = np.asarray(self.init, dtype=float)
        dim = self.init.size
        if self.lower.shape != (dim,) or self.upper.shape != (dim,):
            raise ConfigError("box bounds must match the dimension of init")
        if np.any(self.lower > self.upper):
            raise ConfigError("lower bound exceeds upper bound")
        if np.any(self.init < self.lower) or np.any(self.init > self.upper):
            raise ConfigError(f"init {self.init.tolist()} lies outside the box")
        if not self.tolerance > 0:
            raise ConfigError("tolerance must be positive")
        if self.max_evals is None:
            self.max_evals = 500 * dim
        if self.max_evals < dim + 1:
            raise ConfigError("max_evals must be at least dim + 1")
        if self.restarts < 0:
            raise ConfigError("restarts must be >= 0")
        if self.simplex is not None:
            pts = np.asarray(self.simplex, dtype=float)
            if pts.shape != (dim + 1, dim):
                raise ConfigError(f"simplex must have shape ({dim + 1}, {dim})")
            self.simplex = pts

    @property
    def dim(self) -> int:
        return self.init.size


@dataclass
class OptimizeResult:
    x: np.ndarray
    value: float
    n_evals: int
    converged: bool
    history: list = field(default_factory=list, repr=False)


class _Budget(Exception):
    pass


class _Evaluator:
    def __init__(self, problem: OptimizeProblem):
        self.f = problem.objective
        self.lo = problem.lower
        self.hi = problem.upper
        self.limit = problem.max_evals
        self.count = 0

    def __call__(self, x: np.ndarray):
        if self.count >= self.limit:
            raise _Budget
        x = np.minimum(np.maximum(x, self.lo), self.hi)
        self.count += 1
        value = float(self.f(x))
        if not math.isfinite(value):
            raise NonFiniteObjectiveError(x, value)
        # Internally minimised.
        return x, -value


def _initial_simplex(center, lo, hi, step):
    width = hi - lo
    pts = [center.copy()]
    for i in range(center.size):
        delta = step * width[i]
        if delta == 0.0:
            delta = step * max(abs(center[i]), 1.0)
        pt = center.copy()
        if center[i] + delta <= hi[i] or width[i] == 0.0:
            pt[i] = center[i] + delta
        else:
            pt[i] = center[i] - delta
        pts.append(pt)
    return pts


def _run(evaluate, pts, tol, history):
    """One Nelder-Mead descent. Returns (points, values, converged)."""
    verts = []
    vals = []
    for p in pts:
        x, fx = evaluate(np.asarray(p, dtype=float))
        verts.append(x)
        vals.append(fx)
    n = len(verts) - 1
    try:
        while True:
            order = sorted(range(n + 1), key=vals.__getitem__)
            verts = [verts[i] for i in order]
            vals = [vals[i] for i in order]
            history.append(-vals[0])
            if vals[-1] - vals[0] < tol:
                return verts, vals, True

            centroid = sum(verts[:-1]) / n
            worst = verts[-1]
            xr, fr = evaluate(centroid + REFLECT * (centroid - worst))
            if fr < vals[0]:
                xe, fe = evaluate(centroid + EXPAND * (xr - centroid))
                if fe < fr:
                    verts[-1], vals[-1] = xe, fe
                else:
                    verts[-1], vals[-1] = xr, fr
                continue
            if fr < vals[-2]:
                verts[-1], vals[-1] = xr, fr
                continue
            if fr < vals[-1]:
                xc, fc = evaluate(centroid + CONTRACT * (xr - centroid))
                accept = fc <= fr
            else:
                xc, fc = evaluate(centroid + CONTRACT * (worst - centroid))
                accept = fc < vals[-1]
            if accept:
                verts[-1], vals[-1] = xc, fc
                continue
            best = verts[0]
            for i in range(1, n + 1):
                verts[i], vals[i] = evaluate(best + SHRINK * (verts[i] - best))
    except _Budget:
        return verts, vals, False


def maximize(problem: OptimizeProblem) -> OptimizeResult:
    """Maximise ``problem.objective`` over its box with Nelder-Mead.

    Reflection 1, expansion 2, contraction 0.5, shrink 0.5. After the first
    descent, ``problem.restarts`` further descents start from the best point
    found with a fresh simplex, as long as the evaluation budget allows.
    """
    evaluate = _Evaluator(problem)
    lo, hi = problem.lower, problem.upper
    history: list = []

    best_x, best_f = evaluate(problem.init)
    pts = problem.simplex if problem.simplex is not None else _initial_simplex(
        best_x, lo, hi, problem.step)
    converged = False
    for attempt in range(problem.restarts + 1):
        if attempt > 0:
            if evaluate.count + problem.dim + 1 > evaluate.limit:
                break
            pts = _initial_simplex(best_x, lo, hi, problem.step)
        try:
            verts, vals, converged = _run(evaluate, pts, problem.tolerance, history)
        except _Budget:
            converged = False
            break
        i = int(np.argmin(vals))
        if vals[i] < best_f:
            best_x, best_f = verts[i], vals[i]
        if not converged:
            break
    return OptimizeResult(x=np.array(best_x), value=-best_f, n_evals=evaluate.count,
                          converged=converged, history=history)
