"""Experiment configuration files.

A config is one YAML (or JSON) document. Top-level keys mirror
:class:`ExperimentConfig`; the optional ``tuning`` and ``evaluation``
sections configure the ``tune`` and ``evaluate`` commands. Unknown keys are
rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml

from ..adjust import DEFAULT_BOX, AdjustmentParams
from ..exceptions import ConfigError, DomainError, SpecError
from ..forecast import ForecastModelSpec
from ..nvp import FAMILIES, CostParams
from ..simulate import ArmaSpec

DEFAULT_PAIRS = ((0.0, 0.4), (0.1, 0.0), (0.2, 0.1))

# Price and cost table of the four grocery products A-D.
DEFAULT_PRODUCTS = {
    "A": CostParams(2.96, 1.28, 0.49, 0.51),
    "B": CostParams(11.98, 4.13, 2.49, 1.33),
    "C": CostParams(2.86, 1.96, 0.78, 0.56),
    "D": CostParams(4.29, 3.24, 1.03, 0.21),
}


def regular_grid(step: float = 0.1, upper: float = 0.5, lower: float = 0.0):
    k = int(round((upper - lower) / step))
    vals = [round(lower + i * step, 10) for i in range(k + 1)]
    return [(b, g) for b in vals for g in vals]


@dataclass(frozen=True)
class Window:
    lo: int
    hi: int

    @property
    def label(self) -> str:
        return f"{self.lo}-{self.hi}"


@dataclass
class ExperimentConfig:
    dgp: ArmaSpec = field(default_factory=ArmaSpec)
    n_series: int = 500
    length: int = 200
    tau_values: List[float] = field(default_factory=lambda: [0.7])
    fit_model: ForecastModelSpec = field(default_factory=lambda: ForecastModelSpec("arma", 1, 1))
    adjustment_grid: List[Tuple[float, float]] = field(default_factory=regular_grid)
    windows: List[Window] = field(default_factory=lambda: [Window(21, 110), Window(111, 200)])
    master_seed: int = 20230101
    output_dir: str = "results"
    # Beyond the core fields: warm-up, assumed demand family and the plot-data slices.
    warmup: int = 20
    assumed_family: str = "normal"
    heatmap_t: int = 21
    boxplot_t: int = 21
    boxplot_pairs: List[Tuple[float, float]] = field(default_factory=lambda: list(DEFAULT_PAIRS))
    box: Tuple[Tuple[float, float], Tuple[float, float]] = DEFAULT_BOX

    def validate(self) -> "ExperimentConfig":
        if self.n_series < 1:
            raise ConfigError("n_series must be >= 1")
        if self.length <= self.warmup:
            raise ConfigError("length must exceed warmup")
        if not self.tau_values:
            raise ConfigError("tau_values must not be empty")
        for tau in self.tau_values:
            if not 0.0 < tau < 1.0:
                raise ConfigError(f"tau {tau} outside (0, 1)")
        if self.assumed_family not in FAMILIES:
            raise ConfigError(f"assumed_family must be one of {FAMILIES}")
        if not self.adjustment_grid:
            raise ConfigError("adjustment_grid must not be empty")
        for pair in list(self.adjustment_grid) + list(self.boxplot_pairs):
            try:
                AdjustmentParams(*pair).check_box(self.box)
            except DomainError as exc:
                raise ConfigError(str(exc)) from None
        first = self.warmup + 1
        for w in self.windows:
            if not first <= w.lo <= w.hi <= self.length:
                raise ConfigError(f"window {w.label} outside evaluated periods {first}-{self.length}")
        for name in ("heatmap_t", "boxplot_t"):
            t = getattr(self, name)
            if not first <= t <= self.length:
                raise ConfigError(f"{name}={t} outside evaluated periods {first}-{self.length}")
        if self.warmup < self.fit_model.min_history:
            raise ConfigError(f"warmup {self.warmup} too short for {self.fit_model.label}")
        return self


@dataclass
class EvaluationConfig:
    """Rolling-origin evaluation on per-product demand series."""

    forecaster: ForecastModelSpec = field(default_factory=lambda: ForecastModelSpec("mean"))
    tuning: bool = True
    retune_every_origin: bool = True
    train_fraction: float = 0.6
    warmup: Optional[int] = None
    assumed_family: str = "normal"
    products: Dict[str, CostParams] = field(default_factory=lambda: dict(DEFAULT_PRODUCTS))
    data: Optional[str] = None
    box: Tuple[Tuple[float, float], Tuple[float, float]] = DEFAULT_BOX

    def validate(self) -> "EvaluationConfig":
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must lie in (0, 1)")
        if self.assumed_family not in FAMILIES:
            raise ConfigError(f"assumed_family must be one of {FAMILIES}")
        if self.warmup is not None and self.warmup < self.forecaster.min_history:
            raise ConfigError(f"warmup {self.warmup} too short for {self.forecaster.label}")
        return self


@dataclass
class TuningConfig:
    """Single-series tuning run (``tune`` command)."""

    train_end: Optional[int] = None
    warmup: int = 20
    tau: float = 0.7
    init: Tuple[float, float] = (0.1, 0.1)
    box: Tuple[Tuple[float, float], Tuple[float, float]] = DEFAULT_BOX
    series_id: int = 0


@dataclass
class Config:
    experiment: ExperimentConfig
    evaluation: EvaluationConfig
    tuning: TuningConfig


def _check_keys(section: str, mapping: Dict[str, Any], allowed) -> None:
    if not isinstance(mapping, dict):
        raise ConfigError(f"section {section!r} must be a mapping")
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(unknown)}")


def _pairs(value, name) -> List[Tuple[float, float]]:
    if isinstance(value, dict):
        _check_keys(name, value, {"step", "max", "min"})
        return regular_grid(float(value.get("step", 0.1)), float(value.get("max", 0.5)),
                            float(value.get("min", 0.0)))
    try:
        return [(float(b), float(g)) for b, g in value]
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a list of [beta, gamma] pairs or {{step, max}}") from None


def _box(value):
    try:
        (blo, bhi), (glo, ghi) = value
        return ((float(blo), float(bhi)), (float(glo), float(ghi)))
    except (TypeError, ValueError):
        raise ConfigError("box must be [[beta_lo, beta_hi], [gamma_lo, gamma_hi]]") from None


def _model(value) -> ForecastModelSpec:
    try:
        return ForecastModelSpec.parse(str(value))
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def _dgp(value) -> ArmaSpec:
    allowed = {f.name for f in fields(ArmaSpec)}
    _check_keys("dgp", value, allowed)
    try:
        return ArmaSpec(**value)
    except (SpecError, TypeError) as exc:
        raise ConfigError(f"invalid dgp: {exc}") from None


def _costs(value) -> Dict[str, CostParams]:
    if not isinstance(value, dict) or not value:
        raise ConfigError("products must map product ids to {p, v, c_h, c_s}")
    out = {}
    for name, c in value.items():
        _check_keys(f"products.{name}", c, {"p", "v", "c_h", "c_s"})
        try:
            out[str(name)] = CostParams(**{k: float(v) for k, v in c.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid costs for product {name}: {exc}") from None
    return out


def experiment_from_dict(doc: Dict[str, Any]) -> ExperimentConfig:
    allowed = {f.name for f in fields(ExperimentConfig)}
    _check_keys("experiment", doc, allowed)
    kw: Dict[str, Any] = {}
    try:
        for key, value in doc.items():
            if key == "dgp":
                kw[key] = _dgp(value)
            elif key == "fit_model":
                kw[key] = _model(value)
            elif key in ("adjustment_grid", "boxplot_pairs"):
                kw[key] = _pairs(value, key)
            elif key == "windows":
                kw[key] = [Window(int(lo), int(hi)) for lo, hi in value]
            elif key == "tau_values":
                kw[key] = [float(t) for t in (value if isinstance(value, list) else [value])]
            elif key == "box":
                kw[key] = _box(value)
            elif key in ("n_series", "length", "master_seed", "warmup", "heatmap_t", "boxplot_t"):
                kw[key] = int(value)
            else:
                kw[key] = str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid experiment config: {exc}") from None
    return ExperimentConfig(**kw).validate()


def evaluation_from_dict(doc: Dict[str, Any]) -> EvaluationConfig:
    allowed = {f.name for f in fields(EvaluationConfig)}
    _check_keys("evaluation", doc, allowed)
    kw: Dict[str, Any] = {}
    try:
        for key, value in doc.items():
            if key == "forecaster":
                kw[key] = _model(value)
            elif key == "products":
                kw[key] = _costs(value)
            elif key == "box":
                kw[key] = _box(value)
            elif key in ("tuning", "retune_every_origin"):
                if not isinstance(value, bool):
                    raise ConfigError(f"{key} must be true or false")
                kw[key] = value
            elif key == "train_fraction":
                kw[key] = float(value)
            elif key == "warmup":
                kw[key] = None if value is None else int(value)
            else:
                kw[key] = None if value is None else str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid evaluation config: {exc}") from None
    return EvaluationConfig(**kw).validate()


def tuning_from_dict(doc: Dict[str, Any]) -> TuningConfig:
    allowed = {f.name for f in fields(TuningConfig)}
    _check_keys("tuning", doc, allowed)
    kw: Dict[str, Any] = {}
    try:
        for key, value in doc.items():
            if key == "box":
                kw[key] = _box(value)
            elif key == "init":
                b, g = value
                kw[key] = (float(b), float(g))
            elif key == "tau":
                kw[key] = float(value)
            else:
                kw[key] = None if value is None else int(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid tuning config: {exc}") from None
    cfg = TuningConfig(**kw)
    if not 0.0 < cfg.tau < 1.0:
        raise ConfigError("tuning.tau must lie in (0, 1)")
    return cfg


def config_from_dict(doc: Optional[Dict[str, Any]]) -> Config:
    doc = dict(doc or {})
    evaluation = doc.pop("evaluation", {}) or {}
    tuning = doc.pop("tuning", {}) or {}
    return Config(experiment_from_dict(doc), evaluation_from_dict(evaluation),
                  tuning_from_dict(tuning))


def load_config(path) -> Config:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if doc is not None and not isinstance(doc, dict):
        raise ConfigError("config document must be a mapping")
    return config_from_dict(doc)


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None}).validate()
