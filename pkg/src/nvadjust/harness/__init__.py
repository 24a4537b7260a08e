"""Experiment orchestration, demand data I/O and the command-line interface."""

from .config import (DEFAULT_PAIRS, DEFAULT_PRODUCTS, Config, EvaluationConfig, ExperimentConfig,
                     TuningConfig, Window, config_from_dict, load_config, regular_grid)
from .experiment import ExperimentResult, pooled_rpi, run_simulation_experiment
from .io import ProductSeries, load_demand_csv, write_demand_csv, write_table
from .rolling import RollingResult, run_rolling_origin, synthetic_products

__all__ = [
    "DEFAULT_PAIRS", "DEFAULT_PRODUCTS", "Config", "EvaluationConfig", "ExperimentConfig",
    "TuningConfig", "Window", "config_from_dict", "load_config", "regular_grid",
    "ExperimentResult", "pooled_rpi", "run_simulation_experiment", "ProductSeries",
    "load_demand_csv", "write_demand_csv", "write_table", "RollingResult",
    "run_rolling_origin", "synthetic_products",
]
