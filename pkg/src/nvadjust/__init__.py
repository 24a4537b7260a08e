"""Newsvendor orders with demand-chasing and pull-to-centre adjustments."""

from .adjust import (AdjustmentParams, OrderTrajectory, dc_adjust, ptc_adjust, simulate_orders,
                     unified_adjust)
from .exceptions import (ConfigError, DataError, DomainError, FitError, InsufficientHistoryError,
                         InvalidCostError, NewsvendorError, NonFiniteObjectiveError, SpecError)
from .forecast import ForecastModelSpec, ForecastResult, fit, fit_arma, forecast_one, forecast_path
from .metrics import RunRecord, Summary, aggregate, ppl, rpi, service_level, summarize
from .nvp import CostParams, DemandDistribution, critical_quantile, profit, quantile, textbook_order
from .optimize import OptimizeProblem, OptimizeResult, maximize
from .simulate import ArmaSpec, DemandSeries, simulate, simulate_batch
from .tune import TunerConfig, TuneResult, grid_search, tune_parameters

__version__ = "0.1.0"
