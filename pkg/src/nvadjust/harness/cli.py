"""Command-line entry point: ``nvadjust {simulate,experiment,tune,evaluate}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from ..exceptions import (ConfigError, DataError, DomainError, FitError,
                          InsufficientHistoryError, InvalidCostError, NonFiniteObjectiveError,
                          SpecError)
from ..nvp import CostParams
from ..simulate import child_seed, simulate, simulate_batch, write_batch_csv
from ..tune import TunerConfig, tune_parameters
from .config import Config, config_from_dict, load_config
from .experiment import run_simulation_experiment
from .io import load_demand_csv, write_table
from .rolling import run_rolling_origin, synthetic_products

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("nvadjust")


def _load(args) -> Config:
    cfg = load_config(args.config) if args.config else config_from_dict({})
    exp = cfg.experiment
    if args.seed is not None:
        exp = replace(exp, master_seed=args.seed)
    if args.out is not None:
        exp = replace(exp, output_dir=args.out)
    cfg.experiment = exp.validate()
    return cfg


def cmd_simulate(args, cfg: Config) -> int:
    exp = cfg.experiment
    batch = simulate_batch(exp.dgp, exp.n_series, exp.length, exp.master_seed, args.threads)
    out = Path(exp.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "csv":
        path = write_batch_csv(batch, out / "demand.csv")
    else:
        rows = [(s.series_id, t, float(d)) for s in batch for t, d in enumerate(s.values, 1)]
        path = write_table(out, "demand", ("series_id", "t", "demand"), rows, "json")
    print(f"wrote {len(batch)} series to {path}")
    return EXIT_OK


def cmd_experiment(args, cfg: Config) -> int:
    result = run_simulation_experiment(cfg.experiment, threads=args.threads)
    paths = result.write(cfg.experiment.output_dir, args.format)
    if result.failures:
        print(f"{len(result.failures)} of {cfg.experiment.n_series} series failed to fit",
              file=sys.stderr)
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def cmd_tune(args, cfg: Config) -> int:
    tcfg = cfg.tuning
    if args.data:
        data = load_demand_csv(args.data)
        product = args.product or next(iter(data))
        if product not in data:
            raise DataError(f"product {product!r} not in {args.data}")
        values = data[product].demand
        costs = cfg.evaluation.products.get(product) or CostParams.from_quantile(tcfg.tau)
        forecaster = cfg.evaluation.forecaster
        label = f"product {product}"
    else:
        exp = cfg.experiment
        values = simulate(exp.dgp, exp.length, child_seed(exp.master_seed, tcfg.series_id),
                          tcfg.series_id).values
        costs = CostParams.from_quantile(tcfg.tau)
        forecaster = exp.fit_model
        label = f"simulated series {tcfg.series_id}"
    train_end = tcfg.train_end or values.size
    tuner = TunerConfig(train_end=train_end, warmup=tcfg.warmup, box=tcfg.box, init=tcfg.init)
    res = tune_parameters(values, forecaster, costs, tuner)
    print(f"{label}: tau={costs.tau:.4f} forecaster={forecaster.label} periods={tcfg.warmup + 1}-{train_end}")
    print(f"beta={res.params.beta:.6f} gamma={res.params.gamma:.6f}")
    print(f"profit_tuned={res.profit:.6f} profit_untuned={res.baseline_profit:.6f}")
    print(f"in_sample_rpi={res.in_sample_rpi:.6f} evaluations={res.n_evals}")
    return EXIT_OK


def cmd_evaluate(args, cfg: Config) -> int:
    ecfg = cfg.evaluation
    source = args.data or ecfg.data
    if source:
        data = load_demand_csv(source)
    else:
        seed = args.seed if args.seed is not None else cfg.experiment.master_seed
        data = synthetic_products(seed, names=tuple(ecfg.products))
        print(f"no demand data given; using synthetic products (seed {seed})")
    result = run_rolling_origin(data, ecfg)
    out = Path(cfg.experiment.output_dir)
    for name, (cols, rows) in result.tables().items():
        print(f"wrote {write_table(out, name, cols, rows, args.format)}")
    for ev in result.products.values():
        pre, tuned = ev.service_levels()
        print(f"{ev.product}: tau={ev.tau:.2f} out_of_sample_rpi={ev.out_of_sample_rpi():+.4f} "
              f"service {pre:.3f} -> {tuned:.3f}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "experiment": cmd_experiment, "tune": cmd_tune,
            "evaluate": cmd_evaluate}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config file")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--threads", type=int, default=1, help="worker processes")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="nvadjust",
                                     description="Newsvendor order adjustment experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="write simulated demand series")
    sub.add_parser("experiment", parents=[common], help="run the simulation experiment")
    tune = sub.add_parser("tune", parents=[common], help="tune (beta, gamma) on one series")
    tune.add_argument("--data", help="demand CSV (product,period,demand)")
    tune.add_argument("--product", help="product id within --data")
    ev = sub.add_parser("evaluate", parents=[common], help="rolling-origin evaluation")
    ev.add_argument("--data", help="demand CSV (product,period,demand)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        cfg = _load(args)
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, SpecError, InvalidCostError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, InsufficientHistoryError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FitError, NonFiniteObjectiveError, DomainError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
