"""Acceptance criteria 1-10, each reported as one PASS/FAIL line.

RPI values in the result tables are fractions; thresholds stated in
percentage points are converted with ``PP = 0.01``. "Mean RPI" is the pooled
ratio ``1 - sum PPL(x) / sum PPL(x*)`` over the series (see
``nvadjust.harness.experiment``).
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from nvadjust.adjust import AdjustmentParams, simulate_orders
from nvadjust.forecast import ForecastModelSpec, fit_arma, forecast_path
from nvadjust.harness.config import DEFAULT_PAIRS, DEFAULT_PRODUCTS, EvaluationConfig, ExperimentConfig
from nvadjust.harness.experiment import run_simulation_experiment
from nvadjust.harness.rolling import run_rolling_origin, synthetic_products
from nvadjust.metrics import ppl, rpi
from nvadjust.nvp import CostParams, critical_quantile
from nvadjust.simulate import ArmaSpec, child_seed, simulate
from nvadjust.tune import TunerConfig, grid_search, tune_parameters

PP = 0.01
N_SERIES = 100
SEED = 20230101


def record(report, number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    report.append(line)
    print(line)
    return ok


def pct(v):
    return f"{100 * v:+.2f}pp"


def correct_fit_config(**kw):
    base = ExperimentConfig(n_series=N_SERIES, tau_values=[0.7, 0.3, 0.5], master_seed=SEED,
                            heatmap_t=21, boxplot_t=21)
    return replace(base, **kw).validate()


@pytest.fixture(scope="module")
def correct_fit():
    return run_simulation_experiment(correct_fit_config())


def scenario(**kw):
    cfg = correct_fit_config(tau_values=[0.7], heatmap_t=200, boxplot_t=200)
    return run_simulation_experiment(replace(cfg, **kw).validate())


def test_criterion_1_critical_quantiles(acceptance_report):
    expected = {"A": 0.55, "B": 0.58, "C": 0.35, "D": 0.23}
    got = {k: critical_quantile(c) for k, c in DEFAULT_PRODUCTS.items()}
    ok = all(abs(got[k] - expected[k]) <= 0.005 for k in expected)
    record(acceptance_report, 1, ok, " ".join(f"{k}={v:.4f}" for k, v in got.items()))
    assert ok


def test_criterion_2_identity(acceptance_report, correct_fit):
    costs = CostParams(2.96, 1.28, 0.49, 0.51)
    s = simulate(ArmaSpec(), 60, 1)
    tr = simulate_orders(s, ForecastModelSpec("arma", 1, 1), CostParams.from_quantile(0.7),
                         AdjustmentParams(0, 0))
    orders_equal = bool(np.array_equal(tr.x, tr.x_star))
    zero_cells = [r["mean_rpi"] for name in ("rpi_grid", "rpi_heatmap", "rpi_vs_length",
                                             "rpi_series")
                  for r in correct_fit.rows(name) if r["beta"] == 0 and r["gamma"] == 0]
    tau_rows = [r for r in correct_fit.rows("rpi_tau") if r["beta"] == 0 and r["gamma"] == 0]
    d = np.linspace(1, 500, 50)
    ppl_zero = bool(np.all(ppl(costs, d, d) == 0))
    rpi_one = bool(np.all(rpi(costs, d, d * 1.1, d) == 1))
    ok = orders_equal and all(v == 0 for v in zero_cells) and ppl_zero and rpi_one \
        and not tau_rows
    record(acceptance_report, 2, ok,
           f"x==x*: {orders_equal}; {len(zero_cells)} (0,0) table cells all 0: "
           f"{all(v == 0 for v in zero_cells)}; PPL(d,d)=0: {ppl_zero}; RPI(x=d)=1: {rpi_one}")
    assert ok


def test_criterion_3_grid_shape(acceptance_report, correct_fit):
    short, long_ = "21-110", "111-200"
    _, gammas, m_long = correct_fit.grid_matrix(long_)
    v = lambda w, b, g: correct_fit.value("rpi_grid", window=w, beta=b, gamma=g)
    a_vals = [v(short, 0.1, 0.1), v(short, 0.2, 0.1)]
    a = all(x > 0 for x in a_vals)
    b_val = v(short, 0.5, 0.5)
    b = b_val < 0
    c_vals = [v(long_, beta, g) for beta in (0.4, 0.5) for g in gammas]
    c = all(x <= -5 * PP for x in c_vals)
    # gamma = 0.1 .. 0.5 are columns 1..5
    steps = np.diff(m_long[:, 1:], axis=1)
    d = bool(np.all(steps <= 1 * PP))
    ok = a and b and c and d
    record(acceptance_report, 3, ok,
           f"(a) short (0.1,0.1)={pct(a_vals[0])} (0.2,0.1)={pct(a_vals[1])} -> {a}; "
           f"(b) short (0.5,0.5)={pct(b_val)} -> {b}; "
           f"(c) long max over beta>=0.4 = {pct(max(c_vals))} -> {c}; "
           f"(d) largest long-window increase along gamma {pct(steps.max())} -> {d}")
    assert ok


def test_criterion_4_tau_symmetry(acceptance_report, correct_fit):
    m = lambda tau, pair: correct_fit.value("rpi_tau", "mean", tau=tau, beta=pair[0],
                                            gamma=pair[1])
    diffs = {pair: abs(m(0.3, pair) - m(0.7, pair)) for pair in DEFAULT_PAIRS}
    mid = {pair: m(0.5, pair) for pair in DEFAULT_PAIRS}
    ok = all(x <= 2 * PP for x in diffs.values()) and all(abs(x) <= 2 * PP for x in mid.values())
    record(acceptance_report, 4, ok,
           "|0.3 vs 0.7| " + " ".join(f"{p}={pct(x)}" for p, x in diffs.items())
           + "; tau=0.5 " + " ".join(f"{p}={pct(x)}" for p, x in mid.items()))
    assert ok


def test_criterion_5_decay_with_length(acceptance_report, correct_fit):
    r21 = correct_fit.value("rpi_vs_length", t=21, beta=0.2, gamma=0.1)
    r200 = correct_fit.value("rpi_vs_length", t=200, beta=0.2, gamma=0.1)
    ok = r21 > r200 and r200 <= 0.5 * PP
    record(acceptance_report, 5, ok, f"(0.2,0.1): t=21 {pct(r21)}, t=200 {pct(r200)}")
    assert ok


def _best_cell(result):
    rows = result.rows("rpi_heatmap")
    best = max(rows, key=lambda r: r["mean_rpi"])
    return best["beta"], best["gamma"], best["mean_rpi"]


def test_criterion_6_misspecification(acceptance_report):
    s1 = scenario(fit_model=ForecastModelSpec("arma", 0, 1))
    s2 = scenario(fit_model=ForecastModelSpec("arma", 2, 1))
    s3 = scenario(dgp=ArmaSpec(innovation_family="laplace"), tau_values=[0.9, 0.5])

    modest = [r for r in s1.rows("rpi_heatmap")
              if 0 < r["beta"] + r["gamma"] and r["beta"] <= 0.2 and r["gamma"] <= 0.2]
    best_modest = max(modest, key=lambda r: r["mean_rpi"])
    b1, g1, v1 = _best_cell(s1)
    b2, g2, v2 = _best_cell(s2)
    one_pos = best_modest["mean_rpi"] > 0
    one_shape = g1 >= b1
    two = v2 < v1
    m3 = lambda tau, pair: s3.value("rpi_tau", "mean", tau=tau, beta=pair[0], gamma=pair[1])
    at09 = {p: m3(0.9, p) for p in DEFAULT_PAIRS}
    at05 = {p: m3(0.5, p) for p in DEFAULT_PAIRS}
    three = max(at09.values()) > 0 and all(abs(x) <= 1 * PP for x in at05.values())
    ok = one_pos and one_shape and two and three
    record(acceptance_report, 6, ok,
           f"#1 best modest ({best_modest['beta']},{best_modest['gamma']})="
           f"{pct(best_modest['mean_rpi'])} -> {one_pos}; #1 best cell ({b1},{g1})={pct(v1)} "
           f"gamma>=beta -> {one_shape}; #2 best ({b2},{g2})={pct(v2)} < #1 -> {two}; "
           f"#3 tau=0.9 " + " ".join(f"{p}={pct(x)}" for p, x in at09.items())
           + " tau=0.5 " + " ".join(f"{p}={pct(x)}" for p, x in at05.items()) + f" -> {three}")
    assert ok


def test_criterion_7_tuner_vs_grid(acceptance_report):
    spec = ForecastModelSpec("arma", 1, 1)
    costs = CostParams.from_quantile(0.7)
    cfg = TunerConfig(train_end=120)
    worst_gap, below_baseline = -math.inf, 0
    for i in range(20):
        s = simulate(ArmaSpec(), 120, child_seed(7, i)).values
        path = forecast_path(s, spec, cfg.warmup)
        res = tune_parameters(s, spec, costs, cfg, path=path)
        _, best = grid_search(s, spec, costs, cfg, step=0.01, path=path)
        worst_gap = max(worst_gap, (best - res.profit) / abs(best))
        below_baseline += res.profit < res.baseline_profit
    ok = worst_gap <= 1e-6 and below_baseline == 0
    record(acceptance_report, 7, ok,
           f"worst (grid - tuned)/|grid| = {worst_gap:.2e}; tuned < untuned in "
           f"{below_baseline}/20")
    assert ok


def test_criterion_8_arma_estimator(acceptance_report):
    good = 0
    for seed in range(20):
        fm = fit_arma(simulate(ArmaSpec(), 2000, seed).values, 1, 1)
        good += abs(fm.params["ar"][0] - 0.5) <= 0.15 and abs(fm.sigma - 100) <= 5
    ok = good >= 18
    record(acceptance_report, 8, ok, f"{good}/20 fits within tolerance")
    assert ok


def test_criterion_9_rolling_origin(acceptance_report):
    result = run_rolling_origin(synthetic_products(), EvaluationConfig())
    parts, n_pos, closer = [], 0, 0
    for name, ev in result.products.items():
        r = ev.out_of_sample_rpi()
        pre, tuned = ev.service_levels()
        is_closer = abs(tuned - ev.tau) < abs(pre - ev.tau)
        n_pos += r > 0
        closer += is_closer
        parts.append(f"{name}: rpi {pct(r)} service {pre:.3f}->{tuned:.3f} (tau {ev.tau:.2f})")
    ok = n_pos >= 3 and closer == len(result.products)
    record(acceptance_report, 9, ok,
           f"rpi>0 for {n_pos}/4, closer to target for {closer}/4; " + "; ".join(parts))
    assert ok


def test_criterion_10_determinism(acceptance_report, correct_fit, tmp_path):
    correct_fit.write(tmp_path / "first")
    run_simulation_experiment(correct_fit_config()).write(tmp_path / "again")
    run_simulation_experiment(correct_fit_config(), threads=2).write(tmp_path / "threads")
    files = sorted(p.name for p in (tmp_path / "first").iterdir())
    same = all((tmp_path / "first" / f).read_bytes() == (tmp_path / d / f).read_bytes()
               for d in ("again", "threads") for f in files)
    record(acceptance_report, 10, same, f"{len(files)} files byte-identical across repeat "
                                        f"and 1 vs 2 workers: {same}")
    assert same
