"""Acceptance criteria, each run at its stated tolerance.

Every test records one pass/fail line, printed in the terminal summary.
The simulation criteria take tens of minutes on one core; set
``ACCRUAL_THREADS`` to spread replications over more workers.
"""

import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from accrual.data import EnrollmentPanel, summarize, write_csv
from accrual.pg import PgFit, pg_fit, pg_forecast, pg_loglik, pg_posterior
from accrual.selection import select_model
from accrual.sim import SCENARIOS, draw_initiations, preset, run_cell, simulate_replication
from accrual.tpg import tpg_fit, tpg_forecast, tpg_loglik
from conftest import ACCEPTANCE, random_pg_panel
from oracles import (mixed_instance, monte_carlo_forecast, pg_quad_loglik, random_mean,
                     tpg_quad_loglik)

pytestmark = pytest.mark.slow


def record(n, ok, detail):
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_reduction_equivalence():
    start = time.time()
    worst_param, worst_fc = 0.0, 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        panel = random_pg_panel(rng, int(rng.integers(5, 40)), int(rng.integers(30, 150)),
                                alpha=float(rng.uniform(0.5, 5)), m=float(rng.uniform(0.05, 1)),
                                stagger=int(rng.integers(0, 25)))
        s = summarize(panel)
        pf = pg_fit(s)
        tf = tpg_fit(panel, t_p=1)
        worst_param = max(worst_param, abs(tf.alpha / pf.alpha - 1), abs(tf.mean_fn.plateau / pf.m - 1))
        T = np.arange(panel.t_int + 1, panel.t_int + 200)
        a = tpg_forecast(tf, panel, T)
        b = pg_forecast(pg_posterior(PgFit(tf.alpha, tf.mean_fn.plateau, 0.0, 0), s), T)
        for name in ("expectation", "variance", "lower", "upper"):
            x, y = getattr(a, name), getattr(b, name)
            worst_fc = max(worst_fc, float(np.max(np.abs(x - y) / np.maximum(np.abs(y), 1e-300))))
    elapsed = time.time() - start
    record(1, worst_param <= 1e-6 and worst_fc <= 1e-12 and elapsed < 60,
           f"20 panels: max rel param diff {worst_param:.2e} (<=1e-6), "
           f"max rel forecast diff {worst_fc:.1e}, {elapsed:.0f}s (<60s)")


def test_likelihood_oracles():
    start = time.time()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(60):
        C = int(rng.integers(1, 5))
        alpha, m = float(np.exp(rng.uniform(-1, 2))), float(np.exp(rng.uniform(-2, 0.5)))
        k, tau = rng.integers(0, 25, size=C), rng.integers(1, 40, size=C)
        worst = max(worst, abs(pg_loglik(alpha, m, k, tau) - pg_quad_loglik(alpha, m, k, tau)))
    for _ in range(60):
        t_int = int(rng.integers(2, 7))
        u = rng.integers(1, t_int, size=3, endpoint=True)
        panel = EnrollmentPanel.from_counts([rng.integers(0, 4, size=t_int - ui + 1) for ui in u],
                                            u, t_int)
        t_p = int(rng.integers(1, 5))
        mf = random_mean(rng, t_p, int(rng.choice([2, 3])))
        alpha = float(np.exp(rng.uniform(-1, 2)))
        worst = max(worst, abs(tpg_loglik(alpha, mf, panel) - tpg_quad_loglik(alpha, mf, panel)))
    elapsed = time.time() - start
    record(2, worst <= 1e-8 and elapsed < 300,
           f"120 instances (60 PG, 60 tPG): max |loglik - quadrature| {worst:.1e} (<=1e-8), {elapsed:.0f}s")


def test_forecast_moment_oracle():
    start = time.time()
    worst = 0.0
    for seed in range(10):
        rng = np.random.default_rng(700 + seed)
        fit, panel, T = mixed_instance(rng)
        L = panel.t_obs
        assert np.sum(L >= fit.t_p) == 2 and np.sum(L < fit.t_p) == 2
        draws = monte_carlo_forecast(fit, panel, T, 10 ** 6, rng)
        e, v, _, _ = tpg_forecast(fit, panel, [T]).at(T)
        worst = max(worst, abs(draws.mean() / e - 1), abs(draws.var() / v - 1))
    elapsed = time.time() - start
    record(3, worst <= 0.01 and elapsed < 300,
           f"10 mixed instances, 1e6 draws: max rel moment error {worst:.4f} (<=0.01), {elapsed:.0f}s")


def test_constant_scenario_cell():
    start = time.time()
    cell = run_cell(preset("scenario5", C=20), 80, replications=200)
    elapsed = time.time() - start
    gap = abs(cell.bias_tpg - cell.bias_pg)
    ok = (0.90 <= cell.cr_pg <= 0.99 and 0.90 <= cell.cr_tpg <= 0.99 and gap <= 3)
    record(4, ok, f"scenario5 C=20 t_int=80: PG CR {cell.cr_pg:.3f}, tPG CR {cell.cr_tpg:.3f} "
                  f"(both in [0.90,0.99]), bias {cell.bias_pg:.2f} vs {cell.bias_tpg:.2f} "
                  f"(gap {gap:.2f} <= 3), failures {cell.failures}, {elapsed:.0f}s")


def test_fast_start_contrast_cell():
    start = time.time()
    cell = run_cell(preset("scenario4", C=60), 200, replications=200)
    elapsed = time.time() - start
    ok = (cell.cr_pg <= 0.05 and cell.bias_pg > 25 and cell.cr_tpg >= 0.85 and cell.bias_tpg < 8)
    record(5, ok, f"scenario4 C=60 t_int=200: PG CR {cell.cr_pg:.3f} (<=0.05) bias {cell.bias_pg:.2f} (>25); "
                  f"tPG CR {cell.cr_tpg:.3f} (>=0.85) bias {cell.bias_tpg:.2f} (<8), "
                  f"failures {cell.failures}, {elapsed:.0f}s")


def test_staggered_case_trend():
    start = time.time()
    c1 = run_cell(preset("scenario1", setting=2, case=1, C=30), 80, replications=200, fit_both=False)
    c2 = run_cell(preset("scenario1", setting=2, case=2, C=30), 80, replications=200, fit_both=False)
    elapsed = time.time() - start
    ok = c2.bias_tpg < c1.bias_tpg and c2.cr_tpg >= c1.cr_tpg - 0.03
    record(6, ok, f"scenario1 setting 2 C=30 t_int=80: tPG bias case1 {c1.bias_tpg:.2f} > case2 "
                  f"{c2.bias_tpg:.2f}; CR {c1.cr_tpg:.3f} -> {c2.cr_tpg:.3f} (drop <= 0.03), {elapsed:.0f}s")


def test_full_grid_is_configurable():
    cells = 0
    for name in SCENARIOS:
        for C in (20, 60):
            cfg = preset(name, setting=1, C=C)
            cells += len(cfg.t_int_list)
    for name in SCENARIOS[:4]:
        for C in (30, 60):
            for case in (1, 2):
                cfg = preset(name, setting=2, case=case, C=C)
                draw_initiations(cfg, np.random.default_rng(0))
                cells += len(cfg.t_int_list)
    record(7, cells == 20 + 32,
           f"all {cells} grid cells of settings 1 and 2 build from presets; the 1000-rep full grid "
           "is out of desk scope, criteria 4-6 are the scaled substitutes")


def test_bic_tendencies():
    start = time.time()
    zero_knot = sum(select_model(simulate_replication(preset("scenario1", C=60, seed=s), 0, 160)[0])
                    .template.n_knots == 0 for s in range(10))
    one_knot = sum(select_model(simulate_replication(preset("scenario4", C=60, seed=s), 0, 200)[0])
                   .template.n_knots == 1 for s in range(10))
    elapsed = time.time() - start
    record(8, zero_knot >= 6 and one_knot >= 1,
           f"10 seeds: scenario1 0-knot selected {zero_knot}/10 (majority), "
           f"scenario4 1-knot selected {one_knot}/10 (>=1), {elapsed:.0f}s")


def run_cli(args, threads, cwd):
    env = dict(os.environ, ACCRUAL_THREADS=str(threads))
    proc = subprocess.run([sys.executable, "-m", "accrual", *args], cwd=cwd, env=env,
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc.stdout


def snapshot(root: Path) -> dict:
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_cli_determinism(tmp_path):
    panel, _ = simulate_replication(preset("scenario3", C=12), 0, 160)
    data = tmp_path / "data.csv"
    write_csv(panel, data)
    before = data.read_bytes()
    commands = [
        ["fit", str(data), "--t-int", "160", "--out", "fit"],
        ["forecast", str(data), "--t-int", "160", "--T", "300", "--target", "2000", "--out", "fc"],
        ["forecast", str(data), "--t-int", "160", "--T", "300", "--fit-dir", "fit", "--out", "fc2"],
        ["simulate", "--scenario", "scenario5", "--C", "6", "--t-int", "40", "--T", "100",
         "--reps", "4", "--out", "sim.csv"],
        ["evaluate", "--scenario", "scenario1", "--setting", "2", "--C", "9", "--case", "1", "2",
         "--t-int", "80", "--reps", "3", "--out", "eval.csv"],
    ]
    outputs = {}
    for run, threads in (("a", 1), ("b", 1), ("c", 2)):
        root = tmp_path / run
        root.mkdir()
        stdout = [run_cli(cmd, threads, root) for cmd in commands]
        outputs[run] = (snapshot(root), stdout)
    same = outputs["a"] == outputs["b"] == outputs["c"]
    n_files = len(outputs["a"][0])
    record(9, same and data.read_bytes() == before,
           f"{len(commands)} commands, {n_files} output files byte-identical across repeated runs "
           "and ACCRUAL_THREADS=1 vs 2; input untouched")
