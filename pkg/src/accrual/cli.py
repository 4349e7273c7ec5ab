"""Command-line driver: ``accrual fit|forecast|simulate|evaluate``.

Exit codes: 0 success, 1 computation failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .data import (PanelError, ingest_csv, observed_cumulative, read_cells, summarize,
                   write_summary_csv)
from .forecast import Forecast, time_to_target
from .pg import FitError, PgFit, pg_fit, pg_forecast, pg_posterior
from .selection import DEFAULT_TEMPLATES, fit_candidates
from .sim import SCENARIOS, ScenarioConfig, preset, run_cell, write_report
from .tpg import TpgFit, tpg_forecast

DEFAULT_SEED = 20240101


class UsageError(Exception):
    pass


def _models(choice: str) -> list[str]:
    return ["tpg", "pg"] if choice == "both" else [choice]


def _fit_models(panel, models, out: Path, seed: int) -> dict:
    fits = {}
    if "pg" in models:
        fits["pg"] = pg_fit(summarize(panel), seed=seed)
        (out / "pg_fit.json").write_text(fits["pg"].to_json() + "\n", encoding="utf-8")
    if "tpg" in models:
        cands = fit_candidates(panel, DEFAULT_TEMPLATES, seed=seed)
        fits["tpg"] = cands.best
        (out / "tpg_fit.json").write_text(fits["tpg"].to_json() + "\n", encoding="utf-8")
        cands.to_csv(out / "selection.csv")
    return fits


def cmd_fit(args) -> int:
    panel = ingest_csv(args.data, args.t_int, args.time_unit)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_summary_csv(summarize(panel), out / "summary.csv")
    fits = _fit_models(panel, _models(args.model), out, args.seed)
    for name, fit in fits.items():
        if isinstance(fit, TpgFit):
            print(f"tpg: t_p={fit.t_p} alpha={fit.alpha:.6g} degree={fit.template.degree} "
                  f"knots={fit.template.n_knots} loglik={fit.loglik:.6f}")
        else:
            print(f"pg: alpha={fit.alpha:.6g} m={fit.m:.6g} loglik={fit.loglik:.6f}")
    return 0


def _load_fit(fit_dir: Path | None, model: str):
    if fit_dir is None:
        return None
    path = fit_dir / f"{model}_fit.json"
    if not path.exists():
        return None
    d = json.loads(path.read_text(encoding="utf-8"))
    return PgFit.from_dict(d) if model == "pg" else TpgFit.from_dict(d)


def _write_plot(path: Path, panel, fc: Forecast, observed: np.ndarray) -> None:
    cum = np.cumsum(panel.daily_totals())
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("t", "observed_cum", "expected_cum", "lower95", "upper95"))
        for t in range(1, int(fc.T[-1]) + 1):
            obs = int(observed[t - 1]) if t <= len(observed) else ""
            if t <= panel.t_int:
                base = int(cum[t - 1])
                w.writerow((t, obs, base, base, base))
            else:
                e, _, lo, hi = fc.at(t)
                n = int(cum[-1])
                w.writerow((t, obs, f"{n + e:.6f}", f"{n + lo:.6f}", f"{n + hi:.6f}"))


def cmd_forecast(args) -> int:
    if args.T <= args.t_int:
        raise UsageError(f"--T ({args.T}) must exceed --t-int ({args.t_int})")
    panel = ingest_csv(args.data, args.t_int, args.time_unit)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fit_dir = Path(args.fit_dir) if args.fit_dir else None
    models = _models(args.model)
    fits = {m: _load_fit(fit_dir, m) for m in models}
    missing = [m for m, f in fits.items() if f is None]
    if missing:
        fits.update(_fit_models(panel, missing, out, args.seed))

    cells = read_cells(args.data)
    last_day = max(u + max(days, default=1) - 1 for u, days in cells.values())
    observed = observed_cumulative(args.data, min(last_day, args.T))

    grid = np.arange(args.t_int + 1, args.T + 1)
    current = int(panel.totals.sum())
    for name in models:
        fit = fits[name]
        if name == "pg":
            summ = summarize(panel)
            fc = pg_forecast(pg_posterior(fit, summ), grid)
        else:
            fc = tpg_forecast(fit, panel, grid)
        fc.to_csv(out / f"forecast_{name}.csv")
        _write_plot(out / f"plot_{name}.csv", panel, fc, observed)
        e, _, lo, hi = fc.at(args.T)
        print(f"{name}: T={args.T} expected_additional={e:.3f} 95% CrI=({lo:.3f}, {hi:.3f})")
        if args.target is not None:
            ttt = time_to_target(fc, current, args.target)
            block = {"model": name, "target": ttt.target, "current_total": current,
                     "point": ttt.point, "lower": ttt.lower, "upper": ttt.upper}
            (out / f"time_to_target_{name}.json").write_text(json.dumps(block, indent=2) + "\n",
                                                              encoding="utf-8")
            print(f"{name}: target {ttt.target} reached at T={ttt.point} "
                  f"(95% CrI {ttt.lower}..{ttt.upper}; None = beyond grid)")
    return 0


def _scenario(args, setting: int, case: int, C: int | None) -> ScenarioConfig:
    if args.scenario_file:
        cfg = ScenarioConfig.from_json(args.scenario_file)
        changes = {k: v for k, v in (("setting", setting), ("case", case), ("C", C)) if v is not None}
        d = cfg.to_dict()
        d.update(changes, seed=args.seed)
        return ScenarioConfig.from_dict(d)
    if args.scenario not in SCENARIOS:
        raise UsageError(f"unknown scenario {args.scenario!r}; choose from {', '.join(SCENARIOS)}")
    cfg = preset(args.scenario, setting or 1, case or 1, C, args.seed)
    d = cfg.to_dict()
    t_int = getattr(args, "t_int", None)
    if t_int:
        t_ints = [t_int] if isinstance(t_int, int) else list(t_int)
        # setting 2 anchors initiations on the first listed interim time, so keep it first
        anchor = [cfg.t_int_list[0]] if cfg.setting == 2 else []
        d["t_int_list"] = anchor + [t for t in t_ints if t not in anchor]
    if getattr(args, "T", None):
        d["T"] = args.T
    return ScenarioConfig.from_dict(d)


def cmd_simulate(args) -> int:
    cfg = _scenario(args, args.setting, args.case, args.C)
    t_int = args.t_int or cfg.t_int_list[0]
    if t_int >= cfg.T:
        raise UsageError(f"--t-int ({t_int}) must be below T ({cfg.T})")
    cell = run_cell(cfg, t_int, args.reps, fit_both=not args.tpg_only)
    write_report([cell], args.out)
    print(f"{cfg.name} setting={cfg.setting} case={cfg.case} C={cfg.C} t_int={t_int} T={cfg.T}: "
          f"tPG CR={cell.cr_tpg:.3f} bias={cell.bias_tpg:.2f} | "
          f"PG CR={cell.cr_pg:.3f} bias={cell.bias_pg:.2f} | failures={cell.failures}")
    return 0


def cmd_evaluate(args) -> int:
    cells = []
    for C in args.C:
        for case in (args.case if args.setting == 2 else [1]):
            cfg = _scenario(args, args.setting, case, C)
            for t_int in (args.t_int or cfg.t_int_list):
                cell = run_cell(cfg, t_int, args.reps, fit_both=not args.tpg_only)
                cells.append(cell)
                print(f"{cfg.name} case={case} C={C} t_int={t_int}: tPG CR={cell.cr_tpg:.3f} "
                      f"bias={cell.bias_tpg:.2f} | PG CR={cell.cr_pg:.3f} bias={cell.bias_pg:.2f}")
    write_report(cells, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="accrual", description="Poisson-Gamma recruitment forecasting")
    sub = ap.add_subparsers(dest="command", required=True)

    def data_args(p):
        p.add_argument("data", help="enrollment CSV with header center_id,u,s,count")
        p.add_argument("--t-int", type=int, required=True, help="interim time")
        p.add_argument("--model", choices=("tpg", "pg", "both"), default="both")
        p.add_argument("--time-unit", default="day")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p = sub.add_parser("fit", help="fit PG and/or tPG (with BIC selection)")
    data_args(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("forecast", help="forecast additional enrollments up to T")
    data_args(p)
    p.add_argument("--T", type=int, required=True, help="last forecast time")
    p.add_argument("--fit-dir", help="directory with *_fit.json from `fit` (refit when absent)")
    p.add_argument("--target", type=int, help="total sample size for time-to-target")
    p.set_defaults(func=cmd_forecast)

    def sim_args(p):
        p.add_argument("--scenario", default="scenario5", help=f"one of {', '.join(SCENARIOS)}")
        p.add_argument("--scenario-file", help="JSON scenario config (overrides --scenario)")
        p.add_argument("--setting", type=int, choices=(1, 2), default=1)
        p.add_argument("--reps", type=int, default=200)
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--tpg-only", action="store_true", help="skip the PG comparator")
        p.add_argument("--out", default="report.csv")

    p = sub.add_parser("simulate", help="run one simulation cell")
    sim_args(p)
    p.add_argument("--case", type=int, choices=(1, 2), default=1)
    p.add_argument("--C", type=int)
    p.add_argument("--t-int", type=int)
    p.add_argument("--T", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="run a grid of simulation cells")
    sim_args(p)
    p.add_argument("--case", type=int, nargs="+", choices=(1, 2), default=[1, 2])
    p.add_argument("--C", type=int, nargs="+", default=[20, 60])
    p.add_argument("--t-int", type=int, nargs="+")
    p.set_defaults(func=cmd_evaluate, T=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PanelError, UsageError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FitError, FloatingPointError, ArithmeticError) as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
