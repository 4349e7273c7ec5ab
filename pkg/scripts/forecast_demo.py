"""Fit both models to one synthetic fast-start trial and compare their forecasts.

    python scripts/forecast_demo.py --scenario scenario3 --t-int 160

Writes the simulated panel and the full-history file next to each other so the
CLI can be pointed at them, then prints expected totals at a few horizons.
"""

import argparse
from pathlib import Path

import numpy as np

from accrual import pg_fit, pg_forecast, pg_posterior, select_model, summarize, tpg_forecast
from accrual.data import write_csv
from accrual.sim import preset, simulate_replication


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default="scenario3")
    ap.add_argument("--C", type=int, default=20)
    ap.add_argument("--t-int", type=int, default=160)
    ap.add_argument("--rep", type=int, default=0)
    ap.add_argument("--out", default="demo")
    args = ap.parse_args()

    cfg = preset(args.scenario, C=args.C)
    panel, future = simulate_replication(cfg, args.rep, args.t_int)
    full, _ = simulate_replication(cfg, args.rep, cfg.T - 1)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(panel, out / "interim.csv")
    write_csv(full, out / "history.csv")

    tpg = select_model(panel)
    summ = summarize(panel)
    pg = pg_fit(summ)
    grid = np.arange(args.t_int + 1, cfg.T + 1)
    fc_t = tpg_forecast(tpg, panel, grid)
    fc_p = pg_forecast(pg_posterior(pg, summ), grid)

    print(f"tPG: t_p={tpg.t_p} degree={tpg.template.degree} knots={tpg.template.n_knots} "
          f"alpha={tpg.alpha:.3f} plateau={tpg.mean_fn.plateau:.3f}")
    print(f"PG:  alpha={pg.alpha:.3f} m={pg.m:.3f}")
    now = int(panel.totals.sum())
    observed = np.cumsum(full.daily_totals())
    for T in np.linspace(args.t_int + 1, cfg.T - 1, 5).astype(int):
        e_t, _, lo_t, hi_t = fc_t.at(T)
        e_p, _, lo_p, hi_p = fc_p.at(T)
        print(f"T={T:4d} observed={observed[T - 1]:6d}  tPG {now + e_t:8.1f} [{now + lo_t:.0f}, {now + hi_t:.0f}]"
              f"  PG {now + e_p:8.1f} [{now + lo_p:.0f}, {now + hi_p:.0f}]")
    print(f"realized additional enrollments to T={cfg.T}: {future}")


if __name__ == "__main__":
    main()
