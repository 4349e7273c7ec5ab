"""Simulation study: generative recruitment scenarios and the coverage/bias/SE harness."""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .data import CenterRecord, EnrollmentPanel, summarize
from .pg import FitError, pg_fit, pg_forecast, pg_posterior
from .selection import DEFAULT_TEMPLATES, select_model
from .tpg import SplineTemplate, tpg_forecast

THREADS_ENV = "ACCRUAL_THREADS"


@dataclass(frozen=True)
class ScenarioConfig:
    """Generative parameters of one simulation cell family.

    ``q = 1`` shapes the mean curve as a shifted, scaled Gamma pdf and
    ``q = 2`` as a Gamma cdf; ``c2 = 0`` gives constant accrual.
    """

    name: str
    c1: float
    c2: float
    p1: float | None
    p2: float | None
    q: int | None
    t_p: int
    alpha: float
    C: int
    t_int_list: tuple[int, ...]
    T: int
    setting: int = 1
    case: int = 1
    seed: int = 20240101

    def __post_init__(self):
        object.__setattr__(self, "t_int_list", tuple(int(t) for t in self.t_int_list))
        if self.c2 != 0 and (self.q not in (1, 2) or self.p1 is None or self.p2 is None):
            raise ValueError("a non-constant curve needs q in {1, 2} and shape parameters p1, p2")
        if self.setting not in (1, 2) or self.case not in (1, 2):
            raise ValueError("setting and case must be 1 or 2")
        if max(self.t_int_list) >= self.T:
            raise ValueError("every interim time must precede T")
        if self.alpha <= 0 or self.t_p < 1 or self.C < 1:
            raise ValueError("alpha, t_p and C must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["t_int_list"] = list(self.t_int_list)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        return cls(**d)

    @classmethod
    def from_json(cls, path: str | Path) -> "ScenarioConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# (c1, c2, p1, p2, t_p, q, alpha), T, interim times for settings 1 and 2.
# Scenarios 1-2 are slow starts (cdf shape) and 3-4 fast starts (pdf bump).
_TABLE = {
    "scenario1": ((0.2, 0.50, 0.55, 0.09, 60, 2, 1.0), 300, (80, 160), (80, 110)),
    "scenario2": ((0.2, 0.50, 10.0, 0.15, 150, 2, 1.0), 500, (200, 300), (200, 260)),
    "scenario3": ((0.2, 8.0, 1.0, 0.05, 130, 1, 1.0), 500, (160, 250), (160, 220)),
    "scenario4": ((0.2, 13.0, 2.40, 0.11, 100, 1, 1.0), 400, (120, 200), (120, 170)),
    "scenario5": ((0.2, 0.0, None, None, 1, None, 1.0), 300, (80, 160), None),
}
SCENARIOS = tuple(_TABLE)


def preset(name: str, setting: int = 1, case: int = 1, C: int | None = None,
           seed: int = 20240101) -> ScenarioConfig:
    """Bundled scenario with the interim times and horizon used for ``setting``."""
    try:
        (c1, c2, p1, p2, t_p, q, alpha), T, t1, t2 = _TABLE[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}") from None
    t_ints = t1 if setting == 1 else t2
    if t_ints is None:
        raise ValueError(f"{name} has no staggered-initiation setting")
    if C is None:
        C = 20 if setting == 1 else 30
    return ScenarioConfig(name, c1, c2, p1, p2, q, t_p, alpha, C, t_ints, T, setting, case, seed)


def mean_curve(cfg: ScenarioConfig, t) -> float | np.ndarray:
    """Mean recruitment rate ``c1 + c2 * g(t)`` with ``g`` a Gamma pdf or cdf."""
    tt = np.asarray(t, dtype=float)
    if cfg.c2 == 0:
        out = np.full(tt.shape, float(cfg.c1))
    else:
        dist = stats.gamma(a=cfg.p1, scale=1.0 / cfg.p2)
        g = dist.pdf(tt) if cfg.q == 1 else dist.cdf(tt)
        out = cfg.c1 + cfg.c2 * g
    return float(out) if np.ndim(t) == 0 else out


def draw_center_path(cfg: ScenarioConfig, rng: np.random.Generator, u: int = 1,
                     T: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Daily rates and counts of one center over local days ``1..T-u+1``.

    Rates are drawn independently up to the plateau day and frozen afterwards.
    """
    T = cfg.T if T is None else T
    n_days = T - u + 1
    k = min(cfg.t_p, n_days)
    f = mean_curve(cfg, np.arange(1, k + 1))
    lam = rng.gamma(cfg.alpha, f / cfg.alpha)
    rates = np.concatenate([lam, np.full(n_days - k, lam[-1])])
    return rates, rng.poisson(rates)


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def draw_initiations(cfg: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    """Center initiation times; staggered around the plateau in setting 2.

    The split point is the first entry of ``t_int_list``.
    """
    if cfg.setting == 1:
        return np.ones(cfg.C, dtype=np.int64)
    t1 = cfg.t_int_list[0]
    if t1 <= cfg.t_p:
        raise ValueError(f"setting 2 needs the first interim time {t1} beyond t_p={cfg.t_p}")
    n_early = _round_half_up(cfg.C / 2 if cfg.case == 1 else 2 * cfg.C / 3)
    early = rng.integers(1, t1 - cfg.t_p, size=n_early, endpoint=True)
    late = rng.integers(t1 - cfg.t_p + 1, t1, size=cfg.C - n_early, endpoint=True)
    return np.concatenate([early, late])


def simulate_replication(cfg: ScenarioConfig, rep: int, t_int: int) -> tuple[EnrollmentPanel, int]:
    """Panel observed at ``t_int`` and the realized additional enrollments up to ``cfg.T``.

    Every center draws from its own stream keyed by ``(seed, rep, center)``, so
    the full path does not depend on ``t_int``.
    """
    u = draw_initiations(cfg, np.random.default_rng([cfg.seed, rep, 0]))
    centers, future = [], 0
    for i, ui in enumerate(u):
        _, counts = draw_center_path(cfg, np.random.default_rng([cfg.seed, rep, 1, i]), int(ui))
        n_obs = t_int - int(ui) + 1
        if n_obs < 1:
            future += int(counts.sum())
            continue
        centers.append(CenterRecord(f"c{i + 1}", int(ui), counts[:n_obs]))
        future += int(counts[n_obs:].sum())
    return EnrollmentPanel(tuple(centers), t_int), future


def _replicate(job) -> dict:
    cfg, rep, t_int, fit_both, templates = job
    panel, obs = simulate_replication(cfg, rep, t_int)
    out: dict = {"rep": rep, "obs": obs, "error": None}
    try:
        fit = select_model(panel, templates)
        e, _, lo, hi = tpg_forecast(fit, panel, [cfg.T]).at(cfg.T)
        out["tpg"] = (float(e), float(lo), float(hi))
        out["template"] = (fit.template.degree, fit.template.n_knots)
        out["t_p"] = fit.t_p
        if fit_both:
            summ = summarize(panel)
            pf = pg_fit(summ)
            e, _, lo, hi = pg_forecast(pg_posterior(pf, summ), [cfg.T]).at(cfg.T)
            out["pg"] = (float(e), float(lo), float(hi))
    except (FitError, FloatingPointError) as exc:
        out["error"] = f"{type(exc).__name__}: {exc}"
    return out


def worker_count(workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get(THREADS_ENV)
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


@dataclass
class CellResult:
    """Aggregated metrics for one (scenario, setting, case, C, t_int) cell."""

    scenario: str
    setting: int
    case: int
    C: int
    t_int: int
    T: int
    reps: int
    failures: int
    cr_tpg: float
    bias_tpg: float
    se_tpg: float
    cr_pg: float = float("nan")
    bias_pg: float = float("nan")
    se_pg: float = float("nan")
    records: list[dict] = field(default_factory=list, repr=False)

    @property
    def n_valid(self) -> int:
        return self.reps - self.failures


COLUMNS = ("scenario", "setting", "case", "C", "t_int", "T", "reps", "failures",
           "cr_tpg", "bias_tpg", "se_tpg", "cr_pg", "bias_pg", "se_pg")


def _metrics(preds: np.ndarray, obs: np.ndarray) -> tuple[float, float, float]:
    e, lo, hi = preds.T
    covered = (lo <= obs) & (obs <= hi)
    pos = obs > 0
    bias = 100.0 * float(np.mean(np.abs(e[pos] - obs[pos]) / obs[pos])) if pos.any() else float("nan")
    se = float(np.std(e, ddof=1)) if len(e) > 1 else 0.0
    return int(covered.sum()) / len(obs), bias, se


def run_cell(cfg: ScenarioConfig, t_int: int | None = None, replications: int = 200,
             fit_both: bool = True, workers: int | None = None,
             templates: Sequence[SplineTemplate] = DEFAULT_TEMPLATES) -> CellResult:
    """Simulate, fit and score ``replications`` datasets for one cell.

    Replications whose fit fails are dropped from the metrics and counted in
    ``failures``.  Results do not depend on the number of workers.
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    t_int = cfg.t_int_list[0] if t_int is None else t_int
    jobs = [(cfg, rep, t_int, fit_both, tuple(templates)) for rep in range(replications)]
    n_workers = min(worker_count(workers), replications)
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            records = list(pool.map(_replicate, jobs, chunksize=max(1, replications // (4 * n_workers))))
    else:
        records = [_replicate(j) for j in jobs]

    ok = [r for r in records if r["error"] is None]
    res = CellResult(cfg.name, cfg.setting, cfg.case, cfg.C, t_int, cfg.T, replications,
                     replications - len(ok), float("nan"), float("nan"), float("nan"), records=records)
    if ok:
        obs = np.array([r["obs"] for r in ok], dtype=float)
        res.cr_tpg, res.bias_tpg, res.se_tpg = _metrics(np.array([r["tpg"] for r in ok]), obs)
        if fit_both:
            res.cr_pg, res.bias_pg, res.se_pg = _metrics(np.array([r["pg"] for r in ok]), obs)
    return res


def _fmt(x) -> str:
    if isinstance(x, float):
        return "nan" if np.isnan(x) else f"{x:.6f}"
    return str(x)


def write_report(cells: Sequence[CellResult], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for c in cells:
            w.writerow(tuple(_fmt(getattr(c, col)) for col in COLUMNS))
