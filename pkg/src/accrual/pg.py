"""Standard Poisson-Gamma recruitment model with constant center rates.

Center rates are iid ``Gamma(alpha, beta)`` with prior mean ``m = alpha/beta``;
the hyperparameters are fitted by maximizing the negative-binomial marginal
likelihood of the per-center totals.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import gammaln

from .data import PanelSummary
from .forecast import Forecast, check_grid
from .optim import best_of, jittered_starts, simplex_max

ALPHA_BOUNDS = (1e-4, 1e4)
M_BOUNDS = (1e-8, 1e6)
N_STARTS = 5


class FitError(RuntimeError):
    """Raised when a model cannot be fitted to the data."""


def _as_arrays(summary_or_k, tau=None):
    if tau is None:
        return np.asarray(summary_or_k.k, dtype=float), np.asarray(summary_or_k.tau, dtype=float)
    return np.asarray(summary_or_k, dtype=float), np.asarray(tau, dtype=float)


def pg_loglik(alpha: float, m: float, summary: PanelSummary | np.ndarray, tau=None) -> float:
    """Log-likelihood of center totals ``k_i`` with exposures ``tau_i``.

    Accepts either a :class:`PanelSummary` or explicit ``k`` and ``tau`` arrays.
    """
    k, tau = _as_arrays(summary, tau)
    mt = m * tau
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sum(
            gammaln(alpha + k) - gammaln(alpha) - gammaln(k + 1)
            + k * (np.log(mt) - np.log(alpha + mt))
            + alpha * (np.log(alpha) - np.log(alpha + mt))
        )
    if not np.isfinite(out):
        raise FloatingPointError(f"non-finite PG log-likelihood at alpha={alpha}, m={m}")
    return float(out)


@dataclass(frozen=True)
class PgFit:
    alpha: float
    m: float
    loglik: float
    n_obs: int

    @property
    def beta(self) -> float:
        return self.alpha / self.m

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "PgFit":
        return cls(float(d["alpha"]), float(d["m"]), float(d["loglik"]), int(d["n_obs"]))


def moment_start(k: np.ndarray, tau: np.ndarray) -> tuple[float, float]:
    """Method-of-moments ``(alpha, m)`` for NB totals, clamped into the fit box."""
    m0 = k.sum() / tau.sum()
    rates = k / tau
    excess = rates.var() - m0 * np.mean(1.0 / tau)
    alpha0 = m0 ** 2 / excess if excess > 0 else ALPHA_BOUNDS[1]
    return (float(np.clip(alpha0, *ALPHA_BOUNDS)), float(np.clip(m0, *M_BOUNDS)))


def pg_fit(summary: PanelSummary, n_starts: int = N_STARTS, seed: int = 0) -> PgFit:
    k, tau = _as_arrays(summary)
    if len(k) < 2:
        raise FitError("PG fit needs at least 2 centers")
    if (tau < 1).any():
        raise FitError("every center needs at least one observed day")
    if k.sum() == 0:
        raise FitError("no enrollments observed")
    bounds = [tuple(np.log(ALPHA_BOUNDS)), tuple(np.log(M_BOUNDS))]

    def objective(x):
        return pg_loglik(np.exp(x[0]), np.exp(x[1]), k, tau)

    alpha0, m0 = moment_start(k, tau)
    starts = jittered_starts(np.log([alpha0, m0]), n_starts, 0.5, bounds, seed)
    x, ll = best_of([simplex_max(objective, s, bounds) for s in starts])
    return PgFit(float(np.exp(x[0])), float(np.exp(x[1])), ll, int(tau.sum()))


@dataclass(frozen=True, eq=False)
class PgPosterior:
    """Per-center ``Gamma(shape, rate)`` posteriors of the constant rates."""

    shape: np.ndarray
    rate: np.ndarray
    t_int: int

    @property
    def mean(self) -> np.ndarray:
        return self.shape / self.rate

    @property
    def var(self) -> np.ndarray:
        return self.shape / self.rate ** 2


def pg_posterior(fit: PgFit, summary: PanelSummary) -> PgPosterior:
    k, tau = _as_arrays(summary)
    return PgPosterior(fit.alpha + k, fit.beta + tau, summary.t_int)


def pg_forecast(post: PgPosterior, T) -> Forecast:
    """Forecast additional enrollments at each horizon ``T > t_int``."""
    T = check_grid(T, post.t_int)
    h = (T - post.t_int).astype(float)
    mean_rate = post.mean.sum()
    e = h * mean_rate
    v = h ** 2 * post.var.sum() + e
    return Forecast.from_moments(post.t_int, T, e, v)
