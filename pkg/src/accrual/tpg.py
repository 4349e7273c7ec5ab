"""Time-dependent Poisson-Gamma recruitment model.

Daily center rates are independent ``Gamma(alpha, alpha/m(t))`` draws until a
common plateau day ``t_p`` (center-local), after which each center keeps the
rate it drew on day ``t_p``.  The log prior mean is a clamped B-spline on
``[1, t_p]``, flat afterwards.  The fit profiles the marginal likelihood over
integer ``t_p``.

The log-likelihood returned here is the exact log-probability of the observed
daily counts (no dropped constants).  A plateau block of ``e`` days with total
``N`` contributes the Gamma-Poisson integral
``lnG(a+N) - lnG(a) + a ln a + N ln m_p - (a+N) ln(a + e m_p) - sum ln n_s!``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import digamma, gammaln

from .data import EnrollmentPanel
from .forecast import Forecast, check_grid
from .optim import best_of, gradient_max, jittered_starts
from .pg import ALPHA_BOUNDS, N_STARTS, FitError, moment_start
from .spline import MeanFunction, SplineSpec, basis_matrix

ETA_BOUNDS = (-30.0, 15.0)
QUORUM = 3
N_POLISH = 3


@dataclass(frozen=True)
class SplineTemplate:
    """Candidate spline family: degree plus 0 or 1 internal knot placed at ``t_p/2``."""

    degree: int
    n_knots: int = 0

    @property
    def dim(self) -> int:
        return self.degree + 1 + self.n_knots

    @property
    def n_params(self) -> int:
        # spline coefficients + alpha + t_p
        return self.dim + 2

    def knots_for(self, t_p: int) -> tuple[float, ...]:
        if self.n_knots == 0:
            return ()
        if t_p == 1:
            return (1.0,) * self.n_knots
        return (float(max(2, int(np.floor(t_p / 2 + 0.5)))),)

    def admits(self, t_p: int) -> bool:
        if t_p == 1 or self.n_knots == 0:
            return True
        k = self.knots_for(t_p)[0]
        return 1.0 < k < t_p

    def spec(self, t_p: int) -> SplineSpec:
        if self.n_knots > 1:
            raise ValueError("templates support at most one internal knot")
        return SplineSpec(self.degree, self.knots_for(t_p), t_p)


def c_star(panel: EnrollmentPanel, t_p: int) -> int:
    """Number of centers that have reached the plateau by the interim time."""
    return int(np.sum(panel.t_obs >= t_p))


def t_p_max(panel: EnrollmentPanel, quorum: int = QUORUM) -> int:
    """Largest plateau day observed in at least ``quorum`` centers."""
    L = np.sort(panel.t_obs)[::-1]
    if len(L) < quorum:
        raise FitError(f"insufficient post-plateau data: {len(L)} centers, need {quorum}")
    return int(L[quorum - 1])


def tpg_loglik(alpha: float, mf: MeanFunction, panel: EnrollmentPanel) -> float:
    """Exact log-probability of the panel's daily counts, center by center."""
    tp = mf.t_p
    log_m_pre = mf.log_mean(np.arange(1, tp)) if tp > 1 else np.empty(0)
    log_mp = mf.eta[-1]
    la = np.log(alpha)
    total = 0.0
    for c in panel.centers:
        L, n = c.t_obs, c.counts.astype(float)
        npre = min(tp - 1, L)
        pre = n[:npre]
        lm = log_m_pre[:npre]
        total += np.sum(
            gammaln(alpha + pre) - gammaln(alpha) - gammaln(pre + 1)
            + pre * lm - (alpha + pre) * np.logaddexp(la, lm) + alpha * la
        )
        if L >= tp:
            blk = n[tp - 1:]
            N, e = blk.sum(), len(blk)
            total += (
                gammaln(alpha + N) - gammaln(alpha) - np.sum(gammaln(blk + 1))
                + N * log_mp - (alpha + N) * np.logaddexp(la, np.log(e) + log_mp) + alpha * la
            )
    if not np.isfinite(total):
        raise FloatingPointError(f"non-finite tPG log-likelihood at alpha={alpha}")
    return float(total)


class ProfileLikelihood:
    """Aggregated sufficient statistics of a panel for fast likelihood evaluation.

    Pre-plateau days are pooled across centers: the likelihood only needs, for
    each center-local day, the pooled count and the number of centers observed,
    plus a histogram of count values for the ``lnG(a+n)`` terms.
    """

    def __init__(self, panel: EnrollmentPanel):
        self.panel = panel
        X = panel.count_matrix
        L = np.asarray(panel.t_obs)
        D = X.shape[1]
        valid = np.arange(D)[None, :] < L[:, None]
        self.L = L
        self.D = D
        self.totals = np.asarray(panel.totals, dtype=float)
        self.pooled = X.sum(axis=0).astype(float)
        self.n_obs_day = valid.sum(axis=0).astype(float)
        vals = np.unique(X[valid])
        self.values = vals[vals > 0].astype(float)
        hist = np.zeros((D + 1, len(self.values)))
        for j, v in enumerate(self.values):
            hist[1:, j] = np.cumsum(((X == v) & valid).sum(axis=0))
        self.hist = hist
        self.cumcounts = np.concatenate([np.zeros((len(L), 1)), np.cumsum(X, axis=1)], axis=1)
        self.const = -float(np.sum(gammaln(X[valid] + 1.0)))
        self.n_cells = int(L.sum())

    def objective(self, spec: SplineSpec):
        """Return ``f(theta) -> (loglik, grad)`` for ``theta = (log alpha, eta_1..eta_d)``."""
        tp = spec.t_p
        # pre-plateau days nobody has observed contribute nothing
        npre = min(tp - 1, self.D)
        d = spec.dim
        Ns = self.pooled[:npre]
        Cs = self.n_obs_day[:npre]
        h = self.hist[npre]
        vals = self.values
        B = basis_matrix(spec, np.arange(1, npre + 1)) if npre else np.zeros((0, d))
        g1 = self.L >= tp
        Nst = self.totals[g1] - self.cumcounts[g1, min(tp - 1, self.D)]
        e = (self.L[g1] - tp + 1).astype(float)
        n1 = float(g1.sum())
        Csum, Nsum = Cs.sum(), Nst.sum()
        const = self.const

        def f(theta):
            alpha = np.exp(theta[0])
            eta = theta[1:]
            la = np.log(alpha)
            grad = np.zeros(d + 1)
            # pre-plateau days, pooled over centers
            lm = B @ eta
            m = np.exp(lm)
            lapm = np.logaddexp(la, lm)
            w = Ns + Cs * alpha
            val = (h @ (gammaln(alpha + vals) - gammaln(alpha))
                   + Ns @ lm - w @ lapm + Csum * alpha * la)
            dl = Ns - w * m / (alpha + m)
            grad[1:] = B.T @ dl
            dalpha = (h @ (digamma(alpha + vals) - digamma(alpha))
                      - np.sum(w / (alpha + m)) - Cs @ lapm + Csum * (la + 1.0))
            # plateau blocks
            if n1:
                lmp = eta[-1]
                em = e * np.exp(lmp)
                laem = np.logaddexp(la, np.log(e) + lmp)
                wp = Nst + alpha
                val += (np.sum(gammaln(alpha + Nst)) - n1 * gammaln(alpha)
                        + Nsum * lmp - wp @ laem + n1 * alpha * la)
                grad[-1] += Nsum - np.sum(wp * em / (alpha + em))
                dalpha += (np.sum(digamma(alpha + Nst)) - n1 * digamma(alpha)
                           - np.sum(wp / (alpha + em)) - laem.sum() + n1 * (la + 1.0))
            grad[0] = alpha * dalpha
            return val + const, grad

        return f

    def regression_start(self, spec: SplineSpec, alpha0: float) -> np.ndarray:
        """Weighted log-linear regression of pooled daily means onto the basis."""
        tp = spec.t_p
        npre = min(tp - 1, self.D)
        d = spec.dim
        g1 = self.L >= tp
        Nst = self.totals[g1] - self.cumcounts[g1, npre]
        expo = float(np.sum(self.L[g1] - tp + 1))
        rows = [basis_matrix(spec, np.arange(1, npre + 1))] if npre else []
        targets = [np.log((self.pooled[:npre] + 0.5) / (self.n_obs_day[:npre] + 0.5))] if npre else []
        weights = [self.n_obs_day[:npre]] if npre else []
        last = np.zeros((1, d))
        last[0, -1] = 1.0
        rows.append(last)
        targets.append(np.array([np.log((Nst.sum() + 0.5) / (expo + 0.5))]))
        weights.append(np.array([max(expo, 1.0)]))
        A = np.vstack(rows)
        y = np.concatenate(targets)
        sw = np.sqrt(np.concatenate(weights))
        eta, *_ = np.linalg.lstsq(A * sw[:, None], y * sw, rcond=None)
        return np.concatenate([[np.log(alpha0)], np.clip(eta, *ETA_BOUNDS)])


@dataclass(frozen=True, eq=False)
class TpgFit:
    alpha: float
    mean_fn: MeanFunction
    loglik: float
    n_obs: int
    c_star: int
    template: SplineTemplate = SplineTemplate(3, 0)
    profile: tuple[tuple[int, float], ...] = field(default=(), repr=False)

    @property
    def t_p(self) -> int:
        return self.mean_fn.t_p

    @property
    def n_params(self) -> int:
        return self.template.n_params

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "mean_fn": self.mean_fn.to_dict(),
            "loglik": self.loglik,
            "n_obs": self.n_obs,
            "c_star": self.c_star,
            "template": {"degree": self.template.degree, "n_knots": self.template.n_knots},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "TpgFit":
        mf = MeanFunction.from_dict(d["mean_fn"])
        tmpl = d.get("template") or {"degree": mf.spec.degree, "n_knots": len(mf.spec.internal_knots)}
        return cls(float(d["alpha"]), mf, float(d["loglik"]), int(d["n_obs"]), int(d["c_star"]),
                   SplineTemplate(int(tmpl["degree"]), int(tmpl["n_knots"])))


def _bounds(d: int) -> list[tuple[float, float]]:
    return [tuple(np.log(ALPHA_BOUNDS))] + [ETA_BOUNDS] * d


def _fit_at(prof: ProfileLikelihood, spec: SplineSpec, starts) -> tuple[np.ndarray, float]:
    """Maximize over ``(log alpha, eta)`` at a fixed plateau day."""
    f = prof.objective(spec)
    d = spec.dim
    if spec.t_p == 1:
        # only eta_d is identified
        def g(x):
            th = np.zeros(d + 1)
            th[0], th[-1] = x
            v, gr = f(th)
            return v, gr[[0, -1]]

        bounds = [_bounds(d)[0], ETA_BOUNDS]
        x, ll = best_of([gradient_max(g, np.asarray(s)[[0, -1]], bounds) for s in starts])
        th = np.zeros(d + 1)
        th[0], th[-1] = x
        return th, ll
    return best_of([gradient_max(f, s, _bounds(d)) for s in starts])


def _polish(prof: ProfileLikelihood, spec: SplineSpec, theta: np.ndarray, ll: float,
            n_starts: int, seed: int) -> tuple[np.ndarray, float]:
    """Jittered multi-start refinement at one plateau day."""
    starts = jittered_starts(theta, n_starts, 0.3, _bounds(spec.dim), seed)
    theta2, ll2 = _fit_at(prof, spec, starts)
    return (theta2, ll2) if ll2 > ll else (theta, ll)


def tpg_fit(panel: EnrollmentPanel, template: SplineTemplate = SplineTemplate(3, 0),
            t_p: int | None = None, quorum: int = QUORUM, n_starts: int = N_STARTS,
            seed: int = 0, prof: ProfileLikelihood | None = None) -> TpgFit:
    """Fit by profile likelihood over the plateau day.

    Every admissible integer ``t_p`` in ``[1, t_p_max]`` is scanned with a
    warm-started gradient search; the best few are then refined with
    jittered multi-starts.  Passing ``t_p`` fixes the
    plateau day instead of scanning.
    """
    if panel.n_centers < 2:
        raise FitError("tPG fit needs at least 2 centers")
    if panel.totals.sum() == 0:
        raise FitError("no enrollments observed")
    prof = prof or ProfileLikelihood(panel)
    if t_p is None:
        try:
            tp_hi = t_p_max(panel, quorum)
        except FitError:
            raise FitError("insufficient post-plateau data") from None
        grid = [tp for tp in range(1, tp_hi + 1) if template.admits(tp)]
    else:
        if not template.admits(t_p):
            raise FitError(f"template {template} cannot place its knot for t_p={t_p}")
        if t_p > 1 and c_star(panel, t_p) < quorum:
            raise FitError("insufficient post-plateau data")
        grid = [t_p]
    if not grid:
        raise FitError("insufficient post-plateau data")

    alpha0, _ = moment_start(prof.totals, prof.L.astype(float))
    profile: dict[int, tuple[np.ndarray, float]] = {}
    warm = None
    for tp in grid:
        spec = template.spec(tp)
        starts = [prof.regression_start(spec, alpha0 if warm is None else np.exp(warm[0]))]
        if warm is not None:
            starts.insert(0, warm)
        theta, ll = _fit_at(prof, spec, starts)
        profile[tp] = (theta, ll)
        warm = theta

    ranked = sorted(profile, key=lambda tp: (-profile[tp][1], tp))
    for tp in ranked[:N_POLISH]:
        profile[tp] = _polish(prof, template.spec(tp), *profile[tp], n_starts, seed)
    best = min(profile, key=lambda tp: (-profile[tp][1], tp))
    theta, ll = profile[best]
    mf = MeanFunction(template.spec(best), tuple(theta[1:]))
    return TpgFit(
        alpha=float(np.exp(theta[0])),
        mean_fn=mf,
        loglik=float(ll),
        n_obs=prof.n_cells,
        c_star=c_star(panel, best),
        template=template,
        profile=tuple((tp, float(profile[tp][1])) for tp in grid),
    )


def tpg_forecast(fit: TpgFit, panel: EnrollmentPanel, T) -> Forecast:
    """Moments and 95% bounds of additional enrollments at each horizon ``T``.

    Centers past the plateau project their posterior plateau rate; the others
    draw prior rates for their remaining pre-plateau days and one plateau rate
    for every day from ``t_p`` on.  Days are counted in center-local time, so
    center ``i`` observes local days ``t_obs_i + 1 .. t_obs_i + (T - t_int)``.
    """
    T = check_grid(T, panel.t_int)
    steps = T - panel.t_int
    h = steps.astype(float)
    alpha, mf, tp = fit.alpha, fit.mean_fn, fit.t_p
    mp = mf.plateau
    L = np.asarray(panel.t_obs)
    g1 = L >= tp

    X = panel.count_matrix
    shape = alpha + np.array([X[i, tp - 1:L[i]].sum() for i in np.flatnonzero(g1)], dtype=float)
    rate = alpha / mp + (L[g1] - tp + 1)
    E = h * np.sum(shape / rate)
    V = h ** 2 * np.sum(shape / rate ** 2)

    L2 = L[~g1]
    if len(L2):
        m_pre = mf(np.arange(1, tp)) if tp > 1 else np.empty(0)
        M1 = np.concatenate([[0.0], np.cumsum(m_pre)])
        M2 = np.concatenate([[0.0], np.cumsum(m_pre ** 2)])
        last = L2[:, None] + steps[None, :]
        stop = np.minimum(last, tp - 1)
        E += np.sum(M1[stop] - M1[L2][:, None], axis=0)
        V += np.sum(M2[stop] - M2[L2][:, None], axis=0) / alpha
        n_plat = np.maximum(last - tp + 1, 0).astype(float)
        E += mp * n_plat.sum(axis=0)
        V += mp ** 2 / alpha * np.sum(n_plat ** 2, axis=0)
    return Forecast.from_moments(panel.t_int, T, E, V + E)
