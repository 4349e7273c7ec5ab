"""Bounded multi-start maximization helpers shared by the model fits."""

from __future__ import annotations

import warnings
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

# convergence rule: simplex size below XTOL in log-parameters or MAXFEV evaluations
XTOL = 1e-8
MAXFEV = 2000


def _safe(fun: Callable[[np.ndarray], float]) -> Callable[[np.ndarray], float]:
    def wrapped(x):
        v = fun(x)
        return v if np.isfinite(v) else np.inf

    return wrapped


def simplex_max(fun: Callable[[np.ndarray], float], x0, bounds: Sequence[tuple[float, float]],
                step: float = 0.25, maxfev: int = MAXFEV) -> tuple[np.ndarray, float]:
    """Maximize ``fun`` by a bounded Nelder-Mead search started at ``x0``."""
    x0 = np.clip(np.asarray(x0, dtype=float), [b[0] for b in bounds], [b[1] for b in bounds])
    simplex = [x0]
    for i in range(len(x0)):
        v = x0.copy()
        v[i] = v[i] + step if v[i] + step <= bounds[i][1] else v[i] - step
        simplex.append(v)
    neg = _safe(lambda x: -fun(x))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = minimize(
            neg, x0, method="Nelder-Mead", bounds=bounds,
            options={"xatol": XTOL, "fatol": 1e-12, "maxfev": maxfev,
                     "initial_simplex": np.array(simplex), "adaptive": len(x0) > 3},
        )
    return res.x, -float(res.fun)


def gradient_max(fun_grad: Callable[[np.ndarray], tuple[float, np.ndarray]], x0,
                 bounds: Sequence[tuple[float, float]], maxiter: int = 500) -> tuple[np.ndarray, float]:
    """Maximize a smooth function with analytic gradient by L-BFGS-B."""
    def neg(x):
        v, g = fun_grad(x)
        if not np.isfinite(v):
            return np.inf, np.zeros_like(x)
        return -v, -g

    x0 = np.clip(np.asarray(x0, dtype=float), [b[0] for b in bounds], [b[1] for b in bounds])
    res = minimize(neg, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                   options={"maxiter": maxiter, "ftol": 1e-13, "gtol": 1e-9})
    return res.x, -float(res.fun)


def best_of(results: Sequence[tuple[np.ndarray, float]]) -> tuple[np.ndarray, float]:
    """Pick the maximum; ties go to the earliest start."""
    best = 0
    for i, (_, f) in enumerate(results):
        if f > results[best][1]:
            best = i
    return results[best]


def jittered_starts(x0, n_starts: int, scale: float, bounds, seed: int = 0) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    x0 = np.clip(np.asarray(x0, dtype=float), lo, hi)
    starts = [x0]
    for _ in range(n_starts - 1):
        starts.append(np.clip(x0 + rng.normal(0.0, scale, size=x0.shape), lo, hi))
    return starts
