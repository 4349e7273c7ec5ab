"""Clamped B-spline bases and the plateaued log-mean recruitment curve."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class SplineSpec:
    """Clamped B-spline basis on ``[1, t_p]``.

    With ``t_p == 1`` the basis is degenerate and only the last coefficient is
    active, so the mean is constant.
    """

    degree: int
    internal_knots: tuple[float, ...]
    t_p: int

    def __post_init__(self):
        object.__setattr__(self, "internal_knots", tuple(float(k) for k in self.internal_knots))
        if self.degree < 1:
            raise ValueError(f"degree must be >= 1, got {self.degree}")
        if self.t_p < 1:
            raise ValueError(f"t_p must be >= 1, got {self.t_p}")
        ks = self.internal_knots
        if list(ks) != sorted(ks):
            raise ValueError("internal knots must be sorted")
        if self.t_p > 1 and any(not (1.0 < k < self.t_p) for k in ks):
            raise ValueError(f"internal knots {ks} must lie strictly inside (1, {self.t_p})")

    @property
    def dim(self) -> int:
        return self.degree + 1 + len(self.internal_knots)

    @cached_property
    def knots(self) -> np.ndarray:
        p = self.degree
        return np.array([1.0] * (p + 1) + list(self.internal_knots) + [float(self.t_p)] * (p + 1))


def basis_matrix(spec: SplineSpec, t) -> np.ndarray:
    """Evaluate all basis functions at the points ``t`` (Cox-de Boor recurrence).

    Returns an array of shape ``(len(t), spec.dim)``.  Rows sum to one.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    d = spec.dim
    if spec.t_p == 1:
        out = np.zeros((len(t), d))
        out[:, -1] = 1.0
        return out
    if np.any((t < 1.0) | (t > spec.t_p)):
        raise ValueError(f"basis evaluation outside [1, {spec.t_p}]")
    U = spec.knots
    n_spans = len(U) - 1
    B = np.zeros((len(t), n_spans))
    for j in range(n_spans):
        if U[j] < U[j + 1]:
            B[:, j] = (U[j] <= t) & (t < U[j + 1])
    # the right end belongs to the last non-empty span
    last = max(j for j in range(n_spans) if U[j] < U[j + 1])
    B[t == U[-1], last] = 1.0
    for k in range(1, spec.degree + 1):
        nxt = np.zeros((len(t), n_spans - k))
        for j in range(n_spans - k):
            left = U[j + k] - U[j]
            right = U[j + k + 1] - U[j + 1]
            if left > 0:
                nxt[:, j] += (t - U[j]) / left * B[:, j]
            if right > 0:
                nxt[:, j] += (U[j + k + 1] - t) / right * B[:, j + 1]
        B = nxt
    return B


def basis_eval(spec: SplineSpec, t: float) -> np.ndarray:
    return basis_matrix(spec, [t])[0]


@dataclass(frozen=True)
class MeanFunction:
    """Time-varying prior mean rate ``m(t) = exp(sum_k eta_k gamma_k(t))``, flat from ``t_p``."""

    spec: SplineSpec
    eta: tuple[float, ...]

    def __post_init__(self):
        eta = tuple(float(e) for e in np.ravel(self.eta))
        if len(eta) != self.spec.dim:
            raise ValueError(f"expected {self.spec.dim} coefficients, got {len(eta)}")
        object.__setattr__(self, "eta", eta)

    @property
    def t_p(self) -> int:
        return self.spec.t_p

    @property
    def plateau(self) -> float:
        return float(np.exp(self.eta[-1]))

    def log_mean(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.full(t.shape, self.eta[-1])
        pre = t < self.t_p
        if pre.any():
            out[pre] = basis_matrix(self.spec, t[pre]) @ np.asarray(self.eta)
        return out

    def __call__(self, t) -> np.ndarray:
        return np.exp(self.log_mean(t))

    def to_dict(self) -> dict:
        return {
            "degree": self.spec.degree,
            "internal_knots": list(self.spec.internal_knots),
            "t_p": self.spec.t_p,
            "eta": list(self.eta),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MeanFunction":
        spec = SplineSpec(int(d["degree"]), tuple(d["internal_knots"]), int(d["t_p"]))
        return cls(spec, tuple(d["eta"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def constant(cls, rate: float, degree: int = 3, n_knots: int = 0) -> "MeanFunction":
        """Constant mean ``rate``: ``t_p = 1`` with only the last coefficient active."""
        spec = SplineSpec(degree, (1.0,) * n_knots, 1)
        eta = np.zeros(spec.dim)
        eta[-1] = np.log(rate)
        return cls(spec, tuple(eta))


def mean_eval(mf: MeanFunction, t) -> float | np.ndarray:
    out = mf(t)
    return float(out[0]) if np.ndim(t) == 0 else out


def beta_eval(mf: MeanFunction, alpha: float, t) -> float | np.ndarray:
    """Gamma rate parameter ``alpha / m(t)`` of the daily recruitment rate."""
    return alpha / mean_eval(mf, t)
