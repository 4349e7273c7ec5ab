"""Forecast containers, Normal-approximation credible bounds and time-to-target inversion."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

Z95 = 1.959964


@dataclass(frozen=True, eq=False)
class Forecast:
    """Moments and 95% bounds of additional enrollments after ``t_int``, per horizon ``T``."""

    t_int: int
    T: np.ndarray
    expectation: np.ndarray
    variance: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @classmethod
    def from_moments(cls, t_int: int, T, expectation, variance, z: float = Z95) -> "Forecast":
        T = np.asarray(T, dtype=np.int64)
        e = np.asarray(expectation, dtype=float)
        v = np.asarray(variance, dtype=float)
        half = z * np.sqrt(v)
        return cls(t_int, T, e, v, np.maximum(e - half, 0.0), e + half)

    def __len__(self):
        return len(self.T)

    def at(self, T: int) -> tuple[float, float, float, float]:
        idx = np.flatnonzero(self.T == T)
        if not len(idx):
            raise KeyError(T)
        i = idx[0]
        return self.expectation[i], self.variance[i], self.lower[i], self.upper[i]

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("T", "expectation", "variance", "lower95", "upper95"))
            for row in zip(self.T, self.expectation, self.variance, self.lower, self.upper):
                w.writerow((int(row[0]),) + tuple(repr(float(x)) for x in row[1:]))


def check_grid(T, t_int: int) -> np.ndarray:
    T = np.atleast_1d(np.asarray(T, dtype=np.int64))
    if T.ndim != 1 or len(T) == 0:
        raise ValueError("forecast grid must be a non-empty list of integers")
    if (T <= t_int).any():
        raise ValueError(f"forecast horizons must exceed t_int={t_int}, got min T={T.min()}")
    return T


@dataclass(frozen=True)
class TimeToTarget:
    """First grid times where the point forecast and the 95% bounds reach ``target``.

    ``None`` marks a curve that does not reach the target on the grid.
    """

    target: int
    point: int | None
    lower: int | None
    upper: int | None


def _first_reaching(T: np.ndarray, curve: np.ndarray, need: float) -> int | None:
    hit = np.flatnonzero(curve >= need)
    return int(T[hit[0]]) if len(hit) else None


def time_to_target(forecast: Forecast, current_total: int, target: int) -> TimeToTarget:
    """Invert the forecast curves to find when ``current_total + N^a(T)`` reaches ``target``.

    The upper bound curve reaches the target first, so it yields the lower
    bound on the time and vice versa.
    """
    T = forecast.T
    if target <= current_total:
        first = int(T[0])
        return TimeToTarget(target, first, first, first)
    need = target - current_total
    return TimeToTarget(
        target,
        _first_reaching(T, forecast.expectation, need),
        _first_reaching(T, forecast.upper, need),
        _first_reaching(T, forecast.lower, need),
    )
