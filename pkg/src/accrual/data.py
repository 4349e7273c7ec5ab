"""Observed enrollment data: per-center daily counts, CSV ingestion and summaries.

Time is discretized in integer units starting at 1.  Counts are stored in
center-local time ``s = t - u + 1`` so that day 1 is the initiation day of
the center.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

CSV_HEADER = ("center_id", "u", "s", "count")


class PanelError(ValueError):
    """Raised when enrollment data fail validation."""


def _frozen(values, dtype=np.int64) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CenterRecord:
    id: str
    u: int
    counts: np.ndarray

    def __post_init__(self):
        counts = _frozen(self.counts)
        if counts.ndim != 1:
            raise PanelError(f"center {self.id}: counts must be one-dimensional")
        if self.u < 1:
            raise PanelError(f"center {self.id}: initiation time must be >= 1, got {self.u}")
        if (counts < 0).any():
            raise PanelError(f"center {self.id}: negative count")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "u", int(self.u))

    @property
    def t_obs(self) -> int:
        """Number of observed center-local days (``t_int - u + 1``)."""
        return len(self.counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True, eq=False)
class EnrollmentPanel:
    centers: tuple[CenterRecord, ...]
    t_int: int
    time_unit: str = "day"

    def __post_init__(self):
        centers = tuple(self.centers)
        object.__setattr__(self, "centers", centers)
        if not centers:
            raise PanelError("panel needs at least one center")
        if self.t_int < 1:
            raise PanelError(f"t_int must be >= 1, got {self.t_int}")
        ids = [c.id for c in centers]
        if len(set(ids)) != len(ids):
            raise PanelError("center ids must be unique")
        for c in centers:
            if c.u > self.t_int:
                raise PanelError(f"center {c.id}: initiation after interim (u={c.u} > t_int={self.t_int})")
            if c.t_obs != self.t_int - c.u + 1:
                raise PanelError(
                    f"center {c.id}: expected {self.t_int - c.u + 1} counts, got {c.t_obs}"
                )

    @classmethod
    def from_counts(cls, counts: Sequence[Sequence[int]], u: Sequence[int] | None = None,
                    t_int: int | None = None, ids: Sequence[str] | None = None,
                    time_unit: str = "day") -> "EnrollmentPanel":
        """Build a panel from per-center center-local count series.

        When ``t_int`` is omitted it is inferred from the first center.
        """
        n = len(counts)
        u = [1] * n if u is None else list(u)
        ids = [f"c{i + 1}" for i in range(n)] if ids is None else list(ids)
        if t_int is None:
            t_int = u[0] + len(counts[0]) - 1
        centers = tuple(CenterRecord(str(i), int(ui), c) for i, ui, c in zip(ids, u, counts))
        return cls(centers, int(t_int), time_unit)

    def __eq__(self, other):
        if not isinstance(other, EnrollmentPanel):
            return NotImplemented
        if self.t_int != other.t_int or len(self.centers) != len(other.centers):
            return False
        mine = {c.id: c for c in self.centers}
        for c in other.centers:
            a = mine.get(c.id)
            if a is None or a.u != c.u or not np.array_equal(a.counts, c.counts):
                return False
        return True

    __hash__ = None

    @property
    def n_centers(self) -> int:
        return len(self.centers)

    @cached_property
    def u(self) -> np.ndarray:
        return _frozen([c.u for c in self.centers])

    @cached_property
    def t_obs(self) -> np.ndarray:
        """Per-center number of observed days ``t_int - u_i + 1``."""
        return _frozen([c.t_obs for c in self.centers])

    @cached_property
    def totals(self) -> np.ndarray:
        return _frozen([c.total for c in self.centers])

    @cached_property
    def count_matrix(self) -> np.ndarray:
        """Zero-padded ``(C, max t_obs)`` matrix of center-local counts."""
        out = np.zeros((self.n_centers, int(self.t_obs.max())), dtype=np.int64)
        for i, c in enumerate(self.centers):
            out[i, : c.t_obs] = c.counts
        out.setflags(write=False)
        return out

    def daily_totals(self) -> np.ndarray:
        """Enrollments on each absolute day ``1..t_int`` summed over centers."""
        out = np.zeros(self.t_int, dtype=np.int64)
        for c in self.centers:
            out[c.u - 1:] += c.counts
        return out

    def truncate(self, t_int: int) -> "EnrollmentPanel":
        """Restrict the panel to an earlier interim time, dropping centers not yet started."""
        if t_int > self.t_int:
            raise PanelError(f"cannot extend panel from t_int={self.t_int} to {t_int}")
        kept = tuple(
            CenterRecord(c.id, c.u, c.counts[: t_int - c.u + 1]) for c in self.centers if c.u <= t_int
        )
        return EnrollmentPanel(kept, t_int, self.time_unit)


@dataclass(frozen=True, eq=False)
class PanelSummary:
    ids: tuple[str, ...]
    k: np.ndarray
    tau: np.ndarray
    cumulative: np.ndarray = field(repr=False)

    @property
    def n_centers(self) -> int:
        return len(self.k)

    @property
    def total(self) -> int:
        return int(self.k.sum())

    @property
    def t_int(self) -> int:
        return len(self.cumulative)


def summarize(panel: EnrollmentPanel) -> PanelSummary:
    daily = panel.daily_totals()
    return PanelSummary(
        ids=tuple(c.id for c in panel.centers),
        k=panel.totals,
        tau=panel.t_obs,
        cumulative=_frozen(np.cumsum(daily)),
    )


def _parse_int(value: str, name: str, row: int) -> int:
    try:
        return int(value.strip())
    except (ValueError, AttributeError):
        raise PanelError(f"row {row}: {name} is not an integer: {value!r}") from None


def read_cells(path: str | Path) -> dict[str, tuple[int, dict[int, int]]]:
    """Read a long-format enrollment CSV into ``{center_id: (u, {s: count})}``.

    Validation covers the row-level rules only; interim-time checks happen in
    :func:`ingest_csv`.
    """
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise PanelError(f"cannot open {path}: {exc.strerror}") from None
    cells: dict[str, tuple[int, dict[int, int]]] = {}
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise PanelError(f"row 1: expected header {','.join(CSV_HEADER)}, got {header}")
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not v.strip() for v in row):
                continue
            if len(row) != 4:
                raise PanelError(f"row {row_no}: expected 4 fields, got {len(row)}")
            cid = row[0].strip()
            if not cid:
                raise PanelError(f"row {row_no}: empty center_id")
            u = _parse_int(row[1], "u", row_no)
            s = _parse_int(row[2], "s", row_no)
            n = _parse_int(row[3], "count", row_no)
            if u < 1:
                raise PanelError(f"row {row_no}: u must be >= 1")
            if s < 1:
                raise PanelError(f"row {row_no}: s must be >= 1")
            if n < 0:
                raise PanelError(f"row {row_no}: negative count {n}")
            if cid in cells:
                u0, days = cells[cid]
                if u0 != u:
                    raise PanelError(f"row {row_no}: center {cid} has conflicting u ({u0} vs {u})")
            else:
                days = {}
                cells[cid] = (u, days)
            if s in days:
                raise PanelError(f"row {row_no}: duplicate cell (center {cid}, s={s})")
            days[s] = n
    if not cells:
        raise PanelError(f"{path}: no data rows")
    return cells


def ingest_csv(path: str | Path, t_int: int, time_unit: str = "day") -> EnrollmentPanel:
    """Load an enrollment CSV as a panel observed up to ``t_int``.

    Missing cells are zero enrollments.  Cells after the interim time
    (``s > t_int - u + 1``) are ignored, so one file holding the full
    history can be analysed at several interim times.
    """
    if t_int < 1:
        raise PanelError(f"t_int must be >= 1, got {t_int}")
    centers = []
    for cid, (u, days) in read_cells(path).items():
        if u > t_int:
            raise PanelError(f"center {cid}: initiation after interim (u={u} > t_int={t_int})")
        counts = np.zeros(t_int - u + 1, dtype=np.int64)
        for s, n in days.items():
            if s <= len(counts):
                counts[s - 1] = n
        centers.append(CenterRecord(cid, u, counts))
    return EnrollmentPanel(tuple(centers), t_int, time_unit)


def observed_cumulative(path: str | Path, t_max: int) -> np.ndarray:
    """Cumulative enrollments over absolute days ``1..t_max`` from a CSV file."""
    daily = np.zeros(t_max, dtype=np.int64)
    for u, days in read_cells(path).values():
        for s, n in days.items():
            t = u + s - 1
            if t <= t_max:
                daily[t - 1] += n
    return np.cumsum(daily)


def write_csv(panel: EnrollmentPanel, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for c in panel.centers:
            for s, n in enumerate(c.counts, start=1):
                w.writerow((c.id, c.u, s, int(n)))


def write_summary_csv(summary: PanelSummary, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("center_id", "k", "tau"))
        for cid, k, tau in zip(summary.ids, summary.k, summary.tau):
            w.writerow((cid, int(k), int(tau)))

