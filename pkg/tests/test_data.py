import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from accrual.data import (EnrollmentPanel, PanelError, ingest_csv, observed_cumulative, summarize,
                          write_csv, write_summary_csv)


def write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_ingest_basic(tmp_path):
    p = write(tmp_path, "center_id,u,s,count\nA,1,1,2\nA,1,2,0\n")
    panel = ingest_csv(p, t_int=2)
    s = summarize(panel)
    assert s.k.tolist() == [2]
    assert s.tau.tolist() == [2]


def test_initiation_after_interim(tmp_path):
    p = write(tmp_path, "center_id,u,s,count\nA,5,1,1\n")
    with pytest.raises(PanelError, match="initiation after interim"):
        ingest_csv(p, t_int=3)


def test_missing_cells_are_zero_and_rows_any_order(tmp_path):
    p = write(tmp_path, "center_id,u,s,count\nB,2,3,4\nA,1,2,1\nB,2,1,1\n")
    panel = ingest_csv(p, t_int=5)
    by_id = {c.id: c for c in panel.centers}
    assert by_id["A"].counts.tolist() == [0, 1, 0, 0, 0]
    assert by_id["B"].counts.tolist() == [1, 0, 4, 0]


def test_cells_after_interim_are_ignored(tmp_path):
    p = write(tmp_path, "center_id,u,s,count\nA,1,1,1\nA,1,9,5\n")
    assert ingest_csv(p, t_int=3).centers[0].counts.tolist() == [1, 0, 0]
    assert observed_cumulative(p, 9).tolist()[-1] == 6


@pytest.mark.parametrize("body,match", [
    ("A,1,1,-1\n", "row 2: negative count"),
    ("A,1,1,1\nA,1,1,2\n", "row 3: duplicate cell"),
    ("A,1,x,1\n", "row 2: s is not an integer"),
    ("A,1,1\n", "row 2: expected 4 fields"),
    ("A,1,1,1\nA,2,2,1\n", "row 3: center A has conflicting u"),
    ("A,0,1,1\n", "row 2: u must be >= 1"),
])
def test_rejections_name_the_row(tmp_path, body, match):
    p = write(tmp_path, "center_id,u,s,count\n" + body)
    with pytest.raises(PanelError, match=match):
        ingest_csv(p, t_int=5)


def test_bad_header(tmp_path):
    p = write(tmp_path, "id,u,s,n\nA,1,1,1\n")
    with pytest.raises(PanelError, match="header"):
        ingest_csv(p, t_int=5)


def test_missing_file(tmp_path):
    with pytest.raises(PanelError, match="cannot open"):
        ingest_csv(tmp_path / "nope.csv", t_int=3)


def test_nineteen_center_weekly_shape(tmp_path):
    rng = np.random.default_rng(3)
    u = np.concatenate([[1, 30, 60, 100, 150, 170], rng.integers(192, 286, size=13)])
    lines = ["center_id,u,s,count"]
    for i, ui in enumerate(u):
        for s in range(1, 400 - ui + 2, 7):
            lines.append(f"site{i},{ui},{s},{rng.poisson(0.5)}")
    panel = ingest_csv(write(tmp_path, "\n".join(lines) + "\n"), t_int=400, time_unit="week")
    assert panel.n_centers == 19
    assert panel.time_unit == "week"


def test_summarize_examples():
    s = summarize(EnrollmentPanel.from_counts([[1, 1], [0, 3]]))
    assert s.k.tolist() == [2, 3]
    assert s.cumulative[-1] == 5

    s = summarize(EnrollmentPanel.from_counts([[0, 0, 0], [0, 0, 0]]))
    assert s.k.tolist() == [0, 0] and s.cumulative.tolist() == [0, 0, 0]

    s = summarize(EnrollmentPanel.from_counts([[2, 0, 1]]))
    assert s.cumulative.tolist() == [2, 2, 3]


def test_panel_invariants():
    with pytest.raises(PanelError):
        EnrollmentPanel.from_counts([[1], [2]], ids=["a", "a"])
    with pytest.raises(PanelError):
        EnrollmentPanel.from_counts([[1, 2], [1]], u=[1, 1], t_int=2)
    panel = EnrollmentPanel.from_counts([[1, 2, 3], [4]], u=[1, 3], t_int=3)
    assert panel.t_obs.tolist() == [3, 1]
    with pytest.raises(ValueError):
        panel.centers[0].counts[0] = 9


def test_truncate():
    panel = EnrollmentPanel.from_counts([[1, 2, 3, 4], [5, 6]], u=[1, 3], t_int=4)
    small = panel.truncate(2)
    assert small.n_centers == 1
    assert small.centers[0].counts.tolist() == [1, 2]


def test_summary_export(tmp_path):
    panel = EnrollmentPanel.from_counts([[1, 1], [0, 3]], ids=["x", "y"])
    write_summary_csv(summarize(panel), tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text() == "center_id,k,tau\nx,2,2\ny,3,2\n"


panels = st.integers(1, 6).flatmap(lambda C: st.tuples(
    st.integers(1, 12),
    st.lists(st.integers(0, 11), min_size=C, max_size=C),
    st.lists(st.lists(st.integers(0, 5), min_size=12, max_size=12), min_size=C, max_size=C),
))


def _build(spec):
    t_int, offsets, rows = spec
    u = [min(o, t_int - 1) + 1 for o in offsets]
    return EnrollmentPanel.from_counts([r[: t_int - ui + 1] for r, ui in zip(rows, u)], u, t_int)


@given(panels)
def test_csv_round_trip(tmp_path_factory, spec):
    panel = _build(spec)
    path = tmp_path_factory.mktemp("rt") / "p.csv"
    write_csv(panel, path)
    assert ingest_csv(path, panel.t_int) == panel


@given(panels)
def test_daily_totals_sum_to_total(spec):
    panel = _build(spec)
    s = summarize(panel)
    assert panel.daily_totals().sum() == s.cumulative[-1] == s.k.sum()
    assert np.all(np.diff(s.cumulative) >= 0)


@given(st.lists(st.lists(st.sampled_from(["A", "B", "1", "2", "-1", "x", "", "7"]),
                         min_size=3, max_size=5), max_size=6))
def test_validation_is_total(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("v") / "f.csv"
    path.write_text("center_id,u,s,count\n" + "\n".join(",".join(r) for r in rows) + "\n")
    try:
        panel = ingest_csv(path, t_int=3)
    except PanelError as exc:
        assert "row" in str(exc) or "no data" in str(exc) or "center" in str(exc)
    else:
        assert panel.n_centers >= 1
