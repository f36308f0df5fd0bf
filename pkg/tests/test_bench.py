import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import NETLIB, NETLIB_OPTIMA
from tiledsimplex.bench import (
    CSV_HEADER,
    PARSE_ERROR,
    BenchRow,
    Mode,
    NonPositiveTime,
    ZeroIterations,
    csv_text,
    parse_modes,
    parse_suite,
    read_csv,
    run_suite,
    speedup,
    tpi,
)
from tiledsimplex.engine import Kernel
from tiledsimplex.generator import GenSpec


def test_speedup_200_370_dense_timings():
    assert speedup(2.682403, 1.042) == pytest.approx(2.574283, abs=1e-6)


def test_speedup_identity():
    assert speedup(3.3, 3.3) == 1.0


def test_speedup_800_1700_dense_timings():
    assert speedup(997.583, 14.08333) == pytest.approx(70.8343, abs=1e-3)


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_speedup_rejects_nonpositive(bad):
    with pytest.raises(NonPositiveTime):
        speedup(1.0, bad)


def test_tpi_known_timings():
    assert tpi(2.682403, 2031) == pytest.approx(0.001321, abs=1e-6)
    assert tpi(1.042, 3243) == pytest.approx(0.000321, abs=1e-6)
    assert tpi(0.37, 1) == 0.37


def test_tpi_zero_iterations():
    with pytest.raises(ZeroIterations):
        tpi(1.0, 0)


def test_header_is_exact():
    assert ",".join(CSV_HEADER) == (
        "instance,status,objective,iterations_p1,iterations_p2,total_seconds,tpi_seconds,case,"
        "device_reads,device_writes,h2d_bytes,d2h_bytes,reference_seconds,speedup")


def test_speedup_presence_invariant():
    with pytest.raises(ValueError):
        BenchRow("x", "Optimal", reference_seconds=1.0)
    with pytest.raises(ValueError):
        BenchRow("x", "Optimal", speedup=1.0)


finite = st.floats(-1e12, 1e12, allow_nan=False)
positive = st.floats(1e-9, 1e6)
counts = st.integers(0, 2**40)


@st.composite
def bench_rows(draw):
    ref = draw(st.none() | positive)
    return BenchRow(
        instance=draw(st.text("abcXYZ_019@:", min_size=1, max_size=12)),
        status=draw(st.sampled_from(["Optimal", "Unbounded", "Infeasible", "IterationLimit",
                                     PARSE_ERROR])),
        objective=draw(finite | st.just(float("nan")) | st.just(float("-inf"))),
        iterations_p1=draw(st.integers(0, 10**6)),
        iterations_p2=draw(st.integers(0, 10**6)),
        total_seconds=draw(positive),
        tpi_seconds=draw(positive),
        case=draw(st.sampled_from(["InCore", "Tiled", ""])),
        device_reads=draw(counts), device_writes=draw(counts),
        h2d_bytes=draw(counts), d2h_bytes=draw(counts),
        reference_seconds=ref,
        speedup=None if ref is None else draw(positive),
    )


@settings(max_examples=200, deadline=None)
@given(st.lists(bench_rows(), max_size=5))
def test_csv_round_trip(rows):
    back = read_csv(io.StringIO(csv_text(rows)))
    assert back == rows


def test_parse_modes():
    modes = parse_modes("unlimited:cached,4p:naive,200000:cached,5000")
    assert modes == [Mode(None, Kernel.CACHED), Mode(None, Kernel.NAIVE, parts=4),
                     Mode(200000, Kernel.CACHED), Mode(5000, Kernel.CACHED)]
    assert [m.label for m in modes] == ["unlimited:cached", "4p:naive", "200000:cached",
                                        "5000:cached"]
    with pytest.raises(ValueError):
        parse_modes("")


def test_parse_suite(tmp_path):
    (tmp_path / "s.txt").write_text("# comment\ngen 5 7 S20 3\nfoo.mps  # trailing\n\n")
    items = parse_suite(tmp_path / "s.txt")
    assert items == [GenSpec(5, 7, "S20", 3), tmp_path / "foo.mps"]


def test_one_instance_two_modes_gives_two_rows():
    rows = run_suite([GenSpec(8, 12, "D", 0)], modes=parse_modes("unlimited,2p:naive"), repeats=1)
    assert len(rows) == 2
    assert [r.case for r in rows] == ["InCore", "Tiled"]


def test_unparseable_instance_is_isolated(tmp_path):
    bad = tmp_path / "bad.mps"
    bad.write_text("NAME X\nGARBAGE\n")
    rows = run_suite([bad, GenSpec(5, 8, "D", 1)], repeats=1)
    assert [r.status for r in rows] == [PARSE_ERROR, "Optimal"]


def test_missing_file_is_parse_error(tmp_path):
    rows = run_suite([tmp_path / "nope.mps"], repeats=1)
    assert rows[0].status == PARSE_ERROR


def test_results_are_mode_independent():
    modes = parse_modes("unlimited:cached,unlimited:naive,2p:cached,4p:naive")
    rows = run_suite([GenSpec(40, 60, "S20", 9)], modes=modes, repeats=1)
    assert len({(r.objective, r.iterations_p1, r.iterations_p2) for r in rows}) == 1
    assert rows[0].device_reads + rows[0].device_writes < rows[1].device_reads + rows[1].device_writes


def test_reference_mode_fills_speedup(tmp_path):
    out = tmp_path / "r.csv"
    rows = run_suite([GenSpec(6, 9, "D", 2)], reference=True, repeats=1, csv_path=out)
    r = rows[0]
    assert r.reference_seconds is not None and r.speedup is not None
    assert read_csv(out) == rows
    assert r.tpi_seconds == pytest.approx(r.total_seconds / r.iterations, rel=1e-5)


def test_netlib_small_set_objectives():
    names = ["recipe", "scsd1", "sctap1", "lotfi", "e226", "grow7"]
    rows = run_suite([NETLIB / f"{n}.mps" for n in names], repeats=1)
    for name, row in zip(names, rows):
        assert row.status == "Optimal", name
        want = NETLIB_OPTIMA[name]
        assert math.isclose(row.objective, want, rel_tol=1e-4), (name, row.objective, want)
        assert np.isfinite(row.total_seconds)
