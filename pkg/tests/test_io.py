import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsfsim import FluidState, Grid
from nsfsim.diagnostics import DiagnosticsRecord
from nsfsim.io import (COLUMNS, SnapshotError, TimeseriesWriter, read_snapshot, read_timeseries,
                       write_plotdata, write_snapshot, write_timeseries)

from synthetic import make_record


def random_state(grid, seed=0, time=0.25):
    rng = np.random.default_rng(seed)
    return FluidState(grid, time, rng.uniform(0.5, 2, grid.shape),
                      rng.uniform(0.5, 2, grid.shape), rng.normal(size=(3, *grid.shape)))


@settings(max_examples=15, deadline=None)
@given(st.integers(4, 7), st.integers(4, 7), st.integers(4, 7), st.integers(0, 2**31 - 1),
       st.floats(0, 1e6, allow_nan=False))
def test_snapshot_round_trip_bit_identical(tmp_path_factory, nx, ny, nz, seed, time):
    g = Grid((1.0, 0.3, 2.5), (nx, ny, nz))
    s = random_state(g, seed, time)
    path = tmp_path_factory.mktemp("snap") / "s.nsf"
    write_snapshot(s, path)
    r = read_snapshot(path)
    assert r.grid == g and r.time == s.time
    for name in ("rho", "theta", "u"):
        assert getattr(r, name).tobytes() == getattr(s, name).tobytes()


def test_snapshot_layout(tmp_path):
    g = Grid((1.0, 1.0, 1.0), (4, 5, 6))
    s = random_state(g)
    path = tmp_path / "s.nsf"
    write_snapshot(s, path)
    raw = path.read_bytes()
    header = raw.split(b"\n")[:5]
    assert header[0] == b"NSF-SNAP 1"
    assert header[1] == b"cells 4 5 6"
    assert header[4] == b"rho"
    start = len(b"\n".join(header)) + 1
    first = np.frombuffer(raw[start:start + 16], dtype="<f8")
    # x fastest: second value is node (1, 0, 0)
    assert first[0] == s.rho[0, 0, 0] and first[1] == s.rho[1, 0, 0]


def test_snapshot_truncation(tmp_path):
    g = Grid.cube(16)
    path = tmp_path / "bad.nsf"
    s = random_state(Grid.cube(15))
    write_snapshot(s, path)
    text = path.read_bytes().replace(b"cells 15 15 15", b"cells 16 16 16", 1)
    path.write_bytes(text)
    with pytest.raises(SnapshotError, match="truncat"):
        read_snapshot(path)
    write_snapshot(s, path)
    with pytest.raises(SnapshotError):
        read_snapshot(path, g)


def test_snapshot_bad_magic(tmp_path):
    path = tmp_path / "bad.nsf"
    path.write_bytes(b"NOT-A-SNAP\n")
    with pytest.raises(SnapshotError, match="magic"):
        read_snapshot(path)


def test_snapshot_trailing_bytes(tmp_path):
    path = tmp_path / "s.nsf"
    write_snapshot(random_state(Grid.cube(4)), path)
    path.write_bytes(path.read_bytes() + b"\0" * 8)
    with pytest.raises(SnapshotError):
        read_snapshot(path)


def test_timeseries_empty_is_header_only(tmp_path):
    path = tmp_path / "ts.csv"
    write_timeseries([], path)
    assert path.read_text().splitlines() == [",".join(COLUMNS)]
    assert read_timeseries(path) == []


def test_timeseries_round_trip_exact(tmp_path):
    rng = np.random.default_rng(5)
    recs = [DiagnosticsRecord(**{n: float(v) for n, v in zip(COLUMNS, rng.normal(size=len(COLUMNS)))})
            for _ in range(3)]
    path = tmp_path / "ts.csv"
    write_timeseries(recs, path)
    assert len(path.read_text().splitlines()) == 4
    back = read_timeseries(path)
    assert [r.mass for r in back] == [r.mass for r in recs]
    assert back == recs


def test_timeseries_nan_round_trip(tmp_path):
    path = tmp_path / "ts.csv"
    with TimeseriesWriter(path) as w:
        w.append(make_record(0.5))
    back = read_timeseries(path)[0]
    assert math.isnan(back.gn_margin) and back.time == 0.5


def test_columns_are_record_fields():
    assert COLUMNS[0] == "time"
    assert list(COLUMNS) == DiagnosticsRecord.field_names()


def test_plotdata_files(tmp_path):
    recs = [make_record(0.1 * k, sup_speed=k) for k in range(1, 4)]
    paths = write_plotdata(recs, tmp_path / "plot")
    assert len(paths) == len(COLUMNS) - 1
    data = np.loadtxt(tmp_path / "plot" / "sup_speed.dat")
    np.testing.assert_array_equal(data, [[0.1, 1], [0.2, 2], [0.30000000000000004, 3]])
