"""Binary snapshots and CSV diagnostics time series.

Snapshot layout (ASCII header lines, then raw blocks)::

    NSF-SNAP 1
    cells nx ny nz
    extents ax ay az
    time t
    rho
    <N little-endian float64, x fastest>
    theta
    <...>
    ux / uy / uz likewise

with ``N = (nx + 1)(ny + 1)(nz + 1)`` node values per block.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .diagnostics import DiagnosticsRecord
from .grid import Grid
from .state import FluidState

MAGIC = b"NSF-SNAP 1"
BLOCKS = ("rho", "theta", "ux", "uy", "uz")
_LE = np.dtype("<f8")


class SnapshotError(ValueError):
    pass


def _flat(a: np.ndarray) -> bytes:
    return np.asarray(a, dtype=_LE).ravel(order="F").tobytes()


def write_snapshot(state: FluidState, path) -> None:
    g = state.grid
    header = [
        MAGIC,
        ("cells %d %d %d" % g.cells).encode(),
        ("extents " + " ".join(repr(e) for e in g.extents)).encode(),
        ("time " + repr(state.time)).encode(),
    ]
    fields = (state.rho, state.theta, state.u[0], state.u[1], state.u[2])
    with open(path, "wb") as fh:
        fh.write(b"\n".join(header) + b"\n")
        for name, f in zip(BLOCKS, fields):
            fh.write(name.encode() + b"\n")
            fh.write(_flat(f))


def _take_line(buf: bytes, pos: int) -> tuple[str, int]:
    end = buf.find(b"\n", pos)
    if end < 0:
        raise SnapshotError("truncated snapshot: missing header line")
    try:
        return buf[pos:end].decode("ascii"), end + 1
    except UnicodeDecodeError:
        raise SnapshotError(f"malformed header line at byte {pos}") from None


def read_snapshot(path, grid: Optional[Grid] = None) -> FluidState:
    """Read a snapshot; when ``grid`` is given its cells/extents must match."""
    buf = Path(path).read_bytes()
    if not buf.startswith(MAGIC + b"\n"):
        raise SnapshotError(f"{path}: not an NSF-SNAP 1 file (bad magic)")
    pos = len(MAGIC) + 1
    meta = {}
    for key in ("cells", "extents", "time"):
        line, pos = _take_line(buf, pos)
        parts = line.split()
        if not parts or parts[0] != key:
            raise SnapshotError(f"{path}: expected '{key}' header, got {line!r}")
        meta[key] = parts[1:]
    try:
        cells = tuple(int(c) for c in meta["cells"])
        extents = tuple(float(e) for e in meta["extents"])
        time = float(meta["time"][0])
    except (ValueError, IndexError):
        raise SnapshotError(f"{path}: malformed header values") from None
    if len(cells) != 3 or len(extents) != 3:
        raise SnapshotError(f"{path}: cells and extents need three entries")
    g = Grid(extents, cells)
    if grid is not None and (grid.cells != g.cells or grid.extents != g.extents):
        raise SnapshotError(
            f"{path}: dimension mismatch, file has cells {g.cells} extents {g.extents}, "
            f"expected {grid.cells} {grid.extents}")
    n = g.num_nodes
    needed = sum(len(name) + 1 for name in BLOCKS) + 5 * 8 * n
    if len(buf) - pos < needed:
        have = (len(buf) - pos - sum(len(name) + 1 for name in BLOCKS)) // 8
        raise SnapshotError(f"{path}: truncated snapshot: about {max(have, 0)} values, "
                            f"header cells {cells} need {5 * n}")
    arrays = {}
    for name in BLOCKS:
        line, pos = _take_line(buf, pos)
        if line != name:
            raise SnapshotError(f"{path}: expected block '{name}', got {line!r}")
        nbytes = 8 * n
        if len(buf) - pos < nbytes:
            have = (len(buf) - pos) // 8
            raise SnapshotError(
                f"{path}: truncated block '{name}': {have} values, header needs {n}")
        arrays[name] = np.frombuffer(buf, dtype=_LE, count=n, offset=pos).reshape(
            g.shape, order="F").astype(float)
        pos += nbytes
    if pos != len(buf):
        raise SnapshotError(f"{path}: {len(buf) - pos} trailing bytes after last block")
    u = np.stack([arrays["ux"], arrays["uy"], arrays["uz"]])
    return FluidState(g, time, arrays["rho"], arrays["theta"], u)


# ------------------------------------------------------------- time series

COLUMNS = tuple(DiagnosticsRecord.field_names())


def format_value(v: float) -> str:
    return "%.17g" % v


def write_timeseries(records: Iterable[DiagnosticsRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for rec in records:
            writer.writerow([format_value(getattr(rec, c)) for c in COLUMNS])


class TimeseriesWriter:
    """Incremental writer: header on open, one row per :meth:`append`."""

    def __init__(self, path):
        self._fh = open(path, "w", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(COLUMNS)

    def append(self, rec: DiagnosticsRecord) -> None:
        self._writer.writerow([format_value(getattr(rec, c)) for c in COLUMNS])
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_timeseries(path) -> list[DiagnosticsRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty time series file") from None
        if tuple(header) != COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(COLUMNS):
                raise ValueError(f"{path}:{lineno}: expected {len(COLUMNS)} columns")
            out.append(DiagnosticsRecord(*(float(v) for v in row)))
    return out


def write_plotdata(records, outdir) -> list[Path]:
    """One two-column ``time value`` file per channel."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for col in COLUMNS[1:]:
        p = outdir / f"{col}.dat"
        with open(p, "w") as fh:
            fh.write(f"# time {col}\n")
            for rec in records:
                fh.write(f"{format_value(rec.time)} {format_value(getattr(rec, col))}\n")
        written.append(p)
    return written
