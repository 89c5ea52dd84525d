"""CSV writers and readers for time series, snapshots and run manifests.

Floats are written with ``repr`` (shortest round-trip decimal), so reading
a file back and writing it again reproduces it byte for byte.
"""

from __future__ import annotations

import csv
import os
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .core import WaveState
from .diagnostics import TIMESERIES_FIELDS, DiagnosticsRecord
from .errors import GridMismatchError, OutputError
from .poisson import PotentialField

__all__ = [
    "SNAPSHOT_FIELDS",
    "write_timeseries",
    "read_timeseries",
    "write_snapshot",
    "read_snapshot",
    "write_manifest",
    "read_manifest",
    "format_float",
]

SNAPSHOT_FIELDS = ("r", "re_u", "im_u", "prob_density", "phi")


def format_float(x) -> str:
    return repr(float(x))


def _write_rows(path, header, rows) -> Path:
    path = Path(path)
    try:
        with open(path, "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_float(x) for x in row])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def write_timeseries(records: Iterable[DiagnosticsRecord], path) -> Path:
    """One row per record under the fixed header; t must be strictly increasing."""
    records = list(records)
    times = [rec.t for rec in records]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("records must be in strictly increasing t")
    rows = ([getattr(rec, name) for name in TIMESERIES_FIELDS] for rec in records)
    return _write_rows(path, TIMESERIES_FIELDS, rows)


def read_timeseries(path) -> list[DiagnosticsRecord]:
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != TIMESERIES_FIELDS:
            raise ValueError(f"{path}: unexpected header {header}")
        return [DiagnosticsRecord(*(float(x) for x in row)) for row in reader]


def write_snapshot(state: WaveState, phi: PotentialField, path) -> Path:
    """Columns r, Re u, Im u, |u|^2 (= r^2|psi|^2) and Phi, one row per grid point."""
    grid = state.grid
    if phi.grid.n_points != grid.n_points:
        raise GridMismatchError("potential and state live on different grids")
    u = state.u
    columns = (grid.r, u.real, u.imag, state.density, phi.phi)
    return _write_rows(path, SNAPSHOT_FIELDS, zip(*columns))


def read_snapshot(path) -> dict[str, np.ndarray]:
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=float)
    return {name: np.atleast_1d(data[name]) for name in SNAPSHOT_FIELDS}


def _format_value(value) -> str:
    if isinstance(value, bool) or value is None:
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(_format_value(v) for v in value)
    return str(value)


def write_manifest(entries: Mapping[str, object], path, metadata: Mapping[str, object] | None = None) -> Path:
    """``key = value`` lines in insertion order, readable by :func:`read_manifest`.

    ``metadata`` follows as ``# key = value`` lines, so a manifest whose
    entries are run settings can be fed back as a config file.
    """
    path = Path(path)
    lines = [f"{key} = {_format_value(value)}\n" for key, value in entries.items()]
    lines += [f"# {key} = {_format_value(value)}\n" for key, value in (metadata or {}).items()]
    try:
        os.makedirs(path.parent, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.writelines(lines)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def read_manifest(path) -> dict[str, str]:
    """Entries and metadata of a manifest as raw strings."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip().lstrip("#").strip()
            key, sep, value = line.partition("=")
            if sep:
                out[key.strip()] = value.strip()
    return out
