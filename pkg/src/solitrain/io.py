"""Run artifacts: norm time-series CSV, JSON reports, and NLSF field snapshots."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .grids import Field, Grid

CSV_HEADER = "t,norm_id,p,q,value"
_NLSF_MAGIC = b"NLSF"
_NLSF_VERSION = 1


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and np.isinf(x):
        return "inf"
    return f"{x:.17g}"


def write_norm_csv(path, rows) -> None:
    """rows: iterables (t, norm_id, p, q, value); decimal text, 17 significant
    digits, LF line endings."""
    path = Path(path)
    with open(path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for t, norm_id, p, q, value in rows:
            fh.write(f"{_fmt(t)},{norm_id},{_fmt(p)},{_fmt(q)},{_fmt(value)}\n")


def read_norm_csv(path):
    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"{path}: expected header {CSV_HEADER!r}, got {header!r}")
        for line in fh:
            t, norm_id, p, q, value = line.rstrip("\n").split(",")
            rows.append(
                (
                    float(t),
                    norm_id,
                    float(p) if p else None,
                    float(q) if q else None,
                    float(value),
                )
            )
    return rows


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        if np.isnan(x):
            return "nan"
        return x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def write_json_report(path, payload: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json_report(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def write_nlsf(path, f: Field) -> None:
    """Flat binary container: magic 'NLSF', version, dim, N per axis, L per
    axis, t; then interleaved real/imag float64, little-endian."""
    grid = f.grid
    with open(path, "wb") as fh:
        fh.write(_NLSF_MAGIC)
        fh.write(struct.pack("<II", _NLSF_VERSION, grid.dim))
        fh.write(struct.pack(f"<{grid.dim}I", *grid.N))
        fh.write(struct.pack(f"<{grid.dim}d", *grid.L))
        fh.write(struct.pack("<d", f.t))
        inter = np.empty(f.values.size * 2, dtype="<f8")
        flat = f.values.reshape(-1)
        inter[0::2] = flat.real
        inter[1::2] = flat.imag
        fh.write(inter.tobytes())


def read_nlsf(path) -> Field:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _NLSF_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        version, dim = struct.unpack("<II", fh.read(8))
        if version != _NLSF_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        N = struct.unpack(f"<{dim}I", fh.read(4 * dim))
        L = struct.unpack(f"<{dim}d", fh.read(8 * dim))
        (t,) = struct.unpack("<d", fh.read(8))
        count = 2 * int(np.prod(N))
        data = np.frombuffer(fh.read(count * 8), dtype="<f8")
    if data.size != count:
        raise ValueError(f"{path}: truncated payload")
    vals = (data[0::2] + 1j * data[1::2]).reshape(N)
    return Field(Grid(dim, L, N), vals, t)
