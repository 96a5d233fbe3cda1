"""Parsers for the run-artifact contracts: norm CSV, JSON reports, NLSF fields.

These are written against the documented file formats only; this package
never imports the producer.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

CSV_HEADER = "t,norm_id,p,q,value"


class SchemaError(ValueError):
    pass


@dataclass
class NormSeries:
    norm_id: str
    t: np.ndarray
    value: np.ndarray


def read_norm_csv(path) -> dict[str, NormSeries]:
    """Norm time series grouped by norm_id; raises on schema mismatch."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise SchemaError(f"{path}: expected header {CSV_HEADER!r}, got {header!r}")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    if not rows:
        raise SchemaError(f"{path}: no data rows (0 rows after the header)")
    series: dict[str, list] = {}
    for parts in rows:
        if len(parts) != 5:
            raise SchemaError(f"{path}: malformed row {parts!r}")
        t, norm_id, _p, _q, value = parts
        series.setdefault(norm_id, []).append((float(t), float(value)))
    out = {}
    for norm_id, pts in series.items():
        arr = np.array(pts)
        out[norm_id] = NormSeries(norm_id=norm_id, t=arr[:, 0], value=arr[:, 1])
    return out


def read_report(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


@dataclass
class FieldSnapshot:
    dim: int
    N: tuple[int, ...]
    L: tuple[float, ...]
    t: float
    values: np.ndarray


def read_nlsf(path) -> FieldSnapshot:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != b"NLSF":
            raise SchemaError(f"{path}: corrupt header (magic {magic!r})")
        version, dim = struct.unpack("<II", fh.read(8))
        if version != 1:
            raise SchemaError(f"{path}: unsupported NLSF version {version}")
        N = struct.unpack(f"<{dim}I", fh.read(4 * dim))
        L = struct.unpack(f"<{dim}d", fh.read(8 * dim))
        (t,) = struct.unpack("<d", fh.read(8))
        count = 2 * int(np.prod(N))
        data = np.frombuffer(fh.read(count * 8), dtype="<f8")
    if data.size != count:
        raise SchemaError(f"{path}: truncated payload")
    return FieldSnapshot(dim=dim, N=N, L=L, t=t, values=(data[0::2] + 1j * data[1::2]).reshape(N))


# decay-rate definition shared with the producer's reports: log-linear least
# squares over [0.2*T, T] of the samples above the 1e-12 floor
FLOOR = 1e-12


def fit_slope(t, v, window=None, floor=FLOOR):
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    keep = v > floor
    if keep.sum() < 5:
        raise ValueError("insufficient samples above floor for a slope fit")
    t, v = t[keep], v[keep]
    if window is None:
        window = (t[0] + 0.2 * (t[-1] - t[0]), t[-1])
    sel = (t >= window[0]) & (t <= window[1])
    if sel.sum() < 5:
        raise ValueError("insufficient samples inside the fit window")
    slope, _ = np.polyfit(t[sel], np.log(v[sel]), 1)
    return float(-slope)
