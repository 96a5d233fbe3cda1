"""Least-squares decay-rate fitting shared by the estimate checks and the
fixed-point construction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FLOOR = 1e-12  # values below this carry no double-precision meaning here


@dataclass(frozen=True)
class RateFit:
    rate: float        # decay rate lambda (positive = decaying like e^{-lambda t})
    intercept: float
    residual: float    # RMS residual in log space
    n_points: int
    window: tuple[float, float]


def fit_log_rate(times, values, window: tuple[float, float] | None = None, floor: float = FLOOR) -> RateFit:
    """Fit log(values) = -rate * t + b by least squares.

    Sub-floor values are discarded first; the default window is then
    [0.2*T, T] of the surviving span.  Raises ValueError with fewer than 5
    usable samples (degenerate fit).
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = v > floor
    if keep.sum() < 5:
        raise ValueError(f"insufficient samples above floor {floor:g} for a rate fit")
    t, v = t[keep], v[keep]
    if window is None:
        window = (t[0] + 0.2 * (t[-1] - t[0]), t[-1])
    sel = (t >= window[0]) & (t <= window[1])
    if sel.sum() < 5:
        raise ValueError("insufficient samples inside the fit window")
    tt, lv = t[sel], np.log(v[sel])
    slope, intercept = np.polyfit(tt, lv, 1)
    res = float(np.sqrt(np.mean((lv - (slope * tt + intercept)) ** 2)))
    return RateFit(
        rate=float(-slope),
        intercept=float(intercept),
        residual=res,
        n_points=int(sel.sum()),
        window=(float(window[0]), float(window[1])),
    )
