"""Periodic boxes and complex-valued fields sampled on them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _as_tuple(val, dim, cast):
    if np.isscalar(val):
        return tuple(cast(val) for _ in range(dim))
    out = tuple(cast(v) for v in val)
    if len(out) != dim:
        raise ValueError(f"expected {dim} per-axis values, got {len(out)}")
    return out


@dataclass(frozen=True)
class Grid:
    """Uniform periodic box [-L_i, L_i) with N_i points per axis.

    Wavenumbers per axis are (pi/L)*{-N/2, ..., N/2-1}, i.e. the standard
    FFT set for spacing 2L/N.
    """

    dim: int
    L: tuple[float, ...]
    N: tuple[int, ...]

    def __init__(self, dim: int, L, N):
        if dim not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "L", _as_tuple(L, dim, float))
        object.__setattr__(self, "N", _as_tuple(N, dim, int))
        for n in self.N:
            if n < 2 or (n & (n - 1)) != 0:
                raise ValueError(f"points per axis must be a power of two, got {n}")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.N

    @property
    def dx(self) -> tuple[float, ...]:
        return tuple(2 * l / n for l, n in zip(self.L, self.N))

    @property
    def cell_volume(self) -> float:
        out = 1.0
        for d in self.dx:
            out *= d
        return out

    def axis(self, i: int) -> np.ndarray:
        return -self.L[i] + self.dx[i] * np.arange(self.N[i])

    def axis_bc(self, i: int) -> np.ndarray:
        """Axis i reshaped for broadcasting against a full grid array."""
        shape = [1] * self.dim
        shape[i] = self.N[i]
        return self.axis(i).reshape(shape)

    def wavenumbers(self, i: int) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.N[i], d=self.dx[i])

    def k2(self) -> np.ndarray:
        """|k|^2 over the full grid (broadcast sum of per-axis squares)."""
        out = 0
        for i in range(self.dim):
            shape = [1] * self.dim
            shape[i] = self.N[i]
            out = out + (self.wavenumbers(i) ** 2).reshape(shape)
        return out

    def radius2(self, center, ndims: int | None = None) -> np.ndarray:
        """sum_{i<ndims} (x_i - center_i)^2 broadcast over the grid."""
        e = self.dim if ndims is None else ndims
        out = 0
        for i in range(e):
            out = out + (self.axis_bc(i) - center[i]) ** 2
        return out

    def zeros(self) -> np.ndarray:
        return np.zeros(self.N, dtype=complex)

    def boundary_shell_max(self, values: np.ndarray, cells: int = 2) -> float:
        """max |values| on the outermost grid cells; measures wrap-around."""
        out = 0.0
        a = np.abs(values)
        for i in range(self.dim):
            sl_lo = [slice(None)] * self.dim
            sl_lo[i] = slice(0, cells)
            sl_hi = [slice(None)] * self.dim
            sl_hi[i] = slice(-cells, None)
            out = max(out, a[tuple(sl_lo)].max(), a[tuple(sl_hi)].max())

        return float(out)


@dataclass
class Field:
    """Complex samples on a grid at one time."""

    grid: Grid
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    def check_finite(self) -> None:
        s = self.values.real.sum() + self.values.imag.sum()
        if not np.isfinite(s):
            raise FloatingPointError(f"non-finite field samples at t={self.t}")

    def mass(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume)

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy(), self.t)
