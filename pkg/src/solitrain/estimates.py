"""Interaction source terms on grids, mixed Lebesgue norms, and the
decay/boundedness checks they are supposed to satisfy."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .fitting import RateFit, fit_log_rate
from .grids import Field, Grid
from .nonlinearity import eval_f
from .solitons import eval_soliton_grid, eval_soliton_gradient_grid
from .train import DimGroup, TrainSpec, compute_A, compute_B, vstar_within


# ----------------------------------------------------------------------------
# mixed Lebesgue norms by rectangle-rule quadrature


@dataclass(frozen=True)
class GridNorm:
    p: float
    q: float | None = None
    split: tuple[int, int] | None = None
    value: float = 0.0


def lp_norm(values: np.ndarray, grid: Grid, p: float, q: float | None = None,
            split: tuple[int, int] | None = None) -> float:
    """Rectangle-rule L^p norm; with (q, split) the anisotropic
    L^p_{x'} L^q_{x''} norm, x' spanning the first split[0] axes.
    L^inf is the sample max."""
    if p <= 0 or (q is not None and q <= 0):
        raise ValueError("exponents must lie in (0, inf]")
    a = np.abs(values)
    if q is None or split is None:
        if np.isinf(p):
            return float(a.max())
        return float((np.sum(a**p) * grid.cell_volume) ** (1.0 / p))
    e_out, e_in = split
    if e_out + e_in != grid.dim or e_out < 1 or e_in < 1:
        raise ValueError(f"split {split} does not partition {grid.dim} axes")
    inner_axes = tuple(range(e_out, grid.dim))
    vol_in = float(np.prod([grid.dx[i] for i in inner_axes]))
    if np.isinf(q):
        inner = a.max(axis=inner_axes)
    else:
        inner = (np.sum(a**q, axis=inner_axes) * vol_in) ** (1.0 / q)
    vol_out = float(np.prod([grid.dx[i] for i in range(e_out)]))
    if np.isinf(p):
        return float(inner.max())
    return float((np.sum(inner**p) * vol_out) ** (1.0 / p))


def grid_norm(f: Field, req: GridNorm) -> GridNorm:
    """Evaluate a norm request on a field, returning the filled-in record."""
    val = lp_norm(f.values, f.grid, req.p, q=req.q, split=req.split)
    return GridNorm(p=req.p, q=req.q, split=req.split, value=val)


def holder_interpolation_ok(values: np.ndarray, grid: Grid, r: float, s: float,
                            rel_slack: float = 1e-12) -> bool:
    """||u||_r <= ||u||_s^(s/r) ||u||_inf^(1-s/r); exact for grid measures."""
    if not (r > s > 0):
        raise ValueError("need r > s > 0")
    nr = lp_norm(values, grid, r)
    ns = lp_norm(values, grid, s)
    ninf = lp_norm(values, grid, np.inf)
    return nr <= ns ** (s / r) * ninf ** (1.0 - s / r) * (1.0 + rel_slack)


# ----------------------------------------------------------------------------
# source fields from soliton closures (pointwise; no PDE solve involved)

SOURCE_KINDS = ("H_single", "H1_mixed", "H2_mixed", "G", "gradH", "gradG")


@dataclass
class SourceField:
    kind: str
    grid: Grid
    samples: np.ndarray
    t: float


def _group_states(spec: TrainSpec, g: DimGroup):
    spec.ensure_bound_states()
    return [(g.bound_states[sp.omega], sp) for sp in g.solitons]


def train_profile(spec: TrainSpec, dim: int, t: float, grid: Grid) -> np.ndarray:
    """T_e(t) evaluated (embedded) on the grid."""
    out = grid.zeros()
    for bs, sp in _group_states(spec, spec.group(dim)):
        out += eval_soliton_grid(bs, sp, t, grid)
    return out


def train_profile_gradient(spec: TrainSpec, dim: int, t: float, grid: Grid) -> np.ndarray:
    out = np.zeros((grid.dim,) + grid.shape, dtype=complex)
    for bs, sp in _group_states(spec, spec.group(dim)):
        out += eval_soliton_gradient_grid(bs, sp, t, grid)
    return out


def _warn_outside(spec: TrainSpec, t: float, grid: Grid) -> None:
    import warnings

    for g in spec.groups:
        for sp in g.solitons:
            for i in range(sp.dim):
                c = sp.x0[i] + sp.v[i] * t
                if abs(c) > grid.L[i]:
                    warnings.warn(
                        f"soliton center {c:.3g} outside the box on axis {i} "
                        "(wrapped by periodicity)",
                        stacklevel=3,
                    )
                    return


def source_H(spec: TrainSpec, t: float, grid: Grid, dim: int | None = None) -> SourceField:
    """H = f(T) - sum_j f(R_j) for one dimension group (single-group train)."""
    g = spec.group(dim) if dim is not None else spec.groups[0]
    _warn_outside(spec, t, grid)
    total = grid.zeros()
    fsum = grid.zeros()
    for bs, sp in _group_states(spec, g):
        R = eval_soliton_grid(bs, sp, t, grid)
        total += R
        fsum += eval_f(spec.nl, R)
    return SourceField("H_single", grid, eval_f(spec.nl, total) - fsum, t)


def source_H1(spec: TrainSpec, t: float, grid: Grid,
              eta_lower: np.ndarray | None = None) -> SourceField:
    """H1 = f(W + T_d) - f(W) - f(T_d), W = sum of lower-dim trains (+ errors)."""
    dims = spec.dims
    if len(dims) < 2:
        raise ValueError("H1 requires a mixed train")
    W = grid.zeros()
    for d in dims[:-1]:
        W += train_profile(spec, d, t, grid)
    if eta_lower is not None:
        W = W + eta_lower
    Td = train_profile(spec, dims[-1], t, grid)
    nl = spec.nl
    samples = eval_f(nl, W + Td) - eval_f(nl, W) - eval_f(nl, Td)
    return SourceField("H1_mixed", grid, samples, t)


def source_H2(spec: TrainSpec, t: float, grid: Grid) -> SourceField:
    """H2 = f(T_d) - sum_j f(R_{d;j}) over the top dimension group."""
    g = spec.groups[-1]
    total = grid.zeros()
    fsum = grid.zeros()
    for bs, sp in _group_states(spec, g):
        R = eval_soliton_grid(bs, sp, t, grid)
        total += R
        fsum += eval_f(spec.nl, R)
    return SourceField("H2_mixed", grid, eval_f(spec.nl, total) - fsum, t)


def source_gradH(spec: TrainSpec, t: float, grid: Grid, dim: int | None = None) -> SourceField:
    """grad H by the chain rule with analytic soliton gradients."""
    from .nonlinearity import gradient_of_f

    g = spec.group(dim) if dim is not None else spec.groups[0]
    total = grid.zeros()
    grad_total = np.zeros((grid.dim,) + grid.shape, dtype=complex)
    parts = []
    for bs, sp in _group_states(spec, g):
        R = eval_soliton_grid(bs, sp, t, grid)
        dR = eval_soliton_gradient_grid(bs, sp, t, grid)
        total += R
        grad_total += dR
        parts.append((R, dR))
    out = gradient_of_f(spec.nl, total, grad_total)
    for R, dR in parts:
        out = out - gradient_of_f(spec.nl, R, dR)
    return SourceField("gradH", grid, out, t)


# ----------------------------------------------------------------------------
# decay/boundedness reports for the interaction sources


@dataclass
class BoundReport:
    times: np.ndarray
    norms: dict                      # norm label -> array over times
    holder_ok: bool
    fit: RateFit
    rate_target: float               # fitted rate must be >= this (decay at least this fast)
    rate_ok: bool
    coefficient: float               # measured sup ||.||_s / (A-sum side)
    details: dict = field(default_factory=dict)


def _fit_sup_norm(times, sup_vals, window):
    return fit_log_rate(times, sup_vals, window=window)


def check_H0(spec: TrainSpec, r: float, s: float, times, grid: Grid,
             fit_window=None, margin: float = 0.9) -> BoundReport:
    """Measure ||H(t)||_r, the exact interpolation chain, the boundedness of
    ||H||_s, and the fitted decay rate of ||H(t)||_inf against a*v_*."""
    if not (r > s > 0):
        raise ValueError("need r > s > 0")
    g = spec.groups[0]
    vstar = vstar_within(g)
    if not np.isfinite(vstar):
        raise ValueError("within-group v_* must be finite (need >= 2 solitons)")
    times = np.asarray(times, dtype=float)
    if times.size < 3:
        raise ValueError("need at least 3 time samples for a rate fit")
    nr, ns, ninf = [], [], []
    holder = True
    for t in times:
        Hf = source_H(spec, t, grid, dim=g.dim)
        nr.append(lp_norm(Hf.samples, grid, r))
        ns.append(lp_norm(Hf.samples, grid, s))
        ninf.append(lp_norm(Hf.samples, grid, np.inf))
        holder &= holder_interpolation_ok(Hf.samples, grid, r, s)
    fit = _fit_sup_norm(times, ninf, fit_window)
    a1 = spec.nl.alpha1
    a_sum = sum(
        compute_A(g.omegas(), (a + 1.0) * s, a1, g.dim) ** (a + 1.0)
        for a in (spec.nl.alpha1, spec.nl.alpha2)
    )
    target = spec.a * vstar * margin
    return BoundReport(
        times=times,
        norms={f"H_L{r:g}": np.array(nr), f"H_L{s:g}": np.array(ns), "H_Linf": np.array(ninf)},
        holder_ok=holder,
        fit=fit,
        rate_target=target,
        rate_ok=bool(fit.rate >= target),
        coefficient=float(max(ns) / a_sum),
        details={"vstar": vstar, "a": spec.a, "r": r, "s": s},
    )


def check_H1(spec: TrainSpec, r: float, s: float, p: float, q: float, times,
             grid: Grid, fit_window=None, margin: float = 0.9) -> BoundReport:
    """Gradient variant: rate target a*min(alpha1,1)*v_* for ||grad H||_inf,
    s-norm bounded by sum_i A_{alpha_i q}^{alpha_i} B_p.  Requires
    1/q + 1/p = 1/s."""
    if not (r > s > 0):
        raise ValueError("need r > s > 0")
    inv = (0.0 if np.isinf(q) else 1.0 / q) + (0.0 if np.isinf(p) else 1.0 / p)
    if abs(inv - 1.0 / s) > 1e-12:
        raise ValueError("exponents must satisfy 1/q + 1/p = 1/s")
    g = spec.groups[0]
    vstar = vstar_within(g)
    if not np.isfinite(vstar):
        raise ValueError("within-group v_* must be finite")
    times = np.asarray(times, dtype=float)
    if times.size < 3:
        raise ValueError("need at least 3 time samples for a rate fit")
    nr, ns, ninf = [], [], []
    holder = True
    for t in times:
        gh = source_gradH(spec, t, grid, dim=g.dim)
        mag = np.sqrt(np.sum(np.abs(gh.samples) ** 2, axis=0))
        nr.append(lp_norm(mag, grid, r))
        ns.append(lp_norm(mag, grid, s))
        ninf.append(lp_norm(mag, grid, np.inf))
        holder &= holder_interpolation_ok(mag, grid, r, s)
    fit = _fit_sup_norm(times, ninf, fit_window)
    a1 = spec.nl.alpha1
    coeff_den = sum(
        compute_A(g.omegas(), a * q, a1, g.dim) ** a
        * compute_B(g.omegas(), g.velocities(), p, a1, g.dim)
        for a in (spec.nl.alpha1, spec.nl.alpha2)
    )
    target = spec.a * min(a1, 1.0) * vstar * margin
    return BoundReport(
        times=times,
        norms={f"gradH_L{r:g}": np.array(nr), f"gradH_L{s:g}": np.array(ns),
               "gradH_Linf": np.array(ninf)},
        holder_ok=holder,
        fit=fit,
        rate_target=target,
        rate_ok=bool(fit.rate >= target),
        coefficient=float(max(ns) / coeff_den),
        details={"vstar": vstar, "r": r, "s": s, "p": p, "q": q},
    )


# ----------------------------------------------------------------------------
# the missing-decay demonstration for mixed sources


@dataclass
class NoDecayReport:
    x2: np.ndarray
    raw: np.ndarray          # |uncorrected source| along the ray
    corrected: np.ndarray    # |H1| along the ray
    limit_raw: float         # 1D cancellation value at the chosen (t, x1)
    x1: float
    t: float


def demonstrate_nodecay(spec: TrainSpec, t: float, grid: Grid,
                        eta_lower: np.ndarray | None = None,
                        x1_index: int | None = None) -> NoDecayReport:
    """Sample f(T_1+T_2) - sum f(R_{1;k}) - sum f(R_{2;j}) along increasing x2
    and compare with the corrected H1, which decays with the 2D solitons."""
    if len(spec.dims) < 2 or spec.dims[0] != 1:
        raise ValueError("requires a mixed train with a 1D group")
    nl = spec.nl
    g1 = spec.group(1)
    # raw = f(sum of everything) - sum of per-soliton f over ALL solitons
    total = grid.zeros()
    fsum = grid.zeros()
    for g in spec.groups:
        for bs, sp in _group_states(spec, g):
            R = eval_soliton_grid(bs, sp, t, grid)
            total += R
            fsum += eval_f(nl, R)
    raw = eval_f(nl, total) - fsum
    corrected = source_H1(spec, t, grid, eta_lower=eta_lower).samples

    # the x2 -> inf limit of raw is the pure-1D cancellation
    T1 = grid.zeros()
    f1sum = grid.zeros()
    for bs, sp in _group_states(spec, g1):
        R = eval_soliton_grid(bs, sp, t, grid)
        T1 += R
        f1sum += eval_f(nl, R)
    limit_line = np.abs(eval_f(nl, T1) - f1sum)
    line0 = limit_line[(slice(None),) + (0,) * (grid.dim - 1)]
    idx = int(np.argmax(line0)) if x1_index is None else x1_index
    sel = (idx,) + (slice(None),) + (0,) * (grid.dim - 2)
    return NoDecayReport(
        x2=grid.axis(1),
        raw=np.abs(raw[sel]),
        corrected=np.abs(corrected[sel]),
        limit_raw=float(line0[idx]),
        x1=float(grid.axis(0)[idx]),
        t=t,
    )


# ----------------------------------------------------------------------------
# anisotropic counterexample: u(x,y) = 1_{0<x<1} x^{ma} psi(x^a y)


def _bump(y):
    y = np.asarray(y, dtype=float)
    inside = np.abs(y) < 1.0
    yy = np.where(inside, y, 0.0)
    return np.where(inside, np.exp(-1.0 / (1.0 - yy**2)), 0.0)


def _bump_norm(q: float) -> float:
    y = np.linspace(-1.0, 1.0, 8193)
    return float(simpson(_bump(y) ** q, x=y) ** (1.0 / q))


@dataclass(frozen=True)
class CounterexampleNorms:
    iso_p: float
    iso_q: float
    aniso: float
    eps: float


def _admissible_counterexample(m, a, p, q):
    if not (p > q > 0):
        raise ValueError("need p > q > 0")
    if not (0 < m < 1.0 / q):
        raise ValueError("need 0 < m < 1/q (otherwise no admissible a exists)")
    lhs = a * p * (m - 1.0 / q)
    if not (lhs < -1.0 < min(a * p * (m - 1.0 / p), a * q * (m - 1.0 / q))):
        raise ValueError(
            f"a={a} violates ap(m-1/q) < -1 < min(ap(m-1/p), aq(m-1/q))"
        )


def _power_integral(beta: float, eps: float) -> float:
    """int_eps^1 x^beta dx by Simpson after x = e^u (robust near x = 0)."""
    u = np.linspace(np.log(eps), 0.0, 8193)
    return float(simpson(np.exp((beta + 1.0) * u), x=u))


def anisotropic_counterexample(m: float, a: float, p: float, q: float, eps: float) -> CounterexampleNorms:
    """The three norms of the scaling counterexample, x-integral truncated at eps.

    The y-integral is removed exactly by the substitution u = x^a y, leaving
    one-dimensional x-quadratures (done in log coordinates)."""
    _admissible_counterexample(m, a, p, q)
    psi_p = _bump_norm(p)
    psi_q = _bump_norm(q)
    iso_p = psi_p * _power_integral(a * p * (m - 1.0 / p), eps) ** (1.0 / p)
    iso_q = psi_q * _power_integral(a * q * (m - 1.0 / q), eps) ** (1.0 / q)
    aniso = psi_q * _power_integral(a * p * (m - 1.0 / q), eps) ** (1.0 / p)
    return CounterexampleNorms(iso_p=float(iso_p), iso_q=float(iso_q), aniso=float(aniso), eps=eps)


@dataclass
class CounterexampleSweep:
    eps: np.ndarray
    iso_p: np.ndarray
    iso_q: np.ndarray
    aniso: np.ndarray
    fitted_exponent: float
    predicted_exponent: float


def anisotropic_counterexample_sweep(m: float, a: float, p: float, q: float, eps_values=None) -> CounterexampleSweep:
    """Blow-up rate of the anisotropic norm as eps -> 0: fitted against the
    predicted exponent (1 + ap(m - 1/q))/p (negative)."""
    if eps_values is None:
        eps_values = np.geomspace(1e-10, 1e-2, 9)
    eps_values = np.asarray(eps_values, dtype=float)
    rows = [anisotropic_counterexample(m, a, p, q, e) for e in eps_values]
    aniso = np.array([r.aniso for r in rows])
    slope = np.polyfit(np.log(eps_values), np.log(aniso), 1)[0]
    return CounterexampleSweep(
        eps=eps_values,
        iso_p=np.array([r.iso_p for r in rows]),
        iso_q=np.array([r.iso_q for r in rows]),
        aniso=aniso,
        fitted_exponent=float(slope),
        predicted_exponent=(1.0 + a * p * (m - 1.0 / q)) / p,
    )
