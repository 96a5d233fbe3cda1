"""Spectral NLS integration, the free propagator, Strichartz norms, and the
backward Duhamel fixed-point construction of the train errors.

The Duhamel integral is discretized on a uniform tau grid with the free
propagator handled exactly per Fourier mode and the source interpolated
quadratically between nodes (exponential-integrator weights).  The backward
recursion makes one sweep cost O(n_time) transforms.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.fft as sfft

from .fitting import FLOOR, fit_log_rate
from .grids import Field, Grid
from .nonlinearity import NonlinearityParams, eval_f, eval_g
from .estimates import lp_norm, train_profile
from .train import TheoremPlan, TrainSpec, compute_vstar


class PicardDivergenceError(RuntimeError):
    def __init__(self, message, factors):
        super().__init__(message)
        self.factors = list(factors)


# ----------------------------------------------------------------------------
# linear propagation and split-step integration


def free_propagate(f: Field, dt: float) -> Field:
    """e^{it Delta} over one step: multiplier e^{-i|k|^2 dt} in Fourier space.

    Exactly unitary in the discrete L^2 inner product."""
    if dt == 0.0:
        return f.copy()
    mult = np.exp(-1j * f.grid.k2() * dt)
    vals = sfft.ifftn(mult * sfft.fftn(f.values))
    return Field(f.grid, vals, f.t + dt)


def split_step(f: Field, dt: float, nl: NonlinearityParams, n_steps: int = 1) -> Field:
    """Strang splitting: half kinetic, full nonlinear phase rotation
    u -> u e^{i g(|u|^2) dt}, half kinetic.  Exactly mass-conserving."""
    half = np.exp(-1j * f.grid.k2() * (dt / 2.0))
    full = half * half
    u = f.values
    g0 = eval_g(nl, np.abs(u) ** 2)
    if np.max(np.abs(g0)) * dt >= np.pi:
        warnings.warn("nonlinear phase per step exceeds pi; reduce dt", stacklevel=2)
    u = sfft.ifftn(half * sfft.fftn(u))
    for step in range(n_steps):
        u = u * np.exp(1j * eval_g(nl, np.abs(u) ** 2) * dt)
        u = sfft.ifftn((full if step < n_steps - 1 else half) * sfft.fftn(u))
        s = u.real.sum()
        if not np.isfinite(s):
            raise FloatingPointError(f"split step produced NaN at step {step + 1}")
    return Field(f.grid, u, f.t + n_steps * dt)


def spectral_gradient(values: np.ndarray, grid: Grid) -> np.ndarray:
    vhat = sfft.fftn(values)
    out = np.empty((grid.dim,) + grid.shape, dtype=complex)
    for i in range(grid.dim):
        shape = [1] * grid.dim
        shape[i] = grid.N[i]
        out[i] = sfft.ifftn(1j * grid.wavenumbers(i).reshape(shape) * vhat)
    return out


def spectral_laplacian(values: np.ndarray, grid: Grid) -> np.ndarray:
    return sfft.ifftn(-grid.k2() * sfft.fftn(values))


def nls_residual(fields: list[Field], nl: NonlinearityParams) -> np.ndarray:
    """Grid-L^2 of i u_t + Delta u + f(u) per interior time (centered u_t)."""
    if len(fields) < 3:
        raise ValueError("need at least 3 consecutive time samples")
    ts = np.array([f.t for f in fields])
    hs = np.diff(ts)
    if np.max(np.abs(hs - hs[0])) > 1e-10 * abs(hs[0]):
        raise ValueError("time sampling must be uniform")
    h = hs[0]
    grid = fields[0].grid
    out = []
    for i in range(1, len(fields) - 1):
        dudt = (fields[i + 1].values - fields[i - 1].values) / (2 * h)
        res = 1j * dudt + spectral_laplacian(fields[i].values, grid) + eval_f(
            nl, fields[i].values
        )
        out.append(lp_norm(res, grid, 2.0))
    return np.array(out)


# ----------------------------------------------------------------------------
# Strichartz machinery


@dataclass(frozen=True)
class StrichartzPair:
    q: float
    r: float
    d: int

    @property
    def admissible(self) -> bool:
        if not (2 <= self.r <= r_max(self.d)):
            return False
        if np.isinf(self.q):
            return self.r == 2
        if np.isinf(self.r):
            return self.d == 1 and self.q == 4
        lhs = Fraction(2) / Fraction(self.q).limit_denominator(10**9) + Fraction(
            self.d
        ) / Fraction(self.r).limit_denominator(10**9)
        return lhs == Fraction(self.d, 2)


def r_max(d: int) -> float:
    if d == 1:
        return np.inf
    if d == 2:
        return 4.0  # kept finite to avoid the forbidden endpoint
    return 2.0 * d / (d - 2)


def q_min(d: int) -> float:
    return 4.0 if d <= 2 else 2.0


def defining_pairs(d: int) -> list[StrichartzPair]:
    return [StrichartzPair(np.inf, 2.0, d), StrichartzPair(q_min(d), r_max(d), d)]


def sub_admissible(p: float, r: float, d: int) -> bool:
    if not (2 <= r <= r_max(d)) or p <= 0:
        return False
    inv_p = 0.0 if np.isinf(p) else 1.0 / p
    inv_r = 0.0 if np.isinf(r) else 1.0 / r
    return 2 * inv_p + d * inv_r >= d / 2.0 - 1e-15


def _tail_time_norm(times, spatial, q: float, t_from: float) -> float:
    """Rectangle-rule L^q over [t_from, T_end] of a sampled scalar t -> |.|."""
    times = np.asarray(times, dtype=float)
    sel = times >= t_from - 1e-12
    vals = np.asarray(spatial, dtype=float)[sel]
    if vals.size == 0:
        return 0.0
    if np.isinf(q):
        return float(vals.max())
    h = times[1] - times[0]
    return float((np.sum(vals[:-1] ** q) * h) ** (1.0 / q)) if vals.size > 1 else 0.0


def strichartz_norm(fields: list[Field], t_from: float, pair: StrichartzPair) -> float:
    """Discrete L^q_t L^r_x norm over [t_from, T_end]."""
    if not pair.admissible:
        raise ValueError(f"pair (q={pair.q}, r={pair.r}) not admissible for d={pair.d}")
    times = [f.t for f in fields]
    spat = [lp_norm(f.values, f.grid, pair.r) for f in fields]
    return _tail_time_norm(times, spat, pair.q, t_from)


def s_norm(fields: list[Field], t_from: float) -> float:
    """S(t) = max over the two defining pairs."""
    d = fields[0].grid.dim
    return max(strichartz_norm(fields, t_from, p) for p in defining_pairs(d))


def _s_tail_series(times, l2_vals, lr_vals, d: int) -> np.ndarray:
    """||.||_{S(t_i)} for every node, via backward cumulatives."""
    times = np.asarray(times, dtype=float)
    n = len(times)
    h = times[1] - times[0]
    qm = q_min(d)
    sup_l2 = np.maximum.accumulate(np.asarray(l2_vals)[::-1])[::-1]
    pw = np.asarray(lr_vals, dtype=float) ** qm
    csum = np.concatenate([np.cumsum((pw[:-1] * h)[::-1])[::-1], [0.0]])
    return np.maximum(sup_l2, csum ** (1.0 / qm))


# ----------------------------------------------------------------------------
# tail-norm transfer (sub-admissible pairs) and the N1 exponent selection


@dataclass(frozen=True)
class SubadReport:
    hypothesis_ok: bool
    bound_ok: bool
    Ctilde: float
    worst_ratio: float


def subadmissible_C(p: float) -> float:
    if np.isinf(p):
        return 1.0
    return (1.0 - np.exp(-p)) ** (-1.0 / p)


def subadmissible_decay_check(times, values, p: float, q: float, lam: float) -> SubadReport:
    """Verify: if ||u||_{L^q([t,inf))} <= e^{-lam t} on the series, then
    ||u||_{L^p([t,inf))} <= C~ lam^(1/q - 1/p) e^{-lam t} with
    C~ = 1 (p = q), p^(-1/p) (q = inf), (1 - e^-p)^(-1/p) otherwise."""
    if not (0 < p <= q):
        raise ValueError("need 0 < p <= q")
    times = np.asarray(times, dtype=float)
    vals = np.asarray(values, dtype=float)
    qt = np.array([_tail_time_norm(times, vals, q, t) for t in times])
    hyp = bool(np.all(qt <= np.exp(-lam * times) * (1.0 + 1e-9)))
    if not hyp:
        raise ValueError("hypothesis ||u||_{L^q([t,inf))} <= e^{-lam t} fails on input")
    if p == q:
        C = 1.0
    elif np.isinf(q):
        C = p ** (-1.0 / p)
    else:
        C = subadmissible_C(p)
    inv_q = 0.0 if np.isinf(q) else 1.0 / q
    target = C * lam ** (inv_q - 1.0 / p) * np.exp(-lam * times)
    pt = np.array([_tail_time_norm(times, vals, p, t) for t in times])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(target > 0, pt / target, 0.0)
    worst = float(ratios.max())
    return SubadReport(hypothesis_ok=hyp, bound_ok=bool(worst <= 1.0 + 1e-9), Ctilde=C, worst_ratio=worst)


def choose_N1_exponents(d: int, m: float) -> tuple[float, float, float]:
    """Deterministic (p, b, mu) for the gradient-route product estimate.

    mu = 1 - (m/2)(d/2 - b) > 0 always; b obeys the selection rules of the
    case analysis (d <= 2: p = 2; d >= 3: p = 2 below the threshold
    m <= 2/(d-2), else the unique p with b = 1)."""
    amax = np.inf if d <= 2 else 4.0 / (d - 2)
    if not (0 < m < amax):
        raise ValueError(f"m must lie in (0, {amax}) for d={d}")
    if d == 1:
        p, b = 2.0, max((m - 1.0) / (2.0 * m), 0.0)
    elif d == 2:
        lo = max((2.0 * m - 1.0) / (2.0 * m), 0.0)
        p, b = 2.0, 0.5 * (lo + 1.0)  # midpoint of the legal interval [lo, 1)
    elif m <= 2.0 / (d - 2):
        p, b = 2.0, max(d / 2.0 - 1.0 / m, 0.0)
    else:
        p, b = 2.0 * (m + 1.0) * d / (2.0 * (m + 1.0) + d), 1.0
    mu = 1.0 - (m / 2.0) * (d / 2.0 - b)
    return p, b, mu


def n1_constraints(d: int, m: float, p: float, b: float) -> dict:
    """Direct re-check of the validity conditions for (p, b)."""
    rmaxp = 1.0 if d == 1 else (4.0 / 3.0 if d == 2 else 2.0 * d / (d + 2))
    lo = (d / m) * ((m + 1.0) / p - 1.0 / rmaxp)
    hi = (d / m) * ((m + 1.0) / p - 0.5)
    mu = 1.0 - (m / 2.0) * (d / 2.0 - b)
    eps = 1e-12
    return {
        "b1": (0.0 <= b <= 1.0) and not (b == 1.0 and p == d and d > 1),
        "b2": lo - eps <= b <= hi + eps,
        "p_range": 2.0 - eps <= p <= r_max(d) + eps,
        "mu_positive": mu > 0.0,
        "mu": mu,
    }


# ----------------------------------------------------------------------------
# decay fitting


@dataclass
class DecayFit:
    lambda_hat: float | None
    c1_hat: float | None
    window: tuple[float, float]
    residual: float
    norms_tracked: list[str]
    rate_raw: float = 0.0


def fit_decay(times, values, window=None, grad_values=None, label: str = "L2") -> DecayFit:
    """Log-linear least squares of a norm series; the rate ratio of the
    gradient series gives c1_hat.  lambda_hat is withheld when the log-space
    RMS residual reaches 0.1."""
    fit = fit_log_rate(times, values, window=window)
    c1 = None
    tracked = [label]
    if grad_values is not None:
        gfit = fit_log_rate(times, grad_values, window=window)
        if fit.rate != 0:
            c1 = gfit.rate / fit.rate
        tracked.append("grad_" + label)
    return DecayFit(
        lambda_hat=fit.rate if fit.residual < 0.1 else None,
        c1_hat=c1,
        window=fit.window,
        residual=fit.residual,
        norms_tracked=tracked,
        rate_raw=fit.rate,
    )


# ----------------------------------------------------------------------------
# Gagliardo-Nirenberg interpolation checks


@dataclass(frozen=True)
class GNReport:
    theta: float
    G_fit: float
    ratios: np.ndarray
    ok: bool


def gn_interpolate_check(fields: list[Field], p: float, r: float) -> GNReport:
    """||u||_p <= G ||u||_2^(1-theta) ||grad u||_r^theta per time slice with
    theta = (1/2 - 1/p) / (1/2 + 1/d - 1/r); requires r > d."""
    grid = fields[0].grid
    d = grid.dim
    if not (r > d):
        raise ValueError("need r > d")
    inv_p = 0.0 if np.isinf(p) else 1.0 / p
    inv_r = 0.0 if np.isinf(r) else 1.0 / r
    theta = (0.5 - inv_p) / (0.5 + 1.0 / d - inv_r)
    if not (0.0 <= theta <= 1.0):
        raise ValueError(f"interpolation exponent theta={theta} outside [0, 1]")
    ratios = []
    for f in fields:
        lhs = lp_norm(f.values, grid, p)
        l2 = lp_norm(f.values, grid, 2.0)
        gr = spectral_gradient(f.values, grid)
        mag = np.sqrt(np.sum(np.abs(gr) ** 2, axis=0))
        lr = lp_norm(mag, grid, r)
        rhs = l2 ** (1.0 - theta) * lr**theta
        ratios.append(lhs / rhs if rhs > FLOOR else 0.0)
    ratios = np.array(ratios)
    return GNReport(theta=theta, G_fit=float(ratios.max()), ratios=ratios, ok=bool(np.isfinite(ratios).all()))


def t6_control(times, sup_x_vals, lam: float) -> tuple[float, np.ndarray]:
    """C = sup_t ||u||_{L^6([t,T])} e^{lam t} for the L_t^6 L_{x'}^inf bound."""
    times = np.asarray(times, dtype=float)
    tails = np.array([_tail_time_norm(times, sup_x_vals, 6.0, t) for t in times])
    keep = tails > FLOOR
    ratios = tails[keep] * np.exp(lam * times[keep])
    return float(ratios.max()), tails


# ----------------------------------------------------------------------------
# the backward Duhamel / Picard construction


@dataclass
class PicardConfig:
    t0: float
    T_end: float
    n_time: int
    max_iter: int = 12
    contraction_tol: float = 1e-9
    ball_radius: float = 1.0
    lam: float = 0.0          # weight of the decay norm used in the stop rule
    lambda_scan: tuple = ()   # extra weights to re-measure contraction under

    def __post_init__(self):
        if self.t0 < 0 or self.T_end <= self.t0:
            raise ValueError("need 0 <= t0 < T_end")
        if self.n_time < 8 and self.n_time != 0:  # 0 = resolve automatically
            raise ValueError("need n_time >= 8")


@dataclass
class EtaSeries:
    grid: Grid
    taus: np.ndarray
    values: np.ndarray  # (n_nodes, *grid.shape)

    def field(self, i: int) -> Field:
        return Field(self.grid, self.values[i], float(self.taus[i]))


def embed_factory(lower: EtaSeries, top: Grid):
    """Stride-sample a lower-dimensional error series onto the leading axes of
    the top grid (axes must share L and have divisible point counts)."""
    ld = lower.grid.dim
    strides = []
    for i in range(ld):
        if abs(lower.grid.L[i] - top.L[i]) > 1e-12:
            raise ValueError("lower grid axis length does not match the top grid")
        s, rem = divmod(lower.grid.N[i], top.N[i])
        if rem:
            raise ValueError("lower grid points must be a multiple of the top grid's")
        strides.append(s)
    sl = tuple(slice(None, None, s) for s in strides)
    extra = (None,) * (top.dim - ld)

    def embed(i: int) -> np.ndarray:
        return lower.values[i][sl][(...,) + extra]

    return embed


@dataclass
class PicardResult:
    eta: EtaSeries
    plan: TheoremPlan
    converged: bool
    iterations: int
    diffs: list[float]
    factors: list[float]
    factor_scan: dict
    fits: dict
    norm_table: list          # rows (t, norm_id, p, q, value)
    wraparound: float
    vstar: float


def _j_weights(h: float, k2: np.ndarray):
    """Exact-kernel weights for quadratic source interpolation on one step.

    J_m(z) = int_0^1 s^m e^{z s} ds at z = i h k^2, with series fallback near
    z = 0 where the closed forms cancel."""
    z = 1j * h * k2
    small = np.abs(z) < 0.05
    zs = np.where(small, 1.0, z)
    ez = np.exp(zs)
    J0 = (ez - 1.0) / zs
    J1 = (ez * (zs - 1.0) + 1.0) / zs**2
    J2 = (ez * (zs**2 - 2.0 * zs + 2.0) - 2.0) / zs**3

    def series(mm):
        s = np.zeros_like(z)
        term = np.ones_like(z)
        for n in range(9):
            s = s + term / (n + mm + 1)
            term = term * z / (n + 1)
        return s

    J0 = np.where(small, series(0), J0)
    J1 = np.where(small, series(1), J1)
    J2 = np.where(small, series(2), J2)
    interior = (h * (-J1 / 2 + J2 / 2), h * (J0 - J2), h * (J1 / 2 + J2 / 2))
    first = (h * (J0 - 1.5 * J1 + J2 / 2), h * (2 * J1 - J2), h * (J2 / 2 - J1 / 2))
    return np.exp(z), interior, first


class _StageModel:
    """Profiles and sources for one construction stage: the last group of the
    spec is being corrected; earlier groups enter through their train
    profiles plus the already constructed errors."""

    def __init__(self, spec: TrainSpec, grid: Grid, taus, lower: list[EtaSeries]):
        spec.ensure_bound_states()
        self.spec = spec
        self.grid = grid
        self.taus = taus
        self.nl = spec.nl
        if len(lower) != len(spec.groups) - 1:
            raise ValueError(
                f"stage over dims {spec.dims} needs {len(spec.groups) - 1} "
                f"lower-dimensional error series, got {len(lower)}"
            )
        self._embeds = [embed_factory(es, grid) for es in lower]
        for es in lower:
            if len(es.taus) != len(taus) or abs(es.taus[0] - taus[0]) > 1e-12 or abs(
                es.taus[-1] - taus[-1]
            ) > 1e-12:
                raise ValueError("lower-dimensional error series must share the tau grid")

    def w_low(self, i: int) -> np.ndarray:
        t = float(self.taus[i])
        out = self.grid.zeros()
        for gidx, g in enumerate(self.spec.groups[:-1]):
            out += train_profile(self.spec, g.dim, t, self.grid)
            out += self._embeds[gidx](i)
        return out

    def top_profile_and_fsum(self, i: int):
        from .solitons import eval_soliton_grid

        t = float(self.taus[i])
        g = self.spec.groups[-1]
        total = self.grid.zeros()
        fsum = self.grid.zeros()
        for sp in g.solitons:
            R = eval_soliton_grid(g.bound_states[sp.omega], sp, t, self.grid)
            total += R
            fsum += eval_f(self.nl, R)
        return total, fsum

    def assembled(self, i: int) -> np.ndarray:
        """W = lower trains + lower errors + top train."""
        top, _ = self.top_profile_and_fsum(i)
        return self.w_low(i) + top

    def source_hat(self, i: int, eta_i: np.ndarray) -> np.ndarray:
        """FFT of H(t_i) + G(eta)(t_i) with
        H = f(W_low + T_top) - f(W_low) - sum_j f(R_j) and
        G = f(W + eta) - f(W)."""
        wl = self.w_low(i)
        top, fsum = self.top_profile_and_fsum(i)
        W = wl + top
        nl = self.nl
        S = eval_f(nl, W) - eval_f(nl, wl) - fsum
        S += eval_f(nl, W + eta_i) - eval_f(nl, W)
        return sfft.fftn(S)


def _diff_norms(diff: np.ndarray, grid: Grid, need_grad: bool, r_top: float):
    l2 = lp_norm(diff, grid, 2.0)
    linf = lp_norm(diff, grid, np.inf)
    lr = lp_norm(diff, grid, r_top) if np.isfinite(r_top) else linf
    g2 = gr = 0.0
    if need_grad:
        grads = spectral_gradient(diff, grid)
        mag = np.sqrt(np.sum(np.abs(grads) ** 2, axis=0))
        g2 = lp_norm(mag, grid, 2.0)
        gr = lp_norm(mag, grid, r_top) if np.isfinite(r_top) else lp_norm(mag, grid, np.inf)
    return l2, linf, lr, g2, gr


def _surrogate(plan: TheoremPlan, lam: float, taus, comp: dict, d: int) -> float:
    """The plan's Banach-ball norm evaluated on per-node spatial components."""
    w = np.exp(lam * (taus - taus[0]))
    if plan.theorem == "single1":
        return float(np.max(w * np.maximum(comp["l2"], comp["linf"])))
    if plan.theorem == "single2":
        c1 = plan.chosen.get("c1", 1.0)
        wg = np.exp(c1 * lam * (taus - taus[0]))
        return float(
            np.max(w * comp["l2"]) + np.max(wg * np.maximum(comp["g2"], comp["gr"]))
        )
    s_tail = _s_tail_series(taus, comp["l2"], comp["lr"], d)
    val = float(np.max(w * s_tail))
    if plan.theorem == "mixed1":
        gs_tail = _s_tail_series(taus, comp["g2"], comp["gr"], d)
        val += float(np.max(w * gs_tail))
    return val


def self_consistent_n_time(
    spec: TrainSpec,
    plan: TheoremPlan,
    cfg: PicardConfig,
    grid: Grid,
    tol: float = 1e-3,
    n_start: int = 256,
    n_max: int = 16384,
) -> int:
    """Double the quadrature node count until the first Duhamel iterate
    (eta = integral of H alone) changes by less than tol in sup norm between
    consecutive resolutions.  Single-stage runs only: lower-dimensional error
    series are tied to a fixed tau grid."""
    from dataclasses import replace

    prev = None
    n = n_start
    while n <= n_max:
        c = replace(cfg, n_time=n, max_iter=1, lambda_scan=())
        res = picard_construct(spec, plan, c, grid)
        eta1 = res.eta.values
        if prev is not None:
            # coarse nodes are every second fine node
            diff = float(np.max(np.abs(eta1[::2] - prev)))
            scale = float(np.max(np.abs(eta1)))
            if scale == 0.0 or diff <= tol * scale:
                return n
        prev = eta1
        n *= 2
    return n_max


def picard_construct(
    spec: TrainSpec,
    plan: TheoremPlan,
    cfg: PicardConfig,
    grid: Grid,
    lower_dim_errors: list[EtaSeries] | None = None,
) -> PicardResult:
    """Iterate eta <- -i int_t^T e^{i(t-tau)Delta}[G(eta) + H](tau) dtau with
    eta(T_end) = 0, measuring per-iteration contraction in the plan's norm."""
    if not plan.admissible:
        raise ValueError(f"plan {plan.theorem} inadmissible: {plan.violated}")
    lower = lower_dim_errors or []
    n = cfg.n_time
    taus = np.linspace(cfg.t0, cfg.T_end, n + 1)
    h = float(taus[1] - taus[0])
    model = _StageModel(spec, grid, taus, lower)
    need_grad = plan.theorem in ("single2", "mixed1")
    r_top = plan.chosen.get("r", np.inf) if plan.theorem == "single2" else r_max(grid.dim)

    prop, (wm, w0, wp), (a0, a1w, a2w) = _j_weights(h, grid.k2())
    shape = (n + 1,) + grid.shape
    eta_old = np.zeros(shape, dtype=complex)
    eta_new = np.zeros(shape, dtype=complex)

    diffs: list[float] = []
    factors: list[float] = []
    comp_hist: list[dict] = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        comp = {key: np.zeros(n + 1) for key in ("l2", "linf", "lr", "g2", "gr")}
        cache: dict[int, np.ndarray] = {}

        def s_hat(i):
            if i not in cache:
                cache[i] = model.source_hat(i, eta_old[i])
            return cache[i]

        eta_new[n].fill(0.0)
        acc = np.zeros(grid.shape, dtype=complex)
        for i in range(n - 1, -1, -1):
            if i >= 1:
                integ = wm * s_hat(i - 1) + w0 * s_hat(i) + wp * s_hat(i + 1)
            else:
                integ = a0 * s_hat(0) + a1w * s_hat(1) + a2w * s_hat(2)
            cache.pop(i + 1, None)
            acc = prop * acc - 1j * integ
            eta_new[i] = sfft.ifftn(acc)
            if not np.isfinite(eta_new[i].real.sum()):
                raise PicardDivergenceError(f"non-finite iterate at node {i}", factors)
            l2, linf, lr, g2, gr = _diff_norms(eta_new[i] - eta_old[i], grid, need_grad, r_top)
            comp["l2"][i], comp["linf"][i], comp["lr"][i] = l2, linf, lr
            comp["g2"][i], comp["gr"][i] = g2, gr
        comp_hist.append(comp)
        diff = _surrogate(plan, cfg.lam, taus, comp, grid.dim)
        diffs.append(diff)
        if len(diffs) >= 2 and diffs[-2] > 0:
            factors.append(diff / diffs[-2])
        eta_old, eta_new = eta_new, eta_old
        if diff < cfg.contraction_tol * cfg.ball_radius:
            converged = True
            break
        if len(factors) >= 3 and all(f >= 1.0 for f in factors[-3:]):
            raise PicardDivergenceError(
                f"contraction factor >= 1 for 3 consecutive iterations: {factors[-3:]}",
                factors,
            )

    eta = EtaSeries(grid=grid, taus=taus, values=eta_old)
    scan = {}
    for lam in cfg.lambda_scan:
        vals = [_surrogate(plan, lam, taus, c, grid.dim) for c in comp_hist]
        scan[f"{lam:.6g}"] = [
            vals[i] / vals[i - 1] for i in range(1, len(vals)) if vals[i - 1] > 0
        ]

    fits, table = _measure_eta(eta, plan, need_grad, r_top)
    wrap = max(
        grid.boundary_shell_max(model.assembled(i)) for i in (0, n // 2, n)
    )
    return PicardResult(
        eta=eta,
        plan=plan,
        converged=converged,
        iterations=it,
        diffs=diffs,
        factors=factors,
        factor_scan=scan,
        fits=fits,
        norm_table=table,
        wraparound=wrap,
        vstar=compute_vstar(spec),
    )


def _measure_eta(eta: EtaSeries, plan: TheoremPlan, need_grad: bool, r_top: float):
    grid = eta.grid
    taus = eta.taus
    n = len(taus) - 1
    l2 = np.zeros(n + 1)
    linf = np.zeros(n + 1)
    lr = np.zeros(n + 1)
    g2 = np.zeros(n + 1)
    gr = np.zeros(n + 1)
    for i in range(n + 1):
        l2[i], linf[i], lr[i], g2[i], gr[i] = _diff_norms(
            eta.values[i], grid, need_grad, r_top
        )
    table = []
    for i, t in enumerate(taus):
        table.append((float(t), "eta_L2", 2.0, None, float(l2[i])))
        table.append((float(t), "eta_Linf", np.inf, None, float(linf[i])))
        if need_grad:
            table.append((float(t), "grad_eta_L2", 2.0, None, float(g2[i])))
    if plan.theorem in ("mixed0", "mixed1", "train123"):
        s_tail = _s_tail_series(taus, l2, lr, grid.dim)
        for i, t in enumerate(taus):
            table.append((float(t), "eta_S", q_min(grid.dim), r_max(grid.dim), float(s_tail[i])))
    fits = {}
    try:
        fits["L2"] = fit_decay(taus, l2, grad_values=g2 if need_grad else None)
    except ValueError:
        pass
    try:
        fits["Linf"] = fit_decay(taus, linf, label="Linf")
    except ValueError:
        pass
    if plan.theorem in ("mixed0", "mixed1", "train123"):
        try:
            fits["S"] = fit_decay(taus, _s_tail_series(taus, l2, lr, grid.dim), label="S")
        except ValueError:
            pass
    return fits, table


def forward_consistency_check(
    result: PicardResult,
    spec: TrainSpec,
    dt: float,
    t_stop: float,
    lower_dim_errors: list[EtaSeries] | None = None,
    n_checks: int = 6,
) -> list[tuple[float, float]]:
    """Split-step integrate u from the assembled initial data and report
    ||u(t) - (W + eta)(t)||_2 at stored nodes up to t_stop."""
    eta = result.eta
    grid = eta.grid
    taus = eta.taus
    model = _StageModel(spec, grid, taus, lower_dim_errors or [])
    u = Field(grid, model.assembled(0) + eta.values[0], float(taus[0]))
    stride = max(1, (len(taus) - 1) // n_checks)
    out = []
    idx = 0
    for i in range(stride, len(taus), stride):
        if taus[i] > t_stop + 1e-12:
            break
        steps = int(round((taus[i] - taus[idx]) / dt))
        u = split_step(u, (taus[i] - taus[idx]) / steps, spec.nl, n_steps=steps)
        idx = i
        ref = model.assembled(i) + eta.values[i]
        out.append((float(taus[i]), lp_norm(u.values - ref, grid, 2.0)))
    return out
