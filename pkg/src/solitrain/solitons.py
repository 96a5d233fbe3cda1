"""Bound states of -laplace(phi) + omega*phi = f(phi) and moving solitons.

1D pure-power profiles use the closed form
    phi(x) = ((alpha+2) omega / (2 mu))^(1/alpha) sech^(2/alpha)(alpha sqrt(omega) x / 2),
everything else is solved by radial shooting.  Profiles are stored as radial
samples with cubic interpolation and an exponential e^(-sqrt(omega) r) tail
beyond the last reliable solver sample.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.interpolate import CubicSpline

from .grids import Grid
from .nonlinearity import NonlinearityParams

_SPHERE_AREA = {1: 2.0, 2: 2 * np.pi, 3: 4 * np.pi}  # |S^{e-1}|


class ShootingError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolitonParams:
    """One soliton: frequency, velocity, initial position, phase."""

    omega: float
    v: tuple[float, ...]
    x0: tuple[float, ...]
    gamma: float = 0.0

    def __post_init__(self):
        if self.omega <= 0:
            raise ValueError("omega must be positive")
        object.__setattr__(self, "v", tuple(float(c) for c in self.v))
        object.__setattr__(self, "x0", tuple(float(c) for c in self.x0))
        if len(self.v) != len(self.x0):
            raise ValueError("v and x0 must have the same dimension")

    @property
    def dim(self) -> int:
        return len(self.v)

    @property
    def speed(self) -> float:
        return float(np.hypot.reduce(self.v)) if self.v else 0.0


@dataclass
class BoundState:
    """Radial ground-state profile phi_omega with interpolation and tail."""

    dim: int
    omega: float
    alpha1: float
    alpha2: float
    c: float
    r: np.ndarray
    phi: np.ndarray
    r_match: float          # last solver-backed radius; exponential tail beyond
    residual: float = 0.0   # max ODE residual measured on the solver samples
    interp_order: int = 3
    closed_form: bool = False
    _spline: CubicSpline | None = field(default=None, repr=False)
    _phi_match: float = field(default=0.0, repr=False)

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        if np.any(self.phi <= 0):
            raise ShootingError("profile must be strictly positive")
        if np.any(np.diff(self.phi) >= 0):
            raise ShootingError("profile must be strictly decreasing in r")
        core = self.r <= self.r_match + 1e-15
        self._spline = CubicSpline(
            self.r[core], self.phi[core], bc_type=((1, 0.0), "not-a-knot")
        )
        self._phi_match = float(self._spline(self.r_match))

    def profile(self, rr) -> np.ndarray:
        """phi(r) for any r >= 0 (interpolant, then exponential tail)."""
        rr = np.asarray(rr, dtype=float)
        tail = self._phi_match * np.exp(
            -np.sqrt(self.omega) * (np.minimum(rr, 2e4) - self.r_match)
        )
        return np.where(rr <= self.r_match, self._spline(np.minimum(rr, self.r_match)), tail)

    def profile_deriv(self, rr) -> np.ndarray:
        rr = np.asarray(rr, dtype=float)
        sq = np.sqrt(self.omega)
        tail = -sq * self._phi_match * np.exp(-sq * (np.minimum(rr, 2e4) - self.r_match))
        core = self._spline.derivative()(np.minimum(rr, self.r_match))
        return np.where(rr <= self.r_match, core, tail)

    def height(self) -> float:
        return float(self.phi[0])


def closed_form_height(alpha: float, omega: float, mu: float = 1.0) -> float:
    return ((alpha + 2) * omega / (2 * mu)) ** (1.0 / alpha)


def _closed_form_1d(nl: NonlinearityParams, omega: float, n_samples: int) -> BoundState:
    # single effective power: f(phi) = (1+c) phi^(alpha+1)
    alpha = nl.alpha1
    mu = 1.0 + nl.c
    if mu <= 0:
        raise ShootingError("1 + c must be positive for the closed-form profile")
    amp = closed_form_height(alpha, omega, mu)
    sq = np.sqrt(omega)
    r_max = 30.0 / sq
    r = _graded_radii(r_max, n_samples)
    phi = amp * np.cosh(alpha * sq * r / 2.0) ** (-2.0 / alpha)
    return BoundState(
        dim=1,
        omega=omega,
        alpha1=nl.alpha1,
        alpha2=nl.alpha2,
        c=nl.c,
        r=r,
        phi=phi,
        r_match=float(r[-1]),
        residual=0.0,
        closed_form=True,
    )


def _graded_radii(r_max: float, n: int) -> np.ndarray:
    # mild grading toward the origin where curvature is largest
    u = np.linspace(0.0, 1.0, n)
    return r_max * u**1.35


def _rhs(dim, omega, nl):
    a1, a2, c = nl.alpha1, nl.alpha2, nl.c

    def F(r, y):
        phi, dphi = y
        ap = abs(phi)
        fp = (ap**a1 + c * ap**a2) * phi
        acc = omega * phi - fp
        if r > 0:
            acc -= (dim - 1) / r * dphi
        return (dphi, acc)

    return F


def _shoot(height, dim, omega, nl, r_max):
    F = _rhs(dim, omega, nl)
    eps = 1e-8
    f0 = (height**nl.alpha1 + nl.c * height**nl.alpha2) * height
    # series start around the removable singularity at r=0
    phi_eps = height + eps**2 * (omega * height - f0) / (2 * dim)
    dphi_eps = eps * (omega * height - f0) / dim

    crossed = lambda r, y: y[0]
    crossed.terminal, crossed.direction = True, -1
    bounced = lambda r, y: y[1]
    bounced.terminal, bounced.direction = True, 1

    sol = solve_ivp(
        F,
        (eps, r_max),
        (phi_eps, dphi_eps),
        method="RK45",
        rtol=1e-12,
        atol=1e-14,
        events=(crossed, bounced),
        dense_output=True,
    )
    if sol.t_events[0].size:
        return -1, sol  # crossed zero: height too large
    if sol.t_events[1].size:
        return +1, sol  # turned around: height too small
    return 0, sol


def solve_ground_state(
    nl: NonlinearityParams,
    dim: int,
    omega: float,
    tol: float = 1e-6,
    n_samples: int = 1400,
) -> BoundState:
    """Ground state of the radial ODE; closed form in 1D pure power.

    tol bounds the ODE residual measured on the returned samples.
    """
    if omega <= 0 or tol <= 0:
        raise ValueError("need omega > 0 and tol > 0")
    if dim == 1 and nl.alpha1 == nl.alpha2:
        return _closed_form_1d(nl, omega, n_samples)
    return _shoot_ground_state(nl, dim, omega, tol, n_samples)


def _shoot_ground_state(nl, dim, omega, tol, n_samples):
    r_max = 30.0 / np.sqrt(omega)
    h = closed_form_height(nl.alpha1, omega)  # 1D height as the starting guess
    lo = hi = None
    sol_mid = None
    h_first = h
    for _ in range(60):  # bracket scan
        sign, sol = _shoot(h, dim, omega, nl, r_max)
        if sign < 0:
            hi, sol_hi = h, sol
            if lo is not None:
                break
            h /= 2.0
        elif sign > 0:
            lo = h
            if hi is not None:
                break
            h *= 2.0
        else:
            lo = hi = h
            sol_mid = sol
            break
    if lo is None or hi is None:
        raise ShootingError(
            f"no shooting bracket found in heights [{h_first / 2**60:.3g}, {h_first * 2**60:.3g}]"
        )
    for it in range(200):
        if (hi - lo) <= 5e-15 * hi:
            break
        h = 0.5 * (lo + hi)
        sign, sol = _shoot(h, dim, omega, nl, r_max)
        if sign < 0:
            hi = h
        elif sign > 0:
            lo = h
        else:
            sol_mid = sol
            break
    else:
        raise ShootingError(f"bisection did not converge: bracket [{lo}, {hi}]")
    if sol_mid is None:
        _, sol_mid = _shoot(lo, dim, omega, nl, r_max)  # undershoot stays positive

    # clip where the solution stops being a decaying profile
    r_dense = np.linspace(sol_mid.t[0], sol_mid.t[-1], 20000)
    phi_d, dphi_d = sol_mid.sol(r_dense)
    h0 = 0.5 * (lo + hi)
    bad = (phi_d <= h0 * 1e-10) | (dphi_d >= 0) | (phi_d >= h0 * 1.0001)
    idx = np.argmax(bad) if bad.any() else len(r_dense)
    r_match = r_dense[max(idx - 2, 8)]

    core = _graded_radii(r_match, n_samples)
    phi_core, dphi_core = sol_mid.sol(core)
    phi_core[0] = h0
    residual = _ode_residual(sol_mid, nl, dim, omega, r_match)
    if residual > tol:
        raise ShootingError(f"ODE residual {residual:.3g} above tol {tol:.3g}")

    # exponential tail samples out to 30/sqrt(omega)
    sq = np.sqrt(omega)
    phi_m = float(sol_mid.sol(r_match)[0])
    n_tail = 64
    tail_r = np.linspace(r_match, max(r_max, r_match + 1.0), n_tail + 1)[1:]
    tail_phi = phi_m * np.exp(-sq * (tail_r - r_match))
    return BoundState(
        dim=dim,
        omega=omega,
        alpha1=nl.alpha1,
        alpha2=nl.alpha2,
        c=nl.c,
        r=np.concatenate([core, tail_r]),
        phi=np.concatenate([phi_core, tail_phi]),
        r_match=float(r_match),
        residual=float(residual),
    )


def _ode_residual(sol, nl, dim, omega, r_match):
    """Max |phi'' + (d-1)/r phi' - omega phi + f(phi)| via 5-point differences
    of the dense solver output."""
    # h balances the O(h^4) truncation against dense-output noise / h^2
    probes = np.linspace(0.05 * r_match, 0.95 * r_match, 160)
    h = 0.01 / np.sqrt(omega)
    offs = np.array([-2, -1, 0, 1, 2]) * h
    pts = (probes[None, :] + offs[:, None]).ravel()
    vals = sol.sol(pts)[0].reshape(5, probes.size)
    d1 = (vals[0] - 8 * vals[1] + 8 * vals[3] - vals[4]) / (12 * h)
    d2 = (-vals[0] + 16 * vals[1] - 30 * vals[2] + 16 * vals[3] - vals[4]) / (12 * h**2)
    phi = vals[2]
    fp = (np.abs(phi) ** nl.alpha1 + nl.c * np.abs(phi) ** nl.alpha2) * phi
    res = d2 + (dim - 1) / probes * d1 - omega * phi + fp
    return float(np.abs(res).max())


# ----------------------------------------------------------------------------
# moving solitons


def _phase(sp: SolitonParams, t: float, vdotx):
    return sp.omega * t + 0.5 * vdotx - 0.25 * sp.speed**2 * t + sp.gamma


def eval_soliton(bs: BoundState, sp: SolitonParams, t: float, points) -> np.ndarray:
    """R(t, x) at a list of points; points may carry extra trailing
    coordinates (embedded soliton), which are ignored."""
    _check_pair(bs, sp)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] < sp.dim:
        raise ValueError(f"points have dimension {pts.shape[1]} < soliton dim {sp.dim}")
    e = sp.dim
    center = np.asarray(sp.x0) + np.asarray(sp.v) * t
    y = pts[:, :e] - center
    rr = np.sqrt(np.sum(y * y, axis=1))
    vdotx = pts[:, :e] @ np.asarray(sp.v)
    return np.exp(1j * _phase(sp, t, vdotx)) * bs.profile(rr)


def eval_soliton_grid(bs: BoundState, sp: SolitonParams, t: float, grid: Grid) -> np.ndarray:
    """R(t, x) over a periodic box; the soliton occupies the first sp.dim axes."""
    _check_pair(bs, sp)
    if grid.dim < sp.dim:
        raise ValueError(f"grid dim {grid.dim} < soliton dim {sp.dim}")
    center = np.asarray(sp.x0) + np.asarray(sp.v) * t
    rr = np.sqrt(grid.radius2(center, ndims=sp.dim))
    vdotx = 0.0
    for i in range(sp.dim):
        vdotx = vdotx + sp.v[i] * grid.axis_bc(i)
    return np.exp(1j * _phase(sp, t, vdotx)) * bs.profile(rr)


def eval_soliton_gradient_grid(
    bs: BoundState, sp: SolitonParams, t: float, grid: Grid
) -> np.ndarray:
    """All grid.dim gradient components of R(t, x); zero beyond the soliton axes."""
    _check_pair(bs, sp)
    center = np.asarray(sp.x0) + np.asarray(sp.v) * t
    r2 = grid.radius2(center, ndims=sp.dim)
    rr = np.sqrt(r2)
    safe = np.where(rr > 0, rr, 1.0)
    vdotx = 0.0
    for i in range(sp.dim):
        vdotx = vdotx + sp.v[i] * grid.axis_bc(i)
    phase = np.exp(1j * _phase(sp, t, vdotx))
    prof = bs.profile(rr)
    dprof = bs.profile_deriv(rr)
    out = np.zeros((grid.dim,) + grid.shape, dtype=complex)
    for i in range(sp.dim):
        unit = np.where(rr > 0, (grid.axis_bc(i) - center[i]) / safe, 0.0)
        out[i] = phase * (0.5j * sp.v[i] * prof + dprof * unit)
    return out


def _check_pair(bs, sp):
    if abs(bs.omega - sp.omega) > 1e-12 * max(1.0, bs.omega):
        raise ValueError(f"bound state omega {bs.omega} != soliton omega {sp.omega}")
    if bs.dim != sp.dim:
        raise ValueError(f"bound state dim {bs.dim} != soliton dim {sp.dim}")


# ----------------------------------------------------------------------------
# decay certificates and profile norms


@dataclass(frozen=True)
class DecayCertificate:
    a: float
    D: float
    omega_star: float
    holds: bool
    worst_margin: float


def certify_decay(bs: BoundState, a: float, D: float, omega_star: float | None = None) -> DecayCertificate:
    """Check phi(r) + omega^(-1/2)|phi'(r)| <= D omega^(1/alpha1) e^(-a sqrt(omega) r)
    pointwise on the radial grid."""
    if not (0 < a < 1):
        raise ValueError("need 0 < a < 1")
    om = bs.omega
    lhs = bs.phi + np.abs(bs.profile_deriv(bs.r)) / np.sqrt(om)
    rhs = D * om ** (1.0 / bs.alpha1) * np.exp(-a * np.sqrt(om) * bs.r)
    margin = rhs - lhs
    worst = float(margin.min())
    return DecayCertificate(
        a=a,
        D=D,
        omega_star=bs.omega if omega_star is None else omega_star,
        holds=bool(worst >= 0.0),
        worst_margin=worst,
    )


def _radial_integral(func, exponent: float, edim: int, r_last: float, omega: float) -> float:
    """S_{e-1} * int_0^inf func(r)^exponent r^(e-1) dr by two Simpson segments
    (core + exponential tail)."""
    if exponent <= 0:
        return np.inf
    core = np.linspace(0.0, r_last, 8193)
    sq = np.sqrt(omega)
    tail_len = min(600.0 / (exponent * sq), 2e4 / sq)
    tail = np.linspace(r_last, r_last + tail_len, 8193)
    total = 0.0
    for seg in (core, tail):
        vals = func(seg) ** exponent * seg ** (edim - 1)
        total += simpson(vals, x=seg)
    return _SPHERE_AREA[edim] * total


def soliton_lp_norm(
    bs: BoundState,
    p: float,
    q: float | None = None,
    split: tuple[int, int] | None = None,
) -> float:
    """L^p norm of the profile; with (q, split)=(q, (e', e'')) the anisotropic
    L^p_{x'} L^q_{x''} norm over the split coordinates (e' + e'' = bs.dim).

    Non-integrable parameter combinations return +inf.
    """
    if p <= 0 or (q is not None and q <= 0):
        raise ValueError("exponents must lie in (0, inf]")
    r_last = float(bs.r[-1])
    if q is None or split is None:
        if np.isinf(p):
            return bs.height()
        val = _radial_integral(bs.profile, p, bs.dim, r_last, bs.omega)
        return val ** (1.0 / p)

    e_out, e_in = split
    if e_out + e_in != bs.dim or e_out < 1 or e_in < 1:
        raise ValueError("split must partition the soliton dimension")
    if np.isinf(q):
        # profile is radially decreasing: inner sup sits at x'' = 0
        if np.isinf(p):
            return bs.height()
        return _radial_integral(bs.profile, p, e_out, r_last, bs.omega) ** (1.0 / p)

    def inner(rho):
        # L^q norm over the inner coordinates at outer radius rho
        s_core = np.linspace(0.0, r_last, 2049)
        sq = np.sqrt(bs.omega)
        s_tail = np.linspace(r_last, r_last + 600.0 / (q * sq), 2049)
        acc = 0.0
        for seg in (s_core, s_tail):
            rr = np.sqrt(rho[:, None] ** 2 + seg[None, :] ** 2)
            vals = bs.profile(rr) ** q * seg[None, :] ** (e_in - 1)
            acc = acc + simpson(vals, x=seg, axis=1)
        return (_SPHERE_AREA[e_in] * acc) ** (1.0 / q)

    if np.isinf(p):
        return float(inner(np.array([0.0]))[0])
    rho_core = np.linspace(0.0, r_last, 2049)
    sq = np.sqrt(bs.omega)
    rho_tail = np.linspace(r_last, r_last + 600.0 / (p * sq), 2049)
    total = 0.0
    for seg in (rho_core, rho_tail):
        vals = inner(seg) ** p * seg ** (e_out - 1)
        total += simpson(vals, x=seg)
    return (_SPHERE_AREA[e_out] * total) ** (1.0 / p)


def decay_kernel_norm(a: float, p: float, dim: int, q: float | None = None, e_in: int = 0) -> float:
    """||e^(-a|y|)||_{L^p} over R^dim, or the anisotropic L^p_{y'} L^q_{y''} norm
    with y'' spanning the last e_in coordinates."""
    if np.isinf(p) and (q is None or np.isinf(q)):
        return 1.0
    if q is None:
        core = np.linspace(0.0, 700.0 / (a * p), 16385)
        return float(
            (_SPHERE_AREA[dim] * simpson(np.exp(-a * p * core) * core ** (dim - 1), x=core))
            ** (1.0 / p)
        )
    e_out = dim - e_in

    def inner(rho):
        if np.isinf(q):
            return np.exp(-a * rho)
        s = np.linspace(0.0, 700.0 / (a * q), 4097)
        rr = np.sqrt(rho[:, None] ** 2 + s[None, :] ** 2)
        vals = np.exp(-a * q * rr) * s[None, :] ** (e_in - 1)
        return (_SPHERE_AREA[e_in] * simpson(vals, x=s, axis=1)) ** (1.0 / q)

    if np.isinf(p):
        return float(inner(np.array([0.0]))[0])
    rho = np.linspace(0.0, 700.0 / (a * p), 4097)
    vals = inner(rho) ** p * rho ** (e_out - 1)
    return float((_SPHERE_AREA[e_out] * simpson(vals, x=rho)) ** (1.0 / p))


def profile_norm_bound(bs: BoundState, p: float, a: float, D: float) -> float:
    """D_p omega^(1/alpha1 - d/(2p)) with D_p = D * ||e^(-a|y|)||_{L^p}."""
    dp = D * decay_kernel_norm(a, p, bs.dim)
    exponent = 1.0 / bs.alpha1 - (0.0 if np.isinf(p) else bs.dim / (2.0 * p))
    return dp * bs.omega**exponent


# ----------------------------------------------------------------------------
# versioned text serialization

_MAGIC = "NLSBS"
_VERSION = 1


def save_bound_state(bs: BoundState, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{_MAGIC} {_VERSION}\n")
        fh.write(f"dim={bs.dim}\n")
        fh.write(f"omega={bs.omega:.17g}\n")
        fh.write(f"alpha1={bs.alpha1:.17g}\n")
        fh.write(f"alpha2={bs.alpha2:.17g}\n")
        fh.write(f"c={bs.c:.17g}\n")
        fh.write(f"n_samples={len(bs.r)}\n")
        for r, p in zip(bs.r, bs.phi):
            fh.write(f"{r:.17g} {p:.17g}\n")


def load_bound_state(path) -> BoundState:
    with open(path) as fh:
        head = fh.readline().split()
        if len(head) != 2 or head[0] != _MAGIC:
            raise ValueError(f"{path}: not a bound-state table")
        if int(head[1]) != _VERSION:
            raise ValueError(f"{path}: unsupported version {head[1]}")
        meta = {}
        for _ in range(6):
            key, val = fh.readline().strip().split("=")
            meta[key] = val
        n = int(meta["n_samples"])
        data = np.loadtxt(io.StringIO(fh.read()))
    if data.shape != (n, 2):
        raise ValueError(f"{path}: expected {n} sample rows, got {data.shape}")
    return BoundState(
        dim=int(meta["dim"]),
        omega=float(meta["omega"]),
        alpha1=float(meta["alpha1"]),
        alpha2=float(meta["alpha2"]),
        c=float(meta["c"]),
        r=data[:, 0],
        phi=data[:, 1],
        r_match=float(data[-1, 0]),
    )
