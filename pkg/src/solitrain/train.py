"""Train parameter schedules, the A_p/B_p norm functionals, relative speeds,
class membership, and theorem planning for requested constructions."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .nonlinearity import NonlinearityParams, _alpha_max
from .solitons import BoundState, SolitonParams, solve_ground_state

THEOREMS = ("single1", "single2", "mixed0", "mixed1", "train123")


class UndefinedClassError(ValueError):
    """C_B is only defined for alpha1 < 2."""


# ----------------------------------------------------------------------------
# parameter schedules


@dataclass(frozen=True)
class ParamSchedule:
    """Geometric frequency / inverse-geometric speed schedule.

    omega_j = omega_star * rho^(2j) and |v_j| = gamma * sum_{l=2}^{j} rho^(-l)
    + delta for j = 1..N (the empty sum for j=1 is zero).
    """

    rho: float
    gamma_speed: float
    delta: float
    N: int
    omega_star: float

    def __post_init__(self):
        if not (0 < self.rho < 1):
            raise ValueError("need 0 < rho < 1")
        if self.N < 1:
            raise ValueError("need N >= 1")
        if self.omega_star <= 0 or self.gamma_speed < 0 or self.delta < 0:
            raise ValueError("omega_star > 0, gamma_speed >= 0, delta >= 0 required")

    def frequencies(self) -> list[float]:
        return [self.omega_star * self.rho ** (2 * j) for j in range(1, self.N + 1)]

    def speeds(self) -> list[float]:
        out = []
        acc = 0.0
        for j in range(1, self.N + 1):
            if j >= 2:
                acc += self.rho ** (-j)
            out.append(self.gamma_speed * acc + self.delta)
        return out


def schedule_exact(rho: Fraction, gamma: Fraction, delta: Fraction, N: int, omega_star: Fraction):
    """Exact-rational twin of the schedule, for arithmetic identities."""
    omegas = [omega_star * rho ** (2 * j) for j in range(1, N + 1)]
    speeds = []
    acc = Fraction(0)
    for j in range(1, N + 1):
        if j >= 2:
            acc += Fraction(1) / rho**j
        speeds.append(gamma * acc + delta)
    return omegas, speeds


def gen_params(sch: ParamSchedule, dim: int = 1, directions=None) -> list[SolitonParams]:
    """Soliton parameter list for one dimension group.

    Default direction assignment: 1D speeds on a line with alternating sign
    (+, -, +, ...); for dim > 1 every velocity points along the first axis.
    directions, when given, is a list of unit vectors (length dim).
    """
    omegas = sch.frequencies()
    speeds = sch.speeds()
    out = []
    for j, (om, sp) in enumerate(zip(omegas, speeds), start=1):
        if directions is not None:
            u = np.asarray(directions[j - 1], dtype=float)
            if u.shape != (dim,):
                raise ValueError("each direction must be a unit vector of length dim")
            v = tuple(sp * u)
        elif dim == 1:
            v = ((+sp if j % 2 == 1 else -sp),)
        else:
            v = (sp,) + (0.0,) * (dim - 1)
        out.append(SolitonParams(omega=om, v=v, x0=(0.0,) * dim))
    return out


# ----------------------------------------------------------------------------
# norm functionals


def _pv(p) -> float:
    p = float(p)
    if p <= 0:
        raise ValueError("exponents must lie in (0, inf]")
    return p


def compute_A(omegas, p, alpha1: float, dims) -> float:
    """A_p (p scalar, dims=d) or anisotropic A_{d;p,q} (p=(p,q), dims=(e, d-e)).

    Exact evaluation of the displayed sum; finite for every finite list.
    """
    return _ab_sum(omegas, None, p, alpha1, dims)


def compute_B(omegas, velocities, p, alpha1: float, dims) -> float:
    """B_p with the <v_j> = (|v_j|^2 + 1)^(1/2) weight."""
    return _ab_sum(omegas, velocities, p, alpha1, dims)


def _bracket(v) -> float:
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    return float(np.sqrt(np.sum(arr**2) + 1.0))


def _ab_sum(omegas, velocities, p, alpha1, dims) -> float:
    omegas = [float(w) for w in omegas]
    if isinstance(p, tuple):
        pp, qq = _pv(p[0]), _pv(p[1])
        e, rest = dims
        expo = 1.0 / alpha1
        if not np.isinf(pp):
            expo -= e / (2.0 * pp)
        if not np.isinf(qq):
            expo -= rest / (2.0 * qq)
        m = min(1.0, pp, qq)
        outer = max(1.0, 1.0 / pp, 1.0 / qq)
    else:
        pp = _pv(p)
        d = int(dims)
        expo = 1.0 / alpha1 - (0.0 if np.isinf(pp) else d / (2.0 * pp))
        m = min(1.0, pp)
        outer = max(1.0, 1.0 / pp)
    if velocities is None:
        weights = [1.0] * len(omegas)
    else:
        weights = [_bracket(v) ** m for v in velocities]
    total = sum(w_j * om ** (m * expo) for w_j, om in zip(weights, omegas))
    return float(total**outer)


# ----------------------------------------------------------------------------
# train specifications and the minimal weighted relative speed


@dataclass
class DimGroup:
    dim: int
    solitons: list[SolitonParams]
    bound_states: dict[float, BoundState] = field(default_factory=dict)

    def omegas(self) -> list[float]:
        return [sp.omega for sp in self.solitons]

    def velocities(self) -> list[tuple[float, ...]]:
        return [sp.v for sp in self.solitons]


@dataclass
class TrainSpec:
    """A truncated train: dimension groups, nonlinearity, decay constants."""

    nl: NonlinearityParams
    groups: list[DimGroup]
    a: float
    D: float
    omega_star: float

    def __post_init__(self):
        dims = [g.dim for g in self.groups]
        if dims != sorted(dims) or len(set(dims)) != len(dims):
            raise ValueError("groups must be ordered by strictly increasing dimension")
        if not _dims_supported(tuple(dims)):
            raise ValueError(f"unsupported dimension combination {dims}")
        for g in self.groups:
            for sp in g.solitons:
                if not (0 < sp.omega < self.omega_star):
                    raise ValueError(
                        f"omega {sp.omega} outside (0, omega_star={self.omega_star})"
                    )
                if sp.dim != g.dim:
                    raise ValueError("soliton dimension does not match its group")

    def ensure_bound_states(self, tol: float = 1e-6) -> None:
        for g in self.groups:
            for om in sorted(set(g.omegas())):
                if om not in g.bound_states:
                    g.bound_states[om] = solve_ground_state(self.nl, g.dim, om, tol=tol)

    def group(self, dim: int) -> DimGroup:
        for g in self.groups:
            if g.dim == dim:
                return g
        raise KeyError(f"no dimension-{dim} group")

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(g.dim for g in self.groups)

    def describe(self) -> dict:
        """Parameter summary used in run reports."""
        return {
            "dims": list(self.dims),
            "a": self.a,
            "D": self.D,
            "omega_star": self.omega_star,
            "solitons": [
                {"dim": g.dim, "omega": sp.omega, "v": list(sp.v),
                 "x0": list(sp.x0), "gamma": sp.gamma}
                for g in self.groups
                for sp in g.solitons
            ],
        }

    def to_config_text(self) -> str:
        """Serialize to the experiment config grammar ([soliton.K] blocks)."""
        lines = [
            "[experiment]",
            "dims = " + " ".join(str(d) for d in self.dims),
            "",
            "[nonlinearity]",
            f"alpha1 = {self.nl.alpha1:.17g}",
            f"alpha2 = {self.nl.alpha2:.17g}",
            f"c = {self.nl.c:.17g}",
            "",
            "[decay]",
            f"a = {self.a:.17g}",
            f"D = {self.D:.17g}",
            "",
            "[schedule]",
            f"omega_star = {self.omega_star:.17g}",
        ]
        idx = 0
        for g in self.groups:
            for sp in g.solitons:
                idx += 1
                lines += [
                    "",
                    f"[soliton.{idx}]",
                    f"dim = {g.dim}",
                    f"omega = {sp.omega:.17g}",
                    "v = " + " ".join(f"{c:.17g}" for c in sp.v),
                    "x0 = " + " ".join(f"{c:.17g}" for c in sp.x0),
                    f"gamma = {sp.gamma:.17g}",
                ]
        return "\n".join(lines) + "\n"


def _dims_supported(dims: tuple[int, ...]) -> bool:
    if len(dims) == 1:
        return dims[0] in (1, 2, 3)
    if len(dims) == 2:
        e, d = dims
        return 1 <= e <= 3 and e < d <= e + 3
    return dims == (1, 2, 3)


def vstar_within(group: DimGroup) -> float:
    """(1/2) inf over pairs of min(1, sqrt(omega_j), sqrt(omega_k)) |v_j - v_k|;
    +inf for a single-soliton group (empty infimum)."""
    sols = group.solitons
    best = np.inf
    for j in range(len(sols)):
        for kk in range(j + 1, len(sols)):
            a, b = sols[j], sols[kk]
            dv = float(np.hypot.reduce(np.asarray(a.v) - np.asarray(b.v)))
            best = min(best, 0.5 * min(1.0, np.sqrt(a.omega), np.sqrt(b.omega)) * dv)
    return best


def vstar_cross(lower: DimGroup, upper: DimGroup) -> float:
    """inf over pairs of min(sqrt(sigma_k), sqrt(omega_j)) |u_k - v_j'| with
    v_j' the first e components of the higher-dimensional velocity."""
    e = lower.dim
    best = np.inf
    for lo in lower.solitons:
        for hi in upper.solitons:
            dv = float(np.hypot.reduce(np.asarray(lo.v) - np.asarray(hi.v[:e])))
            best = min(best, min(np.sqrt(lo.omega), np.sqrt(hi.omega)) * dv)
    return best


def compute_vstar(spec: TrainSpec) -> float:
    if not spec.groups or all(not g.solitons for g in spec.groups):
        raise ValueError("empty train")
    vals = [vstar_within(g) for g in spec.groups]
    for i in range(len(spec.groups)):
        for j in range(i + 1, len(spec.groups)):
            vals.append(vstar_cross(spec.groups[i], spec.groups[j]))
    return float(min(vals))


# ----------------------------------------------------------------------------
# controllable classes C_A, C_B


def in_class_A(p, alpha1: float, dims) -> bool:
    if isinstance(p, tuple):
        pp, qq = _pv(p[0]), _pv(p[1])
        e, rest = dims
        val = 1.0 / alpha1
        if not np.isinf(pp):
            val -= e / (2.0 * pp)
        if not np.isinf(qq):
            val -= rest / (2.0 * qq)
        return val > 0.0
    return _pv(p) > dims * alpha1 / 2.0


def in_class_B(p, alpha1: float, dims) -> bool:
    if alpha1 >= 2:
        raise UndefinedClassError(f"C_B undefined for alpha1 = {alpha1} >= 2")
    if isinstance(p, tuple):
        pp, qq = _pv(p[0]), _pv(p[1])
        e, rest = dims
        val = 1.0 / alpha1
        if not np.isinf(pp):
            val -= e / (2.0 * pp)
        if not np.isinf(qq):
            val -= rest / (2.0 * qq)
        return val > 0.5
    return _pv(p) > dims * alpha1 / (2.0 - alpha1)


def class_membership(p, alpha1: float, dims, query_B: bool = True) -> dict:
    """Strict-inequality membership in C_A (and C_B when defined)."""
    out = {"in_CA": in_class_A(p, alpha1, dims)}
    if query_B:
        out["in_CB"] = in_class_B(p, alpha1, dims)
    return out


# ----------------------------------------------------------------------------
# competing-norm comparison (A_q vs A_p) and the schedule identities


@dataclass(frozen=True)
class CompeteReport:
    holds: bool
    lhs: float
    rhs: float
    p: float
    q: float


def check_compete(
    omegas,
    p: float,
    q: float,
    alpha1: float,
    dims: int,
    omega_star: float,
    velocities=None,
) -> CompeteReport:
    """Verify A_q < max(1, omega_star)^(1/alpha1) A_p on the finite sequence
    (B variant when velocities are given).  Requires inf >= q > p in C_A
    (resp. C_B)."""
    if not (q > p):
        raise ValueError("need q > p")
    if velocities is None:
        if not in_class_A(p, alpha1, dims):
            raise ValueError(f"p={p} not in C_A for d={dims}, alpha1={alpha1}")
        lhs = compute_A(omegas, q, alpha1, dims)
        base = compute_A(omegas, p, alpha1, dims)
    else:
        if not in_class_B(p, alpha1, dims):
            raise ValueError(f"p={p} not in C_B for d={dims}, alpha1={alpha1}")
        lhs = compute_B(omegas, velocities, q, alpha1, dims)
        base = compute_B(omegas, velocities, p, alpha1, dims)
    rhs = max(1.0, omega_star) ** (1.0 / alpha1) * base
    return CompeteReport(holds=bool(lhs < rhs), lhs=lhs, rhs=rhs, p=p, q=q)


def tilde_A(omegas, p1: float, p2: float) -> float:
    return float(sum(float(w) ** (p1 * p2) for w in omegas) ** (1.0 / p1))


def tilde_B(omegas, velocities, p1: float, p2: float) -> float:
    tot = sum(
        _bracket(v) ** p1 * float(w) ** (p1 * p2) for w, v in zip(omegas, velocities)
    )
    return float(tot ** (1.0 / p1))


# ----------------------------------------------------------------------------
# theorem planning


@dataclass
class TheoremPlan:
    theorem: str
    admissible: bool
    dims: tuple[int, ...]
    alpha1: float
    alpha2: float
    t0: float
    ball_radius: float
    chosen: dict = field(default_factory=dict)
    violated: list[str] = field(default_factory=list)
    ball_norm: str = ""

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "admissible": self.admissible,
            "dims": list(self.dims),
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "t0": self.t0,
            "ball_radius": self.ball_radius,
            "chosen_exponents": dict(self.chosen),
            "violated_conditions": list(self.violated),
            "ball_norm": self.ball_norm,
        }


def _mid(lo: float, hi: float) -> float:
    return 0.5 * (lo + hi)


def _alpha_checks(d, a1, a2, violated):
    if not (0 < a1 <= a2):
        violated.append("0 < alpha1 <= alpha2")
    if a2 >= _alpha_max(d):
        violated.append(f"alpha2 < alpha_max(d={d}) = {_alpha_max(d)}")


def _plan_single1(a1, a2, t0, rho):
    violated: list[str] = []
    _alpha_checks(1, a1, a2, violated)
    if a1 < 1:
        violated.append("alpha1 >= 1")
    chosen = {"H0_pairs": [[2.0, 1.0], [1.0, 0.5]], "lambda_rate_factor": 0.5}
    return TheoremPlan(
        "single1", not violated, (1,), a1, a2, t0, rho, chosen, violated, "L2capLinf"
    )


def _single2_r_bounds(d, a1, a2):
    """Lower bounds on 1/r from the six named conditions (None = inactive)."""
    bounds = {"Condition 1: 1/r > 1/2 - 1/d": 0.5 - 1.0 / d}
    for i, ai in enumerate((a1, a2), start=1):
        if ai > 1:
            bounds[f"Condition 2 (alpha{i}): 1/r > 1/2 - (2/d)(alpha{i}/alpha1 - 1/2)"] = (
                0.5 - (2.0 / d) * (ai / a1 - 0.5)
            )
    bounds["Condition 3: 1/r > 1 - (alpha1/2 + 2/(d alpha1)) + 1/d"] = (
        1.0 - (a1 / 2.0 + 2.0 / (d * a1)) + 1.0 / d
    )
    for i, ai in enumerate((a1, a2), start=1):
        bounds[f"Condition 4 (alpha{i}): 1/r > 1/2 - 2 alpha{i}/(d alpha1)"] = (
            0.5 - 2.0 * ai / (d * a1)
        )
    bounds["Condition 5: 1/r >= 1/2 - alpha1/2"] = 0.5 - a1 / 2.0
    bounds["Condition 6: 1/r > 1 - (2/d)(1/alpha1 + 1/2)"] = 1.0 - (2.0 / d) * (
        1.0 / a1 + 0.5
    )
    return bounds


def _plan_single2(d, a1, a2, t0, rho):
    violated: list[str] = []
    _alpha_checks(d, a1, a2, violated)
    if d > 3:
        violated.append("d <= 3")
        return TheoremPlan("single2", False, (d,), a1, a2, t0, rho, {}, violated, "H1capW1inf")
    if not (2 * (0.5 - 1.0 / d) < a1):
        violated.append("alpha1 > 2(1/2 - 1/d)")
    if not (a1 < 2):
        violated.append("alpha1 < 2")
    bounds = _single2_r_bounds(d, a1, a2)
    lb = max(bounds.values())
    ub = 1.0 / d  # r > d
    for name, val in bounds.items():
        if val >= ub:
            violated.append(name)
    chosen: dict = {}
    if not violated:
        if d == 1 and a1 >= 1:
            inv_r = 0.0  # r = infinity is allowed here
        else:
            inv_r = _mid(max(lb, 0.0), min(ub, 0.5))
        r = np.inf if inv_r == 0.0 else 1.0 / inv_r
        c1 = min(1.0, a1 * (1.0 - 0.5 / (0.5 + 1.0 / d - inv_r)))
        s1 = _mid(d * a1 / (2.0 * (a1 + 1.0)), 2.0)
        # Step 3 exponents: 1/q = 2/d - eps, 1/p = (2/d)(1/alpha1 - 1/2) - eps
        cap = min(2.0 / d, (2.0 / d) * (1.0 / a1 - 0.5))
        slack = 2.0 / d + (2.0 / d) * (1.0 / a1 - 0.5) - (1.0 - inv_r)
        eps = 0.5 * min(cap, slack / 2.0)
        inv_q = 2.0 / d - eps
        inv_p = (2.0 / d) * (1.0 / a1 - 0.5) - eps
        s2 = 1.0 / (inv_p + inv_q)
        chosen = {
            "r": float(r),
            "c1": float(c1),
            "s1": float(s1),
            "s2": float(s2),
            "H1_p": float(1.0 / inv_p) if inv_p > 0 else np.inf,
            "H1_q": float(1.0 / inv_q) if inv_q > 0 else np.inf,
            "lambda_rate_factor": float(min(a1, 1.0) * (1.0 - s2 * (1.0 - inv_r))),
        }
    return TheoremPlan(
        "single2", not violated, (d,), a1, a2, t0, rho, chosen, violated, "H1capW1inf"
    )


def _plan_mixed0(e, d, a1, a2, t0, rho):
    violated: list[str] = []
    _alpha_checks(d, a1, a2, violated)
    if not (1 <= e <= 3):
        violated.append("1 <= e <= 3")
    if not (e < d <= e + 3):
        violated.append("e < d <= e+3")
    if not (max(2 * (0.5 - 1.0 / e), 0.0) < a1):
        violated.append("alpha1 > max(2(1/2 - 1/e), 0)")
    if not (a2 <= 4.0 / d):
        violated.append("alpha2 <= 4/d")
    if a2 == 4.0 / d and t0 <= 0:
        violated.append("t0 > 0 required at the endpoint alpha2 = 4/d")
    chosen: dict = {}
    if not violated:
        gam = min(1.0, a1)
        theta = min(d / (e * (1.0 + gam)), 1.0)
        if theta < 1.0:
            s_lb = d * a1 / (2.0 * (1.0 + gam))
        else:
            s_lb = (d - e) * a1 / (2.0 * gam)
        s1 = _mid(s_lb, 2.0)
        s2 = _mid(d * a1 / (2.0 * (a1 + 1.0)), 2.0)
        p1 = 1.05 * d * a1 / 2.0
        chosen = {
            "gamma_exponent": gam,
            "theta": float(theta),
            "s1": float(s1),
            "s2": float(s2),
            "p1": float(p1),
            "lambda_rate_factor": float(min(1.0, a1) * (1.0 - s1 / 2.0)),
        }
    return TheoremPlan(
        "mixed0", not violated, (e, d), a1, a2, t0, rho, chosen, violated, "S"
    )


def _plan_mixed1(e, d, a1, a2, t0, rho):
    violated: list[str] = []
    _alpha_checks(d, a1, a2, violated)
    if (e, d) != (1, 2):
        violated.append("(e, d) = (1, 2)")
    if not (1 <= a1 < 4.0 / 3.0):
        violated.append("1 <= alpha1 < 4/3")
    chosen: dict = {}
    if not violated:
        # (infty, 2) must lie in C_B^{(1,1)}: 1/alpha1 - 1/4 > 1/2 iff alpha1 < 4/3
        s1 = _mid(a1 / (2.0 - a1), 2.0)
        s2 = _mid(2.0 * a1 / (4.0 - a1), 2.0)
        s3 = _mid(2.0 * a1 / (a1 + 2.0), 2.0)
        inv_p_hi = 1.0 / a1 - 0.5
        inv_p_lo = max(0.0, 1.0 / s3 - 1.0)
        inv_p = _mid(inv_p_lo, inv_p_hi)
        inv_q = 1.0 / s3 - inv_p
        chosen = {
            "s1": float(s1),
            "s2": float(s2),
            "s3": float(s3),
            "theta4": float(2.0 * (2.0 - a1) / (4.0 - a1)),
            "gradH2_p": float(1.0 / inv_p) if inv_p > 0 else np.inf,
            "gradH2_q": float(1.0 / inv_q) if inv_q > 0 else np.inf,
            "lambda_rate_factor": float(min(a1, 1.0) * (1.0 - max(s1, s2, s3) / 2.0)),
        }
    return TheoremPlan(
        "mixed1", not violated, (e, d), a1, a2, t0, rho, chosen, violated, "S+gradS"
    )


def _plan_train123(a1, a2, t0, rho):
    violated: list[str] = []
    _alpha_checks(3, a1, a2, violated)
    if not (1 <= a1 < 4.0 / 3.0):
        violated.append("1 <= alpha1 < 4/3")
    if not (a2 <= 4.0 / 3.0):
        violated.append("alpha2 <= 4/3")
    if a2 == 4.0 / 3.0 and t0 <= 0:
        violated.append("t0 > 0 required at the endpoint alpha2 = 4/3")
    chosen: dict = {}
    if not violated:
        s1 = _mid(a1, 2.0)
        s2 = _mid(3.0 * a1 / 4.0, 2.0)
        s3 = _mid(3.0 * a1 / (2.0 * (a1 + 1.0)), 2.0)
        chosen = {
            "s1": float(s1),
            "s2": float(s2),
            "s3": float(s3),
            "eta2_time_exponent": 6.0,
            "lambda_rate_factor": float(1.0 - max(s1, s2, s3) / 2.0),
        }
    return TheoremPlan(
        "train123", not violated, (1, 2, 3), a1, a2, t0, rho, chosen, violated, "S"
    )


def plan_construction(
    dims, alpha1: float, alpha2: float, t0: float = 0.0, rho_ball: float = 1.0
) -> TheoremPlan:
    """Select the applicable theorem for the requested dimension shape and
    compute concrete feasible exponents (interval midpoints), or name every
    violated condition.  Inadmissibility is data, not an error."""
    dims = tuple(int(d) for d in (dims if np.iterable(dims) else (dims,)))
    if len(dims) == 1:
        d = dims[0]
        if d == 1 and alpha1 >= 1:
            return _plan_single1(alpha1, alpha2, t0, rho_ball)
        plan = _plan_single2(d, alpha1, alpha2, t0, rho_ball)
        if d == 1 and not plan.admissible:
            plan.violated.insert(0, "alpha1 >= 1 (for the L2-cap-Linf route)")
        return plan
    if len(dims) == 2:
        e, d = dims
        if not _dims_supported(dims):
            plan = TheoremPlan("mixed0", False, dims, alpha1, alpha2, t0, rho_ball)
            plan.violated = ["e < d <= e+3"] if e < d else ["dims must increase"]
            plan.ball_norm = "S"
            return plan
        if (e, d) == (1, 2):
            plan = _plan_mixed1(e, d, alpha1, alpha2, t0, rho_ball)
            if plan.admissible:
                return plan
        return _plan_mixed0(e, d, alpha1, alpha2, t0, rho_ball)
    if dims == (1, 2, 3):
        return _plan_train123(alpha1, alpha2, t0, rho_ball)
    plan = TheoremPlan("train123", False, dims, alpha1, alpha2, t0, rho_ball)
    plan.violated = ["dimension combination must be {d}, {e,d} with e<d<=e+3, or {1,2,3}"]
    plan.ball_norm = "S"
    return plan


def stage_plans(plan: TheoremPlan) -> list[TheoremPlan]:
    """Plans for the staged construction, lowest dimension first.

    mixed1 and train123 require gradient control of the 1D error, hence the
    1D stage runs the H1-cap-W1inf route."""
    if plan.theorem in ("single1", "single2"):
        return [plan]
    if plan.theorem == "mixed0":
        e = plan.dims[0]
        sub = plan_construction((e,), plan.alpha1, plan.alpha2, plan.t0, plan.ball_radius)
        return [sub, plan]
    if plan.theorem == "mixed1":
        sub = _plan_single2(1, plan.alpha1, plan.alpha2, plan.t0, plan.ball_radius)
        return [sub, plan]
    if plan.theorem == "train123":
        mixed = _plan_mixed1(1, 2, plan.alpha1, plan.alpha2, plan.t0, plan.ball_radius)
        return stage_plans(mixed) + [plan]
    raise ValueError(f"unknown theorem {plan.theorem}")


# ----------------------------------------------------------------------------
# norm reports


@dataclass
class NormReport:
    A: dict
    B: dict
    vstar: float
    class_flags: dict

    def to_dict(self) -> dict:
        def keyfmt(k):
            return str(k)

        return {
            "A": {keyfmt(k): v for k, v in self.A.items()},
            "B": {keyfmt(k): v for k, v in self.B.items()},
            "vstar": self.vstar,
            "class_flags": {keyfmt(k): v for k, v in self.class_flags.items()},
        }


def norm_report(spec: TrainSpec, p_list, aniso: list | None = None) -> NormReport:
    """A_p, B_p, v_* and class flags for every group of the train."""
    a1 = spec.nl.alpha1
    A: dict = {}
    B: dict = {}
    flags: dict = {}
    for g in spec.groups:
        omegas, vels = g.omegas(), g.velocities()
        for p in p_list:
            key = f"d={g.dim},p={p}"
            A[key] = compute_A(omegas, p, a1, g.dim)
            B[key] = compute_B(omegas, vels, p, a1, g.dim)
            flags[key] = {
                "in_CA": in_class_A(p, a1, g.dim),
                "in_CB": None if a1 >= 2 else in_class_B(p, a1, g.dim),
            }
    for item in aniso or []:
        (p, q), (e, rest), dim = item["pq"], item["split"], item["dim"]
        g = spec.group(dim)
        key = f"d={dim},pq=({p},{q}),split=({e},{rest})"
        A[key] = compute_A(g.omegas(), (p, q), a1, (e, rest))
        B[key] = compute_B(g.omegas(), g.velocities(), (p, q), a1, (e, rest))
        flags[key] = {
            "in_CA": in_class_A((p, q), a1, (e, rest)),
            "in_CB": None if a1 >= 2 else in_class_B((p, q), a1, (e, rest)),
        }
    return NormReport(A=A, B=B, vstar=compute_vstar(spec), class_flags=flags)
