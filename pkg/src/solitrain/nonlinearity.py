"""Double-power nonlinearity f(z) = g(|z|^2) z and its pointwise inequalities.

The represented family is g(s) = s^(alpha1/2) + c*s^(alpha2/2).  All
operations accept scalars or numpy arrays and are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# below this |z|^2 every branch-sensitive power is defined to be 0 (g(0)=0)
_UNDERFLOW = 1e-300

ORACLE_NAMES = ("fineq0", "fineq1", "fineq1p", "fineq1pp", "decomp", "cor_decomp")


def _alpha_max(d: int) -> float:
    return np.inf if d <= 2 else 4.0 / (d - 2)


@dataclass(frozen=True)
class NonlinearityParams:
    """Exponents and coefficient of the two-power nonlinearity.

    c0 is an empirical growth constant for |s g'(s)| + |s^2 g''(s)| against
    s^(alpha1/2) + s^(alpha2/2); it is estimated at construction (sup of the
    exact ratio on a log grid) and used only for reporting.
    """

    alpha1: float
    alpha2: float
    c: float = 0.0
    d: int = 1
    c0: float = 0.0

    def __post_init__(self):
        if not (0 < self.alpha1 <= self.alpha2):
            raise ValueError("need 0 < alpha1 <= alpha2")
        if self.alpha2 >= _alpha_max(self.d):
            raise ValueError(
                f"alpha2 must be below alpha_max={_alpha_max(self.d)} for d={self.d}"
            )
        if self.c0 == 0.0:
            object.__setattr__(self, "c0", self._estimate_c0())

    def _estimate_c0(self) -> float:
        # exact ratio of the two-power expressions; sampled on a wide log grid
        s = np.logspace(-12, 12, 481)
        a1, a2, c = self.alpha1 / 2, self.alpha2 / 2, self.c
        sgp = a1 * s**a1 + c * a2 * s**a2
        s2gpp = a1 * (a1 - 1) * s**a1 + c * a2 * (a2 - 1) * s**a2
        ratio = (np.abs(sgp) + np.abs(s2gpp)) / (s**a1 + s**a2)
        return float(ratio.max())


@dataclass(frozen=True)
class WirtingerPair:
    fz: complex
    fzbar: complex


def eval_g(params: NonlinearityParams, s):
    s = np.asarray(s, dtype=float)
    out = np.where(s > _UNDERFLOW, s, 1.0)
    out = out ** (params.alpha1 / 2) + params.c * out ** (params.alpha2 / 2)
    return np.where(s > _UNDERFLOW, out, 0.0)


def eval_f(params: NonlinearityParams, z):
    """f(z) = g(|z|^2) z; exactly 0 at z = 0."""
    z = np.asarray(z, dtype=complex)
    return eval_g(params, np.abs(z) ** 2) * z


def eval_wirtinger(params: NonlinearityParams, z):
    """Wirtinger derivatives f_z = g(s) + s g'(s), f_zbar = z^2 g'(s), s=|z|^2.

    s*g'(s) is evaluated directly (no negative powers), so the z -> 0 limit
    is exact: both components vanish.
    """
    z = np.asarray(z, dtype=complex)
    s = np.abs(z) ** 2
    a1, a2, c = params.alpha1 / 2, params.alpha2 / 2, params.c
    ss = np.where(s > _UNDERFLOW, s, 1.0)
    sgp = a1 * ss**a1 + c * a2 * ss**a2
    sgp = np.where(s > _UNDERFLOW, sgp, 0.0)
    fz = eval_g(params, s) + sgp
    # z^2 g'(s) = (z^2/s) * (s g'(s)); z^2/s has modulus 1
    phase2 = np.where(s > _UNDERFLOW, z * z / ss, 0.0)
    fzbar = phase2 * sgp
    if fz.ndim == 0:
        return WirtingerPair(complex(fz), complex(fzbar))
    return fz, fzbar


def gradient_of_f(params: NonlinearityParams, w, grad_w):
    """Chain rule: grad f(w) = f_z(w) grad w + f_zbar(w) conj(grad w).

    grad_w has the gradient components on the leading axis; w and each
    component must be sampled on the same grid.
    """
    w = np.asarray(w, dtype=complex)
    grad_w = np.asarray(grad_w, dtype=complex)
    comps = grad_w if grad_w.ndim > w.ndim else grad_w[None]
    if comps.shape[1:] != w.shape:
        raise ValueError("w and grad_w sampled on different grids")
    fz, fzbar = np.broadcast_arrays(*_wirtinger_arrays(params, w))
    out = fz * comps + fzbar * np.conj(comps)
    return out if grad_w.ndim > w.ndim else out[0]


def _wirtinger_arrays(params, z):
    res = eval_wirtinger(params, z)
    if isinstance(res, WirtingerPair):
        return np.asarray(res.fz), np.asarray(res.fzbar)
    return res


# ----------------------------------------------------------------------------
# sampling oracles for the pointwise inequalities
#
# Every oracle returns (lhs, rhs) with the universal constant stripped from
# the right side; ratio lhs/rhs then estimates that constant.


@dataclass(frozen=True)
class InequalityCheck:
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        if self.lhs == 0.0:
            return 0.0
        if self.rhs == 0.0:
            return np.inf
        return self.lhs / self.rhs


def _f(params, z):
    return eval_f(params, z)


def _ineq_fineq0(params, w1, w2):
    lhs = abs(_f(params, w1 + w2) - _f(params, w1))
    rhs = 0.0
    for a in (params.alpha1, params.alpha2):
        rhs += abs(w2) * abs(w1) ** a + abs(w2) ** (a + 1)
    return lhs, rhs


def _ineq_fineq1(params, w1, w2):
    fz_a, fzb_a = _wirtinger_arrays(params, np.asarray(w1 + w2))
    fz_b, fzb_b = _wirtinger_arrays(params, np.asarray(w1))
    lhs = abs(complex(fz_a - fz_b)) + abs(complex(fzb_a - fzb_b))
    rhs = 0.0
    for a in (params.alpha1, params.alpha2):
        rhs += abs(w2) ** min(a, 1.0) * (abs(w1) + abs(w2)) ** max(a - 1.0, 0.0)
    return lhs, rhs


def _grad_f_value(params, w, grad):
    fz, fzb = _wirtinger_arrays(params, np.asarray(w))
    return complex(fz) * grad + complex(fzb) * np.conj(grad)


def _ineq_fineq1p(params, w1, w2, g1, g2):
    # gradient of f(w1+w2) - f(w1) for sampled point values of w, grad w
    lhs = abs(
        _grad_f_value(params, w1 + w2, g1 + g2) - _grad_f_value(params, w1, g1)
    )
    rhs = 0.0
    for a in (params.alpha1, params.alpha2):
        rhs += abs(w2) ** min(a, 1.0) * (abs(w1) + abs(w2)) ** max(a - 1.0, 0.0) * abs(
            g1
        ) + (abs(w1) + abs(w2)) ** a * abs(g2)
    return lhs, rhs


def _ineq_fineq1pp(params, w1, w2, g1, g2):
    lhs = abs(
        _grad_f_value(params, w1 + w2, g1 + g2)
        - _grad_f_value(params, w1, g1)
        - _grad_f_value(params, w2, g2)
    )
    rhs = 0.0
    for a in (params.alpha1, params.alpha2):
        rhs += (abs(w1) + abs(w2)) ** max(a - 1.0, 0.0) * (
            abs(w2) ** min(a, 1.0) * abs(g1) + abs(w1) ** min(a, 1.0) * abs(g2)
        )
    return lhs, rhs


def _check_unit(name, arr):
    arr = np.asarray(arr, dtype=float)
    if np.any(arr < 0) or np.any(arr > 1):
        raise ValueError(f"{name} parameters must lie in [0, 1]")
    return arr


def _ineq_decomp(params, ws, thetas, phis):
    """|f(sum w_j) - sum f(w_j)| against the two-sided power decomposition.

    thetas, phis have shape (2, n): one exponent choice per (i, j).
    """
    ws = np.asarray(ws, dtype=complex)
    n = ws.size
    thetas = _check_unit("theta", thetas).reshape(2, n)
    phis = _check_unit("phi", phis).reshape(2, n)
    w = ws.sum()
    lhs = abs(_f(params, w) - sum(complex(_f(params, wj)) for wj in ws))
    absw = np.abs(ws)
    others = absw.sum() - absw  # sum_{l != j} |w_l|
    rhs = 0.0
    for i, a in enumerate((params.alpha1, params.alpha2)):
        th, ph = thetas[i], phis[i]
        rhs += float(
            np.sum(
                absw ** (a + th) * others ** (1.0 - th)
                + absw ** (1.0 - ph) * others ** (a + ph)
            )
        )
    return lhs, rhs


def _ineq_cor_decomp(params, w1, w2, thetas, phis):
    thetas = _check_unit("theta", thetas).reshape(2)
    phis = _check_unit("phi", phis).reshape(2)
    lhs = abs(_f(params, w1 + w2) - _f(params, w1) - _f(params, w2))
    rhs = 0.0
    for i, a in enumerate((params.alpha1, params.alpha2)):
        rhs += (
            abs(w1) ** (a + thetas[i]) * abs(w2) ** (1.0 - thetas[i])
            + abs(w1) ** (1.0 - phis[i]) * abs(w2) ** (a + phis[i])
        )
    return lhs, rhs


def inequality_oracle(params: NonlinearityParams, which: str, **inputs) -> InequalityCheck:
    """Evaluate both sides of one pointwise inequality (constant stripped).

    which: fineq0, fineq1 (w1, w2); fineq1p, fineq1pp (w1, w2, g1, g2);
    decomp (ws, thetas, phis); cor_decomp (w1, w2, thetas, phis).
    """
    table = {
        "fineq0": _ineq_fineq0,
        "fineq1": _ineq_fineq1,
        "fineq1p": _ineq_fineq1p,
        "fineq1pp": _ineq_fineq1pp,
        "decomp": _ineq_decomp,
        "cor_decomp": _ineq_cor_decomp,
    }
    if which not in table:
        raise ValueError(f"unknown inequality {which!r}; choose from {ORACLE_NAMES}")
    lhs, rhs = table[which](params, **inputs)
    return InequalityCheck(float(lhs), float(rhs))


def _random_complex(rng, n, scale):
    # log-uniform magnitude: the sup ratio converges much faster when the
    # small-|w| corner cases are actually sampled
    mag = scale * 10.0 ** rng.uniform(-6, 0, n)
    phase = rng.uniform(0.0, 2.0 * np.pi, n)
    return mag * np.exp(1j * phase)


def sample_sup_ratio(
    params: NonlinearityParams,
    which: str,
    n_samples: int,
    rng: np.random.Generator,
    scale: float = 10.0,
    n_terms: int = 4,
) -> float:
    """Empirical sup of lhs/rhs over random inputs |w| <= scale."""
    sup = 0.0
    for _ in range(n_samples):
        if which in ("fineq0", "fineq1"):
            w1, w2 = _random_complex(rng, 2, scale)
            chk = inequality_oracle(params, which, w1=w1, w2=w2)
        elif which in ("fineq1p", "fineq1pp"):
            w1, w2 = _random_complex(rng, 2, scale)
            g1, g2 = _random_complex(rng, 2, scale)
            chk = inequality_oracle(params, which, w1=w1, w2=w2, g1=g1, g2=g2)
        elif which == "decomp":
            ws = _random_complex(rng, n_terms, scale)
            chk = inequality_oracle(
                params,
                which,
                ws=ws,
                thetas=rng.uniform(0, 1, (2, n_terms)),
                phis=rng.uniform(0, 1, (2, n_terms)),
            )
        elif which == "cor_decomp":
            w1, w2 = _random_complex(rng, 2, scale)
            chk = inequality_oracle(
                params,
                which,
                w1=w1,
                w2=w2,
                thetas=rng.uniform(0, 1, 2),
                phis=rng.uniform(0, 1, 2),
            )
        else:
            raise ValueError(f"unknown inequality {which!r}")
        sup = max(sup, chk.ratio)
    return sup
