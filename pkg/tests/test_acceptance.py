"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest -s tests/test_acceptance.py` to see the lines as they
complete.  The heavy constructions (two-soliton Duhamel fixed points in 1D,
1D-2D, and 1D-2D-3D) run at the scales pinned below; everything fits in a
few GB of memory and finishes on one core well inside the stated budgets.
"""

import time
from fractions import Fraction

import numpy as np
import pytest

from solitrain.estimates import (
    anisotropic_counterexample_sweep,
    check_H0,
    demonstrate_nodecay,
    lp_norm,
)
from solitrain.evolution import (
    PicardConfig,
    choose_N1_exponents,
    fit_decay,
    forward_consistency_check,
    free_propagate,
    n1_constraints,
    picard_construct,
    split_step,
    subadmissible_decay_check,
    t6_control,
)
from solitrain.grids import Field, Grid
from solitrain.nonlinearity import NonlinearityParams, sample_sup_ratio
from solitrain.solitons import SolitonParams, eval_soliton_grid, solve_ground_state
from solitrain.train import (
    DimGroup,
    ParamSchedule,
    TrainSpec,
    check_compete,
    gen_params,
    plan_construction,
    schedule_exact,
    stage_plans,
    vstar_within,
)

CUBIC = NonlinearityParams(2.0, 2.0)
A12 = {d: NonlinearityParams(1.2, 1.2, d=d) for d in (1, 2, 3)}


def _verdict(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# soliton exactness and conservation


@pytest.fixture(scope="module")
def soliton_run():
    bs = solve_ground_state(CUBIC, 1, 1.0)
    sp = SolitonParams(omega=1.0, v=(2.0,), x0=(0.0,))
    grid = Grid(1, 80.0, 4096)
    dt = 1e-3
    started = time.perf_counter()
    u = Field(grid, eval_soliton_grid(bs, sp, 0.0, grid), 0.0)
    m0 = u.mass()
    u = split_step(u, dt, CUBIC, n_steps=5000)
    runtime = time.perf_counter() - started
    exact = eval_soliton_grid(bs, sp, 5.0, grid)
    err = lp_norm(u.values - exact, grid, 2.0) / lp_norm(exact, grid, 2.0)
    drift = abs(u.mass() - m0) / m0
    return {"err": err, "drift": drift, "runtime": runtime}


def test_soliton_exactness(soliton_run):
    # Strang splitting at dt = 1e-3 carries an intrinsic global phase drift
    # of ~3.7e-6 for this soliton (second order, verified by dt-halving), so
    # the 1e-6 figure is expected to fail; the criterion is asserted as
    # stated rather than weakened.
    err, runtime = soliton_run["err"], soliton_run["runtime"]
    ok = err <= 1e-6 and runtime < 60.0
    _verdict(
        "soliton exactness (1D cubic, v=2, dt=1e-3, t<=5)",
        ok,
        f"rel L2 error {err:.3e} (tol 1e-6), runtime {runtime:.1f}s (< 60s)",
    )


def test_conservation_and_unitarity(soliton_run):
    drift = soliton_run["drift"]
    grid = Grid(1, 20.0, 1024)
    rng = np.random.default_rng(0)
    f = Field(grid, rng.normal(size=1024) + 1j * rng.normal(size=1024), 0.0)
    g = free_propagate(free_propagate(f, 0.7), -0.7)
    rt = lp_norm(g.values - f.values, grid, 2.0) / lp_norm(f.values, grid, 2.0)
    ok = drift <= 1e-10 and rt <= 1e-12
    _verdict(
        "conservation / unitarity",
        ok,
        f"mass drift {drift:.2e} (<= 1e-10), round-trip {rt:.2e} (<= 1e-12)",
    )


def test_dispersive_inequality():
    worst = 0.0
    for d in (1, 2):
        n = 2048 if d == 1 else 512
        grid = Grid(d, 60.0, (n,) * d)
        u0 = np.exp(-grid.radius2((0.0,) * d) / 2.0).astype(complex)
        f = Field(grid, u0, 0.0)
        for p in (4.0, np.inf):
            pp = 1.0 if np.isinf(p) else p / (p - 1.0)
            base = lp_norm(u0, grid, pp)
            for t in (0.5, 1.0, 2.0, 4.0):
                g = free_propagate(f, t)
                bound = (4 * np.pi * t) ** (
                    -d * (0.5 - (0.0 if np.isinf(p) else 1.0 / p))
                ) * base
                worst = max(worst, lp_norm(g.values, grid, p) / bound)
    ok = worst <= 1 + 1e-3
    _verdict("dispersive inequality (Gaussian data)", ok, f"worst ratio {worst:.6f} (<= 1.001)")


# ---------------------------------------------------------------------------
# interaction-term decay (H0)


def test_H0_decay_rate():
    # schedule rho = 0.25, N = 3; gamma set so v_* = 10 exactly
    sch0 = ParamSchedule(rho=0.25, gamma_speed=1.0, delta=0.0, N=3, omega_star=16.0)
    g0 = DimGroup(dim=1, solitons=gen_params(sch0))
    base = vstar_within(g0)
    gamma = 10.0 / base
    sch = ParamSchedule(rho=0.25, gamma_speed=gamma, delta=0.0, N=3, omega_star=16.0)
    spec = TrainSpec(
        nl=CUBIC,
        groups=[DimGroup(dim=1, solitons=gen_params(sch))],
        a=0.9,
        D=5.0,
        omega_star=16.0,
    )
    vstar = vstar_within(spec.groups[0])
    assert vstar == pytest.approx(10.0, rel=1e-12)
    grid = Grid(1, 1300.0, 2**21)
    times = np.linspace(0.0, 2.0, 21)
    rep = check_H0(spec, r=2.0, s=1.0, times=times, grid=grid, fit_window=(0.0, 2.0))
    ok = rep.holder_ok and rep.fit.rate >= 0.9 * 0.9 * 10.0
    _verdict(
        "interaction-source sup-norm decay (v_*=10, a=0.9)",
        ok,
        f"fitted rate {rep.fit.rate:.2f} (>= {0.9*9.0:.2f}), Holder chain exact: {rep.holder_ok}",
    )


# ---------------------------------------------------------------------------
# competing norms and the geometric schedule (exact arithmetic)


def test_compete_and_schedule():
    rng = np.random.default_rng(42)
    n_ok = 0
    for _ in range(1000):
        alpha1 = rng.uniform(0.3, 1.9)
        d = int(rng.integers(1, 4))
        omega_star = rng.uniform(0.1, 3.0)
        n = int(rng.integers(1, 7))
        omegas = omega_star * rng.uniform(1e-6, 1.0 - 1e-12, n)
        p_lo = d * alpha1 / 2.0
        p = p_lo * rng.uniform(1.01, 4.0) + 1e-9
        q = np.inf if rng.random() < 0.2 else p * rng.uniform(1.01, 10.0)
        rep = check_compete(list(omegas), p=p, q=q, alpha1=alpha1, dims=d, omega_star=omega_star)
        n_ok += rep.holds
    # Appendix-style schedule identities with exact rationals
    Lam, omst = Fraction(7), Fraction(1)
    gam = 2 * Lam
    mono_ok = True
    vstar_ok = True
    prev_A = prev_B = None
    for rho in (Fraction(1, 2), Fraction(1, 4), Fraction(1, 10)):
        omegas_f, speeds_f = schedule_exact(rho, gam, Fraction(0), 5, omst)
        A_sq = sum(w**2 for w in omegas_f)
        B_sq = sum((s**2 + 1) * w**2 for w, s in zip(omegas_f, speeds_f))
        if prev_A is not None:
            mono_ok &= A_sq < prev_A and B_sq < prev_B
        prev_A, prev_B = A_sq, B_sq
        vels = [s if j % 2 == 0 else -s for j, s in enumerate(speeds_f)]
        vsq = None
        for j in range(len(vels)):
            for k in range(j + 1, len(vels)):
                cand = Fraction(1, 4) * min(Fraction(1), omegas_f[j], omegas_f[k]) * (
                    vels[j] - vels[k]
                ) ** 2
                vsq = cand if vsq is None else min(vsq, cand)
        vstar_ok &= vsq >= Lam**2
    ok = n_ok == 1000 and mono_ok and vstar_ok
    _verdict(
        "competing norms / geometric schedule",
        ok,
        f"A_q < max(1,w*)^(1/a1) A_p on {n_ok}/1000 draws; exact-rational "
        f"monotonicity {mono_ok}, v_* >= Lambda {vstar_ok}",
    )


# ---------------------------------------------------------------------------
# pointwise inequality oracles


def test_inequality_oracles_stable():
    params = NonlinearityParams(1.0, 3.0, c=0.5)
    details = []
    ok = True
    for which in ("fineq0", "fineq1", "fineq1p", "fineq1pp", "decomp"):
        rng1 = np.random.default_rng(7)
        sup1 = sample_sup_ratio(params, which, 10_000, rng1)
        rng2 = np.random.default_rng(7)
        sup2 = sample_sup_ratio(params, which, 20_000, rng2)
        var = (sup2 - sup1) / sup1
        ok &= np.isfinite(sup2) and var < 0.2
        details.append(f"{which}: sup {sup2:.3f} (var {var:.1%})")
    _verdict("pointwise inequality oracles", ok, "; ".join(details))


# ---------------------------------------------------------------------------
# the 1D fixed-point construction


@pytest.fixture(scope="module")
def picard_1d():
    spec = TrainSpec(
        nl=CUBIC,
        groups=[
            DimGroup(
                dim=1,
                solitons=[
                    SolitonParams(omega=1.0, v=(-20.0,), x0=(0.0,)),
                    SolitonParams(omega=1.0, v=(20.0,), x0=(0.0,)),
                ],
            )
        ],
        a=0.9,
        D=5.0,
        omega_star=2.0,
    )
    plan = plan_construction((1,), 2.0, 2.0, t0=0.0)
    grid = Grid(1, 130.0, 4096)
    cfg = PicardConfig(t0=0.0, T_end=5.0, n_time=8192, max_iter=10, contraction_tol=1e-8)
    started = time.perf_counter()
    res = picard_construct(spec, plan, cfg, grid)
    checks = forward_consistency_check(res, spec, dt=2e-4, t_stop=4.0)
    runtime = time.perf_counter() - started
    return {"res": res, "checks": checks, "runtime": runtime, "spec": spec}


def test_picard_1d_construction(picard_1d):
    res = picard_1d["res"]
    checks = picard_1d["checks"]
    runtime = picard_1d["runtime"]
    assert res.vstar == pytest.approx(20.0)
    factors_after_2 = res.factors[1:]
    fwd = max(v for _, v in checks)
    lam = res.fits["L2"].lambda_hat
    ok = (
        all(f <= 0.5 for f in factors_after_2)
        and fwd <= 1e-4
        and lam is not None
        and lam > 0
        and runtime < 600.0
    )
    _verdict(
        "1D Picard construction (v_* = 20)",
        ok,
        f"factors {[round(f, 3) for f in res.factors]}, forward max err "
        f"{fwd:.2e} (<= 1e-4), lambda_hat {lam}, runtime {runtime:.0f}s (< 600s)",
    )


# ---------------------------------------------------------------------------
# mixed 1D-2D construction


@pytest.fixture(scope="module")
def mixed_12():
    g1 = DimGroup(
        dim=1,
        solitons=[
            SolitonParams(omega=1.0, v=(-6.0,), x0=(0.0,)),
            SolitonParams(omega=0.49, v=(2.0,), x0=(0.0,)),
        ],
    )
    g2 = DimGroup(
        dim=2,
        solitons=[
            SolitonParams(omega=0.64, v=(-2.0, 0.0), x0=(0.0, 0.0)),
            SolitonParams(omega=0.36, v=(6.0, 0.0), x0=(0.0, 0.0)),
        ],
    )
    spec1 = TrainSpec(nl=A12[1], groups=[g1], a=0.9, D=5.0, omega_star=4.0)
    spec12 = TrainSpec(nl=A12[2], groups=[g1, g2], a=0.9, D=5.0, omega_star=4.0)
    plan = plan_construction((1, 2), 1.2, 1.2, t0=1.0)
    p1, p2 = stage_plans(plan)
    L = 72.0
    cfg = PicardConfig(t0=1.0, T_end=3.5, n_time=256, max_iter=9, contraction_tol=1e-7)
    started = time.perf_counter()
    r1 = picard_construct(spec1, p1, cfg, Grid(1, L, 4096))
    r2 = picard_construct(spec12, p2, cfg, Grid(2, L, (256, 256)), lower_dim_errors=[r1.eta])
    runtime = time.perf_counter() - started
    return {"r1": r1, "r2": r2, "spec12": spec12, "runtime": runtime}


def test_mixed_1d2d_construction(mixed_12):
    r2 = mixed_12["r2"]
    runtime = mixed_12["runtime"]
    rate = r2.fits["L2"].rate_raw
    factors_ok = all(f < 0.8 for f in r2.factors)
    demo = demonstrate_nodecay(mixed_12["spec12"], t=0.0, grid=r2.eta.grid)
    tail_raw = float(np.mean(demo.raw[-16:]))
    tail_cor = float(np.mean(demo.corrected[-16:]))
    nodecay_ok = (
        demo.limit_raw > 0.05
        and abs(tail_raw - demo.limit_raw) < 0.05 * demo.limit_raw
        and tail_cor < 1e-6 * demo.limit_raw
    )
    ok = factors_ok and rate > 0 and nodecay_ok and runtime < 1800.0
    _verdict(
        "mixed 1D-2D construction (gradient-controlled regime)",
        ok,
        f"factors {[round(f, 3) for f in r2.factors]} (< 0.8), L2 rate "
        f"{rate:.2f} (> 0), uncorrected tail {tail_raw:.3f} -> limit "
        f"{demo.limit_raw:.3f}, corrected tail {tail_cor:.2e}, "
        f"runtime {runtime:.0f}s (< 1800s)",
    )


# ---------------------------------------------------------------------------
# 1D-2D-3D pipeline


def test_pipeline_1d2d3d():
    nl = A12
    g1 = DimGroup(dim=1, solitons=[SolitonParams(omega=0.25, v=(0.0,), x0=(0.0,))])
    g2 = DimGroup(dim=2, solitons=[SolitonParams(omega=0.25, v=(2.0, 0.0), x0=(0.0, 0.0))])
    g3 = DimGroup(
        dim=3, solitons=[SolitonParams(omega=0.25, v=(-2.0, 0.0, 0.0), x0=(0.0, 0.0, 0.0))]
    )
    spec1 = TrainSpec(nl=nl[1], groups=[g1], a=0.9, D=5.0, omega_star=4.0)
    spec12 = TrainSpec(nl=nl[2], groups=[g1, g2], a=0.9, D=5.0, omega_star=4.0)
    spec123 = TrainSpec(nl=nl[3], groups=[g1, g2, g3], a=0.9, D=5.0, omega_star=4.0)
    plan = plan_construction((1, 2, 3), 1.2, 1.2, t0=4.0)
    p1, p2, p3 = stage_plans(plan)
    L = 54.0
    cfg = PicardConfig(t0=4.0, T_end=7.0, n_time=144, max_iter=8, contraction_tol=1e-7)
    started = time.perf_counter()
    r1 = picard_construct(spec1, p1, cfg, Grid(1, L, 4096))
    r2 = picard_construct(spec12, p2, cfg, Grid(2, L, (256, 256)), lower_dim_errors=[r1.eta])
    r3 = picard_construct(
        spec123, p3, cfg, Grid(3, L, (64, 64, 64)), lower_dim_errors=[r1.eta, r2.eta]
    )
    # eta2 time-Lebesgue sup control, constant stability under 2D refinement
    lam2 = r2.fits["L2"].rate_raw
    sup_a = [lp_norm(r2.eta.values[i], r2.eta.grid, np.inf) for i in range(len(r2.eta.taus))]
    C_a, _ = t6_control(r2.eta.taus, sup_a, lam2)
    r2b = picard_construct(spec12, p2, cfg, Grid(2, L, (128, 128)), lower_dim_errors=[r1.eta])
    sup_b = [lp_norm(r2b.eta.values[i], r2b.eta.grid, np.inf) for i in range(len(r2b.eta.taus))]
    C_b, _ = t6_control(r2b.eta.taus, sup_b, lam2)
    runtime = time.perf_counter() - started
    stable = 0.5 < C_a / C_b < 2.0
    converges = all(f < 1.0 for f in r3.factors) and r3.diffs[-1] < r3.diffs[0]
    ok = converges and stable and r3.fits["L2"].rate_raw > 0
    _verdict(
        "1D-2D-3D staged pipeline (64^3)",
        ok,
        f"stage-3 factors {[round(f, 3) for f in r3.factors]}, eta2 L6t-Linf "
        f"constants {C_a:.1f} vs {C_b:.1f} (ratio {C_a / C_b:.2f}), eta L2 rate "
        f"{r3.fits['L2'].rate_raw:.2f}, runtime {runtime:.0f}s",
    )


# ---------------------------------------------------------------------------
# anisotropic counterexample and exponent machinery


def test_anisotropic_counterexample():
    sweep = anisotropic_counterexample_sweep(0.25, 1.5, 4.0, 2.0)
    d_p = np.abs(np.diff(sweep.iso_p))
    iso_converge = d_p[0] < 1e-6 and np.abs(np.diff(sweep.iso_q))[0] < 1e-2
    fit_ok = abs(sweep.fitted_exponent - (-0.125)) <= 0.05 * 0.125
    ok = iso_converge and fit_ok
    _verdict(
        "anisotropic counterexample",
        ok,
        f"fitted exponent {sweep.fitted_exponent:.4f} (-0.125 +- 5%), "
        f"isotropic norms converge: {iso_converge}",
    )


def test_tail_transfer_and_N1():
    taus = np.linspace(0, 8, 3201)
    checks = []
    for p, q, lam in ((2.0, 2.0, 2.0), (1.0, np.inf, 1.5), (1.0, 2.0, 1.0)):
        c = 1.0 if np.isinf(q) else (q * lam) ** (1.0 / q)
        u = 0.99 * c * np.exp(-lam * taus)
        rep = subadmissible_decay_check(taus, u, p=p, q=q, lam=lam)
        checks.append(rep.bound_ok)
    n1_ok = True
    for d in (1, 2, 3):
        amax = np.inf if d <= 2 else 4.0 / (d - 2)
        for m in np.linspace(0.05, min(0.98 * amax, 6.0), 25):
            p, b, mu = choose_N1_exponents(d, float(m))
            cons = n1_constraints(d, float(m), p, b)
            n1_ok &= cons["b1"] and cons["b2"] and cons["mu_positive"]
    _, _, mu31 = choose_N1_exponents(3, 1.0)
    ok = all(checks) and n1_ok and mu31 == pytest.approx(0.5)
    _verdict(
        "tail-norm transfer / gradient-route exponents",
        ok,
        f"three closed-form cases {checks}, sweeps valid {n1_ok}, mu(d=3,m=1) = {mu31}",
    )
