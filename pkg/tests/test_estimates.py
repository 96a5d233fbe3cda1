"""Grid norms, interaction sources, source-decay checks, the anisotropic counterexample."""

import numpy as np
import pytest

from solitrain.estimates import (
    anisotropic_counterexample,
    anisotropic_counterexample_sweep,
    check_H0,
    check_H1,
    demonstrate_nodecay,
    holder_interpolation_ok,
    lp_norm,
    source_gradH,
    source_H,
    source_H1,
    source_H2,
    train_profile,
)
from solitrain.grids import Field, Grid
from solitrain.nonlinearity import NonlinearityParams
from solitrain.solitons import SolitonParams, solve_ground_state
from solitrain.train import DimGroup, ParamSchedule, TrainSpec, compute_A, gen_params

CUBIC = NonlinearityParams(2.0, 2.0)
INF = np.inf


def _spec_1d(entries, nl=CUBIC, a=0.9, D=5.0, omega_star=None):
    sols = [SolitonParams(omega=o, v=(v,), x0=(x,)) for o, v, x in entries]
    om_max = max(o for o, _, _ in entries)
    return TrainSpec(
        nl=nl,
        groups=[DimGroup(dim=1, solitons=sols)],
        a=a,
        D=D,
        omega_star=omega_star or 2.0 * om_max,
    )


class TestLpNorm:
    def test_zero_field(self):
        grid = Grid(2, 5.0, (32, 32))
        z = grid.zeros()
        for p in (0.5, 1.0, 2.0, INF):
            assert lp_norm(z, grid, p) == 0.0
        assert lp_norm(z, grid, 2.0, q=4.0, split=(1, 1)) == 0.0

    def test_soliton_l2(self):
        grid = Grid(1, 80.0, 4096)
        spec = _spec_1d([(1.0, 0.0, 0.0)])
        T = train_profile(spec, 1, 0.0, grid)
        assert lp_norm(T, grid, 2.0) == pytest.approx(2.0, abs=1e-6)

    def test_separable_factorization_exact(self):
        # rectangle rule factorizes exactly on separable fields
        grid = Grid(2, (6.0, 4.0), (64, 32))
        g = np.exp(-grid.axis(0) ** 2)
        h = 1.0 / (1.0 + grid.axis(1) ** 2)
        u = g[:, None] * h[None, :]
        for p, q in ((2.0, 3.0), (1.0, INF), (INF, 2.0)):
            lhs = lp_norm(u, grid, p, q=q, split=(1, 1))
            g1 = Grid(1, 6.0, 64)
            g2 = Grid(1, 4.0, 32)
            rhs = lp_norm(g, g1, p) * lp_norm(h, g2, q)
            assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_split_mismatch(self):
        grid = Grid(2, 5.0, (32, 32))
        with pytest.raises(ValueError, match="partition"):
            lp_norm(grid.zeros(), grid, 2.0, q=2.0, split=(1, 2))

    def test_holder_exact_on_random_fields(self):
        grid = Grid(1, 3.0, 256)
        rng = np.random.default_rng(0)
        for _ in range(25):
            u = rng.normal(size=256) + 1j * rng.normal(size=256)
            r = rng.uniform(1.1, 6.0)
            s = rng.uniform(0.2, r - 0.1)
            assert holder_interpolation_ok(u, grid, r, s)


class TestSources:
    def test_single_soliton_H_zero(self):
        grid = Grid(1, 40.0, 512)
        spec = _spec_1d([(1.0, 0.0, 0.0)])
        H = source_H(spec, 0.0, grid)
        assert np.max(np.abs(H.samples)) == 0.0

    def test_single_soliton_gradH_zero(self):
        grid = Grid(1, 40.0, 512)
        spec = _spec_1d([(1.0, 2.0, 0.0)])
        gh = source_gradH(spec, 0.3, grid)
        assert np.max(np.abs(gh.samples)) < 1e-14

    def test_two_soliton_midpoint_cross_terms(self):
        # identical stationary real solitons at -s/2 and +s/2: at the midpoint
        # H = (2 phi)^3 - 2 phi^3 = 6 phi(s/2)^3 exactly
        s = 8.0
        grid = Grid(1, 40.0, 2048)
        spec = _spec_1d([(1.0, 0.0, -s / 2), (1.0, 0.0, +s / 2)])
        spec.ensure_bound_states()
        H = source_H(spec, 0.0, grid)
        mid = np.argmin(np.abs(grid.axis(0)))
        phi_half = spec.groups[0].bound_states[1.0].profile(np.array([s / 2]))[0]
        assert abs(H.samples[mid]) == pytest.approx(6 * phi_half**3, rel=1e-6)

    def test_H_decreases_with_separation(self):
        grid = Grid(1, 60.0, 4096)
        sups = []
        for s in (2.0, 4.0, 6.0, 8.0, 12.0):
            spec = _spec_1d([(1.0, 0.0, -s / 2), (1.0, 0.0, +s / 2)])
            H = source_H(spec, 0.0, grid)
            sups.append(np.abs(H.samples).max())
        assert all(a > b for a, b in zip(sups, sups[1:]))

    def test_H_exponential_decay_in_time(self):
        # max|H(t)| <= C e^{-a v_* t} with C fitted at t = 0
        spec = _spec_1d([(1.0, -6.0, 0.0), (1.0, 6.0, 0.0)])
        grid = Grid(1, 80.0, 8192)
        vstar = 0.5 * 12.0
        H0 = np.abs(source_H(spec, 0.0, grid).samples).max()
        for t in (0.25, 0.5, 0.75):
            Ht = np.abs(source_H(spec, t, grid).samples).max()
            assert Ht <= H0 * np.exp(-spec.a * vstar * t) * 1.05

    def test_center_leaves_box_warns(self):
        grid = Grid(1, 10.0, 256)
        spec = _spec_1d([(1.0, 20.0, 0.0), (1.0, -20.0, 0.0)])
        with pytest.warns(UserWarning, match="outside the box"):
            source_H(spec, 1.0, grid)


class TestCheckH0H1:
    def _train(self):
        return _spec_1d([(1.0, -6.0, 0.0), (0.64, 6.0, 0.0)])

    def test_h0_report(self):
        spec = self._train()
        grid = Grid(1, 60.0, 8192)
        times = np.linspace(0.0, 1.5, 16)
        rep = check_H0(spec, r=2.0, s=1.0, times=times, grid=grid)
        assert rep.holder_ok
        assert rep.rate_ok, (rep.fit.rate, rep.rate_target)
        assert np.isfinite(rep.coefficient)

    def test_h0_coefficient_stable_under_refinement(self):
        spec = self._train()
        times = np.linspace(0.0, 1.0, 9)
        c1 = check_H0(spec, 2.0, 1.0, times, Grid(1, 60.0, 4096)).coefficient
        c2 = check_H0(spec, 2.0, 1.0, times, Grid(1, 60.0, 8192)).coefficient
        assert 0.5 < c1 / c2 < 2.0

    def test_h1_report(self):
        spec = self._train()
        grid = Grid(1, 60.0, 8192)
        times = np.linspace(0.0, 1.5, 16)
        rep = check_H1(spec, r=2.0, s=1.0, p=2.0, q=2.0, times=times, grid=grid)
        assert rep.holder_ok
        assert rep.rate_ok, (rep.fit.rate, rep.rate_target)

    def test_h1_exponent_relation(self):
        spec = self._train()
        with pytest.raises(ValueError, match="1/q"):
            check_H1(spec, 2.0, 1.0, p=2.0, q=3.0, times=np.linspace(0, 1, 5),
                     grid=Grid(1, 60.0, 1024))

    def test_too_few_times(self):
        spec = self._train()
        with pytest.raises(ValueError, match="3 time samples"):
            check_H0(spec, 2.0, 1.0, [0.0, 1.0], Grid(1, 60.0, 1024))


class TestNoDecay:
    def _mixed(self, n1d=2):
        nl = NonlinearityParams(1.2, 1.2, d=2)
        sols1 = [SolitonParams(omega=1.0, v=(-2.0,), x0=(0.0,)),
                 SolitonParams(omega=0.49, v=(2.0,), x0=(0.0,))][:n1d]
        sols2 = [SolitonParams(omega=0.81, v=(0.5, 0.0), x0=(0.0, 0.0))]
        return TrainSpec(
            nl=nl,
            groups=[DimGroup(dim=1, solitons=sols1), DimGroup(dim=2, solitons=sols2)],
            a=0.9,
            D=5.0,
            omega_star=2.0,
        )

    def test_single_1d_soliton_limit_zero(self):
        spec = self._mixed(n1d=1)
        grid = Grid(2, (30.0, 30.0), (128, 128))
        rep = demonstrate_nodecay(spec, 0.0, grid)
        assert rep.limit_raw < 1e-12

    def test_two_soliton_nonzero_limit(self):
        spec = self._mixed(n1d=2)
        grid = Grid(2, (30.0, 30.0), (256, 256))
        rep = demonstrate_nodecay(spec, 0.0, grid)
        assert rep.limit_raw > 0.1
        tail = rep.raw[-16:]
        assert np.all(np.abs(tail - rep.limit_raw) < 0.05 * rep.limit_raw)

    def test_corrected_source_decays(self):
        spec = self._mixed(n1d=2)
        grid = Grid(2, (30.0, 30.0), (256, 256))
        rep = demonstrate_nodecay(spec, 0.0, grid)
        # H1 tail is controlled by the 2D soliton's decay, raw is not
        assert np.mean(rep.corrected[-16:]) < 1e-6 * rep.limit_raw


class TestAnisotropicCounterexample:
    def test_example_values(self):
        # (p,q,m,a) = (4,2,1/4,1.5): iso norms converge, aniso ~ eps^(-1/8)
        sweep = anisotropic_counterexample_sweep(0.25, 1.5, 4.0, 2.0)
        assert sweep.predicted_exponent == pytest.approx(-0.125)
        assert sweep.fitted_exponent == pytest.approx(-0.125, rel=0.05)
        # isotropic norms converge (Cauchy) as eps -> 0; iso_q only like eps^(1/4)
        d_p = np.abs(np.diff(sweep.iso_p))
        d_q = np.abs(np.diff(sweep.iso_q))
        assert d_p[0] < 1e-6 and d_p[0] <= d_p[-1] + 1e-12
        assert d_q[0] < 1e-2 and d_q[0] < d_q[-1]
        # anisotropic norm grows
        assert sweep.aniso[0] > 10 * sweep.aniso[-1]

    def test_no_admissible_a(self):
        with pytest.raises(ValueError, match="no admissible"):
            anisotropic_counterexample(m=0.6, a=1.5, p=4.0, q=2.0, eps=1e-4)

    def test_bad_a(self):
        with pytest.raises(ValueError, match="violates"):
            anisotropic_counterexample(m=0.25, a=0.1, p=4.0, q=2.0, eps=1e-4)

    def test_single_eval(self):
        res = anisotropic_counterexample(0.25, 1.5, 4.0, 2.0, 1e-4)
        assert res.aniso > res.iso_q > 0


def test_grid_norm_request():
    from solitrain.estimates import GridNorm, grid_norm
    from solitrain.grids import Field

    grid = Grid(2, (4.0, 4.0), (32, 32))
    f = Field(grid, np.ones((32, 32), complex), 0.0)
    out = grid_norm(f, GridNorm(p=2.0))
    assert out.value == pytest.approx(8.0)  # sqrt(box area) = sqrt(64)
    out2 = grid_norm(f, GridNorm(p=np.inf, q=2.0, split=(1, 1)))
    assert out2.value == pytest.approx(np.sqrt(8.0))
