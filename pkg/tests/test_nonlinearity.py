"""Tests for the double-power nonlinearity and its inequality oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from solitrain.grids import Grid
from solitrain.nonlinearity import (
    NonlinearityParams,
    eval_f,
    eval_wirtinger,
    gradient_of_f,
    inequality_oracle,
    sample_sup_ratio,
)

CUBIC = NonlinearityParams(2.0, 2.0)
TWOPOW = NonlinearityParams(1.0, 3.0, c=0.5)
SQRT = NonlinearityParams(1.0, 1.0)


def finite_diff_wirtinger(params, z, h=1e-6):
    """Independent oracle: central differences of f viewed as a map of (x, y)."""
    fx = (eval_f(params, z + h) - eval_f(params, z - h)) / (2 * h)
    fy = (eval_f(params, z + 1j * h) - eval_f(params, z - 1j * h)) / (2 * h)
    fz = 0.5 * (fx - 1j * fy)
    fzbar = 0.5 * (fx + 1j * fy)
    return complex(fz), complex(fzbar)


class TestEvalF:
    def test_cubic_real(self):
        assert eval_f(CUBIC, 2.0) == pytest.approx(8.0)

    def test_cubic_complex(self):
        assert eval_f(CUBIC, 1 + 1j) == pytest.approx(2 + 2j)

    def test_two_power(self):
        # g(4) = 4^(1/2) + 0.5 * 4^(3/2) = 6, f = 6 * 2
        assert eval_f(TWOPOW, 2.0) == pytest.approx(12.0)

    def test_zero(self):
        assert eval_f(TWOPOW, 0.0) == 0.0
        assert eval_f(SQRT, 0.0) == 0.0

    def test_vectorized(self):
        z = np.array([0.0, 2.0, 1 + 1j])
        out = eval_f(CUBIC, z)
        assert np.allclose(out, [0.0, 8.0, 2 + 2j])


class TestWirtinger:
    def test_zero_is_zero(self):
        for params in (CUBIC, TWOPOW, SQRT):
            w = eval_wirtinger(params, 0.0)
            assert w.fz == 0 and w.fzbar == 0

    def test_cubic_at_one(self):
        # g(s) = s: f_z = g + s g' = 2, f_zbar = z^2 g' = 1
        w = eval_wirtinger(CUBIC, 1.0)
        assert w.fz == pytest.approx(2.0)
        assert w.fzbar == pytest.approx(1.0)

    def test_sqrt_at_four(self):
        # g(s) = sqrt(s): f_z = 4 + 16/(2*4) = 6, f_zbar = 16/8 = 2
        w = eval_wirtinger(SQRT, 4.0)
        assert w.fz == pytest.approx(6.0)
        assert w.fzbar == pytest.approx(2.0)

    @pytest.mark.parametrize("params", [CUBIC, TWOPOW, SQRT])
    def test_matches_finite_differences(self, params):
        rng = np.random.default_rng(7)
        for _ in range(40):
            z = complex(rng.uniform(-3, 3), rng.uniform(-3, 3))
            if abs(z) < 0.05:
                continue  # away from the branch point
            w = eval_wirtinger(params, z)
            fz_fd, fzbar_fd = finite_diff_wirtinger(params, z)
            scale = max(1.0, abs(fz_fd), abs(fzbar_fd))
            assert abs(w.fz - fz_fd) / scale < 1e-5
            assert abs(w.fzbar - fzbar_fd) / scale < 1e-5


class TestGradientOfF:
    def test_constant_field(self):
        w = np.full(64, 1.5 + 0.5j)
        grad = np.zeros(64, dtype=complex)
        out = gradient_of_f(CUBIC, w, grad)
        assert np.allclose(out, 0.0)

    def test_real_cubic_chain_rule(self):
        # real w, cubic: grad f(w) = 3 w^2 grad w
        rng = np.random.default_rng(3)
        w = rng.uniform(0.2, 2.0, 32)
        gw = rng.uniform(-1, 1, 32)
        out = gradient_of_f(CUBIC, w.astype(complex), gw.astype(complex))
        assert np.allclose(out, 3 * w**2 * gw, rtol=1e-12)

    def test_matches_spectral_differentiation(self):
        # chain-rule gradient of f(w) against the spectral derivative oracle;
        # the carrier must be a grid wavenumber to stay periodic
        import scipy.fft as sfft

        grid = Grid(1, 20.0, 512)
        x = grid.axis(0)
        carrier = grid.wavenumbers(0)[2]
        w = (np.sqrt(2.0) / np.cosh(x)) * np.exp(1j * carrier * x)
        k = grid.wavenumbers(0)
        grad_w = sfft.ifft(1j * k * sfft.fft(w))
        got = gradient_of_f(CUBIC, w, grad_w)
        want = sfft.ifft(1j * k * sfft.fft(eval_f(CUBIC, w)))
        assert np.max(np.abs(got - want)) < 1e-10

    def test_grid_mismatch(self):
        with pytest.raises(ValueError, match="different grids"):
            gradient_of_f(CUBIC, np.zeros(8, complex), np.zeros((1, 9), complex))


class TestInequalityOracle:
    def test_fineq0_with_zero_w1(self):
        chk = inequality_oracle(CUBIC, "fineq0", w1=0.0, w2=1 + 2j)
        aw = abs(1 + 2j)
        assert chk.lhs == pytest.approx(abs(eval_f(CUBIC, 1 + 2j)))
        assert chk.rhs == pytest.approx(2 * aw**3)
        assert np.isfinite(chk.ratio)

    def test_decomp_all_zero(self):
        chk = inequality_oracle(
            CUBIC, "decomp", ws=np.zeros(4, complex),
            thetas=0.5 * np.ones((2, 4)), phis=0.5 * np.ones((2, 4)),
        )
        assert chk.lhs == 0.0
        assert chk.ratio == 0.0

    def test_decomp_example_tuple(self):
        ws = np.array([1.0, 0.5j, -0.2])
        chk = inequality_oracle(
            CUBIC, "decomp", ws=ws,
            thetas=0.5 * np.ones((2, 3)), phis=0.5 * np.ones((2, 3)),
        )
        assert 0 < chk.ratio < 10.0

    def test_exponents_out_of_range(self):
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            inequality_oracle(
                CUBIC, "decomp", ws=np.ones(3, complex),
                thetas=1.5 * np.ones((2, 3)), phis=0.5 * np.ones((2, 3)),
            )

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown inequality"):
            inequality_oracle(CUBIC, "nope", w1=0.0, w2=0.0)

    @pytest.mark.parametrize("which", ["fineq0", "fineq1", "fineq1p", "fineq1pp", "decomp", "cor_decomp"])
    def test_sup_ratio_stabilizes(self, which):
        # doubling the (nested) sample leaves the sup nearly unchanged
        rng = np.random.default_rng(11)
        sup1 = sample_sup_ratio(TWOPOW, which, 10_000, rng)
        rng2 = np.random.default_rng(11)
        sup2 = sample_sup_ratio(TWOPOW, which, 20_000, rng2)
        assert np.isfinite(sup2)
        assert sup2 >= sup1 - 1e-12  # nested draws: sup is monotone
        assert (sup2 - sup1) / sup1 < 0.2

    @pytest.mark.parametrize(
        "params", [CUBIC, NonlinearityParams(0.8, 2.5, c=-0.3)]
    )
    def test_sup_ratio_finite_other_families(self, params):
        rng = np.random.default_rng(2)
        for which in ("fineq0", "fineq1pp", "decomp"):
            sup = sample_sup_ratio(params, which, 3000, rng)
            assert np.isfinite(sup) and sup > 0

    def test_small_scale_ratios_finite(self):
        rng = np.random.default_rng(5)
        for which in ("fineq0", "fineq1", "decomp"):
            sup = sample_sup_ratio(TWOPOW, which, 2000, rng, scale=1e-3)
            assert np.isfinite(sup) and sup > 0


@given(
    x=hst.floats(min_value=0.0, max_value=1e6),
    y=hst.floats(min_value=0.0, max_value=1e6),
    theta=hst.floats(min_value=0.0, max_value=1.0),
)
@settings(max_examples=300, deadline=None)
def test_young_inequality_exact(x, y, theta):
    # x + y >= x^(1-theta) y^theta for all x, y >= 0, theta in [0, 1]
    assert x + y >= x ** (1.0 - theta) * y**theta or np.isclose(
        x + y, x ** (1.0 - theta) * y**theta
    )


@given(
    re1=hst.floats(-10, 10), im1=hst.floats(-10, 10),
    re2=hst.floats(-10, 10), im2=hst.floats(-10, 10),
)
@settings(max_examples=200, deadline=None)
def test_fineq0_bounded_ratio(re1, im1, re2, im2):
    chk = inequality_oracle(CUBIC, "fineq0", w1=complex(re1, im1), w2=complex(re2, im2))
    # the universal constant for the cubic family is small; 10 is generous
    assert chk.ratio <= 10.0


def test_params_invariants():
    with pytest.raises(ValueError):
        NonlinearityParams(2.0, 1.0)
    with pytest.raises(ValueError):
        NonlinearityParams(-0.5, 1.0)
    with pytest.raises(ValueError):
        NonlinearityParams(1.0, 4.0, d=3)  # alpha2 must stay below 4/(d-2)
    NonlinearityParams(1.0, 3.9, d=3)


def test_c0_estimate_positive():
    assert CUBIC.c0 > 0
    assert TWOPOW.c0 > 0
