import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gdnls.errors import EdgeDecayError, GridMismatchError, NonFiniteFieldError, ParameterError
from gdnls.grid import (
    ComplexField,
    Grid,
    Multiplier,
    apply_multiplier,
    bracket,
    check_edge_decay,
    commutation_residual,
    cumulative_integral,
    derivative,
    edge_ratio,
    free_evolve,
    l2_norm,
    sobolev_norm,
    spectral_l2_norm,
    weighted_infimum,
    weighted_lp_norm,
)

G = Grid(40 * np.pi, 512)


def gauss(g=G, a=1.0, x0=0.0):
    return ComplexField(g, a * np.exp(-((g.x - x0) ** 2)))


def rand_field(seed, g=G):
    rng = np.random.default_rng(seed)
    return ComplexField(g, rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n))


@pytest.mark.parametrize("n", [0, 15, 100, 1000])
def test_grid_rejects_non_power_of_two(n):
    with pytest.raises(ParameterError):
        Grid(1.0, n)


def test_grid_rejects_bad_length():
    with pytest.raises(ParameterError):
        Grid(-1.0, 64)


def test_grid_layout():
    g = Grid(2 * np.pi, 16)
    assert g.x[0] == -np.pi
    assert g.x[-1] == pytest.approx(np.pi - g.dx)
    assert g.xi[1] == pytest.approx(1.0)
    assert g.k[g.nyquist] == -8
    assert g.dealias_mask.sum() == 11
    assert g.refined().n == 32


def test_field_is_immutable_and_validated():
    f = gauss()
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    with pytest.raises(GridMismatchError):
        ComplexField(G, np.zeros(G.n + 1))
    bad = np.zeros(G.n)
    bad[3] = np.nan
    with pytest.raises(NonFiniteFieldError):
        ComplexField(G, bad)
    with pytest.raises(GridMismatchError):
        gauss() + gauss(Grid(40 * np.pi, 256))


def test_derivative_of_plane_wave():
    g = Grid(2 * np.pi, 32)
    f = ComplexField(g, np.exp(3j * g.x))
    assert np.allclose(derivative(f).values, 3j * f.values, atol=1e-12)
    assert np.allclose(derivative(f, 2).values, -9 * f.values, atol=1e-11)


def test_odd_derivative_kills_nyquist():
    g = Grid(2 * np.pi, 16)
    f = ComplexField(g, np.cos(8 * g.x))
    assert np.abs(derivative(f).values).max() < 1e-14
    assert np.abs(derivative(f, 2).values + 64 * f.values).max() < 1e-10


def test_riesz_zero_is_identity_and_kills_mean():
    f = rand_field(1)
    assert np.allclose(apply_multiplier(f, Multiplier.riesz(0)).values, f.values)
    assert abs(apply_multiplier(f, Multiplier.riesz(0.5)).hat[0]) < 1e-12


def test_bessel_two_is_one_minus_laplacian():
    f = gauss()
    lhs = apply_multiplier(f, Multiplier.bessel(2)).values
    assert np.allclose(lhs, f.values - derivative(f, 2).values, atol=1e-12)


def test_multiplier_validation():
    with pytest.raises(ParameterError):
        Multiplier.derivative(1.5)
    with pytest.raises(ParameterError):
        Multiplier.riesz(-1)
    with pytest.raises(ParameterError):
        Multiplier("heat", 1.0)


def test_free_evolve_zero_time_is_identity():
    f = rand_field(2)
    assert free_evolve(f, 0.0) is f
    with pytest.raises(ParameterError):
        free_evolve(f, np.inf)


def test_free_evolve_solves_schrodinger():
    g = Grid(2 * np.pi, 32)
    f = ComplexField(g, np.exp(2j * g.x))
    assert np.allclose(free_evolve(f, 0.3).values, np.exp(2j * g.x - 4j * 0.3), atol=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(-50, 50))
def test_free_evolve_is_unitary(seed, t):
    f = rand_field(seed)
    assert l2_norm(free_evolve(f, t)) == pytest.approx(l2_norm(f), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(-5, 5), st.floats(-5, 5))
def test_group_law(seed, t1, t2):
    f = rand_field(seed)
    lhs = free_evolve(free_evolve(f, t1), t2)
    assert l2_norm(lhs - free_evolve(f, t1 + t2)) <= 1e-12 * l2_norm(f)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(0, 3), st.floats(0, 3))
def test_riesz_composition(seed, a, b):
    f = rand_field(seed)
    ab = apply_multiplier(apply_multiplier(f, Multiplier.riesz(a)), Multiplier.riesz(b))
    direct = apply_multiplier(f, Multiplier.riesz(a + b))
    assert l2_norm(ab - direct) <= 1e-12 * max(l2_norm(direct), 1e-300)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.complex_numbers(min_magnitude=1e-100, max_magnitude=1e100, allow_nan=False, allow_infinity=False))
def test_norms_are_homogeneous(seed, c):
    f = rand_field(seed)
    assert l2_norm(c * f) == pytest.approx(abs(c) * l2_norm(f), rel=1e-12)
    assert weighted_lp_norm(c * f, 2, np.inf) == pytest.approx(abs(c) * weighted_lp_norm(f, 2, np.inf), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_parseval(seed):
    f = rand_field(seed)
    assert spectral_l2_norm(f) == pytest.approx(l2_norm(f), rel=1e-12)


def test_gaussian_l2_norm_closed_form():
    assert l2_norm(gauss()) == pytest.approx((np.pi / 2) ** 0.25, rel=1e-13)


def test_weighted_norms():
    g = Grid(40 * np.pi, 2048)
    f = ComplexField(g, 1 / bracket(g.x) ** 3)
    assert weighted_lp_norm(f, 3, np.inf) == pytest.approx(1.0)
    assert weighted_infimum(f, 3) == pytest.approx(1.0)
    assert weighted_lp_norm(f, 0, 2) == pytest.approx(l2_norm(f))
    with pytest.raises(ParameterError):
        weighted_lp_norm(f, 1, 3)
    with pytest.raises(ParameterError):
        weighted_lp_norm(f, -1, 2)


def test_sobolev_norm_monotone_in_s():
    f = gauss()
    assert sobolev_norm(f, 0) == pytest.approx(l2_norm(f))
    assert sobolev_norm(f, 1) < sobolev_norm(f, 2) < sobolev_norm(f, 6.5)


def test_edge_decay():
    assert edge_ratio(ComplexField.zeros(G)) == 0.0
    assert check_edge_decay(gauss()) < 1e-100
    with pytest.raises(EdgeDecayError, match="enlarge L"):
        check_edge_decay(ComplexField(G, np.ones(G.n)))


def test_cumulative_integral_of_gaussian():
    g = Grid(40 * np.pi, 1024)
    f = ComplexField(g, np.exp(-g.x**2))
    F = cumulative_integral(f).real
    assert F[0] == 0.0
    assert F[g.n // 2] == pytest.approx(np.sqrt(np.pi) / 2, abs=1e-12)
    assert F[-1] == pytest.approx(np.sqrt(np.pi), abs=1e-12)


def test_cumulative_integral_of_constant_is_ramp():
    g = Grid(10.0, 64)
    F = cumulative_integral(ComplexField(g, np.full(g.n, 2.0))).real
    assert np.allclose(F, 2 * (g.x - g.x[0]), atol=1e-12)


@pytest.mark.parametrize("m,tol", [(1, 1e-8), (3, 1e-6)])
def test_commutation_identity(m, tol):
    g = Grid(80 * np.pi, 4096)
    assert commutation_residual(gauss(g), 0.5, m) <= tol


def test_commutation_residual_drops_under_refinement():
    res = [commutation_residual(gauss(Grid(80 * np.pi, n)), 0.5, 3) for n in (256, 512, 1024)]
    assert res[0] / res[1] >= 4 and res[1] / res[2] >= 4


def test_commutation_with_opposite_sign_fails():
    # x^m e^{it d^2} = e^{it d^2}(x + 2it d_x)^m is wrong for the exp(-i xi^2 t) propagator
    g = Grid(80 * np.pi, 4096)
    f = gauss(g)
    lhs = free_evolve(f, 0.5).values * g.x
    rhs = free_evolve(ComplexField(g, g.x * f.values + 1j * derivative(f).values), 0.5).values
    assert l2_norm(ComplexField(g, lhs - rhs)) > 0.1


def test_commutation_zero_weight_is_trivial():
    assert commutation_residual(gauss(), 0.7, 0) == 0.0
    with pytest.raises(ParameterError):
        commutation_residual(gauss(), 0.7, -1)
