import numpy as np
import pytest

from gdnls.data import admissible_datum
from gdnls.diagnostics import energy
from gdnls.errors import ParameterError
from gdnls.evolution import (
    EquationSpec,
    PicardConfig,
    StepperConfig,
    gauge_transform,
    nonlinearity,
    picard_apply_phi,
    solve,
    solve_picard,
    step_ifrk4,
)
from gdnls.grid import ComplexField, Grid, free_evolve, l2_norm

G = Grid(40 * np.pi, 1024)


def small_gaussian(g=G, amp=0.3, k=0.5):
    return ComplexField(g, amp * np.exp(-g.x**2) * np.exp(1j * k * g.x))


def test_equation_spec_validation():
    with pytest.raises(ParameterError):
        EquationSpec("C", 1.0, 1j)
    with pytest.raises(ParameterError):
        EquationSpec("A", 0.0, 1j)
    with pytest.raises(ParameterError):
        EquationSpec("A", 1.0, 1.1)
    assert EquationSpec.dnls_gauged().is_hamiltonian
    assert not EquationSpec.dnls().is_hamiltonian


def test_stepper_config_validation():
    with pytest.raises(ParameterError):
        StepperConfig(0.0, 1.0)
    with pytest.raises(ParameterError):
        StepperConfig(0.1, -1.0)
    with pytest.raises(ParameterError):
        StepperConfig(0.1, 1.0, scheme="euler")
    with pytest.raises(ParameterError):
        PicardConfig(window=0.0)


@pytest.mark.parametrize("form", "AB")
def test_nonlinearity_trivial_cases(form):
    eq = EquationSpec(form, 0.5, 1j)
    assert np.all(nonlinearity(ComplexField.zeros(G), eq).values == 0)
    assert np.abs(nonlinearity(ComplexField(G, np.full(G.n, 2 - 1j)), eq).values).max() < 1e-13


def test_nonlinearity_unimodular_field_collapses_forms():
    g = Grid(2 * np.pi, 64)
    u = ComplexField(g, np.exp(1j * g.x))
    for form in "AB":
        out = nonlinearity(u, EquationSpec(form, 2.0, 1.0)).values
        assert np.allclose(out, 1j * u.values, atol=1e-12)


def test_nonlinearity_has_no_nan_at_zeros_for_fractional_alpha():
    u = ComplexField(G, G.x * np.exp(-G.x**2))
    for form in "AB":
        assert np.all(np.isfinite(nonlinearity(u, EquationSpec(form, 0.3, 1j)).values))


def test_linear_step_is_free_evolution():
    u = small_gaussian()
    eq = EquationSpec("A", 1.0, 1j).linear()
    assert l2_norm(step_ifrk4(u, eq, 0.01) - free_evolve(u, 0.01)) <= 1e-12


def test_zero_time_and_zero_datum():
    eq = EquationSpec("A", 1.0, 1j)
    u = small_gaussian()
    traj = solve(u, eq, StepperConfig(0.01, 0.0))
    assert traj.times == [0.0] and np.array_equal(traj.fields[0], u.values)
    z = solve(ComplexField.zeros(G), eq, StepperConfig(0.01, 0.1))
    assert all(np.all(f == 0) for f in z.fields)


def test_time_grid_hits_t_end_and_hooks_fire():
    seen = []
    traj = solve(small_gaussian(), EquationSpec("A", 1.0, 1j), StepperConfig(0.003, 0.1, sample_every=5),
                 [lambda t, u: seen.append(t)])
    assert traj.times[-1] == pytest.approx(0.1, abs=1e-15)
    assert seen == traj.times
    assert traj.ok


def test_ifrk4_fourth_order():
    u0 = small_gaussian(amp=0.5, k=0.0)
    eq = EquationSpec("A", 1.0, 1j)
    sols = [solve(u0, eq, StepperConfig(dt, 0.1, sample_every=10**9)).final for dt in (0.01, 0.005, 0.0025)]
    e1, e2 = l2_norm(sols[0] - sols[1]), l2_norm(sols[1] - sols[2])
    assert abs(np.log2(e1 / e2) - 4) <= 0.3


def test_escape_is_reported():
    u0 = ComplexField(G, 3.0 * np.exp(-G.x**2))
    traj = solve(u0, EquationSpec("A", 1.0, 1j), StepperConfig(0.01, 5.0, escape_factor=1.5))
    assert traj.status == "escaped"
    assert len(traj.times) >= 1 and traj.times[-1] < 5.0


def test_mass_conserved_for_dnls():
    u0 = small_gaussian()
    u = solve(u0, EquationSpec.dnls(), StepperConfig(1e-3, 1.0, sample_every=10**9)).final
    assert abs(l2_norm(u) - l2_norm(u0)) / l2_norm(u0) <= 1e-8


def test_mass_not_conserved_for_imaginary_coefficient():
    # an imaginary coefficient makes the first-order term dissipative in one direction
    u0 = small_gaussian()
    u = solve(u0, EquationSpec("B", 2.0, 1j), StepperConfig(1e-3, 1.0, sample_every=10**9)).final
    assert abs(l2_norm(u) - l2_norm(u0)) / l2_norm(u0) > 1e-4


def test_energy_conserved_for_gauged_dnls():
    v0 = small_gaussian()
    v = solve(v0, EquationSpec.dnls_gauged(), StepperConfig(1e-3, 1.0, sample_every=10**9)).final
    assert abs(energy(v) - energy(v0)) <= 1e-6


def test_gauge_transform_properties():
    u = small_gaussian()
    v = gauge_transform(u)
    assert np.allclose(np.abs(v.values), np.abs(u.values), atol=1e-14)
    assert l2_norm(v) == pytest.approx(l2_norm(u), rel=1e-12)
    assert np.all(gauge_transform(ComplexField.zeros(G)).values == 0)


def test_gauge_intertwines_dnls_forms():
    u0 = small_gaussian()
    cfg = StepperConfig(1e-3, 0.5, sample_every=10**9)
    u = solve(u0, EquationSpec.dnls(), cfg).final
    v = solve(gauge_transform(u0), EquationSpec.dnls_gauged(), cfg).final
    assert l2_norm(gauge_transform(u) - v) <= 1e-5


def test_phi_of_zero():
    eq = EquationSpec("A", 1.0, 1j)
    times = np.linspace(0, 0.05, 11)
    zero = np.zeros((11, G.n), dtype=complex)
    assert np.all(picard_apply_phi(times, zero, ComplexField.zeros(G), eq) == 0)
    u0 = small_gaussian()
    out = picard_apply_phi(times, zero, u0, eq)
    for t, row in zip(times, out):
        assert np.allclose(row, free_evolve(u0, t).values, atol=1e-14)


def test_phi_rejects_bad_sampling():
    with pytest.raises(ParameterError):
        picard_apply_phi(np.linspace(0.1, 1, 3), np.zeros((3, G.n)), small_gaussian(), EquationSpec("A", 1.0, 1j))


def test_picard_linear_converges_immediately():
    u0 = small_gaussian()
    traj = solve_picard(u0, EquationSpec("A", 1.0, 1j).linear(), StepperConfig(1e-3, 0.05, scheme="picard"))
    assert traj.ok and traj.windows[0].iterations == 1
    assert l2_norm(traj.final - free_evolve(u0, 0.05)) <= 1e-12


def test_picard_fixed_point_and_contraction():
    g = Grid(80 * np.pi, 4096)
    u0 = admissible_datum(1.0, 0.01, g)
    eq = EquationSpec("A", 1.0, 1j)
    cfg = StepperConfig(1e-3, 0.05, scheme="picard", sample_every=1)
    traj = solve_picard(u0, eq, cfg)
    w = traj.windows[0]
    assert w.converged and w.max_ratio < 1
    assert all(b < a for a, b in zip(w.distances, w.distances[1:]))
    times = np.asarray(traj.times)
    again = picard_apply_phi(times, np.asarray(traj.fields), u0, eq)
    assert max(l2_norm(ComplexField(g, a - b)) for a, b in zip(again, traj.fields)) <= 1e-10


def test_picard_agrees_with_ifrk4():
    g = Grid(80 * np.pi, 4096)
    u0 = admissible_datum(1.0, 0.01, g)
    eq = EquationSpec("A", 1.0, 1j)
    rk = solve(u0, eq, StepperConfig(1e-3, 0.1, sample_every=1))
    pc = solve(u0, eq, StepperConfig(1e-3, 0.1, scheme="picard", sample_every=1))
    assert len(pc.windows) == 2 and pc.ok
    assert max(l2_norm(rk.field_at(i) - pc.field_at(i)) for i in range(len(rk))) <= 1e-6


def test_picard_oversized_datum_fails_to_contract():
    g = Grid(80 * np.pi, 4096)
    u0 = admissible_datum(1.0, 10.0, g)
    traj = solve_picard(u0, EquationSpec("A", 1.0, 1j), StepperConfig(1e-3, 0.1, scheme="picard"))
    assert traj.status == "contraction_failed"
    assert "contraction failed" in traj.message
    assert not traj.windows[-1].converged
    assert len(traj.times) >= 1


def test_certified_window_non_increasing_in_amplitude():
    g = Grid(80 * np.pi, 4096)
    eq = EquationSpec("A", 1.0, 1j)
    windows = []
    for c0 in (0.01, 1.0, 10.0):
        traj = solve_picard(admissible_datum(1.0, c0, g), eq,
                            StepperConfig(1e-3, 0.05, scheme="picard", sample_every=10))
        windows.append(traj.certified_window)
    assert all(b <= a for a, b in zip(windows, windows[1:]))
