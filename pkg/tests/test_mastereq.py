import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decohere.errors import GridMismatch, StepTooLarge, TruncationLeak
from decohere.mastereq import (
    CLParams,
    GridDensityMatrix,
    OscillatorOperators,
    cat_state,
    coherence_decay_rates,
    coherent_state,
    evolve_caldeira_leggett,
    evolve_pure_decoherence_exact,
    evolve_pure_decoherence_numeric,
    heavy_particle_gamma,
)


def harmonic(x):
    return 0.5 * x**2


@pytest.fixture
def cat():
    return cat_state(np.linspace(-3, 3, 32))


def test_cat_state_normalised(cat):
    assert cat.trace() == pytest.approx(1.0, rel=1e-12)
    assert cat.purity() == pytest.approx(1.0, rel=1e-12)


def test_exact_solution_keeps_diagonal(cat):
    out = evolve_pure_decoherence_exact(cat, harmonic, 2.0, 3.0)
    np.testing.assert_allclose(np.diag(out.rho), np.diag(cat.rho), atol=1e-15)
    assert out.purity() < cat.purity()


def test_numeric_matches_exact_small_grid(cat):
    exact = evolve_pure_decoherence_exact(cat, harmonic, 1.0, 0.5)
    num = evolve_pure_decoherence_numeric(cat, harmonic, 1.0, 0.5, 1e-3)
    assert np.max(np.abs(num.rho - exact.rho)) < 1e-10


def test_numeric_trajectory_diagnostics(cat):
    tr = evolve_pure_decoherence_numeric(cat, harmonic, 1.0, 0.5, 1e-3, stride=100)
    assert tr.times[0] == 0.0 and tr.times[-1] == pytest.approx(0.5)
    assert np.max(np.abs(tr.trace_dev)) < 1e-12
    assert np.max(tr.herm_dev) < 1e-12
    assert np.all(np.diff(tr.coherence) < 0)
    assert np.all(np.diff(tr.purity) < 0)


def test_pure_step_guard(cat):
    with pytest.raises(StepTooLarge):
        evolve_pure_decoherence_numeric(cat, harmonic, 10.0, 1.0, 0.01)


def test_grid_validation():
    with pytest.raises(GridMismatch):
        GridDensityMatrix(np.linspace(0, 1, 4), np.eye(3))
    with pytest.raises(GridMismatch):
        GridDensityMatrix(np.array([0.0, 0.1, 0.3]), np.eye(3))
    with pytest.raises(GridMismatch):
        evolve_pure_decoherence_exact(cat_state(np.linspace(-1, 1, 8)), np.zeros(5), 1.0, 1.0)


def test_oscillator_commutator():
    ops = OscillatorOperators.build(12, mass=2.0, omega=0.5)
    c = ops.X @ ops.P - ops.P @ ops.X
    np.testing.assert_allclose(c[:-1, :-1], 1j * np.eye(11), atol=1e-12)


def test_coherent_state():
    rho = coherent_state(30, 1.5)
    assert np.trace(rho).real == pytest.approx(1.0)
    n_mean = np.sum(np.arange(30) * np.diag(rho).real)
    assert n_mean == pytest.approx(2.25, rel=1e-8)


def test_harmonic_unitary_evolution_rotates_coherent_state():
    # with eta = 0 and T -> 0 diffusion vanishes; <X> follows cos t
    n = 20
    ops = OscillatorOperators.build(n)
    params = CLParams(1.0, 0.0, 1.0, harmonic)
    tr = evolve_caldeira_leggett(coherent_state(n, 1.0), ops, params, math.pi / 2, 0.005, stride=1000)
    x_mean = np.trace(ops.X @ tr.final).real
    assert x_mean == pytest.approx(0.0, abs=1e-3)
    assert tr.purity[-1] == pytest.approx(1.0, abs=1e-8)


def test_cl_preserves_trace_and_hermiticity():
    n = 16
    ops = OscillatorOperators.build(n)
    tr = evolve_caldeira_leggett(coherent_state(n, 0.5), ops, CLParams(1.0, 0.1, 0.5, harmonic), 1.0, 0.005, stride=50)
    assert np.max(np.abs(tr.trace_dev)) < 1e-12
    assert np.max(tr.herm_dev) < 1e-12
    assert tr.purity[-1] < tr.purity[0]


def test_cl_step_guard():
    ops = OscillatorOperators.build(10)
    with pytest.raises(StepTooLarge):
        evolve_caldeira_leggett(coherent_state(10, 0.0), ops, CLParams(1.0, 1.0, 50.0, harmonic), 1.0, 0.1)


def test_truncation_leak_detected():
    n = 8
    ops = OscillatorOperators.build(n)
    with pytest.raises(TruncationLeak):
        evolve_caldeira_leggett(coherent_state(n, 1.5), ops, CLParams(1.0, 0.0, 1.0, harmonic), 1.0, 0.005)


def test_cl_shape_mismatch():
    ops = OscillatorOperators.build(6)
    with pytest.raises(GridMismatch):
        evolve_caldeira_leggett(np.eye(5) / 5, ops, CLParams(1.0, 0.1, 1.0), 0.1, 0.01)


def test_heavy_particle_gamma():
    assert heavy_particle_gamma(CLParams(1000.0, 5e-5, 1.0)) == pytest.approx(0.1)


def test_coherence_rates_shapes():
    n = 10
    ops = OscillatorOperators.build(n)
    tr = evolve_caldeira_leggett(coherent_state(n, 0.0), ops, CLParams(1000.0, 5e-5, 1.0), 0.2, 0.005, stride=40)
    meas, sep2 = coherence_decay_rates(tr, ops, [(4, 5), (3, 6)])
    assert meas.shape == (2,) and np.all(sep2 > 0)
    assert np.all(meas > 0)


@settings(max_examples=20, deadline=None)
@given(gamma=st.floats(0.0, 2.0), t=st.floats(0.0, 2.0))
def test_exact_solution_trace_and_hermiticity(gamma, t):
    rho0 = cat_state(np.linspace(-2, 2, 16))
    out = evolve_pure_decoherence_exact(rho0, harmonic, gamma, t)
    assert out.trace() == pytest.approx(1.0, rel=1e-12)
    np.testing.assert_allclose(out.rho, out.rho.conj().T, atol=1e-15)
    assert out.purity() <= 1.0 + 1e-12
