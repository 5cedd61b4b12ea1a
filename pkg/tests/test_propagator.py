import math

import numpy as np
import pytest
from scipy.linalg import solve

from qlab.eigenmodes import cube_free_mode, sphere_free_mode, sphere_oscillator_mode
from qlab.potentials import build_sta_potential, lab_static_potential, zero_potential
from qlab.propagator import (
    CayleyStep,
    WaveField,
    apply_hamiltonian,
    cartesian_grid,
    discretize_mode,
    energy_expectation,
    grid_for_mode,
    grid_potential,
    propagate,
    radial_grid,
    step,
)
from qlab.scale_factor import make_constant_alpha, make_uniform
from qlab.units import NATURAL, Units


def dense_hamiltonian(grid, U, units):
    n = grid.N
    H = np.zeros((n, n), dtype=complex)
    for j in range(n):
        e = np.zeros(n, dtype=complex)
        e[j] = 1.0
        H[:, j] = apply_hamiltonian(grid, e, U, units)
    return H


def test_cayley_matches_dense_solve():
    units = Units(hbar=0.8, mass=1.7)
    grid = radial_grid(2, 1.0, 40)
    U = np.sin(3 * grid.points) ** 2
    rng = np.random.default_rng(0)
    psi = rng.normal(size=40) + 1j * rng.normal(size=40)
    dtau = 0.013
    H = dense_hamiltonian(grid, U, units)
    z = 0.5j * dtau / units.hbar
    expected = solve(np.eye(40) + z * H, psi - z * (H @ psi))
    np.testing.assert_allclose(CayleyStep(grid, U, dtau, units)(psi), expected, rtol=1e-12, atol=1e-13)


def test_discrete_eigenvector_rotates_by_cayley_phase():
    # sin(pi X) is an exact eigenvector of the three-point Laplacian
    grid = radial_grid(0, 1.0, 63)
    field = discretize_mode(sphere_free_mode(1, 0, 0, 1.0), grid)
    lam = (1.0 - math.cos(math.pi * grid.h)) / grid.h**2  # hbar = M = 1
    dtau = 0.05
    out = CayleyStep(grid, np.zeros(grid.N), dtau)(field.values)
    phase = np.exp(-2j * math.atan(0.5 * dtau * lam))
    np.testing.assert_allclose(out, phase * field.values, atol=1e-13)


def test_grid_geometry():
    g = cartesian_grid(-0.5, 0.5, 99, axis=2)
    assert g.h == pytest.approx(0.01)
    assert g.points[0] == pytest.approx(-0.49)
    assert g.positions()[:, 2] == pytest.approx(g.points)
    with pytest.raises(ValueError):
        radial_grid(0, 1.0, 8)


def test_discretize_validates_grid():
    mode = sphere_free_mode(1, 1, 0, 1.0)
    with pytest.raises(ValueError):
        discretize_mode(mode, radial_grid(0, 1.0, 64))
    with pytest.raises(ValueError):
        discretize_mode(mode, radial_grid(1, 2.0, 64))
    with pytest.raises(ValueError):
        discretize_mode(cube_free_mode(1, 1, 1, 1.0), cartesian_grid(0.0, 1.0, 64))
    # aliasing guard
    with pytest.raises(ValueError):
        discretize_mode(sphere_free_mode(12, 0, 0, 1.0), radial_grid(0, 1.0, 32))


def test_discrete_energy_converges_to_mode_energy():
    mode = sphere_oscillator_mode(4, 2, 0, 1, 1.0)
    traj = make_uniform(1.0, 0.0)
    spec = build_sta_potential(mode.v_tilde, traj)
    errs = []
    for N in (255, 511):
        grid = grid_for_mode(mode, N)
        U = grid_potential(spec, grid, 0.0)
        errs.append(abs(energy_expectation(discretize_mode(mode, grid), U) - mode.energy))
    assert errs[1] < errs[0] / 3.5


def test_unitarity_under_moving_walls():
    mode = sphere_free_mode(2, 1, 0, 1.0)
    traj = make_uniform(1.0, 0.7)
    spec = lab_static_potential(lambda x: 3.0 * np.sum(x * x, axis=-1), traj)
    assert not spec.comoving_static
    field = discretize_mode(mode, grid_for_mode(mode, 256))
    out, report = propagate(field, spec, traj, 0.5, 5e-3, record_every=10)
    assert report.steps == 100
    assert report.norm_drift < 1e-12
    assert out.tau == pytest.approx(0.5)
    assert len(report.taus) == 11


def test_final_step_lands_on_tau_end():
    mode = cube_free_mode(2, 1, 1, 1.0)
    traj = make_uniform(1.0, 0.1)
    spec = build_sta_potential(mode.v_tilde, traj)
    field = discretize_mode(mode, grid_for_mode(mode, 64))
    out, report = propagate(field, spec, traj, 0.1234, 0.01, record_every=5)
    assert report.steps == 13
    assert out.tau == pytest.approx(0.1234)
    assert report.taus[-1] == pytest.approx(0.1234)


def test_static_spec_keeps_energy():
    mode = sphere_free_mode(1, 0, 0, 1.0)
    traj = make_constant_alpha(10.0, 1.0, 0.0)
    spec = lab_static_potential(zero_potential, traj)
    field = discretize_mode(mode, grid_for_mode(mode, 200))
    _, report = propagate(field, spec, traj, 0.3, 1e-3, record_every=50)
    e = np.array(report.energies)
    assert np.max(np.abs(e - e[0])) < 1e-10 * e[0]


def test_time_reversal():
    mode = sphere_oscillator_mode(2, 0, 0, 1, 1.0)
    traj = make_uniform(1.0, 0.2)
    spec = lab_static_potential(zero_potential, traj)
    start = discretize_mode(mode, grid_for_mode(mode, 128))
    f = start
    for _ in range(20):
        f = step(f, spec, traj, 0.01)
    for _ in range(20):
        f = step(f, spec, traj, -0.01)
    assert f.tau == pytest.approx(0.0, abs=1e-14)
    np.testing.assert_allclose(f.values, start.values, atol=1e-12)


def test_step_budget_opt_in():
    mode = sphere_free_mode(1, 0, 0, 1.0)
    traj = make_uniform(1.0, 0.1)
    spec = build_sta_potential(mode.v_tilde, traj)
    field = discretize_mode(mode, grid_for_mode(mode, 99))
    step(field, spec, traj, 1e-2)
    with pytest.raises(ValueError):
        step(field, spec, traj, 1e-2, max_dtau_factor=1.0)


def test_propagate_rejects_bad_arguments():
    mode = sphere_free_mode(1, 0, 0, 1.0)
    traj = make_uniform(1.0, 0.1)
    spec = build_sta_potential(mode.v_tilde, traj, NATURAL)
    field = WaveField(grid_for_mode(mode, 32), np.zeros(32, complex), tau=1.0)
    with pytest.raises(ValueError):
        propagate(field, spec, traj, 2.0, 0.0)
    with pytest.raises(ValueError):
        propagate(field, spec, traj, 0.5, 0.1)
