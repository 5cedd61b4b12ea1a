import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlab.eigenmodes import cube_free_mode, dirac_phase, sphere_free_mode, sphere_oscillator_mode
from qlab.errors import PhaseUnwrapError
from qlab.potentials import build_sta_potential, lab_static_potential, zero_potential
from qlab.scale_factor import make_constant_alpha, make_friedmann_flat, make_uniform
from qlab.units import Units
from qlab.verifier import (
    convergence_order,
    extract_dirac_phase,
    fidelity_trace,
    gauge_phase,
    lab_tdse_residual,
    separable_residual_norm,
    tise_residual,
)


def test_separable_norm_matches_dense_product():
    rng = np.random.default_rng(7)
    h = 0.1
    f = [rng.normal(size=6) + 1j * rng.normal(size=6) for _ in range(3)]
    r = [rng.normal(size=6) + 1j * rng.normal(size=6) for _ in range(3)]
    F = np.einsum("i,j,k->ijk", *f)
    R = (
        np.einsum("i,j,k->ijk", r[0], f[1], f[2])
        + np.einsum("i,j,k->ijk", f[0], r[1], f[2])
        + np.einsum("i,j,k->ijk", f[0], f[1], r[2])
    )
    dense = np.linalg.norm(R) / np.linalg.norm(F)
    assert separable_residual_norm(f, r, h) == pytest.approx(dense, rel=1e-12)


def test_convergence_order_of_power_law():
    hs = [0.1, 0.05, 0.025]
    orders = convergence_order([3 * h**2 for h in hs], hs)
    np.testing.assert_allclose(orders, [2.0, 2.0])


@pytest.mark.parametrize(
    "mode",
    [sphere_free_mode(1, 2, 0, 1.0), sphere_oscillator_mode(4, 0, 0, 1, 1.0), cube_free_mode(1, 2, 1, 1.0)],
    ids=["sphere", "oscillator", "cube"],
)
def test_tise_residual_second_order(mode):
    Ns = (127, 255, 511)
    res = [tise_residual(mode, N) for N in Ns]
    orders = convergence_order(res, [1 / (N + 1) for N in Ns])
    assert min(orders) > 1.9
    assert res[-1] < 1e-3


class TestLabResidual:
    def test_uniform_sphere_small_and_needs_dirac_phase(self):
        mode = sphere_free_mode(1, 0, 0, 1.0)
        traj = make_uniform(1.0, 0.1)
        spec = build_sta_potential(mode.v_tilde, traj)
        with_phase = lab_tdse_residual(mode, traj, spec, 1.0, N=512, dt=2e-3)
        without = lab_tdse_residual(mode, traj, spec, 1.0, N=512, dt=2e-3, include_dirac=False)
        assert with_phase < 1e-4
        assert without > 100 * with_phase

    def test_accelerating_oscillator(self):
        units = Units(hbar=1.0, mass=1.5)
        mode = sphere_oscillator_mode(3, 1, 0, 1, 1.0, units)
        traj = make_friedmann_flat(1.0)
        spec = build_sta_potential(mode.v_tilde, traj, units)
        res = [lab_tdse_residual(mode, traj, spec, 1.5, N=N, dt=2.0 / N) for N in (256, 512)]
        assert res[1] < res[0] / 3.5
        assert res[1] < 1e-3

    def test_wrong_potential_is_detected(self):
        mode = sphere_free_mode(1, 0, 0, 1.0)
        traj = make_friedmann_flat(1.0)
        spec = lab_static_potential(zero_potential, traj)
        assert lab_tdse_residual(mode, traj, spec, 1.0, N=512) > 1e-2

    def test_cube(self):
        mode = cube_free_mode(1, 1, 1, 1.0)
        traj = make_uniform(1.0, 0.25)
        spec = build_sta_potential(mode.v_tilde, traj)
        assert lab_tdse_residual(mode, traj, spec, 2.0, N=512, dt=2e-3) < 1e-4

    def test_coarse_grid_rejected(self):
        mode = sphere_free_mode(6, 0, 0, 1.0)
        traj = make_uniform(1.0, 0.1)
        spec = build_sta_potential(mode.v_tilde, traj)
        with pytest.raises(ValueError):
            lab_tdse_residual(mode, traj, spec, 1.0, N=16)


class TestFidelity:
    def test_sta_keeps_mode(self):
        mode = sphere_oscillator_mode(2, 0, 0, 1, 1.0)
        traj = make_constant_alpha(5.0, 1.0, 0.0)
        spec = build_sta_potential(mode.v_tilde, traj)
        tr = fidelity_trace(mode, traj, spec, 400, 0.3, 2e-3, record_every=25)
        assert np.all(tr.fidelity > 1 - 1e-9)
        assert np.all(tr.fidelity <= 1 + 1e-12)
        assert np.max(np.abs(tr.phase_error)) < 1e-3
        assert tr.norm_drift < 1e-12

    def test_fictitious_trap_degrades_fidelity(self):
        mode = sphere_free_mode(1, 0, 0, 1.0)
        traj = make_constant_alpha(30.0, 1.0, 0.0)
        tau = 0.2
        sta = fidelity_trace(mode, traj, build_sta_potential(mode.v_tilde, traj), 256, tau, 2e-3)
        bare = fidelity_trace(mode, traj, lab_static_potential(zero_potential, traj), 256, tau, 2e-3)
        assert bare.fidelity[-1] < sta.fidelity[-1] - 1e-2

    def test_cube_trace_multiplies_axes(self):
        mode = cube_free_mode(1, 2, 1, 1.0)
        traj = make_uniform(1.0, 0.2)
        tr = fidelity_trace(mode, traj, build_sta_potential(mode.v_tilde, traj), 255, 0.2, 1e-3)
        assert tr.steps == 600
        assert tr.fidelity[-1] > 1 - 1e-12
        assert tr.state_error[-1] < 1e-2


def test_gauge_phase_equals_dirac_phase():
    r = np.linspace(0.0, 2.0, 9)
    np.testing.assert_allclose(gauge_phase(1.7, 0.3, r, 0.9), dirac_phase(1.7, 0.3, r, 0.9), rtol=1e-14)


class TestDiracFit:
    def test_sphere_coefficient(self):
        traj = make_uniform(1.0, 0.4)
        mode = sphere_free_mode(1, 0, 0, 1.0)
        fit = extract_dirac_phase(mode, traj, 1.0, N=255, dtau=2e-3)
        assert fit.coefficient == pytest.approx(traj.H(1.0) / 2, rel=1e-6)
        assert fit.rms < 1e-8

    def test_cube_needs_odd_grid(self):
        traj = make_uniform(1.0, 0.4)
        with pytest.raises(ValueError):
            extract_dirac_phase(cube_free_mode(1, 1, 1, 1.0), traj, 1.0, N=256)
        with pytest.raises(ValueError):
            extract_dirac_phase(cube_free_mode(1, 2, 1, 1.0), traj, 1.0, N=255)

    def test_unresolved_phase_raises(self):
        traj = make_uniform(1.0, 40.0)
        with pytest.raises(PhaseUnwrapError):
            extract_dirac_phase(sphere_free_mode(1, 0, 0, 1.0), traj, 0.5, points=4, N=255, dtau=1e-2)


@settings(max_examples=6, deadline=None)
@given(v=st.floats(0.05, 0.8), t=st.floats(0.2, 3.0), mass=st.floats(0.5, 2.0))
def test_dirac_coefficient_is_shape_independent(v, t, mass):
    units = Units(hbar=1.0, mass=mass)
    traj = make_uniform(1.0, v)
    sphere = extract_dirac_phase(sphere_free_mode(1, 0, 0, 1.0, units), traj, t, N=255, dtau=2e-3)
    cube = extract_dirac_phase(cube_free_mode(1, 1, 1, 1.3, units), traj, t, N=255, dtau=2e-3)
    expected = mass * traj.H(t) / 2
    assert sphere.coefficient == pytest.approx(expected, rel=1e-6)
    assert cube.coefficient == pytest.approx(sphere.coefficient, rel=1e-6)
    assert math.isfinite(cube.intercept)
