"""Checks that tie the analytic layer to the numerical propagator.

Residuals use the same three-point operator as the propagator; fidelity
and phase are measured against the separable solution u(X) exp(-i E tau/hbar).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from qlab.eigenmodes import (
    Eigenmode,
    Geometry,
    lab_axis_factor,
    lab_reduced_radial,
    wrap_phase,
)
from qlab.errors import PhaseUnwrapError
from qlab.potentials import PotentialSpec, build_sta_potential
from qlab.propagator import (
    ComovingGrid,
    GridKind,
    apply_hamiltonian,
    discretize_mode,
    grid_for_mode,
    propagate,
    sample_mode,
)
from qlab.quadrature import gauss_legendre
from qlab.scale_factor import ScaleFactorTrajectory, sample


def _as_grid(mode: Eigenmode, grid, axis: int = 0) -> ComovingGrid:
    if isinstance(grid, ComovingGrid):
        return grid
    return grid_for_mode(mode, int(grid), axis)


def _axis_grids(grid: ComovingGrid):
    return [ComovingGrid(GridKind.CARTESIAN, grid.lo, grid.hi, grid.N, axis=i) for i in range(3)]


def separable_residual_norm(factors, residuals, h: float) -> float:
    """||sum_i r_i (x) prod_{j != i} f_j|| / ||prod_j f_j|| from 1D pieces.

    Cross terms come from the 1D inner products, so no 3D array is formed.
    """
    ff = [h * np.vdot(f, f).real for f in factors]
    fr = [h * np.vdot(f, r) for f, r in zip(factors, residuals)]
    rr = [h * np.vdot(r, r).real for r in residuals]
    n = len(factors)
    total = 0.0
    for i in range(n):
        for j in range(n):
            rest = math.prod(ff[k] for k in range(n) if k not in (i, j))
            if i == j:
                total += rr[i] * rest
            else:
                total += (np.conj(fr[i]) * fr[j]).real * rest
    return math.sqrt(max(total, 0.0) / math.prod(ff))


# -- TISE --------------------------------------------------------------------


def tise_residual(mode: Eigenmode, grid) -> float:
    """||(H_h - E) u|| / ||u|| with the propagator's discrete Hamiltonian.

    ``grid`` is a ``ComovingGrid`` or a number of interior points.
    """
    grid = _as_grid(mode, grid)
    units = mode.units
    if mode.geometry is Geometry.SPHERE:
        u = sample_mode(mode, grid)
        U = mode.v_tilde(grid.positions())
        r = apply_hamiltonian(grid, u, U, units) - mode.energy * u
        return float(np.linalg.norm(r) / np.linalg.norm(u))
    factors, residuals = [], []
    for g in _axis_grids(grid):
        f = sample_mode(mode, g)
        r = apply_hamiltonian(g, f, np.zeros(g.N), units) - mode.axis_energy(g.axis) * f
        factors.append(f)
        residuals.append(r)
    return separable_residual_norm(factors, residuals, grid.h)


def convergence_order(errors, spacings) -> list[float]:
    """Observed orders log(e1/e2)/log(h1/h2) between consecutive refinements."""
    return [
        math.log(errors[i] / errors[i + 1]) / math.log(spacings[i] / spacings[i + 1])
        for i in range(len(errors) - 1)
    ]


# -- lab-frame TDSE ------------------------------------------------------------


def lab_tdse_residual(
    mode: Eigenmode,
    traj: ScaleFactorTrajectory,
    spec: PotentialSpec,
    t: float,
    N: int = 1024,
    dt: float = 1e-3,
    include_dirac: bool = True,
) -> float:
    """Normalized residual of the lab-frame equation for the assembled psi.

    psi(x, t) is built from the analytic mode on a fixed lab grid lying inside
    the wall at t - dt, t and t + dt; the residual of
    i hbar d/dt + hbar^2/(2M) laplacian - V uses centred differences in both
    space and time.  Cube modes are checked axis by axis (V must be a sum of
    per-axis terms with V(0) = 0, as for the shortcut potential with V~ = 0).
    """
    units = mode.units
    times = (t - dt, t, t + dt)
    a_min = min(traj.a(s) for s in times)
    kin = units.hbar**2 / (2.0 * units.mass)
    H_max = max(abs(traj.H(s)) for s in times)

    def residual_1d(x, values_at, V, centrifugal):
        h = x[1] - x[0]
        lap = (values_at[1][2:] - 2 * values_at[1][1:-1] + values_at[1][:-2]) / h**2
        dpsi = (values_at[2][1:-1] - values_at[0][1:-1]) / (2 * dt)
        mid = values_at[1][1:-1]
        return 1j * units.hbar * dpsi + kin * lap - (V + centrifugal) * mid, mid

    if mode.geometry is Geometry.SPHERE:
        R = a_min * mode.size
        r = np.linspace(0.0, R, N + 2)
        _guard(mode, r[1] - r[0], a_min, H_max, R)
        chi = [lab_reduced_radial(mode, traj, r, s, include_dirac) for s in times]
        inner = r[1:-1]
        pos = np.zeros((N, 3))
        pos[:, 2] = inner
        V = spec.lab_potential(pos, t)
        cent = kin * mode.l * (mode.l + 1) / inner**2
        res, mid = residual_1d(r, chi, V, cent)
        return float(np.linalg.norm(res) / np.linalg.norm(mid))

    L = a_min * mode.size
    x = np.linspace(-0.5 * L, 0.5 * L, N + 2)
    _guard(mode, x[1] - x[0], a_min, H_max, 0.5 * L)
    factors, residuals = [], []
    for axis in range(3):
        vals = [lab_axis_factor(mode, axis, traj, x, s, include_dirac) for s in times]
        pos = np.zeros((N, 3))
        pos[:, axis] = x[1:-1]
        V = spec.lab_potential(pos, t)
        res, mid = residual_1d(x, vals, V, 0.0)
        factors.append(mid)
        residuals.append(res)
    return separable_residual_norm(factors, residuals, x[1] - x[0])


def _guard(mode, h, a_min, H_max, extent):
    units = mode.units
    if mode.geometry is Geometry.CUBE:
        k = max(mode.quantum_numbers) * math.pi / mode.size
    else:
        k = math.sqrt(2.0 * units.mass * mode.energy) / units.hbar
    k_eff = k / a_min + units.mass * H_max * extent / units.hbar
    if 2.0 * math.pi / (k_eff * h) < 8:
        raise ValueError("lab grid too coarse for the mode and its Dirac phase")


# -- fidelity ------------------------------------------------------------------


@dataclass
class FidelityTrace:
    """Overlap of the propagated state with the separable solution.

    ``state_error`` is the L2 distance ||phi - u e^{-i E tau/hbar}||, which
    carries amplitude and phase errors together.
    """

    taus: np.ndarray
    fidelity: np.ndarray
    phase_error: np.ndarray
    state_error: np.ndarray
    norm_drift: float
    steps: int
    energies: list = field(default_factory=list)


def fidelity_trace(
    mode: Eigenmode,
    traj: ScaleFactorTrajectory,
    spec: PotentialSpec,
    grid,
    tau_end: float,
    dtau: float,
    record_every: int = 100,
) -> FidelityTrace:
    """Propagate ``discretize_mode(mode)`` under ``spec`` and track its fidelity."""
    grid = _as_grid(mode, grid)
    hbar = mode.units.hbar
    grids = [grid] if mode.geometry is Geometry.SPHERE else _axis_grids(grid)
    overlaps = []
    drift, steps, energies, taus = 0.0, 0, None, None
    for g in grids:
        start = discretize_mode(mode, g)
        ref = start.values.copy()
        series = []
        _, report = propagate(
            start, spec, traj, tau_end, dtau, record_every=record_every,
            observer=lambda f, ref=ref, s=series: s.append(f.inner(ref).conjugate() / f.norm),
        )
        overlaps.append(np.array(series))
        drift = max(drift, report.norm_drift)
        steps += report.steps
        taus = np.array(report.taus)
        energies = report.energies if energies is None else [
            e1 + e2 for e1, e2 in zip(energies, report.energies)
        ]
    c = np.prod(overlaps, axis=0)
    rotated = c * np.exp(1j * mode.energy * taus / hbar)
    return FidelityTrace(
        taus=taus,
        fidelity=np.abs(c),
        phase_error=wrap_phase(np.angle(rotated)),
        state_error=np.sqrt(np.clip(2.0 - 2.0 * rotated.real, 0.0, None)),
        norm_drift=drift,
        steps=steps,
        energies=energies,
    )


# -- Dirac phase extraction ------------------------------------------------------


@dataclass(frozen=True)
class DiracPhaseFit:
    """Least-squares fit phase = intercept + coefficient * r^2."""

    coefficient: float
    intercept: float
    rms: float
    radii: np.ndarray
    phases: np.ndarray


def gauge_phase(mass: float, H: float, r, hbar: float = 1.0, n_quad: int = 4):
    """-(1/hbar) int_0^r A . dx along a ray, with A = -M H x (quadrature)."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.empty_like(r)
    for i, ri in enumerate(r):
        s, w = gauss_legendre(n_quad, 0.0, ri)
        out[i] = np.sum(w * (mass * H * s)) / hbar
    return out


def extract_dirac_phase(
    mode: Eigenmode,
    traj: ScaleFactorTrajectory,
    t: float,
    points: int = 24,
    N: int = 1025,
    dtau: float = 1e-3,
) -> DiracPhaseFit:
    """Fit the r^2 coefficient of the lab phase of a propagated state.

    The comoving state is propagated under the shortcut potential up to
    tau(t), mapped to the lab frame as a^{-3/2} phi(x/a) times the gauge
    factor from the line integral of A = -M H x, and compared with the mode:
    arg[psi conj(u) e^{i E tau/hbar}] is fitted against r^2.  Expected
    coefficient: M H / (2 hbar).
    """
    if points < 3:
        raise ValueError("need at least three radii")
    units = mode.units
    s = sample(traj, t)
    spec = build_sta_potential(mode.v_tilde, traj, units)
    if mode.geometry is Geometry.SPHERE:
        grid = grid_for_mode(mode, N)
        phi, _ = propagate(discretize_mode(mode, grid), spec, traj, s.tau, dtau)
        X = grid.points
        comoving = phi.values / X
        u = mode.radial(X)
        lo, hi = 0.05 * mode.size, 0.9 * mode.size
    else:
        if N % 2 == 0:
            raise ValueError("cube fits need an odd N so X = 0 is a grid node")
        if any(q % 2 == 0 for q in mode.quantum_numbers[1:]):
            raise ValueError("cube fits need cos factors (odd indices) on axes 1 and 2")
        base = grid_for_mode(mode, N)
        center = N // 2
        fields = [
            propagate(discretize_mode(mode, g), spec, traj, s.tau, dtau)[0]
            for g in _axis_grids(base)
        ]
        X = base.points
        comoving = fields[0].values * fields[1].values[center] * fields[2].values[center]
        u = mode.axis_factor(0, X) * mode.axis_factor(1, 0.0) * mode.axis_factor(2, 0.0)
        lo, hi = 0.05 * mode.size / 2, 0.9 * mode.size / 2
    window = np.nonzero((X >= lo) & (X <= hi))[0]
    idx = window[np.linspace(0, window.size - 1, points).round().astype(int)]
    idx = idx[np.abs(u[idx]) > 1e-3 * np.max(np.abs(u))]
    if idx.size < 3:
        raise ValueError("fewer than three usable radii away from nodes")
    r = s.a * X[idx]
    psi_lab = s.a**-1.5 * comoving[idx] * np.exp(1j * gauge_phase(units.mass, s.H, r, units.hbar))
    z = psi_lab * np.conj(u[idx]) * np.exp(1j * mode.energy * s.tau / units.hbar)
    raw = np.angle(z)
    jumps = wrap_phase(np.diff(raw))
    if np.any(np.abs(jumps) > 0.5 * np.pi):
        raise PhaseUnwrapError("phase changes by more than pi/2 between radii; sample more densely")
    theta = np.unwrap(raw)
    coef, intercept = np.polyfit(r**2, theta, 1)
    rms = float(np.sqrt(np.mean((theta - intercept - coef * r**2) ** 2)))
    return DiracPhaseFit(float(coef), float(intercept), rms, r, theta)
