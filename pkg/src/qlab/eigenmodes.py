"""Analytic comoving eigenmodes and the lab-frame wave functions built on them.

A mode ``u(X)`` solves the time-independent problem in the fixed comoving
domain.  The lab-frame state is

    psi(x, t) = a^(-3/2) u(x/a) exp(-i E tau(t)/hbar + i gamma(x, t)),

with gamma = M H |x|^2 / (2 hbar) the Dirac phase of the wall motion.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from qlab.errors import DomainError
from qlab.quadrature import gauss_legendre
from qlab.scale_factor import ScaleFactorTrajectory, sample
from qlab.special import (
    assoc_laguerre,
    assoc_laguerre_zero,
    spherical_bessel_zero,
    spherical_harmonic,
    spherical_jn,
)
from qlab.units import NATURAL, Units

_BOUNDARY_SLACK = 1e-12


class Geometry(enum.Enum):
    SPHERE = "sphere"
    CUBE = "cube"


class PotentialClass(enum.Enum):
    FREE = "free"
    OSCILLATOR = "oscillator"


@dataclass(frozen=True)
class Eigenmode:
    """One analytic comoving eigenfunction.

    ``size`` is the wall radius r0 for spheres and the edge length x0 for
    cubes.  ``k`` is the quantizing zero: k_nl of j_l for free spheres, the
    Laguerre zero k_snl for the oscillator in a sphere, NaN for cubes.
    ``normalization`` is the full constant in front of the radial (sphere)
    or product (cube) form.
    """

    geometry: Geometry
    potential_class: PotentialClass
    quantum_numbers: tuple[int, ...]
    energy: float
    normalization: float
    size: float
    k: float = math.nan
    units: Units = NATURAL

    @property
    def l(self) -> int:
        return self.quantum_numbers[1]

    @property
    def m(self) -> int:
        return self.quantum_numbers[2]

    @property
    def omega(self) -> float:
        if self.potential_class is not PotentialClass.OSCILLATOR:
            return 0.0
        return self.units.hbar * self.k / (self.units.mass * self.size**2)

    # -- comoving potential -------------------------------------------------

    def v_tilde(self, X):
        """Time-independent comoving potential the mode is an eigenstate of."""
        X = np.asarray(X, dtype=float)
        r2 = np.sum(X * X, axis=-1)
        if self.potential_class is PotentialClass.OSCILLATOR:
            return 0.5 * self.units.mass * self.omega**2 * r2
        return np.zeros_like(r2)

    # -- sphere pieces ------------------------------------------------------

    def radial(self, rho):
        """Radial factor R(rho) with u = R(|X|) Y_lm."""
        if self.geometry is not Geometry.SPHERE:
            raise TypeError("radial factor only exists for spherical modes")
        rho = np.asarray(rho, dtype=float)
        r0, l = self.size, self.l
        if self.potential_class is PotentialClass.FREE:
            return self.normalization * spherical_jn(l, self.k * rho / r0)
        p = (self.quantum_numbers[0] - l) // 2
        z = self.k * rho**2 / r0**2
        return (
            self.normalization
            * rho**l
            * np.exp(-0.5 * z)
            * assoc_laguerre(p, l + 0.5, z)
        )

    def reduced_radial(self, rho):
        """chi(rho) = rho R(rho), the function the radial propagator evolves."""
        return np.asarray(rho, dtype=float) * self.radial(rho)

    # -- cube pieces --------------------------------------------------------

    def axis_factor(self, axis: int, X):
        """Normalized 1D factor sqrt(2/x0) f(n pi X / x0) along ``axis``."""
        if self.geometry is not Geometry.CUBE:
            raise TypeError("axis factors only exist for cube modes")
        idx = self.quantum_numbers[axis]
        arg = idx * math.pi * np.asarray(X, dtype=float) / self.size
        f = np.sin(arg) if idx % 2 == 0 else np.cos(arg)
        return math.sqrt(2.0 / self.size) * f

    def axis_energy(self, axis: int) -> float:
        idx = self.quantum_numbers[axis]
        u = self.units
        return (u.hbar * math.pi * idx / self.size) ** 2 / (2.0 * u.mass)

    @property
    def parity(self) -> int:
        """+1 for even, -1 for odd modes under X -> -X."""
        if self.geometry is Geometry.SPHERE:
            return (-1) ** self.l
        n_sin = sum(1 for q in self.quantum_numbers if q % 2 == 0)
        return (-1) ** n_sin

    # -- full evaluation ----------------------------------------------------

    def inside(self, X, slack: float = _BOUNDARY_SLACK):
        X = np.asarray(X, dtype=float)
        if self.geometry is Geometry.SPHERE:
            return np.linalg.norm(X, axis=-1) <= self.size * (1 + slack)
        return np.all(np.abs(X) <= 0.5 * self.size * (1 + slack), axis=-1)

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        if not np.all(self.inside(X)):
            raise DomainError("point outside the comoving domain")
        if self.geometry is Geometry.CUBE:
            out = np.ones(X.shape[:-1])
            for axis in range(3):
                out = out * self.axis_factor(axis, X[..., axis])
            return out.astype(complex)
        rho = np.linalg.norm(X, axis=-1)
        safe = np.where(rho > 0, rho, 1.0)
        theta = np.where(rho > 0, np.arccos(np.clip(X[..., 2] / safe, -1, 1)), 0.0)
        phi = np.arctan2(X[..., 1], X[..., 0])
        return self.radial(rho) * spherical_harmonic(self.l, self.m, theta, phi)


# -- constructors -----------------------------------------------------------


def _check_int(name, value, low):
    if not isinstance(value, (int, np.integer)) or value < low:
        raise ValueError(f"{name} must be an integer >= {low}, got {value}")


def sphere_free_mode(n: int, l: int, m: int, r0: float, units: Units = NATURAL) -> Eigenmode:
    """Free particle inside a fixed sphere of radius r0 (spherical Bessel modes)."""
    _check_int("n", n, 1)
    _check_int("l", l, 0)
    if abs(m) > l:
        raise ValueError(f"|m| must not exceed l, got l={l}, m={m}")
    if not r0 > 0:
        raise ValueError("r0 must be positive")
    k = spherical_bessel_zero(l, n)
    norm = math.sqrt(2.0 / r0**3) / spherical_jn(l + 1, k)
    energy = (units.hbar * k / r0) ** 2 / (2.0 * units.mass)
    return Eigenmode(
        Geometry.SPHERE, PotentialClass.FREE, (n, l, m), energy, norm, float(r0), k, units
    )


def cube_free_mode(n: int, l: int, m: int, x0: float, units: Units = NATURAL) -> Eigenmode:
    """Free particle in the cube |X_i| <= x0/2.

    Each axis carries sin for an even index and cos for an odd one.
    """
    for name, q in (("n", n), ("l", l), ("m", m)):
        _check_int(name, q, 1)
    if not x0 > 0:
        raise ValueError("x0 must be positive")
    energy = (units.hbar * math.pi / x0) ** 2 * (n * n + l * l + m * m) / (2.0 * units.mass)
    return Eigenmode(
        Geometry.CUBE, PotentialClass.FREE, (n, l, m), energy, math.sqrt(8.0 / x0**3),
        float(x0), math.nan, units,
    )


def sphere_oscillator_mode(
    n: int, l: int, m: int, s: int, r0: float, units: Units = NATURAL, n_quad: int = 256
) -> Eigenmode:
    """Isotropic oscillator whose s-th radial node sits on the wall |X| = r0.

    The trap frequency is fixed by the wall: omega = hbar k_snl / (M r0^2)
    with k_snl the s-th zero of L_{(n-l)/2}^{l+1/2}.  The prefactor is
    normalized by Gauss-Legendre quadrature over [0, r0].
    """
    _check_int("l", l, 0)
    _check_int("n", n, 0)
    if abs(m) > l:
        raise ValueError(f"|m| must not exceed l, got l={l}, m={m}")
    if n < l + 2 or (n - l) % 2:
        raise ValueError(
            f"n must be l+2, l+4, ... (L_0 has no zero), got n={n}, l={l}"
        )
    p = (n - l) // 2
    if not isinstance(s, (int, np.integer)) or not 1 <= s <= p:
        raise ValueError(f"s must lie in [1, {p}], got {s}")
    if not r0 > 0:
        raise ValueError("r0 must be positive")
    k = assoc_laguerre_zero(p, l + 0.5, s)
    rho, w = gauss_legendre(n_quad, 0.0, r0)
    z = k * rho**2 / r0**2
    shape = rho**l * np.exp(-0.5 * z) * assoc_laguerre(p, l + 0.5, z)
    norm = 1.0 / math.sqrt(np.sum(w * shape**2 * rho**2))
    energy = (n + 1.5) * units.hbar**2 * k / (units.mass * r0**2)
    return Eigenmode(
        Geometry.SPHERE, PotentialClass.OSCILLATOR, (n, l, m, s), energy, norm,
        float(r0), k, units,
    )


# -- phases and lab-frame assembly ------------------------------------------


def dirac_phase(M: float, H, r, hbar: float = 1.0):
    """gamma = M H r^2 / (2 hbar); depends on nothing but (M, H, r)."""
    return M * np.asarray(H) * np.asarray(r) ** 2 / (2.0 * hbar)


def cosmic_dirac_phase(M: float, t, r, t0: float, hbar: float = 1.0):
    """Dirac phase for the flat matter-dominated expansion, M r^2 / (3 hbar t)."""
    t = np.asarray(t, dtype=float)
    if not t0 > 0:
        raise ValueError("t0 must be positive")
    if np.any(t <= 0):
        raise DomainError("cosmic time must be positive")
    return M * np.asarray(r) ** 2 / (3.0 * hbar * t)


@dataclass(frozen=True)
class PhaseBreakdown:
    """Unwrapped phases of a lab-frame state; ``wrapped`` is total in (-pi, pi]."""

    dynamic: float
    dirac: np.ndarray
    total: np.ndarray

    @property
    def wrapped(self):
        return wrap_phase(self.total)


def wrap_phase(theta):
    """Map angles to (-pi, pi]."""
    w = np.mod(np.asarray(theta) + np.pi, 2 * np.pi) - np.pi
    return np.where(w == -np.pi, np.pi, w)


def instantaneous_energy(mode: Eigenmode, traj: ScaleFactorTrajectory, t: float) -> float:
    return mode.energy / traj.a(t) ** 2


def _phases(mode, traj, r, t, include_dirac):
    s = sample(traj, t)
    units = mode.units
    dynamic = -mode.energy * s.tau / units.hbar
    gamma = dirac_phase(units.mass, s.H, r, units.hbar)
    if not include_dirac:
        gamma = np.zeros_like(gamma)
    return s, PhaseBreakdown(dynamic, gamma, dynamic + gamma)


def assemble_lab_wavefunction(
    mode: Eigenmode,
    traj: ScaleFactorTrajectory,
    x,
    t: float,
    include_dirac: bool = True,
):
    """Lab-frame psi(x, t) and its phase breakdown at Cartesian points ``x``.

    ``include_dirac=False`` drops the e^{i gamma} factor (ablation only).
    """
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    s, phases = _phases(mode, traj, r, t, include_dirac)
    X = x / s.a
    if not np.all(mode.inside(X)):
        raise DomainError(f"point outside the instantaneous wall at t={t}")
    psi = s.a**-1.5 * mode(X) * np.exp(1j * phases.total)
    return psi, phases


def lab_reduced_radial(mode, traj, r, t, include_dirac=True):
    """r * (radial part of psi) for spherical modes; Y_lm is factored out."""
    r = np.asarray(r, dtype=float)
    s, phases = _phases(mode, traj, r, t, include_dirac)
    if np.any(r > s.a * mode.size * (1 + _BOUNDARY_SLACK)):
        raise DomainError(f"radius outside the instantaneous wall at t={t}")
    return r * s.a**-1.5 * mode.radial(r / s.a) * np.exp(1j * phases.total)


def lab_axis_factor(mode, axis, traj, x, t, include_dirac=True):
    """One Cartesian factor of a cube state; the three factors multiply to psi.

    Each axis carries its share E_i of the energy and of the Dirac phase.
    """
    x = np.asarray(x, dtype=float)
    s = sample(traj, t)
    if np.any(np.abs(x) > 0.5 * s.a * mode.size * (1 + _BOUNDARY_SLACK)):
        raise DomainError(f"coordinate outside the instantaneous wall at t={t}")
    units = mode.units
    phase = -mode.axis_energy(axis) * s.tau / units.hbar
    if include_dirac:
        phase = phase + dirac_phase(units.mass, s.H, x, units.hbar)
    return s.a**-0.5 * mode.axis_factor(axis, x / s.a) * np.exp(1j * phase)

