"""Lab-frame potentials and their comoving effective form.

Going to the comoving frame turns a lab potential V(x, t) into

    U(X, t) = 1/2 M alpha(t) |X|^2 + a^2 V(a X, t),

where the first term is the fictitious inertial potential.  The shortcut
class V = V~(x/a)/a^2 - 1/2 (a''/a) M |x|^2 makes U = V~(X) for all t, so a
comoving eigenstate of V~ stays one however fast the walls move.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from qlab.scale_factor import ScaleFactorTrajectory, TrajectoryKind
from qlab.units import NATURAL, Units

Potential = Callable[[np.ndarray], np.ndarray]


class PotentialKind(enum.Enum):
    STA = "sta"
    LAB_STATIC = "lab-static"
    CUSTOM = "custom"


def zero_potential(X):
    return np.zeros(np.shape(X)[:-1])


class HarmonicPotential:
    """1/2 M omega^2 |X|^2."""

    degree = 2

    def __init__(self, omega: float, mass: float = 1.0):
        self.omega = omega
        self.mass = mass

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        return 0.5 * self.mass * self.omega**2 * np.sum(X * X, axis=-1)


class InverseSquarePotential:
    """c / |X|^2, clamped to c / eps^2 inside the core |X| < eps."""

    degree = -2

    def __init__(self, c: float, cutoff: float = 1e-6):
        if not cutoff > 0:
            raise ValueError("cutoff must be positive")
        self.c = c
        self.cutoff = cutoff

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        r2 = np.sum(X * X, axis=-1)
        return self.c / np.maximum(r2, self.cutoff**2)


def check_homogeneity(v: Potential, degree: float, n_samples: int = 64, rtol: float = 1e-10):
    """Verify v(lam X) = lam^degree v(X) on a fixed pseudo-random sample.

    Raises ValueError on the first violation.
    """
    rng = np.random.default_rng(12345)
    direction = rng.normal(size=(n_samples, 3))
    direction /= np.linalg.norm(direction, axis=-1, keepdims=True)
    X = direction * rng.uniform(0.2, 1.0, size=(n_samples, 1))
    lam = rng.uniform(0.3, 3.0, size=n_samples)
    lhs = v(X * lam[:, None])
    rhs = lam**degree * v(X)
    bad = np.abs(lhs - rhs) > rtol * np.maximum(np.abs(rhs), 1e-300)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ValueError(
            f"potential is not homogeneous of degree {degree}: "
            f"v(lam X)={lhs[i]!r} vs lam^d v(X)={rhs[i]!r} at lam={lam[i]!r}"
        )


@dataclass(frozen=True)
class PotentialSpec:
    """A lab-frame potential tied to a wall trajectory.

    For ``STA`` specs ``v_tilde`` is the comoving potential being protected;
    for ``LAB_STATIC`` and ``CUSTOM`` specs ``lab`` is the lab potential,
    called as ``lab(x)`` or ``lab(x, t)`` respectively.
    """

    kind: PotentialKind
    traj: ScaleFactorTrajectory
    v_tilde: Potential | None = None
    lab: Callable | None = None
    units: Units = NATURAL
    degree: float | None = None

    def lab_potential(self, x, t: float):
        """V(x, t) at Cartesian lab points ``x`` of shape (..., 3)."""
        x = np.asarray(x, dtype=float)
        if self.kind is PotentialKind.STA:
            a, _, a_ddot = self.traj.derivatives(t)
            r2 = np.sum(x * x, axis=-1)
            aux = -0.5 * (a_ddot / a) * self.units.mass * r2
            return self.v_tilde(x / a) / a**2 + aux
        self.traj.check(t)
        if self.kind is PotentialKind.LAB_STATIC:
            return self.lab(x)
        return self.lab(x, t)

    def comoving(self, X, t: float):
        return comoving_effective_potential(self, X, t)

    @property
    def comoving_static(self) -> bool:
        """True when U(X, t) cannot change with t.

        STA specs are static by construction; a time-independent lab potential
        that is identically zero is static when alpha is constant.
        """
        if self.kind is PotentialKind.STA:
            return True
        if self.kind is PotentialKind.LAB_STATIC and self.lab is zero_potential:
            if self.traj.kind is TrajectoryKind.CONSTANT_ALPHA:
                return True
            return self.traj.kind is TrajectoryKind.UNIFORM
        return False


def build_sta_potential(
    v_tilde: Potential,
    traj: ScaleFactorTrajectory,
    units: Units = NATURAL,
    degree: float | None = None,
) -> PotentialSpec:
    """Lab potential V = V~(x/a)/a^2 - 1/2 (a''/a) M r^2 protecting ``v_tilde``.

    If ``degree`` is given (or ``v_tilde`` carries a ``degree`` attribute),
    homogeneity is checked by sampling before the spec is returned.
    """
    if degree is None:
        degree = getattr(v_tilde, "degree", None)
    if degree is not None:
        check_homogeneity(v_tilde, degree)
    return PotentialSpec(PotentialKind.STA, traj, v_tilde=v_tilde, units=units, degree=degree)


def lab_static_potential(
    v_lab: Potential, traj: ScaleFactorTrajectory, units: Units = NATURAL
) -> PotentialSpec:
    """A potential fixed in the lab frame, V(x, t) = v_lab(x)."""
    return PotentialSpec(PotentialKind.LAB_STATIC, traj, lab=v_lab, units=units)


def custom_potential(
    v_lab: Callable, traj: ScaleFactorTrajectory, units: Units = NATURAL
) -> PotentialSpec:
    """An arbitrary lab potential ``v_lab(x, t)``."""
    return PotentialSpec(PotentialKind.CUSTOM, traj, lab=v_lab, units=units)


def comoving_effective_potential(spec: PotentialSpec, X, t: float):
    """U(X, t) = 1/2 M alpha |X|^2 + a^2 V(a X, t)."""
    X = np.asarray(X, dtype=float)
    a, _, a_ddot = spec.traj.derivatives(t)
    alpha = a**3 * a_ddot
    r2 = np.sum(X * X, axis=-1)
    return 0.5 * spec.units.mass * alpha * r2 + a**2 * spec.lab_potential(a * X, t)
