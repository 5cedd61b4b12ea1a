"""Wall-motion laws a(t) and the kinematics derived from them.

Every trajectory exposes a, da/dt, d2a/dt2, H = a'/a, alpha = a^3 a'' and the
rescaled time tau(t) = int_{t_min}^t dt'/a^2.  Trajectories are immutable.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from qlab.errors import ConvergenceError, DomainError

TAU_RTOL = 1e-12


class TrajectoryKind(enum.Enum):
    UNIFORM = "uniform"
    CONSTANT_ALPHA = "constant-alpha"
    FRIEDMANN_FLAT = "friedmann"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class KinematicSample:
    t: float
    a: float
    a_dot: float
    a_ddot: float
    H: float
    alpha: float
    tau: float


@dataclass(frozen=True)
class ScaleFactorTrajectory:
    """One wall-motion law, valid on ``[t_min, t_max]``.

    ``params`` holds the defining constants of ``kind``.  Numerical kinds carry
    their interpolant in ``_model``; it is never mutated after construction.
    """

    kind: TrajectoryKind
    params: dict[str, float]
    t_min: float
    t_max: float
    _model: Any = field(default=None, repr=False, compare=False)

    # -- evaluation ---------------------------------------------------------

    def check(self, t):
        t = np.asarray(t, dtype=float)
        lo = self.t_min - 1e-12 * max(1.0, abs(self.t_min))
        hi = self.t_max + 1e-12 * max(1.0, abs(self.t_max))
        if np.any(~np.isfinite(t)) or np.any(t < lo) or np.any(t > hi):
            raise DomainError(
                f"t={t} outside trajectory domain [{self.t_min}, {self.t_max}]"
            )
        return t

    def derivatives(self, t):
        """Return ``(a, a_dot, a_ddot)`` at ``t`` (scalar or array)."""
        t = self.check(t)
        p = self.params
        kind = self.kind
        if kind is TrajectoryKind.UNIFORM:
            a = p["a0"] + p["v"] * (t - self.t_min)
            a_dot = np.full_like(a, p["v"])
            a_ddot = np.zeros_like(a)
        elif kind is TrajectoryKind.FRIEDMANN_FLAT:
            t0 = p["t0"]
            a = (t / t0) ** (2.0 / 3.0)
            a_dot = 2.0 / (3.0 * t) * a
            a_ddot = -2.0 / (9.0 * t**2) * a
        elif kind is TrajectoryKind.CONSTANT_ALPHA:
            if p["alpha"] == 0.0:
                a = p["a0"] + p["v0"] * (t - self.t_min)
                a_dot = np.full_like(a, p["v0"])
            else:
                y = self._model.sol(t)
                a, a_dot = y[0], y[1]
            a_ddot = p["alpha"] / a**3
        else:
            spline = self._model
            a = spline(t)
            a_dot = spline(t, 1)
            a_ddot = spline(t, 2)
        if np.any(a <= 0):
            raise DomainError(f"scale factor is not positive at t={t}")
        if np.ndim(a) == 0:
            return float(a), float(a_dot), float(a_ddot)
        return a, a_dot, a_ddot

    def a(self, t):
        return self.derivatives(t)[0]

    def H(self, t):
        a, a_dot, _ = self.derivatives(t)
        return a_dot / a

    def alpha(self, t):
        a, _, a_ddot = self.derivatives(t)
        return a**3 * a_ddot

    def tau(self, t) -> float:
        return tau_of_t(self, t)

    def t_of_tau(self, tau: float) -> float:
        """Invert the monotone map t -> tau by bracketed root finding."""
        if tau < 0:
            raise DomainError(f"tau={tau} precedes the trajectory start")
        if tau == 0:
            return self.t_min
        exact = _t_of_tau_closed(self, tau)
        if exact is not None:
            self.check(exact)
            return exact
        lo = self.t_min
        span = 1.0 if math.isinf(self.t_max) else self.t_max - self.t_min
        hi = min(self.t_max, lo + span)
        while tau_of_t(self, hi) < tau:
            if hi >= self.t_max:
                raise DomainError(f"tau={tau} beyond the end of the trajectory")
            lo, hi = hi, min(self.t_max, self.t_min + 2.0 * (hi - self.t_min))
        return brentq(
            lambda s: tau_of_t(self, s) - tau, lo, hi, xtol=1e-14, rtol=1e-15
        )

    def sample(self, t: float) -> KinematicSample:
        return sample(self, t)


# -- constructors -----------------------------------------------------------


def make_uniform(
    a0: float, v: float, t_min: float = 0.0, t_max: float | None = None
) -> ScaleFactorTrajectory:
    """Uniformly moving walls, a(t) = a0 + v (t - t_min).

    For contracting walls (``v < 0``) the default end of the domain stops
    just short of the collapse time.
    """
    if not a0 > 0:
        raise ValueError(f"a0 must be positive, got {a0}")
    collapse = t_min + a0 / -v if v < 0 else math.inf
    if t_max is None:
        t_max = collapse if math.isinf(collapse) else t_min + 0.999 * (collapse - t_min)
    if t_max <= t_min or (math.isfinite(collapse) and t_max >= collapse):
        raise DomainError(f"domain [{t_min}, {t_max}] reaches a <= 0")
    return ScaleFactorTrajectory(
        TrajectoryKind.UNIFORM, {"a0": float(a0), "v": float(v)}, float(t_min), float(t_max)
    )


def make_friedmann_flat(
    t0: float, t_min: float | None = None, t_max: float = math.inf
) -> ScaleFactorTrajectory:
    """Matter-dominated flat universe, a(t) = (t/t0)^(2/3).

    The default lower limit ``t_min = t0/8`` (where a = 1/4) gives
    tau(t0) = 3 t0, so the present-epoch dynamic phase is -3 E t0 / hbar.
    """
    if not t0 > 0:
        raise ValueError(f"t0 must be positive, got {t0}")
    if t_min is None:
        t_min = t0 / 8.0
    if not t_min > 0:
        raise DomainError("the flat-universe scale factor needs t > 0")
    return ScaleFactorTrajectory(
        TrajectoryKind.FRIEDMANN_FLAT, {"t0": float(t0)}, float(t_min), float(t_max)
    )


def make_constant_alpha(
    alpha: float,
    a0: float,
    v0: float,
    t_max: float = 10.0,
    t_min: float = 0.0,
    rtol: float = 1e-12,
    atol: float = 1e-14,
) -> ScaleFactorTrajectory:
    """Walls with a^3 a'' = alpha held fixed.

    Integrates a'' = alpha / a^3 from ``a(t_min) = a0``, ``a'(t_min) = v0``
    with an 8th-order Dormand-Prince scheme.  The rescaled time is carried as
    a third ODE component so tau and a share one dense interpolant.
    """
    if not a0 > 0:
        raise ValueError(f"a0 must be positive, got {a0}")
    if not t_max > t_min:
        raise ValueError("t_max must exceed t_min")
    params = {"alpha": float(alpha), "a0": float(a0), "v0": float(v0)}
    if alpha == 0.0:
        traj = make_uniform(a0, v0, t_min, t_max)
        return ScaleFactorTrajectory(
            TrajectoryKind.CONSTANT_ALPHA, params, traj.t_min, traj.t_max
        )

    def rhs(_t, y):
        a, a_dot, _tau = y
        return [a_dot, alpha / a**3, 1.0 / a**2]

    def collapse(_t, y):
        # a'' ~ a^-3 blows up before a reaches 0; stop at a thousandth of a0
        return y[0] - 1e-3 * a0

    collapse.terminal = True
    sol = solve_ivp(
        rhs,
        (t_min, t_max),
        [a0, v0, 0.0],
        method="DOP853",
        rtol=rtol,
        atol=atol,
        dense_output=True,
        events=collapse,
    )
    if sol.status == 1:
        raise DomainError(f"walls collapse (a -> 0) near t={sol.t_events[0][0]}")
    if not sol.success:
        raise ConvergenceError(f"scale-factor integration failed: {sol.message}")
    return ScaleFactorTrajectory(
        TrajectoryKind.CONSTANT_ALPHA, params, float(t_min), float(t_max), sol
    )


def make_tabulated(t, a) -> ScaleFactorTrajectory:
    """Scale factor interpolated by a C2 cubic spline through ``(t, a)``."""
    t = np.asarray(t, dtype=float)
    a = np.asarray(a, dtype=float)
    if t.ndim != 1 or t.shape != a.shape or t.size < 4:
        raise ValueError("need at least four (t, a) samples in matching 1D arrays")
    if np.any(np.diff(t) <= 0):
        raise ValueError("tabulated times must be strictly increasing")
    if np.any(a <= 0):
        raise ValueError("tabulated scale factor must be positive")
    spline = CubicSpline(t, a)
    dense = np.linspace(t[0], t[-1], 16 * t.size)
    if np.any(spline(dense) <= 0):
        raise DomainError("spline interpolant dips to a <= 0 between samples")
    return ScaleFactorTrajectory(
        TrajectoryKind.TABULATED, {}, float(t[0]), float(t[-1]), spline
    )


def load_tabulated_csv(path: str | Path) -> ScaleFactorTrajectory:
    """Read a two-column ``t,a`` CSV with a header line."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        rows = [(float(r[0]), float(r[1])) for r in reader if r]
    t, a = zip(*rows)
    return make_tabulated(t, a)


# -- derived quantities -----------------------------------------------------


def tau_of_t(traj: ScaleFactorTrajectory, t: float) -> float:
    """Rescaled time int_{t_min}^t dt'/a(t')^2.

    Closed forms for uniform and flat-universe walls, the ODE's own tau
    component for constant alpha, adaptive quadrature for tabulated laws.
    """
    t = float(traj.check(t))
    if t == traj.t_min:
        return 0.0
    if traj.kind is TrajectoryKind.CONSTANT_ALPHA and traj._model is not None:
        return float(traj._model.sol(t)[2])
    if traj.kind is TrajectoryKind.UNIFORM:
        a0 = traj.params["a0"]
        return (t - traj.t_min) / (a0 * traj.a(t))
    if traj.kind is TrajectoryKind.FRIEDMANN_FLAT:
        t0 = traj.params["t0"]
        return 3.0 * t0 ** (4.0 / 3.0) * (traj.t_min ** (-1.0 / 3.0) - t ** (-1.0 / 3.0))
    value, err = quad(
        lambda s: traj.a(s) ** -2,
        traj.t_min,
        t,
        epsabs=0.0,
        epsrel=TAU_RTOL,
        limit=200,
    )
    if err > 1e-10 * abs(value):
        raise ConvergenceError(f"tau quadrature error estimate {err:.3g} too large")
    return value


def _t_of_tau_closed(traj: ScaleFactorTrajectory, tau: float):
    """Analytic inverse of tau(t) where one exists, else None."""
    p = traj.params
    if traj.kind is TrajectoryKind.UNIFORM:
        a0, v = p["a0"], p["v"]
        denom = 1.0 - tau * a0 * v
        if denom <= 0:
            raise DomainError(f"tau={tau} is never reached by these walls")
        return traj.t_min + tau * a0**2 / denom
    if traj.kind is TrajectoryKind.FRIEDMANN_FLAT:
        t0 = p["t0"]
        base = traj.t_min ** (-1.0 / 3.0) - tau / (3.0 * t0 ** (4.0 / 3.0))
        if base <= 0:
            raise DomainError(f"tau={tau} is never reached by this expansion")
        return base**-3.0
    return None


def sample(traj: ScaleFactorTrajectory, t: float) -> KinematicSample:
    a, a_dot, a_ddot = traj.derivatives(t)
    return KinematicSample(
        t=float(t),
        a=a,
        a_dot=a_dot,
        a_ddot=a_ddot,
        H=a_dot / a,
        alpha=a**3 * a_ddot,
        tau=tau_of_t(traj, t),
    )


def t_at_scale(traj: ScaleFactorTrajectory, a_target: float) -> float:
    """Earliest time in the domain at which a(t) reaches ``a_target``."""
    a_start = traj.a(traj.t_min)
    f = lambda s: traj.a(s) - a_target  # noqa: E731
    if f(traj.t_min) == 0:
        return traj.t_min
    sign = np.sign(f(traj.t_min))
    lo = traj.t_min
    step = 1e-3 * max(1.0, abs(traj.t_min))
    hi = lo
    while True:
        hi = min(traj.t_max, lo + step)
        if np.sign(f(hi)) != sign:
            break
        if hi >= traj.t_max:
            raise DomainError(f"a never reaches {a_target} from {a_start} in domain")
        lo, step = hi, 2 * step
    return brentq(f, lo, hi, xtol=1e-14, rtol=1e-15)
