"""Named verification suites behind ``qlab verify``.

Each suite returns a plain dict: ``{"suite", "passed", "checks": [...]}``
where every check records the measured value, its tolerance and the
comparison used.  Resolutions are chosen so ``--suite all`` stays fast.
"""

from __future__ import annotations

from qlab.eigenmodes import cube_free_mode, sphere_free_mode, sphere_oscillator_mode
from qlab.potentials import build_sta_potential, lab_static_potential, zero_potential
from qlab.scale_factor import make_constant_alpha, make_friedmann_flat, make_uniform, t_at_scale
from qlab.units import NATURAL, Units
from qlab.verifier import (
    convergence_order,
    extract_dirac_phase,
    fidelity_trace,
    lab_tdse_residual,
    tise_residual,
)


def check(name, value, tolerance, op="<"):
    ops = {
        "<": lambda v, t: v < t,
        "<=": lambda v, t: v <= t,
        ">": lambda v, t: v > t,
        ">=": lambda v, t: v >= t,
    }
    return {
        "name": name,
        "value": float(value),
        "tolerance": float(tolerance),
        "op": op,
        "passed": bool(ops[op](value, tolerance)),
    }


def _result(name, checks):
    return {"suite": name, "passed": all(c["passed"] for c in checks), "checks": checks}


def tise_suite(units: Units = NATURAL, r0: float = 1.0):
    modes = {
        "sphere(1,0,0)": sphere_free_mode(1, 0, 0, r0, units),
        "cube(1,1,1)": cube_free_mode(1, 1, 1, r0, units),
        "oscillator(2,0,0,1)": sphere_oscillator_mode(2, 0, 0, 1, r0, units),
    }
    Ns = (512, 1024, 2048)
    checks = []
    for label, mode in modes.items():
        res = [tise_residual(mode, N) for N in Ns]
        order = min(convergence_order(res, [1.0 / (N + 1) for N in Ns]))
        checks.append(check(f"{label} residual N=1024", res[1], 1e-4))
        checks.append(check(f"{label} order", order, 1.9, ">="))
    return _result("tise", checks)


def lab_tdse_suite(units: Units = NATURAL, r0: float = 1.0, v: float = 0.1):
    mode = sphere_free_mode(1, 0, 0, r0, units)
    traj = make_uniform(1.0, v)
    spec = build_sta_potential(mode.v_tilde, traj, units)
    with_phase = lab_tdse_residual(mode, traj, spec, 1.0, N=1024, dt=1e-3)
    without = lab_tdse_residual(mode, traj, spec, 1.0, N=1024, dt=1e-3, include_dirac=False)
    return _result(
        "lab-tdse",
        [
            check("uniform sphere residual", with_phase, 1e-3),
            check("ablation ratio (no Dirac phase)", without / with_phase, 10.0, ">="),
        ],
    )


def sta_suite(units: Units = NATURAL, r0: float = 1.0, N: int = 1024, dtau: float = 1e-3):
    mode = sphere_free_mode(1, 0, 0, r0, units)
    traj = make_uniform(1.0, 0.1)
    tau_end = traj.tau(t_at_scale(traj, 2.0))
    sta = fidelity_trace(mode, traj, build_sta_potential(mode.v_tilde, traj, units), N, tau_end, dtau)
    # non-STA control: zero lab potential, alpha (M r0^2/hbar)^2 = 10
    alpha = 10.0 * (units.hbar / (units.mass * r0**2)) ** 2
    accel = make_constant_alpha(alpha, 1.0, 0.0, t_max=10.0)
    tau_c = accel.tau(t_at_scale(accel, 2.0))
    matched = fidelity_trace(
        mode, accel, build_sta_potential(mode.v_tilde, accel, units), N, tau_c, dtau
    )
    control = fidelity_trace(
        mode, accel, lab_static_potential(zero_potential, accel, units), N, tau_c, dtau
    )
    return _result(
        "sta",
        [
            check("STA min fidelity", sta.fidelity.min(), 1 - 1e-5, ">="),
            check("STA |phase error|", abs(sta.phase_error[-1]), 1e-3),
            check("STA norm drift", sta.norm_drift, 1e-10),
            check(
                "control fidelity gap (STA - zero potential)",
                matched.fidelity[-1] - control.fidelity[-1],
                0.0,
                ">",
            ),
            check("control norm drift", control.norm_drift, 1e-10),
        ],
    )


def dirac_fit_suite(units: Units = NATURAL, r0: float = 1.0):
    sphere = sphere_free_mode(1, 0, 0, r0, units)
    cube = cube_free_mode(1, 1, 1, r0, units)
    checks = []
    for v in (0.1, 0.25, 0.5):
        traj = make_uniform(1.0, v)
        t = 1.0 / v
        expected = units.mass * traj.H(t) / (2.0 * units.hbar)
        fs = extract_dirac_phase(sphere, traj, t).coefficient
        fc = extract_dirac_phase(cube, traj, t).coefficient
        checks.append(check(f"sphere v={v} rel error", abs(fs - expected) / expected, 1e-4))
        checks.append(check(f"cube vs sphere v={v} rel diff", abs(fc - fs) / expected, 2e-4))
    t0 = 1.0
    traj = make_friedmann_flat(t0)
    expected = units.mass / (3.0 * units.hbar * t0)
    fit = extract_dirac_phase(sphere, traj, t0).coefficient
    checks.append(check("friedmann t=t0 rel error", abs(fit - expected) / expected, 1e-4))
    return _result("dirac-fit", checks)


SUITES = {
    "tise": tise_suite,
    "lab-tdse": lab_tdse_suite,
    "sta": sta_suite,
    "dirac-fit": dirac_fit_suite,
}


def run_suites(names, units: Units = NATURAL, r0: float = 1.0, workers: int = 1):
    """Run suites (optionally on a thread pool); results keep the input order."""
    names = list(SUITES) if names == ["all"] or names == "all" else list(names)
    if workers > 1 and len(names) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(SUITES[n], units, r0) for n in names]
            results = [f.result() for f in futures]
    else:
        results = [SUITES[n](units, r0) for n in names]
    return {"passed": all(r["passed"] for r in results), "suites": results}

