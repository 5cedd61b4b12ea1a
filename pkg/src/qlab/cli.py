"""Command-line front end: ``qlab {zeros,eigen,phase,potential,propagate,verify}``.

Output is deterministic: CSV numbers use 12 significant digits, JSON 17.
Exit status is 0 on success, 1 on numerical or check failure, 2 on usage
errors.  ``--config FILE`` reads flat ``key = value`` lines whose keys are
flag names (dashes or underscores); explicit flags win.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from qlab.eigenmodes import (
    cube_free_mode,
    dirac_phase,
    sphere_free_mode,
    sphere_oscillator_mode,
)
from qlab.errors import ConvergenceError, DomainError, PhaseUnwrapError
from qlab.potentials import (
    HarmonicPotential,
    InverseSquarePotential,
    build_sta_potential,
    comoving_effective_potential,
    custom_potential,
    lab_static_potential,
    zero_potential,
)
from qlab.propagator import discretize_mode, grid_for_mode, propagate
from qlab.scale_factor import (
    load_tabulated_csv,
    make_constant_alpha,
    make_friedmann_flat,
    make_uniform,
    t_at_scale,
)
from qlab.special import assoc_laguerre_zeros, spherical_bessel_zeros
from qlab.units import Units

SUBCOMMANDS = ("zeros", "eigen", "phase", "potential", "propagate", "verify")
NUMERIC_ERRORS = (ConvergenceError, DomainError, PhaseUnwrapError, ArithmeticError)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    units: Units
    options: dict[str, Any] = field(default_factory=dict)
    fmt: str = "csv"
    output: str | None = None

    def __getattr__(self, name):
        try:
            return self.__dict__["options"][name]
        except KeyError:
            raise AttributeError(name) from None


# -- formatting ----------------------------------------------------------------


def fmt_csv(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.12g" % value
    return str(value)


def to_json(obj, indent=0) -> str:
    """JSON with floats printed to 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}"{k}": {to_json(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + to_json(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj):
            return "null"
        return "%.17g" % obj
    if obj is None:
        return "null"
    s = str(obj).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{s}"'


def write_table(header, rows, config: RunConfig):
    if config.fmt == "json":
        text = to_json([dict(zip(header, row)) for row in rows]) + "\n"
    else:
        lines = [",".join(header)] + [",".join(fmt_csv(v) for v in row) for row in rows]
        text = "\n".join(lines) + "\n"
    _emit(text, config.output)


def _emit(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


# -- parsing -------------------------------------------------------------------


def _float_list(s):
    return [float(v) for v in str(s).replace(",", " ").split()]


def _add_common(p):
    p.add_argument("--hbar", type=float, default=1.0)
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    p.add_argument("--output", "-o", default=None)
    p.add_argument("--config", default=None, help="flat key=value file; flags win")


def _add_traj(p):
    p.add_argument(
        "--traj", choices=("static", "uniform", "constant-alpha", "friedmann", "tabulated"),
        default="static",
    )
    p.add_argument("--a0", type=float, default=1.0)
    p.add_argument("--v", type=float, default=None, help="wall speed (uniform)")
    p.add_argument("--alpha", type=float, default=None, help="a^3 a'' (constant-alpha)")
    p.add_argument("--v0", type=float, default=None, help="initial da/dt (constant-alpha)")
    p.add_argument("--t0", type=float, default=None, help="present epoch (friedmann)")
    p.add_argument("--t-min", type=float, default=None)
    p.add_argument("--t-max", type=float, default=None)
    p.add_argument("--table", default=None, help="t,a CSV (tabulated)")


def _add_mode(p, require_size):
    p.add_argument("--geometry", choices=("sphere", "cube"), default="sphere")
    p.add_argument("--potential-class", choices=("free", "oscillator"), default="free")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--l", type=int, default=0)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--s", type=int, default=None)
    default = None if require_size else 1.0
    p.add_argument("--r0", type=float, default=default)
    p.add_argument("--x0", type=float, default=default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("zeros", help="dump zeros of j_l or L_p^alpha")
    _add_common(p)
    p.add_argument("--family", choices=("bessel", "laguerre"), required=True)
    p.add_argument("--l", type=int, default=0, help="Bessel order")
    p.add_argument("--p", type=int, default=None, help="Laguerre degree")
    p.add_argument("--lag-alpha", type=float, default=0.5, help="Laguerre alpha")
    p.add_argument("--count", type=int, default=5)

    p = sub.add_parser("eigen", help="tabulate comoving eigenmodes")
    _add_common(p)
    p.add_argument("--geometry", choices=("sphere", "cube"), required=True)
    p.add_argument("--potential-class", choices=("free", "oscillator"), default="free")
    p.add_argument("--r0", type=float, default=None)
    p.add_argument("--x0", type=float, default=None)
    p.add_argument("--nmax", type=int, default=3)
    p.add_argument("--lmax", type=int, default=2)

    p = sub.add_parser("phase", help="Dirac phase on a (t, r) grid")
    _add_common(p)
    _add_traj(p)
    p.add_argument("--t", type=_float_list, default=[0.0])
    p.add_argument("--r", type=_float_list, default=[1.0])

    p = sub.add_parser("potential", help="tabulate lab and comoving potentials")
    _add_common(p)
    _add_traj(p)
    p.add_argument("--kind", choices=("sta", "lab-static"), default="sta")
    p.add_argument("--vtilde", choices=("zero", "harmonic", "inverse-square"), default="zero")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--cutoff", type=float, default=1e-6)
    p.add_argument("--t", type=_float_list, default=[0.0])
    p.add_argument("--rmax", type=float, default=1.0)
    p.add_argument("--nr", type=int, default=11)

    p = sub.add_parser("propagate", help="propagate a mode in the comoving frame")
    _add_common(p)
    _add_mode(p, require_size=False)
    _add_traj(p)
    p.add_argument("--potential", choices=("sta", "lab-static", "none"), default=None)
    p.add_argument("--sta", action="store_true", help="shorthand for --potential sta")
    p.add_argument("--N", type=int, default=1024)
    p.add_argument("--dtau", type=float, default=1e-3)
    p.add_argument("--tau-end", type=float, default=None, help="default: tau at which a doubles")
    p.add_argument("--record-every", type=int, default=100)
    p.add_argument("--snapshots", default=None, help="CSV file for recorded wave fields")

    p = sub.add_parser("verify", help="run named check suites, JSON report")
    _add_common(p)
    p.add_argument("--suite", choices=("tise", "lab-tdse", "sta", "dirac-fit", "all"), default="all")
    p.add_argument("--r0", type=float, default=1.0)
    p.set_defaults(fmt="json")
    return parser


def read_config_file(path) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"bad config line: {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config is None or not argv or argv[0] not in SUBCOMMANDS:
        return
    sub = _subparser(parser, argv[0])
    values = read_config_file(known.config)
    dests = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        key = {"format": "fmt"}.get(key, key)
        if key not in dests:
            raise UsageError(f"unknown config key {key!r}")
        action = dests[key]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            defaults[key] = action.type(raw)
        else:
            defaults[key] = raw
        action.required = False
    sub.set_defaults(**defaults)


def parse_args(argv=None) -> RunConfig:
    """Parse and validate; usage problems exit with status 2."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
    except (UsageError, OSError, ValueError) as exc:
        parser.error(str(exc))
    ns = parser.parse_args(argv)
    try:
        units = Units(ns.hbar, ns.mass)
        _validate(ns)
    except (UsageError, ValueError) as exc:
        _subparser(parser, ns.subcommand).error(str(exc))
    opts = {k: v for k, v in vars(ns).items() if k not in ("subcommand", "hbar", "mass", "fmt", "output", "config")}
    return RunConfig(ns.subcommand, units, opts, ns.fmt, ns.output)


def _validate(ns):
    cmd = ns.subcommand
    if cmd == "zeros":
        if ns.family == "laguerre" and ns.p is None:
            raise UsageError("--p is required for --family laguerre")
        if ns.count < 1:
            raise UsageError("--count must be >= 1")
    if cmd in ("eigen", "propagate"):
        if ns.geometry == "sphere" and ns.r0 is None:
            raise UsageError("--r0 is required for sphere geometry")
        if ns.geometry == "cube" and ns.x0 is None:
            raise UsageError("--x0 is required for cube geometry")
        if ns.geometry == "cube" and ns.potential_class == "oscillator":
            raise UsageError("the oscillator class lives in a sphere, not a cube")
        for name in ("r0", "x0"):
            value = getattr(ns, name)
            if value is not None and not value > 0:
                raise UsageError(f"--{name} must be positive")
    if cmd == "propagate":
        if ns.potential_class != "oscillator" and ns.s is not None:
            raise UsageError("--s only applies to --potential-class oscillator")
        if ns.sta and ns.potential not in (None, "sta"):
            raise UsageError("--sta conflicts with --potential " + ns.potential)
        if ns.N < 16 or not ns.dtau > 0:
            raise UsageError("need --N >= 16 and --dtau > 0")
    if hasattr(ns, "traj"):
        _validate_traj(ns)


def _validate_traj(ns):
    kind = ns.traj
    needs = {"constant-alpha": ["alpha"], "friedmann": ["t0"], "tabulated": ["table"], "uniform": ["v"]}
    owned = {"v": "uniform", "alpha": "constant-alpha", "v0": "constant-alpha", "t0": "friedmann", "table": "tabulated"}
    for name in needs.get(kind, []):
        if getattr(ns, name) is None:
            raise UsageError(f"--{name} is required for --traj {kind}")
    for name, owner in owned.items():
        if getattr(ns, name) is not None and owner != kind:
            raise UsageError(f"--{name.replace('_', '-')} conflicts with --traj {kind}")


# -- commands ------------------------------------------------------------------


def make_traj(c: RunConfig):
    t_min = c.t_min
    t_max = c.t_max
    if c.traj == "static":
        return make_uniform(c.a0, 0.0, t_min or 0.0, t_max)
    if c.traj == "uniform":
        return make_uniform(c.a0, c.v, t_min or 0.0, t_max)
    if c.traj == "constant-alpha":
        return make_constant_alpha(c.alpha, c.a0, c.v0 or 0.0, t_max=t_max or 10.0, t_min=t_min or 0.0)
    if c.traj == "friedmann":
        return make_friedmann_flat(c.t0, t_min, math.inf if t_max is None else t_max)
    return load_tabulated_csv(c.table)


def cmd_zeros(c: RunConfig):
    if c.family == "bessel":
        table = spherical_bessel_zeros(c.l, c.count)
    else:
        table = assoc_laguerre_zeros(c.p, c.lag_alpha)
    write_table(["index", "root"], [(i + 1, r) for i, r in enumerate(table.roots[: c.count])], c)
    return 0


def cmd_eigen(c: RunConfig):
    rows = []
    if c.geometry == "cube":
        for n in range(1, c.nmax + 1):
            for l in range(1, c.nmax + 1):
                for m in range(1, c.nmax + 1):
                    mode = cube_free_mode(n, l, m, c.x0, c.units)
                    rows.append((n, l, m, mode.energy, mode.parity))
        write_table(["n", "l", "m", "E", "parity"], rows, c)
        return 0
    if c.potential_class == "free":
        for l in range(c.lmax + 1):
            for n in range(1, c.nmax + 1):
                mode = sphere_free_mode(n, l, 0, c.r0, c.units)
                rows.append((n, l, mode.k, mode.energy, 2 * l + 1))
        write_table(["n", "l", "k", "E", "degeneracy"], rows, c)
        return 0
    for l in range(c.lmax + 1):
        for n in range(l + 2, l + 2 * c.nmax + 1, 2):
            for s in range(1, (n - l) // 2 + 1):
                mode = sphere_oscillator_mode(n, l, 0, s, c.r0, c.units)
                rows.append((n, l, s, mode.k, mode.omega, mode.energy, 2 * l + 1))
    write_table(["n", "l", "s", "k", "omega", "E", "degeneracy"], rows, c)
    return 0


def cmd_phase(c: RunConfig):
    traj = make_traj(c)
    rows = []
    for t in c.t:
        s = traj.sample(t)
        for r in c.r:
            rows.append((t, r, s.a, s.H, float(dirac_phase(c.units.mass, s.H, r, c.units.hbar))))
    write_table(["t", "r", "a", "H", "gamma"], rows, c)
    return 0


def cmd_potential(c: RunConfig):
    traj = make_traj(c)
    vt = {
        "zero": zero_potential,
        "harmonic": HarmonicPotential(c.omega, c.units.mass),
        "inverse-square": InverseSquarePotential(c.c, c.cutoff),
    }[c.vtilde]
    if c.kind == "sta":
        spec = build_sta_potential(vt, traj, c.units)
    else:
        spec = lab_static_potential(vt, traj, c.units)
    rows = []
    radii = np.linspace(0.0, c.rmax, c.nr)
    pos = np.zeros((radii.size, 3))
    pos[:, 2] = radii
    for t in c.t:
        a = traj.a(t)
        V = spec.lab_potential(pos, t)
        U = comoving_effective_potential(spec, pos / a, t)
        rows.extend((t, r, r / a, v, u) for r, v, u in zip(radii, V, U))
    write_table(["t", "r", "X", "V_lab", "U_comoving"], rows, c)
    return 0


def _make_mode(c: RunConfig):
    m = 0 if c.m is None else c.m
    if c.geometry == "cube":
        l = c.l if c.l >= 1 else 1
        return cube_free_mode(c.n, l, m if m >= 1 else 1, c.x0, c.units)
    if c.potential_class == "oscillator":
        return sphere_oscillator_mode(c.n, c.l, m, 1 if c.s is None else c.s, c.r0, c.units)
    return sphere_free_mode(c.n, c.l, m, c.r0, c.units)


def cmd_propagate(c: RunConfig):
    from qlab.verifier import fidelity_trace

    traj = make_traj(c)
    mode = _make_mode(c)
    kind = "sta" if c.sta else (c.potential or "sta")
    if kind == "sta":
        spec = build_sta_potential(mode.v_tilde, traj, c.units)
    elif kind == "lab-static":
        spec = lab_static_potential(mode.v_tilde, traj, c.units)
    else:
        spec = custom_potential(lambda x, t: zero_potential(x), traj, c.units)
    tau_end = c.tau_end
    if tau_end is None:
        tau_end = traj.tau(t_at_scale(traj, 2.0 * traj.a(traj.t_min)))
    trace = fidelity_trace(mode, traj, spec, c.N, tau_end, c.dtau, record_every=c.record_every)
    rows = []
    for i, tau in enumerate(trace.taus):
        rows.append((
            tau, traj.t_of_tau(tau), trace.energies[i], trace.fidelity[i],
            trace.phase_error[i], trace.state_error[i],
        ))
    write_table(["tau", "t", "energy", "fidelity", "phase_error", "state_error"], rows, c)
    if c.snapshots:
        _write_snapshots(mode, spec, traj, c, tau_end)
    sys.stderr.write(f"steps={trace.steps} norm_drift={trace.norm_drift:.3e}\n")
    return 0


def _write_snapshots(mode, spec, traj, c, tau_end):
    grid = grid_for_mode(mode, c.N)
    rows = []

    def keep(f):
        rows.extend((f.tau, x, v.real, v.imag) for x, v in zip(f.grid.points, f.values))

    propagate(discretize_mode(mode, grid), spec, traj, tau_end, c.dtau,
              record_every=c.record_every, observer=keep)
    lines = ["tau,X,re,im"] + [",".join(fmt_csv(v) for v in row) for row in rows]
    _emit("\n".join(lines) + "\n", c.snapshots)


def cmd_verify(c: RunConfig):
    from qlab.suites import run_suites

    workers = int(os.environ.get("QLAB_THREADS", "1") or 1)
    report = run_suites([c.suite], c.units, c.r0, workers=max(1, workers))
    _emit(to_json(report) + "\n", c.output)
    return 0 if report["passed"] else 1


COMMANDS = {
    "zeros": cmd_zeros,
    "eigen": cmd_eigen,
    "phase": cmd_phase,
    "potential": cmd_potential,
    "propagate": cmd_propagate,
    "verify": cmd_verify,
}


def run(config: RunConfig) -> int:
    """Execute a parsed config; numeric failures become a JSON error record."""
    try:
        return COMMANDS[config.subcommand](config)
    except NUMERIC_ERRORS as exc:
        return _error_record(exc, 1)
    except (ValueError, OSError) as exc:
        # parameter out of range or unreadable input: a usage problem
        return _error_record(exc, 2)


def _error_record(exc, status):
    record = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    sys.stderr.write(to_json(record) + "\n")
    return status


def main(argv=None) -> int:
    return run(parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
