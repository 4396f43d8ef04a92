"""Command-line entry point: ``kuramoto2c <command> [flags]``.

Every command resolves its flags (over an optional ``--config`` JSON file and
an optional figure ``--preset``) into a :class:`RunConfig`, validates it, runs
it and writes a CSV artifact whose header echoes the resolved configuration.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure (or a
failing ``verify`` suite), 4 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from ..errors import ConvergenceError, DomainError, NotApplicable
from . import csvio
from .config import COMMANDS, PRESETS, SUITES, RunConfig, apply_preset

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4
THREADS_ENV = "KURAMOTO2C_THREADS"


class _IOFailure(Exception):
    pass


# --------------------------------------------------------------------------- parsing

def _common(p: argparse.ArgumentParser):
    g = p.add_argument_group("common options")
    g.add_argument("--config", metavar="PATH", help="JSON run configuration; flags override its params")
    g.add_argument("--preset", metavar="NAME", help=f"figure preset ({', '.join(sorted(PRESETS))})")
    g.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    g.add_argument("--seed", type=int, metavar="U64", help="random seed (default 0)")
    g.add_argument("--threads", type=int, metavar="N",
                   help=f"worker threads (fallback: ${THREADS_ENV}; default 1)")


def _disorder_flags(p):
    p.add_argument("--disorder", metavar="KIND|JSON",
                   help="point_mass_zero, bimodal, discretized_gaussian, or a JSON object")
    p.add_argument("--omega0", type=float, help="bimodal frequency (with --disorder bimodal)")
    p.add_argument("--sigma", type=float, help="Gaussian width (with --disorder discretized_gaussian)")
    p.add_argument("--n-nodes", type=int, help="Gaussian node count, odd")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kuramoto2c",
        description="Two-community noisy Kuramoto model: fixed points, bifurcation line, "
                    "phase diagram, disorder thresholds, particle and mean-field simulation.",
        epilog="Exit codes: 0 ok, 2 invalid configuration, 3 numerical failure, 4 I/O failure.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("run", help="run a JSON configuration file (needs --config)")
    _common(p)

    p = sub.add_parser("solve", help="all fixed points (or the vector field) for symmetric couplings")
    _common(p)
    p.add_argument("--K", type=float, nargs="+", help="intra-community coupling(s)")
    p.add_argument("--L", type=float, help="inter-community coupling")
    p.add_argument("--psi", help="phase offset: 0 or pi")
    p.add_argument("--grid", type=int, help="Newton seed lattice size (default 64)")
    p.add_argument("--field-n", type=int, help="emit the vector field on an n x n grid instead")

    p = sub.add_parser("bifurcation-line", help="K*(L), r*, and slopes along the bifurcation line")
    _common(p)
    p.add_argument("--l-min", type=float)
    p.add_argument("--l-max", type=float)
    p.add_argument("--points", type=int)

    p = sub.add_parser("phase-diagram", help="region labels U/S/NS on a (K, L) grid")
    _common(p)
    p.add_argument("--k-min", type=float)
    p.add_argument("--k-max", type=float)
    p.add_argument("--l-min", type=float)
    p.add_argument("--l-max", type=float)
    p.add_argument("--resolution", type=int)
    p.add_argument("--psi", nargs="+", help="phase offset(s): 0 and/or pi")

    p = sub.add_parser("disorder-threshold", help="critical threshold and symmetric level under disorder")
    _common(p)
    p.add_argument("--K", type=float, nargs="+")
    p.add_argument("--L", type=float)
    p.add_argument("--psi")
    _disorder_flags(p)

    p = sub.add_parser("simulate", help="Euler-Maruyama particle simulation")
    _common(p)
    p.add_argument("--N", type=int, help="oscillators per community")
    p.add_argument("--K", type=float)
    p.add_argument("--L", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--initial", type=float, nargs=4, metavar=("MEAN1", "KAPPA1", "MEAN2", "KAPPA2"),
                   help="von Mises initial laws per community")
    p.add_argument("--record-every", type=int)
    _disorder_flags(p)

    p = sub.add_parser("pde-evolve", help="Fourier-spectral mean-field evolution")
    _common(p)
    p.add_argument("--K", type=float)
    p.add_argument("--L", type=float)
    p.add_argument("--D", type=float)
    p.add_argument("--M", type=int, help="Fourier truncation (>= 32)")
    p.add_argument("--dt", type=float, help="time step (default: the stability limit)")
    p.add_argument("--t-end", type=float)
    p.add_argument("--initial", type=float, nargs=4, metavar=("MEAN1", "KAPPA1", "MEAN2", "KAPPA2"))
    p.add_argument("--record-every", type=int)
    p.add_argument("--dump", metavar="PATH", help="write the final Fourier coefficients as JSON")
    _disorder_flags(p)

    p = sub.add_parser("verify", help="run an invariant suite and print a pass/fail table")
    _common(p)
    p.add_argument("--suite", choices=SUITES)
    return parser


_FLAG_PARAMS = {
    "K": "K", "L": "L", "psi": "psi", "grid": "grid", "field_n": "field_n",
    "l_min": "l_min", "l_max": "l_max", "points": "points", "k_min": "k_min", "k_max": "k_max",
    "resolution": "resolution", "N": "N", "dt": "dt", "steps": "steps", "record_every": "record_every",
    "D": "D", "M": "M", "t_end": "t_end", "dump": "dump", "suite": "suite",
}


def _disorder_from_flags(ns):
    raw = getattr(ns, "disorder", None)
    extra = {k: getattr(ns, k, None) for k in ("omega0", "sigma", "n_nodes")}
    extra = {k: v for k, v in extra.items() if v is not None}
    if raw is None:
        if extra:
            raise DomainError("--omega0/--sigma/--n-nodes need --disorder")
        return None
    if raw.lstrip().startswith("{"):
        try:
            d = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise DomainError(f"--disorder is not valid JSON: {exc}") from None
    else:
        d = {"kind": raw}
    return {**d, **extra}


def _flag_params(ns) -> dict:
    params = {}
    for attr, key in _FLAG_PARAMS.items():
        val = getattr(ns, attr, None)
        if val is not None:
            params[key] = val
    init = getattr(ns, "initial", None)
    if init is not None:
        params["initial"] = [[init[0], init[1]], [init[2], init[3]]]
    dis = _disorder_from_flags(ns)
    if dis is not None:
        params["disorder"] = dis
    return params


def _read_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _IOFailure(f"cannot read config {path}: {exc}") from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(d, dict):
        raise DomainError("a run configuration must be a JSON object")
    return d


def resolve_config(ns) -> RunConfig:
    """Merge preset < config file < flags into a validated RunConfig."""
    base = _read_config_file(ns.config) if ns.config else {}
    unknown = sorted(set(base) - {"command", "params", "seed", "out", "preset"})
    if unknown:
        raise DomainError(f"unknown configuration key(s): {unknown}")
    command = base.get("command")
    if ns.command != "run":
        if command is not None and command != ns.command:
            raise DomainError(f"config is for '{command}', not '{ns.command}'")
        command = ns.command
    elif not ns.config:
        raise DomainError("'run' needs --config")
    params = dict(base.get("params") or {})
    preset = ns.preset or base.get("preset")
    if preset is not None:
        command, params = apply_preset(preset, command, params)
    params.update(_flag_params(ns))
    if command is None:
        raise DomainError("configuration needs a 'command'")
    seed = ns.seed if ns.seed is not None else base.get("seed", 0)
    out = ns.out if ns.out is not None else base.get("out")
    return RunConfig(command=command, params=params, seed=seed, out=out)


def resolve_threads(flag) -> int:
    """--threads, else $KURAMOTO2C_THREADS, else 1."""
    if flag is not None:
        value = flag
    else:
        env = os.environ.get(THREADS_ENV)
        if env is None or env.strip() == "":
            return 1
        try:
            value = int(env)
        except ValueError:
            raise DomainError(f"{THREADS_ENV} must be a positive integer, got {env!r}") from None
    if value < 1:
        raise DomainError(f"threads must be a positive integer, got {value!r}")
    return value


# --------------------------------------------------------------------------- commands

def _cmd_solve(cfg: RunConfig):
    from ..coupling import SymmetricCoupling
    from ..selfcons import find_all_solutions_many, solution_rows, vector_field_grid

    p = cfg.params
    couplings = [SymmetricCoupling(K, p["L"], p["psi"]) for K in p["K"]]
    if p["field_n"]:
        rows = []
        for c in couplings:
            for r1, r2, v1, v2 in vector_field_grid(c, p["field_n"]):
                rows.append((c.K, c.L, c.psi, r1, r2, v1, v2))
        return ["K", "L", "psi", "r1", "r2", "dr1", "dr2"], rows, {}
    rows = []
    for c, sol in zip(couplings, find_all_solutions_many(couplings, grid=p["grid"])):
        for row in solution_rows(sol):
            rows.append((c.K, c.L, c.psi) + tuple(row))
    return ["K", "L", "psi", "r1", "r2", "kind", "eig1", "eig2", "residual"], rows, {}


def _cmd_bifurcation_line(cfg):
    from ..bifurcation import bifurcation_line

    p = cfg.params
    rows = bifurcation_line(p["l_min"], p["l_max"], p["points"])
    return ["K_star", "L", "r_star", "dr_dK", "dL_dK"], rows, {}


def _cmd_phase_diagram(cfg):
    from ..bifurcation import scan_phase_diagram

    p = cfg.params
    rows = []
    for psi in p["psi"]:
        for row in scan_phase_diagram((p["k_min"], p["k_max"]), (p["l_min"], p["l_max"]),
                                      p["resolution"], psi):
            rows.append((psi,) + tuple(row))
    return ["psi", "K", "L", "region", "r_sym", "r_star"], rows, {}


def _cmd_disorder_threshold(cfg):
    from ..coupling import SymmetricCoupling
    from ..disorder import DisorderSpec, threshold_report

    p = cfg.params
    mu = DisorderSpec.from_dict(p["disorder"])
    rows, flag = [], None
    for K in p["K"]:
        rep = threshold_report(SymmetricCoupling(K, p["L"], p["psi"]), mu)
        flag = rep["flag"]
        rows.append((K, p["L"], p["psi"], mu.kind, rep["chi"], rep["threshold"], rep["gain"], rep["r"]))
    return ["K", "L", "psi", "kind", "chi", "threshold", "gain", "r"], rows, {"note": flag}


def simulation_config(params: dict, seed: int):
    """The :class:`SimulationConfig` a resolved ``simulate`` parameter set describes."""
    from ..coupling import CouplingConfig
    from ..disorder import DisorderSpec
    from ..sde import InitialCondition, SimulationConfig

    init = tuple(InitialCondition(mean=m, concentration=k) for m, k in params["initial"])
    return SimulationConfig(
        N1=params["N"], N2=params["N"], dt=params["dt"], steps=params["steps"], seed=seed,
        couplings=CouplingConfig.symmetric(params["K"], params["L"]), initial=init,
        disorder=DisorderSpec.from_dict(params["disorder"]),
    )


def _cmd_simulate(cfg):
    from ..sde import simulate

    ts = simulate(simulation_config(cfg.params, cfg.seed), record_every=cfg.params["record_every"])
    rows = zip(ts.t, ts.r1, ts.r2, ts.psi1, ts.psi2, ts.valid1, ts.valid2)
    return ["t", "r1", "r2", "psi1", "psi2", "valid1", "valid2"], rows, {}


def _cmd_pde_evolve(cfg):
    from ..coupling import CouplingConfig
    from ..disorder import DisorderSpec
    from ..mckean import DensityField, evolve, max_stable_dt, stationary_residual

    p = cfg.params
    mu = DisorderSpec.from_dict(p["disorder"])
    c = CouplingConfig.symmetric(p["K"], p["L"], D=p["D"])
    (m1, k1), (m2, k2) = p["initial"]
    f0 = DensityField.von_mises(mu, (m1, m2), (k1, k2), M=p["M"])
    dt = p["dt"] if p["dt"] is not None else max_stable_dt(p["M"], p["D"])
    f = evolve(f0, c, mu, dt, p["t_end"], record_every=p["record_every"])
    if p["dump"]:
        try:
            with open(p["dump"], "w", encoding="utf-8") as fh:
                fh.write(f.to_json())
        except OSError as exc:
            raise _IOFailure(f"cannot write {p['dump']}: {exc}") from None
    d = f.diagnostics
    extra = {
        "steps": d["steps"],
        "dt": csvio.fmt(d["dt"]),
        "min_density": csvio.fmt(d["min_density"]),
        "under_resolved": d["under_resolved"],
        "stationary_residual": csvio.fmt(stationary_residual(f, c, mu)),
    }
    return ["t", "r1", "r2", "psi1", "psi2"], d["history"], extra


def _cmd_verify(cfg):
    from .verify import format_table, run_suite

    checks = run_suite(cfg.params["suite"])
    return format_table(checks), all(c.passed for c in checks)


_COMMANDS = {
    "solve": _cmd_solve,
    "bifurcation-line": _cmd_bifurcation_line,
    "phase-diagram": _cmd_phase_diagram,
    "disorder-threshold": _cmd_disorder_threshold,
    "simulate": _cmd_simulate,
    "pde-evolve": _cmd_pde_evolve,
}
assert set(_COMMANDS) | {"verify"} == set(COMMANDS)


def execute(cfg: RunConfig) -> tuple[str, int]:
    """Run ``cfg`` and return (artifact text, exit status)."""
    if cfg.command == "verify":
        text, ok = _cmd_verify(cfg)
        return text, EXIT_OK if ok else EXIT_NUMERICAL
    columns, rows, extra = _COMMANDS[cfg.command](cfg)
    return csvio.render(cfg, columns, rows, extra), EXIT_OK


def _emit(text: str, out):
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise _IOFailure(f"cannot write {out}: {exc}") from None


def run(cfg: RunConfig) -> int:
    """Execute and write the artifact; returns the exit status."""
    text, status = execute(cfg)
    _emit(text, cfg.out)
    return status


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None:
        parser.print_help(sys.stderr)
        return EXIT_INVALID
    try:
        resolve_threads(ns.threads)
        cfg = resolve_config(ns)
        return run(cfg)
    except (DomainError, NotApplicable) as exc:
        print(f"kuramoto2c: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except _IOFailure as exc:
        print(f"kuramoto2c: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConvergenceError, ArithmeticError) as exc:
        print(f"kuramoto2c: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"kuramoto2c: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
