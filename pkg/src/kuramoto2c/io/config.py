"""Run configurations: per-command parameter schemas, presets and JSON round trip."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from ..errors import DomainError

COMMANDS = (
    "solve",
    "bifurcation-line",
    "phase-diagram",
    "disorder-threshold",
    "simulate",
    "pde-evolve",
    "verify",
)
SUITES = ("bessel", "selfcons", "bifurcation", "disorder", "pde", "sde", "all")
SEED_MAX = 2**64 - 1


def _psi(value) -> float:
    """0 or pi; accepts the strings "0" and "pi"."""
    if isinstance(value, str):
        key = value.strip().lower()
        if key in ("pi", "π"):
            return math.pi
        try:
            value = float(key)
        except ValueError:
            raise DomainError(f"phase offset must be 0 or pi, got {value!r}") from None
    value = float(value)
    if value == 0.0 or value == math.pi:
        return value
    raise DomainError(f"phase offset must be exactly 0 or pi, got {value!r}")


def _float(value) -> float:
    if isinstance(value, bool):
        raise DomainError(f"expected a number, got {value!r}")
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise DomainError(f"expected a number, got {value!r}") from None
    if not math.isfinite(out):
        raise DomainError(f"expected a finite number, got {value!r}")
    return out


def _int(value) -> int:
    if isinstance(value, bool):
        raise DomainError(f"expected an integer, got {value!r}")
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    if not isinstance(value, int):
        try:
            value = int(str(value), 10)
        except ValueError:
            raise DomainError(f"expected an integer, got {value!r}") from None
    return value


def _positive_int(value) -> int:
    v = _int(value)
    if v < 1:
        raise DomainError(f"expected a positive integer, got {value!r}")
    return v


def _float_list(value) -> list:
    if isinstance(value, (int, float, str)):
        value = [value]
    out = [_float(v) for v in value]
    if not out:
        raise DomainError("expected at least one value")
    return out


def _psi_list(value) -> list:
    if isinstance(value, (int, float, str)):
        value = [value]
    out = [_psi(v) for v in value]
    if not out:
        raise DomainError("expected at least one phase offset")
    return out


def _initial(value) -> list:
    """Two (mean, concentration) pairs."""
    try:
        pairs = [[_float(m), _float(k)] for m, k in value]
    except (TypeError, ValueError):
        raise DomainError(f"initial must be two [mean, concentration] pairs, got {value!r}") from None
    if len(pairs) != 2:
        raise DomainError("initial needs exactly one [mean, concentration] pair per community")
    for _, k in pairs:
        if k < 0:
            raise DomainError("concentrations must be non-negative")
    return pairs


def _disorder(value) -> dict:
    from ..disorder import DisorderSpec

    if isinstance(value, str):
        value = {"kind": value}
    if not isinstance(value, dict):
        raise DomainError(f"disorder must be an object with a 'kind', got {value!r}")
    spec = DisorderSpec.from_dict(value)  # validates
    return spec.to_dict()


def _optional_str(value):
    if value is None:
        return None
    if not isinstance(value, str):
        raise DomainError(f"expected a string, got {value!r}")
    return value


def _suite(value) -> str:
    if value not in SUITES:
        raise DomainError(f"unknown suite {value!r}; choose from {SUITES}")
    return value


def _simulation_preset(value):
    if value is None:
        return None
    from ..sde import PRESETS

    if value not in PRESETS:
        raise DomainError(f"unknown simulation preset {value!r}")
    return value


# name -> (parser, default); None defaults mean "required" unless listed in OPTIONAL
SCHEMAS = {
    "solve": {
        "K": (_float_list, None),
        "L": (_float, None),
        "psi": (_psi, 0.0),
        "grid": (_positive_int, 64),
        "field_n": (_int, 0),
    },
    "bifurcation-line": {
        "l_min": (_float, -4.0),
        "l_max": (_float, -0.1),
        "points": (_positive_int, 200),
    },
    "phase-diagram": {
        "k_min": (_float, 0.1),
        "k_max": (_float, 8.0),
        "l_min": (_float, -4.0),
        "l_max": (_float, 4.0),
        "resolution": (_positive_int, 81),
        "psi": (_psi_list, [0.0]),
    },
    "disorder-threshold": {
        "K": (_float_list, None),
        "L": (_float, None),
        "psi": (_psi, 0.0),
        "disorder": (_disorder, {"kind": "point_mass_zero"}),
    },
    "simulate": {
        "preset": (_simulation_preset, None),
        "N": (_positive_int, 1000),
        "K": (_float, None),
        "L": (_float, None),
        "dt": (_float, 0.01),
        "steps": (_positive_int, 1000),
        "initial": (_initial, [[0.0, 0.0], [0.0, 0.0]]),
        "disorder": (_disorder, {"kind": "point_mass_zero"}),
        "record_every": (_positive_int, 1),
    },
    "pde-evolve": {
        "K": (_float, None),
        "L": (_float, None),
        "D": (_float, 1.0),
        "M": (_positive_int, 64),
        "dt": (_float, None),
        "t_end": (_float, 50.0),
        "initial": (_initial, [[0.0, 2.0], [0.0, 2.0]]),
        "disorder": (_disorder, {"kind": "point_mass_zero"}),
        "record_every": (_positive_int, 100),
        "dump": (_optional_str, None),
    },
    "verify": {
        "suite": (_suite, "all"),
    },
}
OPTIONAL = {("simulate", "preset"), ("pde-evolve", "dt"), ("pde-evolve", "dump")}

# Figure presets. Parameters named in the figure captions are used verbatim;
# grids, ranges and initial laws the captions leave open are choices.
PRESETS = {
    "fig2": ("solve", {"K": [5.0], "L": -1.0, "psi": 0.0, "field_n": 32}),
    "fig3": ("solve", {"K": [1.0 + 0.25 * i for i in range(29)], "L": -2.0, "psi": 0.0}),
    "fig8": ("phase-diagram", {"k_min": 0.1, "k_max": 10.0, "l_min": -6.0, "l_max": 6.0,
                               "resolution": 121, "psi": [0.0, math.pi]}),
    "fig9": ("simulate", {"preset": "fig9"}),
    "fig10": ("simulate", {"preset": "fig10"}),
}


def _expand_simulation_preset(params: dict) -> dict:
    """Fill the simulation fields a named scenario fixes, without overriding explicit ones."""
    from ..sde import PRESETS as SIM

    name = params.get("preset")
    if name is None:
        return params
    p = SIM[name]
    base = {"N": p["N"], "K": p["K"], "L": p["L"], "dt": p["dt"], "steps": p["steps"],
            "initial": [list(pair) for pair in p["initial"]]}
    return {**base, **params}


def normalize_params(command: str, params: dict) -> dict:
    """Validate ``params`` against the command schema and fill defaults."""
    if command not in SCHEMAS:
        raise DomainError(f"unknown command {command!r}; choose from {COMMANDS}")
    if not isinstance(params, dict):
        raise DomainError("params must be an object")
    schema = SCHEMAS[command]
    unknown = sorted(set(params) - set(schema))
    if unknown:
        raise DomainError(f"unknown parameter(s) for {command}: {unknown}")
    if command == "simulate" and params.get("preset") is not None:
        params = _expand_simulation_preset({**params, "preset": _simulation_preset(params["preset"])})
    out = {}
    for name, (parse, default) in schema.items():
        if params.get(name) is not None:
            out[name] = parse(params[name])
        elif default is not None:
            out[name] = parse(default)
        elif (command, name) in OPTIONAL:
            out[name] = None
        else:
            raise DomainError(f"{command} needs parameter {name!r}")
    _check_command(command, out)
    return out


def _check_command(command, p):
    """Cross-field preconditions, checked before any numerical work."""
    if command in ("solve", "disorder-threshold"):
        if any(k <= 0 for k in p["K"]):
            raise DomainError("K must be positive")
        if p["L"] == 0:
            raise DomainError("L must be non-zero")
    if command == "solve" and p["field_n"] and not (8 <= p["field_n"] <= 512):
        raise DomainError("field_n must be 0 (solutions) or in [8, 512]")
    if command == "bifurcation-line" and not (p["l_min"] <= p["l_max"] < 0):
        raise DomainError("need l_min <= l_max < 0")
    if command == "phase-diagram":
        if not (0 < p["k_min"] <= p["k_max"]):
            raise DomainError("need 0 < k_min <= k_max")
        if p["l_min"] > p["l_max"]:
            raise DomainError("need l_min <= l_max")
        if p["resolution"] > 2048:
            raise DomainError("resolution must not exceed 2048")
    if command in ("simulate", "pde-evolve"):
        if p["K"] <= 0 or p["L"] == 0:
            raise DomainError("need K > 0 and L != 0")
    if command == "simulate":
        if p["N"] < 2:
            raise DomainError("N must be at least 2")
        if not (0 < p["dt"] <= 0.05):
            raise DomainError("dt must lie in (0, 0.05]")
    if command == "pde-evolve":
        from ..mckean import MIN_MODES, max_stable_dt

        if p["D"] <= 0:
            raise DomainError("D must be positive")
        if p["M"] < MIN_MODES:
            raise DomainError(f"M must be >= {MIN_MODES}")
        limit = max_stable_dt(p["M"], p["D"])
        if p["dt"] is not None and not (0 < p["dt"] <= limit):
            raise DomainError(f"dt must lie in (0, {limit}] for M={p['M']}, D={p['D']}")
        if p["t_end"] < 0:
            raise DomainError("t_end must be non-negative")


@dataclass(frozen=True)
class RunConfig:
    """A fully resolved command invocation."""

    command: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise DomainError(f"unknown command {self.command!r}; choose from {COMMANDS}")
        seed = _int(self.seed)
        if not (0 <= seed <= SEED_MAX):
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        object.__setattr__(self, "seed", seed)
        object.__setattr__(self, "out", _optional_str(self.out))
        object.__setattr__(self, "params", normalize_params(self.command, dict(self.params)))

    def to_dict(self) -> dict:
        return {"command": self.command, "params": self.params, "seed": self.seed, "out": self.out}

    def to_json(self) -> str:
        """Canonical single-line JSON (sorted keys), used as the header echo."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise DomainError("a run configuration must be a JSON object")
        unknown = sorted(set(d) - {"command", "params", "seed", "out", "preset"})
        if unknown:
            raise DomainError(f"unknown configuration key(s): {unknown}")
        d = dict(d)
        preset = d.pop("preset", None)
        params = d.get("params") or {}
        command = d.get("command")
        if preset is not None:
            command, params = apply_preset(preset, command, params)
        if command is None:
            raise DomainError("configuration needs a 'command'")
        return cls(command=command, params=params, seed=d.get("seed", 0), out=d.get("out"))

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DomainError(f"configuration is not valid JSON: {exc}") from None
        return cls.from_dict(d)


def apply_preset(name: str, command: str | None, params: dict) -> tuple[str, dict]:
    """Merge explicit ``params`` over a figure preset."""
    if name not in PRESETS:
        raise DomainError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    pcommand, pparams = PRESETS[name]
    if command is not None and command != pcommand:
        raise DomainError(f"preset {name} belongs to '{pcommand}', not '{command}'")
    return pcommand, {**pparams, **params}
