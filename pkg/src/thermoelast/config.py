"""Run configuration: a flat, line-oriented `key = value` format.

Lines are `key = value`, `#` starts a comment (whole-line or trailing), and
blank lines are skipped.  Every key has a default, unknown and duplicate keys
are hard errors, and every parse failure reports the offending line number.
`serialize_config` emits a canonical text that parses back to an equal
config, byte-identical for identical inputs.

Keys and defaults:

    scenario               = small-mixed     initial-data family
    d                      = 2               spatial dimension (2 or 3)
    n                      = 0               grid points per axis (0 = auto)
    length                 = 2*pi            box edge length
    epsilon                = 0               amplitude (0 = scenario default)
    theta_baseline         = 1               background temperature
    seed                   = 0               RNG seed for randomized scenarios
    mu                     = 1               coupling strength (> 0)
    operator               = auto            auto | laplacian | lame
    zeta                   = 1               elastic shear coefficient (> 0)
    lame_lambda            = 0.5             elastic second coefficient
    dt                     = 0.001           time step (> 0)
    t_end                  = 1               final time (multiple of dt)
    dealias                = true            2/3-rule products
    positivity_floor       = 1e-10           abort threshold for min(theta)
    record_every           = 1               diagnostics cadence in steps
    clamp_theta            = false           clamp instead of abort (debug)
    deterministic_reduction = true           fixed-order quadrature sums
    product_band           = 0               0: 2/3-rule products; B > 0:
                                             exact Galerkin truncation to the
                                             mode cube |k|_inf <= B
    out_dir                = out             artifact directory

`operator = auto` resolves against the scenario name: `lame-*` scenarios get
the elastic operator, everything else the Laplacian.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dynamics import ModelParams, StepperConfig, OPERATOR_KINDS
from .scenarios import SCENARIO_NAMES, ScenarioSpec, scenario_default_operator

__all__ = ["ConfigError", "RunConfig", "parse_config", "serialize_config", "load_config"]


class ConfigError(ValueError):
    """Malformed or invalid configuration text."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run description: what to simulate, how, and where."""

    scenario: ScenarioSpec
    params: ModelParams
    stepper: StepperConfig
    out_dir: str = "out"


_DEFAULTS: dict[str, object] = {
    "scenario": "small-mixed",
    "d": 2,
    "n": 0,
    "length": 6.283185307179586,
    "epsilon": 0.0,
    "theta_baseline": 1.0,
    "seed": 0,
    "mu": 1.0,
    "operator": "auto",
    "zeta": 1.0,
    "lame_lambda": 0.5,
    "dt": 1e-3,
    "t_end": 1.0,
    "dealias": True,
    "positivity_floor": 1e-10,
    "record_every": 1,
    "clamp_theta": False,
    "deterministic_reduction": True,
    "product_band": 0,
    "out_dir": "out",
}

_INT_KEYS = frozenset({"d", "n", "seed", "record_every", "product_band"})
_FLOAT_KEYS = frozenset(
    {"length", "epsilon", "theta_baseline", "mu", "zeta", "lame_lambda", "dt", "t_end", "positivity_floor"}
)
_BOOL_KEYS = frozenset({"dealias", "clamp_theta", "deterministic_reduction"})


def _convert(key: str, raw: str, line: int) -> object:
    if key in _INT_KEYS:
        try:
            return int(raw, 10)
        except ValueError:
            raise ConfigError(f"{key} expects an integer, got {raw!r}", line) from None
    if key in _FLOAT_KEYS:
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key} expects a number, got {raw!r}", line) from None
    if key in _BOOL_KEYS:
        if raw == "true":
            return True
        if raw == "false":
            return False
        raise ConfigError(f"{key} expects true or false, got {raw!r}", line)
    return raw


def _scan(text: str) -> tuple[dict[str, object], dict[str, int]]:
    """Parse text into {key: typed value} plus the line each key came from."""
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        body = raw_line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected `key = value`, got {raw_line.strip()!r}", lineno)
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _DEFAULTS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", lineno)
        values[key] = _convert(key, raw, lineno)
        lines[key] = lineno
    return values, lines


def _require(cond: bool, message: str, key: str, lines: dict[str, int]) -> None:
    if not cond:
        raise ConfigError(message, lines.get(key))


def parse_config(text: str) -> RunConfig:
    """Parse configuration text; see the module docstring for the grammar."""
    values, lines = _scan(text)
    cfg = dict(_DEFAULTS)
    cfg.update(values)

    _require(cfg["scenario"] in SCENARIO_NAMES,
             f"unknown scenario {cfg['scenario']!r}; know {', '.join(SCENARIO_NAMES)}",
             "scenario", lines)
    _require(cfg["d"] in (2, 3), f"d must be 2 or 3, got {cfg['d']}", "d", lines)
    _require(cfg["n"] == 0 or (cfg["n"] >= 4 and cfg["n"] % 2 == 0),
             f"n must be 0 (auto) or even and >= 4, got {cfg['n']}", "n", lines)
    _require(cfg["length"] > 0, f"length must be > 0, got {cfg['length']}", "length", lines)
    _require(cfg["epsilon"] >= 0, f"epsilon must be >= 0, got {cfg['epsilon']}", "epsilon", lines)
    _require(cfg["theta_baseline"] > 0,
             f"theta_baseline must be > 0, got {cfg['theta_baseline']}", "theta_baseline", lines)
    _require(cfg["seed"] >= 0, f"seed must be >= 0, got {cfg['seed']}", "seed", lines)
    _require(cfg["mu"] > 0, f"mu must be > 0, got {cfg['mu']}", "mu", lines)
    _require(cfg["operator"] in ("auto",) + OPERATOR_KINDS,
             f"operator must be auto, laplacian, or lame, got {cfg['operator']!r}", "operator", lines)
    _require(cfg["zeta"] > 0, f"zeta must be > 0, got {cfg['zeta']}", "zeta", lines)
    _require(cfg["dt"] > 0, f"dt must be > 0, got {cfg['dt']}", "dt", lines)
    _require(cfg["t_end"] >= 0, f"t_end must be >= 0, got {cfg['t_end']}", "t_end", lines)
    _require(cfg["positivity_floor"] > 0,
             f"positivity_floor must be > 0, got {cfg['positivity_floor']}", "positivity_floor", lines)
    _require(cfg["record_every"] >= 1,
             f"record_every must be >= 1, got {cfg['record_every']}", "record_every", lines)
    _require(cfg["product_band"] >= 0,
             f"product_band must be >= 0, got {cfg['product_band']}", "product_band", lines)
    _require(not (cfg["product_band"] and not cfg["dealias"]),
             "product_band requires dealias = true", "product_band", lines)
    _require(bool(str(cfg["out_dir"])), "out_dir must be non-empty", "out_dir", lines)

    operator = cfg["operator"]
    if operator == "auto":
        operator = scenario_default_operator(str(cfg["scenario"]))

    n_ratio = cfg["t_end"] / cfg["dt"]
    steps = round(n_ratio)
    if abs(cfg["t_end"] - steps * cfg["dt"]) > 1e-12 * max(1.0, abs(cfg["t_end"])):
        raise ConfigError(
            f"t_end ({cfg['t_end']!r}) must be an integer multiple of dt ({cfg['dt']!r})",
            lines.get("t_end", lines.get("dt")),
        )

    if operator == "lame":
        two_zeta = 2.0 * cfg["zeta"] + cfg["d"] * cfg["lame_lambda"]
        if not two_zeta > 0.0:
            raise ConfigError(
                f"elastic coefficients need 2*zeta + d*lame_lambda > 0, got {two_zeta!r} for d={cfg['d']}",
                lines.get("lame_lambda", lines.get("zeta")),
            )
        if not 2.0 * cfg["zeta"] + cfg["lame_lambda"] > 0.0:
            raise ConfigError(
                f"elastic coefficients need 2*zeta + lame_lambda > 0, "
                f"got {2.0 * cfg['zeta'] + cfg['lame_lambda']!r}",
                lines.get("lame_lambda", lines.get("zeta")),
            )

    try:
        scenario = ScenarioSpec(
            name=str(cfg["scenario"]),
            d=int(cfg["d"]),
            n=int(cfg["n"]),
            length=float(cfg["length"]),
            epsilon=float(cfg["epsilon"]),
            theta_baseline=float(cfg["theta_baseline"]),
            seed=int(cfg["seed"]),
        )
        params = ModelParams(
            mu=float(cfg["mu"]),
            operator=operator,
            zeta=float(cfg["zeta"]),
            lame_lambda=float(cfg["lame_lambda"]),
        )
        params.validate_for_dimension(scenario.d)
        stepper = StepperConfig(
            dt=float(cfg["dt"]),
            t_end=float(cfg["t_end"]),
            dealias=bool(cfg["dealias"]),
            positivity_floor=float(cfg["positivity_floor"]),
            record_every=int(cfg["record_every"]),
            clamp_theta=bool(cfg["clamp_theta"]),
            deterministic_reduction=bool(cfg["deterministic_reduction"]),
            product_band=int(cfg["product_band"]),
        )
    except ValueError as exc:  # fallback: constraints not caught key-by-key above
        raise ConfigError(str(exc)) from exc
    return RunConfig(scenario=scenario, params=params, stepper=stepper, out_dir=str(cfg["out_dir"]))


def _fmt(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)  # shortest exact round-trip
    return str(value)


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form; parse_config(serialize_config(c)) equals c."""
    sc, p, st = cfg.scenario, cfg.params, cfg.stepper
    pairs = [
        ("scenario", sc.name),
        ("d", sc.d),
        ("n", sc.n),
        ("length", sc.length),
        ("epsilon", sc.epsilon),
        ("theta_baseline", sc.theta_baseline),
        ("seed", sc.seed),
        ("mu", p.mu),
        ("operator", p.operator),
        ("zeta", p.zeta),
        ("lame_lambda", p.lame_lambda),
        ("dt", st.dt),
        ("t_end", st.t_end),
        ("dealias", st.dealias),
        ("positivity_floor", st.positivity_floor),
        ("record_every", st.record_every),
        ("clamp_theta", st.clamp_theta),
        ("deterministic_reduction", st.deterministic_reduction),
        ("product_band", st.product_band),
        ("out_dir", cfg.out_dir),
    ]
    return "".join(f"{key} = {_fmt(value)}\n" for key, value in pairs)


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
