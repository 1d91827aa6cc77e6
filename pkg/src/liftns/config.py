"""Flat ``key = value`` experiment configuration.

One assignment per line, ``#`` starts a comment, unknown keys are errors and
missing keys take the defaults below. ``amplitude = auto`` picks the
Taylor-Green amplitude whose initial ``||u||^2_{L2}`` equals 1.25 on the
configured torus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .lift import LIFT_MODES, NORM_KINDS, RATE_MODES

INITIAL_ENERGY = 1.25


class ConfigError(ValueError):
    def __init__(self, message, line=None, field=None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line
        self.field = field


@dataclass(frozen=True)
class ExperimentConfig:
    grid_n: int = 32
    period: float = 2.0 * math.pi
    nu: float = 0.01
    dt: float = 1e-3
    T: float = 5.0
    amplitude: float | None = None
    rate_mode: str = "constant"
    r0: float = 2.0
    r1: float = 0.0
    norm_kind: str = "grad-L2"
    r_min: float = 0.1
    r_max: float = 10.0
    lift_mode: str = "locked"
    dtau: float | None = None
    sample_every: int = 1
    table_rows: int = 5
    output_dir: str = "out"
    seed: int = 0
    energy_convention: str = "full"
    pq: tuple = ((4.0, 6.0),)

    def __post_init__(self):
        validate(self)

    @property
    def tg_amplitude(self) -> float:
        if self.amplitude is not None:
            return self.amplitude
        # ||u||^2 = A^2 L^3 / 4 for the Taylor-Green field on a box of side L.
        return math.sqrt(4.0 * INITIAL_ENERGY / self.period**3)

    def with_(self, **changes) -> ExperimentConfig:
        return replace(self, **changes)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            lines.append(f"{f.name} = {_format(f.name, getattr(self, f.name))}")
        return "\n".join(lines) + "\n"


def _format(name, value):
    if value is None:
        return "auto"
    if name == "pq":
        return "; ".join(f"{_num(p)},{_num(q)}" for p, q in value)
    if isinstance(value, float):
        return _num(value)
    return str(value)


def _num(x: float) -> str:
    return repr(float(x))


def _positive(cfg, name):
    v = getattr(cfg, name)
    if not (v > 0 and math.isfinite(v)):
        raise ConfigError(f"{name} must be positive and finite", field=name)


def validate(cfg: ExperimentConfig) -> None:
    if cfg.grid_n % 2:
        raise ConfigError("grid_n must be even", field="grid_n")
    if cfg.grid_n < 8:
        raise ConfigError("grid_n must be >= 8", field="grid_n")
    for name in ("period", "nu", "dt", "r_min", "r_max"):
        _positive(cfg, name)
    if not (cfg.T >= 0 and math.isfinite(cfg.T)):
        raise ConfigError("T must be nonnegative and finite", field="T")
    if cfg.amplitude is not None and not (cfg.amplitude >= 0 and math.isfinite(cfg.amplitude)):
        raise ConfigError("amplitude must be nonnegative", field="amplitude")
    if cfg.dtau is not None:
        _positive(cfg, "dtau")
    if cfg.rate_mode == "constant":
        _positive(cfg, "r0")
    elif not math.isfinite(cfg.r0):
        raise ConfigError("r0 must be finite", field="r0")
    if not math.isfinite(cfg.r1):
        raise ConfigError("r1 must be finite", field="r1")
    if cfg.rate_mode not in RATE_MODES:
        raise ConfigError(f"rate_mode must be one of {', '.join(RATE_MODES)}", field="rate_mode")
    if cfg.norm_kind not in NORM_KINDS:
        raise ConfigError(f"norm_kind must be one of {', '.join(NORM_KINDS)}", field="norm_kind")
    if cfg.lift_mode not in LIFT_MODES:
        raise ConfigError(f"lift_mode must be one of {', '.join(LIFT_MODES)}", field="lift_mode")
    if not cfg.r_min <= cfg.r_max:
        raise ConfigError("need 0 < r_min <= r_max", field="r_min")
    if cfg.rate_mode == "constant" and not cfg.r_min <= cfg.r0 <= cfg.r_max:
        raise ConfigError("r0 must lie in [r_min, r_max]", field="r0")
    if cfg.sample_every < 1:
        raise ConfigError("sample_every must be >= 1", field="sample_every")
    if cfg.table_rows < 1:
        raise ConfigError("table_rows must be >= 1", field="table_rows")
    if cfg.energy_convention not in ("full", "half"):
        raise ConfigError("energy_convention must be full or half", field="energy_convention")
    if not cfg.pq:
        raise ConfigError("pq needs at least one (p, q) pair", field="pq")
    for p, q in cfg.pq:
        if not (p >= 1 and q >= 1 and math.isfinite(p) and math.isfinite(q)):
            raise ConfigError("pq exponents must be finite and >= 1", field="pq")


def _parse_int(text):
    return int(text)


def _parse_float(text):
    value = float(text)
    if math.isnan(value):
        raise ValueError("nan")
    return value


def _parse_optional_float(text):
    return None if text.lower() == "auto" else _parse_float(text)


def _parse_pq(text):
    pairs = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        p, q = (s.strip() for s in chunk.split(","))
        pairs.append((_parse_float(p), _parse_float(q)))
    return tuple(pairs)


_PARSERS = {
    "grid_n": _parse_int,
    "period": _parse_float,
    "nu": _parse_float,
    "dt": _parse_float,
    "T": _parse_float,
    "amplitude": _parse_optional_float,
    "rate_mode": str,
    "r0": _parse_float,
    "r1": _parse_float,
    "norm_kind": str,
    "r_min": _parse_float,
    "r_max": _parse_float,
    "lift_mode": str,
    "dtau": _parse_optional_float,
    "sample_every": _parse_int,
    "table_rows": _parse_int,
    "output_dir": str,
    "seed": _parse_int,
    "energy_convention": str,
    "pq": _parse_pq,
}


def parse_config_text(text: str) -> ExperimentConfig:
    values = {}
    where = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"unknown key {key!r}", line=lineno, field=key)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", line=lineno, field=key)
        try:
            values[key] = _PARSERS[key](value)
        except ValueError:
            raise ConfigError(f"bad value {value!r} for {key}", line=lineno, field=key) from None
        where[key] = lineno
    try:
        return ExperimentConfig(**values)
    except ConfigError as e:
        raise ConfigError(str(e), line=where.get(e.field), field=e.field) from None


def parse_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())
