"""Flat run configuration with key=value file parsing and range checks."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Mapping


class ConfigError(ValueError):
    pass


def _rng(lo=None, hi=None, lo_open=False):
    return {"lo": lo, "hi": hi, "lo_open": lo_open}


@dataclass(frozen=True)
class RunConfig:
    # evolution
    master_seed: int = field(default=0, metadata=_rng(0))
    population: int = field(default=100, metadata=_rng(1))
    generations: int = field(default=100, metadata=_rng(0))
    narrowing: str = "auto"
    narrowing_plateau: int = field(default=50, metadata=_rng(1))
    narrowing_factor: float = field(default=0.5, metadata=_rng(0.0, 1.0, lo_open=True))
    elite_fraction: float = field(default=0.1, metadata=_rng(0.0, 1.0, lo_open=True))
    workers: int = field(default=1, metadata=_rng(1))
    # time
    lifetime: float = field(default=300.0, metadata=_rng(0.0, lo_open=True))
    dt: float = field(default=0.01, metadata=_rng(0.0, lo_open=True))
    # world
    n_prey: int = field(default=50, metadata=_rng(1))
    minority_fraction: float = field(default=1 / 3, metadata=_rng(0.0, 1.0))
    cal_high: float = field(default=3.0, metadata=_rng(0.0))
    cal_low: float = field(default=1.0, metadata=_rng(0.0))
    striking_distance: float = field(default=0.15, metadata=_rng(0.0))
    sigma_b: float = field(default=0.5, metadata=_rng(0.0))
    drift_strength: float = field(default=5.0, metadata=_rng(0.0))
    animat_top_speed: float = field(default=1.0, metadata=_rng(0.0, lo_open=True))
    prey_speed_ratio: float = field(default=0.95, metadata=_rng(0.0, 1.0))
    animat_radius: float = field(default=0.02, metadata=_rng(0.0, 0.5, lo_open=True))
    turn_gain: float = field(default=10.0, metadata=_rng(0.0))
    respawn_distance: float = field(default=0.25, metadata=_rng(0.0, 0.5))
    sensor_bins: int = field(default=16, metadata=_rng(1))
    sensor_falloff: float = field(default=8.0, metadata=_rng(0.0))
    # network construction
    n_inter: int = field(default=64, metadata=_rng(0))
    inhibitory_fraction: float = field(default=0.2, metadata=_rng(0.0, 1.0))
    w_max: float = field(default=1.0, metadata=_rng(0.0, lo_open=True))
    prune_fraction: float = field(default=0.05, metadata=_rng(0.0))
    fine_map_epochs: int = field(default=20, metadata=_rng(0))
    settle_steps: int = field(default=50, metadata=_rng(1))
    # network dynamics and plasticity
    tau_m: float = field(default=0.05, metadata=_rng(0.0, lo_open=True))
    logistic_gain: float = field(default=0.25, metadata=_rng(0.0, lo_open=True))
    logistic_bias: float = field(default=6.0)
    nm_coupling: float = field(default=0.1)
    adapt_tau: float = field(default=0.2, metadata=_rng(0.0, lo_open=True))
    recovery_rate: float = field(default=0.5, metadata=_rng(0.0))
    impulse_cap: float = field(default=10.0, metadata=_rng(0.0, lo_open=True))
    sat_cap: float = field(default=1.0, metadata=_rng(0.0))
    proximity_drive: float = field(default=1.0, metadata=_rng(0.0))
    hunger_drive: float = field(default=1.0, metadata=_rng(0.0))
    learning_rate: float = field(default=0.05, metadata=_rng(0.0))
    learn_interval: int = field(default=1, metadata=_rng(1))
    target_fraction: float = field(default=0.25, metadata=_rng(0.0, lo_open=True))
    homeostasis_interval: float = field(default=0.5, metadata=_rng(0.0, lo_open=True))
    # output
    trace: bool = False
    trace_interval: int = field(default=10, metadata=_rng(1))
    out: str = "runs/default"

    def __post_init__(self):
        for f in fields(self):
            meta = f.metadata
            if not meta:
                continue
            v = getattr(self, f.name)
            if isinstance(v, float) and not math.isfinite(v):
                raise ConfigError(f"{f.name} must be finite")
            lo, hi = meta["lo"], meta["hi"]
            if lo is not None and (v < lo or (meta["lo_open"] and v == lo)):
                bound = ">" if meta["lo_open"] else ">="
                raise ConfigError(f"{f.name} = {v} must be {bound} {lo}")
            if hi is not None and v > hi:
                raise ConfigError(f"{f.name} = {v} must be <= {hi}")
        parse_narrowing(self.narrowing)

    @property
    def n_sensors(self) -> int:
        return 2 * self.sensor_bins + 2

    @property
    def n_motors(self) -> int:
        return 2

    @property
    def steps(self) -> int:
        return int(round(self.lifetime / self.dt))

    @property
    def n_minority(self) -> int:
        return int(round(self.n_prey * self.minority_fraction))

    @property
    def prune_threshold(self) -> float:
        return self.prune_fraction * self.w_max

    @property
    def prey_top_speed(self) -> float:
        return self.prey_speed_ratio * self.animat_top_speed

    @property
    def homeostasis_steps(self) -> int:
        return max(1, int(round(self.homeostasis_interval / self.dt)))

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _coerce(name: str, raw: str):
    f = _FIELDS[name]
    kind = type(f.default)
    raw = raw.strip()
    try:
        if kind is bool:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r} as {kind.__name__}") from None
    return raw


def parse_pairs(pairs: Mapping[str, str]) -> dict:
    out = {}
    for key, raw in pairs.items():
        key = key.strip()
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key: {key}")
        out[key] = _coerce(key, raw)
    return out


def parse_config_text(text: str, source: str = "<config>") -> dict:
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value
    return parse_pairs(pairs)


def load_config(path: str | Path | None = None, overrides: Mapping[str, str] | None = None) -> RunConfig:
    """Resolve a config from an optional file plus string overrides (overrides win)."""
    values = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        values.update(parse_config_text(path.read_text(), str(path)))
    if overrides:
        values.update(parse_pairs(overrides))
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def parse_narrowing(text: str):
    """Return "auto", an empty dict (none) or {generation: factor}."""
    text = text.strip()
    if text == "auto":
        return "auto"
    if text in ("", "none"):
        return {}
    schedule = {}
    for item in text.split(","):
        try:
            gen, factor = item.split(":")
            gen, factor = int(gen), float(factor)
        except ValueError:
            raise ConfigError(f"bad narrowing entry {item!r}; expected GEN:FACTOR") from None
        if gen < 0 or not 0.0 < factor <= 1.0:
            raise ConfigError(f"bad narrowing entry {item!r}")
        schedule[gen] = factor
    return schedule
