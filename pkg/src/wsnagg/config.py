"""Experiment configuration and its flat ``key = value`` text format."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .curve import CurveParams, get_curve
from .errors import ConfigError, WsnAggError

TAMPER_KINDS = ("flip-ciphertext", "flip-mac", "forge-signature")
CACHE_FEEDS = ("per-node", "aggregate-only")


@dataclass(frozen=True)
class EnergyModelParams:
    """First-order radio model constants (joules per bit, per m^2, per m^4)."""

    em: float = 50e-9
    eps_fs: float = 10e-12
    eps_amp: float = 0.0013e-12
    eda: float = 5e-9

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if not (v > 0 and math.isfinite(v)):
                raise ConfigError(f"energy parameter {f.name} must be positive, got {v}")

    @property
    def v0(self) -> float:
        """Crossover distance where the free-space and multipath terms agree."""
        return math.sqrt(self.eps_fs / self.eps_amp)


@dataclass(frozen=True)
class FaultModel:
    drop_prob: float = 0.0
    tamper_prob: float = 0.0
    seed: int = 0
    tamper_kind: str = "flip-ciphertext"

    def __post_init__(self):
        for name in ("drop_prob", "tamper_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.tamper_kind not in TAMPER_KINDS:
            raise ConfigError(f"tamper_kind must be one of {', '.join(TAMPER_KINDS)}")


@dataclass(frozen=True)
class SimConfig:
    node_count: int = 20
    cluster_count: int = 4
    rounds: int = 10
    area_width: float = 100.0
    area_height: float = 100.0
    bs_x: Optional[float] = None
    bs_y: Optional[float] = None
    radio_range: float = 30.0
    initial_energy: float = 0.5
    max_reading: int = 1000
    reading_bits: int = 16
    payload_kb: float = 10.0
    em: float = 50e-9
    eps_fs: float = 10e-12
    eps_amp: float = 0.0013e-12
    eda: float = 5e-9
    w_energy: float = 1 / 3
    w_distance: float = 1 / 3
    w_neighbors: float = 1 / 3
    curve: str = "desk"
    seed: int = 1
    drop_prob: float = 0.0
    tamper_prob: float = 0.0
    tamper_kind: str = "flip-ciphertext"
    fault_seed: Optional[int] = None
    cache_rounds: int = 3
    cache_feed: str = "per-node"
    cpu_voltage: float = 3.0
    cpu_current: float = 0.008
    trials: int = 5

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.node_count < 1:
            raise ConfigError("node_count must be at least 1")
        if not 1 <= self.cluster_count <= self.node_count:
            raise ConfigError(f"cluster_count must lie in [1, node_count={self.node_count}]")
        if self.rounds < 0:
            raise ConfigError("rounds must be non-negative")
        if self.area_width <= 0 or self.area_height <= 0:
            raise ConfigError("area dimensions must be positive")
        if self.radio_range < 0:
            raise ConfigError("radio_range must be non-negative")
        if self.initial_energy <= 0:
            raise ConfigError("initial_energy must be positive")
        if self.max_reading < 0:
            raise ConfigError("max_reading must be non-negative")
        if not 1 <= self.reading_bits <= 62 or self.max_reading >= 1 << self.reading_bits:
            raise ConfigError(f"max_reading {self.max_reading} does not fit in {self.reading_bits} bits")
        if self.payload_kb < 0:
            raise ConfigError("payload_kb must be non-negative")
        if min(self.w_energy, self.w_distance, self.w_neighbors) < 0:
            raise ConfigError("criterion weights must be non-negative")
        if self.cache_rounds < 0:
            raise ConfigError("cache_rounds must be non-negative")
        if self.cache_feed not in CACHE_FEEDS:
            raise ConfigError(f"cache_feed must be one of {', '.join(CACHE_FEEDS)}")
        if self.cpu_voltage < 0 or self.cpu_current < 0:
            raise ConfigError("cpu_voltage and cpu_current must be non-negative")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        # both raise ConfigError on bad values
        self.energy
        self.faults
        try:
            n = self.curve_params.n
        except WsnAggError as exc:
            raise ConfigError(f"curve: {exc}") from None
        if self.node_count * self.max_reading >= n:
            raise ConfigError(
                f"node_count * max_reading = {self.node_count * self.max_reading} "
                f"must stay below the group order {n}"
            )

    @property
    def energy(self) -> EnergyModelParams:
        return EnergyModelParams(self.em, self.eps_fs, self.eps_amp, self.eda)

    @property
    def faults(self) -> FaultModel:
        seed = self.seed if self.fault_seed is None else self.fault_seed
        return FaultModel(self.drop_prob, self.tamper_prob, seed, self.tamper_kind)

    @property
    def curve_params(self) -> CurveParams:
        return get_curve(self.curve)

    @property
    def bs_position(self) -> tuple[float, float]:
        x = self.area_width / 2 if self.bs_x is None else self.bs_x
        y = self.area_height / 2 if self.bs_y is None else self.bs_y
        return (x, y)

    @property
    def weights(self) -> tuple[float, float, float]:
        return (self.w_energy, self.w_distance, self.w_neighbors)

    @property
    def readings_per_payload(self) -> int:
        """Independent readings needed to carry ``payload_kb`` kilobits."""
        return math.ceil(self.payload_kb * 1000 / self.reading_bits)

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is not None:
                lines.append(f"{f.name} = {v!r}" if isinstance(v, float) else f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(SimConfig)}


def _convert(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    if raw.lower() == "none" and kind.startswith("Optional"):
        return None
    try:
        if "int" in kind:
            return int(raw, 0)
        if "float" in kind:
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind}") from None
    return raw


def parse_config(text: str, source: str = "<string>") -> SimConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = _convert(key, raw)
    return SimConfig(**values)


def load_config(path) -> SimConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    return parse_config(text, str(path))
