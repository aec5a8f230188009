"""Scenario configuration and the ``key = value`` config file format."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .link import PROFILES, RadioProfile
from .mobility import DWELL_SEC, EXPRESS_SPEED_MPS, LOCAL_SPEED_MPS


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    duration: float = 43200.0
    tick: float = 0.5
    seed: int = 1
    n_local: int = 60
    n_express: int = 60
    event_nodes: tuple[str, ...] = ()  # "ROUTE:stationIndex"
    local_speed: float = LOCAL_SPEED_MPS
    express_speed: float = EXPRESS_SPEED_MPS
    dwell: float = DWELL_SEC
    station_spacing: float = 800.0
    express_every_k: int = 3
    radio: str = "bluetooth"
    range_m: float | None = None
    bandwidth: float | None = None
    router: str = "epidemic"
    msg_size: int = 500_000
    ttl: float = 21600.0
    hop_limit: int = 40
    buffer_capacity: int = 50_000_000
    threshold_hops: int = 3
    first_at: float = 40.0
    interval: float = 82.8
    count_target: int = 521
    dest_mode: str = "random"
    sources: str = "all"
    destinations: str = "all"

    def __post_init__(self):
        if self.duration <= 0:
            raise ConfigError("sim.durationSec must be > 0")
        if not 0 < self.tick <= 1.0:
            raise ConfigError("sim.tickSec must be in (0, 1]")
        if self.router not in ("epidemic", "maxprop"):
            raise ConfigError(f"unknown router {self.router!r}")
        if self.radio not in PROFILES:
            raise ConfigError(f"unknown radio profile {self.radio!r}")
        if self.dest_mode not in ("random", "downline"):
            raise ConfigError(f"unknown traffic.destMode {self.dest_mode!r}")
        if self.n_local < 0 or self.n_express < 0:
            raise ConfigError("node counts must be >= 0")
        if self.msg_size <= 0 or self.buffer_capacity <= 0:
            raise ConfigError("message size and buffer capacity must be > 0")
        if self.msg_size > self.buffer_capacity:
            raise ConfigError("msg.sizeBytes exceeds buffer.capacityBytes")
        if self.express_every_k < 1 or self.station_spacing <= 0:
            raise ConfigError("bad station layout parameters")
        if self.dwell < 0:
            raise ConfigError("movement.dwellSec must be >= 0")

    @property
    def profile(self) -> RadioProfile:
        base = PROFILES[self.radio]
        return RadioProfile(
            base.name,
            base.range if self.range_m is None else self.range_m,
            base.bandwidth if self.bandwidth is None else self.bandwidth,
        )

    def with_(self, **kw) -> "ScenarioConfig":
        return replace(self, **kw)


# config-file key -> (field name, parser)
def _int(s: str) -> int:
    return int(s)


def _list(s: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in s.split(",") if p.strip())


def _opt_float(s: str) -> float | None:
    return None if s.lower() in ("", "default", "none") else float(s)


KEYS: dict[str, tuple[str, object]] = {
    "sim.durationSec": ("duration", float),
    "sim.tickSec": ("tick", float),
    "sim.seed": ("seed", _int),
    "nodes.local": ("n_local", _int),
    "nodes.express": ("n_express", _int),
    "nodes.events": ("event_nodes", _list),
    "movement.localSpeedMps": ("local_speed", float),
    "movement.expressSpeedMps": ("express_speed", float),
    "movement.dwellSec": ("dwell", float),
    "movement.stationSpacingM": ("station_spacing", float),
    "movement.expressEveryK": ("express_every_k", _int),
    "radio.profile": ("radio", str),
    "radio.rangeM": ("range_m", _opt_float),
    "radio.bandwidthBps": ("bandwidth", _opt_float),
    "router": ("router", str),
    "msg.sizeBytes": ("msg_size", _int),
    "msg.ttlSec": ("ttl", float),
    "msg.hopLimit": ("hop_limit", _int),
    "buffer.capacityBytes": ("buffer_capacity", _int),
    "maxprop.thresholdHops": ("threshold_hops", _int),
    "traffic.firstAtSec": ("first_at", float),
    "traffic.intervalSec": ("interval", float),
    "traffic.countTarget": ("count_target", _int),
    "traffic.destMode": ("dest_mode", str),
    "traffic.sources": ("sources", str),
    "traffic.destinations": ("destinations", str),
}
FIELD_TO_KEY = {f: k for k, (f, _) in KEYS.items()}


def parse_config(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        name, conv = KEYS[key]
        try:
            values[name] = conv(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value {value!r} for {key}") from None
    try:
        return replace(base or ScenarioConfig(), **values)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path, base: ScenarioConfig | None = None) -> ScenarioConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), base)


def dump_config(cfg: ScenarioConfig) -> str:
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            continue
        if isinstance(v, tuple):
            v = ", ".join(v)
        lines.append(f"{FIELD_TO_KEY[f.name]} = {v}")
    return "\n".join(lines) + "\n"


__all__ = ["ConfigError", "KEYS", "ScenarioConfig", "dump_config", "load_config", "parse_config"]
