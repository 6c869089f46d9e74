"""Flat dotted-key configuration: defaults, file parsing, and builders.

A config is a flat mapping of dotted keys to values; config files use
one ``key = value`` pair per line with ``#`` comments. Precedence is
command-line flag > config-file key > built-in default.
"""

from __future__ import annotations

from typing import Any, Mapping

from .errors import ConfigurationError
from .events import (ConstantRateSource, RampRateSource, SensorGeometry,
                     StreamSource, read_event_file)
from .gamma import GammaConfig
from .packager import PackagerConfig
from .pipeline import ConsumerConfig, PipelineConfig

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "mode": "virtual",
    "geometry.width": 346,
    "geometry.height": 260,
    "source.kind": "constant",          # constant | ramp | file
    "source.rate_evps": 1e6,
    "source.rate_start_evps": 1e5,
    "source.rate_end_evps": 1e7,
    "source.duration_s": 1.0,
    "source.path": "",
    "source.chunk_events": 65536,
    "gamma.a": 5e6,
    "gamma.beta": 0.25,
    "gamma.min": 0.01,
    "gamma.rate_window_us": 10_000,
    "packager.n_min": 1,
    "packager.n_max": 1_000_000,
    "packager.timeout_us": 10_000,
    "packager.kappa": 0.5,
    "packager.model_smoothing": 0.2,
    "packager.headroom": 1.05,
    "packager.initial_size": 1000,
    "packager.rate_window_us": 10_000,
    "consumer.kind": "synthetic",       # synthetic | clustering
    "consumer.o_us": 1000.0,
    "consumer.c_ns": 500.0,
    "consumer.jitter": 0.0,
    "consumer.radius_px": 10.0,
    "consumer.ttl_us": 50_000,
    "pipeline.input_buffer_capacity": 2_000_000,
}

#: Bundled scenarios: named key overlays at config-file precedence.
SCENARIOS: dict[str, dict[str, Any]] = {
    # abrupt-motion analogue: ramping rate that crosses the discard bound
    "fig3": {
        "source.kind": "ramp",
        "source.rate_start_evps": 1e5,
        "source.rate_end_evps": 1e7,
        "source.duration_s": 5.0,
        "consumer.o_us": 1000.0,
        "consumer.c_ns": 100.0,
    },
    # steady-flight analogue: constant rate below the bound, lag stays negative
    "fig4": {
        "source.kind": "constant",
        "source.rate_evps": 1e6,
        "source.duration_s": 2.0,
        "consumer.o_us": 10_000.0,
        "consumer.c_ns": 100.0,
        # timeout must exceed the synchronization span (~12 ms here),
        # otherwise every package is a premature timeout cut
        "packager.timeout_us": 50_000,
    },
    "constant": {},
    "ramp": {
        "source.kind": "ramp",
        "source.duration_s": 5.0,
    },
}


def _coerce(key: str, raw: str) -> Any:
    """Parse a raw string into the type implied by the key's default."""
    default = DEFAULTS[key]
    try:
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(float(raw)) if ("e" in raw.lower() or "." in raw) else int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigurationError(
            f"invalid value for {key}: {raw!r}", key=key) from None


def parse_overrides(pairs: Mapping[str, str] | list[str]) -> dict[str, Any]:
    """Parse ``key=value`` strings (or a mapping of raw strings)."""
    items = (pairs.items() if isinstance(pairs, Mapping)
             else (p.split("=", 1) for p in pairs))
    out: dict[str, Any] = {}
    for entry in items:
        if len(entry) != 2:
            raise ConfigurationError(
                f"override must be key=value, got {'='.join(entry)!r}")
        key, raw = entry[0].strip(), entry[1].strip()
        if key not in DEFAULTS:
            raise ConfigurationError(f"unknown config key: {key}", key=key)
        out[key] = _coerce(key, raw)
    return out


def parse_config_file(path) -> dict[str, Any]:
    """Parse a flat ``key = value`` config file."""
    out: dict[str, Any] = {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.readlines()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(
                f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigurationError(
                f"{path}:{lineno}: unknown config key: {key}", key=key)
        out[key] = _coerce(key, value)
    return out


def merge(*layers: Mapping[str, Any]) -> dict[str, Any]:
    """Overlay config layers, later layers winning, over the defaults."""
    cfg = dict(DEFAULTS)
    for layer in layers:
        cfg.update(layer)
    return cfg


def _validated(cfg: Mapping[str, Any], key: str, positive=False,
               non_negative=False) -> Any:
    v = cfg[key]
    if positive and not v > 0:
        raise ConfigurationError(f"{key} must be positive, got {v}", key=key)
    if non_negative and not v >= 0:
        raise ConfigurationError(f"{key} must be >= 0, got {v}", key=key)
    return v


def build_pipeline_config(cfg: Mapping[str, Any]) -> PipelineConfig:
    geometry = SensorGeometry(
        width=int(_validated(cfg, "geometry.width", positive=True)),
        height=int(_validated(cfg, "geometry.height", positive=True)))
    pc = PipelineConfig(
        mode=cfg["mode"],
        seed=int(cfg["seed"]),
        geometry=geometry,
        gamma=GammaConfig(
            a_evps=cfg["gamma.a"], beta=cfg["gamma.beta"],
            gamma_min=cfg["gamma.min"],
            rate_window_us=int(cfg["gamma.rate_window_us"])),
        packager=PackagerConfig(
            n_min=int(cfg["packager.n_min"]),
            n_max=int(cfg["packager.n_max"]),
            timeout_us=int(cfg["packager.timeout_us"]),
            kappa=cfg["packager.kappa"],
            model_smoothing=cfg["packager.model_smoothing"],
            headroom=cfg["packager.headroom"],
            initial_size=int(cfg["packager.initial_size"]),
            rate_window_us=int(cfg["packager.rate_window_us"])),
        consumer=ConsumerConfig(
            kind=cfg["consumer.kind"],
            o_us=cfg["consumer.o_us"], c_ns=cfg["consumer.c_ns"],
            jitter=cfg["consumer.jitter"],
            radius_px=cfg["consumer.radius_px"],
            ttl_us=int(cfg["consumer.ttl_us"])),
        input_buffer_capacity=int(cfg["pipeline.input_buffer_capacity"]))
    pc.validate()
    return pc


def build_source(cfg: Mapping[str, Any]) -> StreamSource:
    geometry = SensorGeometry(width=int(cfg["geometry.width"]),
                              height=int(cfg["geometry.height"]))
    kind = cfg["source.kind"]
    seed = int(cfg["seed"])
    chunk = int(_validated(cfg, "source.chunk_events", positive=True))
    if kind == "constant":
        return ConstantRateSource(
            _validated(cfg, "source.rate_evps", positive=True),
            _validated(cfg, "source.duration_s", positive=True),
            geometry, seed, chunk)
    if kind == "ramp":
        return RampRateSource(
            _validated(cfg, "source.rate_start_evps", positive=True),
            _validated(cfg, "source.rate_end_evps", positive=True),
            _validated(cfg, "source.duration_s", positive=True),
            geometry, seed, chunk)
    if kind == "file":
        path = cfg["source.path"]
        if not path:
            raise ConfigurationError(
                "source.path is required for source.kind=file",
                key="source.path")
        return read_event_file(path, geometry, chunk)
    raise ConfigurationError(
        f"source.kind must be constant, ramp, or file, got {kind!r}",
        key="source.kind")
