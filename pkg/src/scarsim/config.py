"""Run configuration: YAML/JSON file plus ``key=value`` overrides.

Schema (``schema_version: 1``); every key is optional and defaults to the
reference device and protocol::

    schema_version: 1
    variant: x-polarized          # x-polarized | cluster
    L: 12                         # multiple of 3
    T_ns: 16.0
    n_steps: 60                   # quench length in periods
    cadence: 1
    cut: null                     # half chain when null
    coefficient_source: table     # table | eq6
    master_seed: 12345
    threads: 1
    shots: 0                      # >0 enables shot-noise estimates in quench
    output_dir: null              # falls back to $SCARSIM_OUTPUT_DIR, then ./scarsim-out
    device:
      J_mhz: 3.8
      Omega_mhz: 50.0
      alpha_mhz: 330.0            # magnitude; stored internally as negative
      freqs_ghz: [5.114, 4.914, 5.014]
    noise:
      r_list: [0.0, 0.02, 0.05, 0.07, 0.1]
      samples: 500
      t_meas_steps: null          # 30 (x-polarized) / 40 (cluster) when null
      propagator: trotter         # trotter | effective_order1_dense
    scan:
      t_total_ns: 5000.0
      T_min_ns: 4.0
      T_max_ns: 1000.0
      points: 24
"""

from __future__ import annotations

import copy
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable

import yaml

from .cr_engine import PAPER_FREQS_GHZ, DeviceParams
from .scar_models import Variant

SCHEMA_VERSION = 1
OUTPUT_ENV = "SCARSIM_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


@dataclass
class DeviceConfig:
    J_mhz: float = 3.8
    Omega_mhz: float = 50.0
    alpha_mhz: float = 330.0
    freqs_ghz: list[float] = field(default_factory=lambda: list(PAPER_FREQS_GHZ))


@dataclass
class NoiseConfig:
    r_list: list[float] = field(default_factory=lambda: [0.0, 0.02, 0.05, 0.07, 0.1])
    samples: int = 500
    t_meas_steps: int | None = None
    propagator: str = "trotter"


@dataclass
class ScanConfig:
    t_total_ns: float = 5000.0
    T_min_ns: float = 4.0
    T_max_ns: float = 1000.0
    points: int = 24


@dataclass
class RunConfig:
    schema_version: int = SCHEMA_VERSION
    variant: str = Variant.XPOLARIZED.value
    L: int = 12
    T_ns: float = 16.0
    n_steps: int = 60
    cadence: int = 1
    cut: int | None = None
    coefficient_source: str = "table"
    master_seed: int = 12345
    threads: int = 1
    shots: int = 0
    output_dir: str | None = None
    device: DeviceConfig = field(default_factory=DeviceConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)

    def device_params(self) -> DeviceParams:
        d = self.device
        return DeviceParams(
            J_mhz=d.J_mhz,
            Omega_mhz=d.Omega_mhz,
            alpha_mhz=-abs(d.alpha_mhz),
            freqs_ghz=tuple(d.freqs_ghz),
            num_sites=self.L,
            T_ns=self.T_ns,
        )

    @property
    def dimensionless_JT(self) -> float:
        return self.device_params().J * self.T_ns

    def resolved_output_dir(self) -> Path:
        return Path(self.output_dir or os.environ.get(OUTPUT_ENV) or "scarsim-out")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


_SECTIONS = {"device": DeviceConfig, "noise": NoiseConfig, "scan": ScanConfig}


_OPTIONAL_INT = {"cut", "noise.t_meas_steps"}


def _coerce(value: Any, default: Any, key: str) -> Any:
    if isinstance(value, str) and not isinstance(default, str) and key != "output_dir":
        value = yaml.safe_load(value)
    if value is None:
        return None
    if default is None:
        default = 0 if key in _OPTIONAL_INT else ""
    if isinstance(default, str):
        return str(value)
    if isinstance(default, bool):
        return bool(value)
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return int(value)
    if isinstance(default, float):
        return float(value)
    if isinstance(default, list):
        if isinstance(value, (int, float)):
            value = [value]
        elif isinstance(value, str):
            value = [v for v in value.strip("[]").split(",") if v.strip()]
        return [float(v) for v in value]
    return value


def _merge(target: Any, data: dict[str, Any], prefix: str = "") -> None:
    fields = target.__dataclass_fields__
    for key, value in data.items():
        name = f"{prefix}{key}"
        if key not in fields:
            raise ConfigError(f"unknown configuration key {name!r}")
        if key in _SECTIONS and prefix == "":
            if not isinstance(value, dict):
                raise ConfigError(f"{name} must be a mapping")
            _merge(getattr(target, key), value, prefix=f"{key}.")
            continue
        default = getattr(type(target)(), key)
        setattr(target, key, _coerce(value, default, name))


def _parse_overrides(overrides: Iterable[str]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, value = item.split("=", 1)
        key = key.strip()
        parts = key.split(".")
        node = out
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value.strip()
    return out


def validate(cfg: RunConfig) -> RunConfig:
    if cfg.schema_version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version {cfg.schema_version} unsupported (expected {SCHEMA_VERSION})")
    try:
        variant = Variant.parse(cfg.variant)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if variant is Variant.GHZ:
        raise ConfigError("the ghz variant has no Trotter protocol; use x-polarized or cluster")
    cfg.variant = variant.value
    if cfg.L < 3 or cfg.L % 3 != 0:
        raise ConfigError(f"L mod 3 = 0 required (got L = {cfg.L})")
    if cfg.T_ns <= 0:
        raise ConfigError("T_ns must be positive")
    if cfg.n_steps < 0:
        raise ConfigError("n_steps must be >= 0")
    if cfg.cadence < 1:
        raise ConfigError("cadence must be >= 1")
    if cfg.cut is not None and not 1 <= cfg.cut < cfg.L:
        raise ConfigError(f"cut must satisfy 1 <= cut < L (got {cfg.cut})")
    if cfg.coefficient_source not in ("table", "eq6"):
        raise ConfigError("coefficient_source must be 'table' or 'eq6'")
    if cfg.threads < 1:
        raise ConfigError("threads must be >= 1")
    if cfg.shots < 0:
        raise ConfigError("shots must be >= 0")
    if len(cfg.device.freqs_ghz) != 3:
        raise ConfigError("device.freqs_ghz needs exactly three frequencies")
    if cfg.noise.samples < 1:
        raise ConfigError("noise.samples must be >= 1")
    if any(r < 0 for r in cfg.noise.r_list):
        raise ConfigError("noise.r_list entries must be >= 0")
    if cfg.noise.propagator not in ("trotter", "effective_order1_dense"):
        raise ConfigError("noise.propagator must be 'trotter' or 'effective_order1_dense'")
    if not 0 < cfg.scan.T_min_ns < cfg.scan.T_max_ns or cfg.scan.points < 2:
        raise ConfigError("scan grid needs 0 < T_min_ns < T_max_ns and points >= 2")
    try:
        params = cfg.device_params()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.coefficient_source == "table" and not params.is_paper_device():
        raise ConfigError(
            "coefficient_source=table only applies to the reference device; set coefficient_source=eq6"
        )
    return cfg


def parse_config(path: str | os.PathLike | None = None, overrides: Iterable[str] = ()) -> RunConfig:
    """Resolve a configuration file (may be empty or absent) plus overrides."""
    data: dict[str, Any] = {}
    if path is not None:
        text = Path(path).read_text()
        loaded = yaml.safe_load(text) if text.strip() else None
        if loaded is not None and not isinstance(loaded, dict):
            raise ConfigError("configuration file must contain a mapping")
        data = loaded or {}
    cfg = RunConfig()
    _merge(cfg, copy.deepcopy(data))
    _merge(cfg, _parse_overrides(overrides))
    return validate(cfg)


def config_from_dict(data: dict[str, Any]) -> RunConfig:
    cfg = RunConfig()
    _merge(cfg, copy.deepcopy(data))
    return validate(cfg)
