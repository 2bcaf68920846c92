"""Device configuration file (JSON, unit-suffixed keys) and the model objects built from it."""
from __future__ import annotations

import dataclasses
import difflib
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from .bolometer import BolometerBody
from .circuit import CircuitAssembly, assembly_for_mode
from .nis import JunctionParams, ThermometerConfig

REFERENCE_DEVICE_PATH = resources.files("thermospec") / "data" / "reference_device.json"


class ConfigError(ValueError):
    """Schema violation in a device configuration."""


@dataclass(frozen=True)
class DeviceConfig:
    z0_ohm: float
    f0_hz: float
    cf_farad: float
    cb_farad: float
    rb_ohm: float
    sigma_ep_w_per_k5_m3: float
    volume_m3: float
    pe_watt: float
    heat_capacity_const: float
    lb_henry: float
    delta_ev: float
    dynes: float
    rt_sinis_ohm: float
    ibias_ampere: float
    t0_kelvin: float
    internal_q: Optional[float] = None
    mode_index: int = 1

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name == "internal_q" and v is None:
                continue
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{f.name}: expected a number, got {v!r}")
            if not math.isfinite(v):
                raise ConfigError(f"{f.name}: must be finite")
            if f.name == "pe_watt":
                if v < 0:
                    raise ConfigError("pe_watt: must be non-negative")
            elif not v > 0:
                raise ConfigError(f"{f.name}: must be positive, got {v!r}")
        if not 0 < self.dynes < 1:
            raise ConfigError("dynes: must lie in (0, 1)")
        if int(self.mode_index) != self.mode_index or self.mode_index % 2 == 0:
            raise ConfigError("mode_index: must be an odd positive integer (quarter-wave modes)")

    @classmethod
    def from_dict(cls, data) -> "DeviceConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        names = [f.name for f in dataclasses.fields(cls)]
        unknown = [k for k in data if k not in names]
        if unknown:
            msgs = []
            for k in unknown:
                close = difflib.get_close_matches(k, names, n=1, cutoff=0.3)
                hint = f" (did you mean {close[0]!r}?)" if close else ""
                msgs.append(f"unknown key {k!r}{hint}")
            raise ConfigError("; ".join(msgs))
        required = [f.name for f in dataclasses.fields(cls) if f.default is dataclasses.MISSING]
        missing = [k for k in required if k not in data]
        if missing:
            raise ConfigError(f"missing required key(s): {', '.join(missing)}")
        return cls(**data)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        if d["internal_q"] is None:
            del d["internal_q"]
        return d

    def replace(self, **changes) -> "DeviceConfig":
        return dataclasses.replace(self, **changes)

    # model objects

    def assembly(self, mode_index: int | None = None, internal_q: float | None = None) -> CircuitAssembly:
        q = self.internal_q if internal_q is None else internal_q
        base = CircuitAssembly.from_design(self.z0_ohm, self.f0_hz, self.cf_farad, self.cb_farad, self.rb_ohm, q)
        return assembly_for_mode(base, self.mode_index if mode_index is None else mode_index)

    def body(self) -> BolometerBody:
        return BolometerBody(
            sigma_ep=self.sigma_ep_w_per_k5_m3,
            volume=self.volume_m3,
            parasitic_power=self.pe_watt,
            heat_capacity_const=self.heat_capacity_const,
            wire_inductance=self.lb_henry,
            absorber_resistance=self.rb_ohm,
        )

    def thermometer(self) -> ThermometerConfig:
        return ThermometerConfig(JunctionParams(self.delta_ev, self.dynes, self.rt_sinis_ohm), self.ibias_ampere, 2)

    def model(self) -> "DeviceModel":
        return DeviceModel(self.assembly(), self.body(), self.thermometer(), self.t0_kelvin)


@dataclass(frozen=True)
class DeviceModel:
    """Everything the analysis needs: circuit at the addressed mode, absorber, thermometer, bath."""

    assembly: CircuitAssembly
    body: BolometerBody
    thermometer: ThermometerConfig
    t_phonon: float


def parse_config(text: str) -> DeviceConfig:
    if not text.strip():
        raise ConfigError("config file is empty")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    try:
        return DeviceConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> DeviceConfig:
    """Read and validate a device config.  Raises FileNotFoundError or ConfigError."""
    return parse_config(Path(path).read_text())


def dump_config(cfg: DeviceConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2)


def reference_device() -> DeviceConfig:
    return parse_config(REFERENCE_DEVICE_PATH.read_text())
