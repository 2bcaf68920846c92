"""Forward synthesis of thermometer traces and round-trip scoring of the analysis.

Random numbers come from numpy's PCG64 bit generator seeded with
``NoiseSpec.seed``; the algorithm name and seed are written into every
trace's metadata.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import analyze_trace
from .bolometer import BolometerBody, temperature_from_power
from .circuit import CircuitAssembly, power_to_bolometer_lorentzian, quality_factors
from .config import DeviceConfig, DeviceModel
from .constants import watts_to_dbm
from .losses import LossModelParams, loss_model_q
from .nis import ThermometerConfig, thermometer_table, thermometer_voltage
from .trace import SpectralTrace, ValueKind

RNG_ALGORITHM = "numpy.random.PCG64"
DEFAULT_NEP = 1.4e-18  # W/sqrt(Hz)
NOISE_MODES = ("nep_power", "voltage_std", "none")


class SynthesisError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseSpec:
    mode: str = "nep_power"
    nep: float = DEFAULT_NEP
    integration_time: float = 1.0  # s per point
    voltage_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in NOISE_MODES:
            raise SynthesisError(f"noise mode must be one of {NOISE_MODES}")
        if self.mode == "nep_power" and not (self.nep > 0 and self.integration_time > 0):
            raise SynthesisError("nep_power noise needs nep > 0 and integration_time > 0")
        if self.mode == "voltage_std" and not self.voltage_std > 0:
            raise SynthesisError("voltage_std noise needs voltage_std > 0")

    @classmethod
    def none(cls) -> "NoiseSpec":
        return cls(mode="none")

    @property
    def sigma_power(self) -> float:
        """Power-referred standard deviation per point, nep / sqrt(t)."""
        return self.nep / math.sqrt(self.integration_time) if self.mode == "nep_power" else 0.0

    def with_seed(self, seed: int) -> "NoiseSpec":
        return dataclasses.replace(self, seed=seed)

    def to_dict(self) -> dict:
        return {**dataclasses.asdict(self), "rng": RNG_ALGORITHM}


@dataclass(frozen=True)
class SynthConfig:
    assembly: CircuitAssembly
    body: BolometerBody
    thermometer: ThermometerConfig
    t_phonon: float
    internal_q_truth: float
    frequency_grid: np.ndarray
    p_in: float
    mode_index: int = 1

    def __post_init__(self):
        grid = np.asarray(self.frequency_grid, dtype=float)
        object.__setattr__(self, "frequency_grid", grid)
        if grid.ndim != 1 or grid.size < 8 or np.any(np.diff(grid) <= 0):
            raise SynthesisError("frequency_grid must be strictly increasing with at least 8 points")
        if not self.internal_q_truth > 0:
            raise SynthesisError("internal_q_truth must be positive")
        if not (self.p_in >= 0 and self.t_phonon > 0):
            raise SynthesisError("p_in must be non-negative and t_phonon positive")

    @property
    def truth_assembly(self) -> CircuitAssembly:
        return self.assembly.with_internal_q(self.internal_q_truth)

    def model(self) -> DeviceModel:
        """What the analysis side is told about the device (no internal Q)."""
        return DeviceModel(self.assembly, self.body, self.thermometer, self.t_phonon)

    @classmethod
    def from_device(
        cls,
        device: DeviceConfig,
        p_in: float,
        internal_q: float | None = None,
        points: int = 401,
        span_linewidths: float = 5.0,
        mode_index: int | None = None,
    ) -> "SynthConfig":
        """Grid of ``points`` over f0 +/- span_linewidths * gamma_t.

        Without an explicit or configured internal Q the truth comes from the
        reference loss-model parameters at ``p_in``.
        """
        mode = device.mode_index if mode_index is None else mode_index
        assembly = device.assembly(mode_index=mode)
        q_i = internal_q or device.internal_q
        if q_i is None:
            q_i = float(loss_model_q(p_in, LossModelParams.reference()).q_internal)
        qf = quality_factors(assembly.with_internal_q(q_i))
        half = span_linewidths * qf.gamma_t
        grid = np.linspace(qf.f0 - half, qf.f0 + half, points)
        return cls(assembly, device.body(), device.thermometer(), device.t0_kelvin, q_i, grid, p_in, mode)


def truth(cfg: SynthConfig) -> dict:
    qf = quality_factors(cfg.truth_assembly)
    return {
        "truth_f0_hz": qf.f0,
        "truth_gamma_t_hz": qf.gamma_t,
        "truth_q_total": qf.q_total,
        "truth_q_internal": qf.q_internal,
        "truth_q_feedline": qf.q_feedline,
        "truth_q_bolometer": qf.q_bolometer,
        "p_in_watt": cfg.p_in,
        "p_in_dbm": watts_to_dbm(cfg.p_in) if cfg.p_in > 0 else None,
        "t_phonon_kelvin": cfg.t_phonon,
        "mode_index": cfg.mode_index,
    }


def synthesize_trace(
    cfg: SynthConfig,
    noise: NoiseSpec,
    output_kind: ValueKind | str = ValueKind.THERMOMETER_VOLTAGE,
    exact_thermometer: bool = False,
) -> SpectralTrace:
    """Drive power -> absorbed power -> electron temperature -> thermometer voltage.

    Power-referred noise enters before the temperature conversion and voltage
    noise after the thermometer.  ``exact_thermometer`` solves the junction
    model at every point instead of using the cached interpolation table.
    """
    kind = ValueKind(output_kind)
    if noise.mode == "voltage_std" and kind is not ValueKind.THERMOMETER_VOLTAGE:
        raise SynthesisError("voltage noise only applies to thermometer_voltage output")
    rng = np.random.Generator(np.random.PCG64(noise.seed))
    f = cfg.frequency_grid
    qf = quality_factors(cfg.truth_assembly)
    p_b = power_to_bolometer_lorentzian(f, qf, cfg.p_in)
    if noise.mode == "nep_power":
        p_b = p_b + rng.normal(0.0, noise.sigma_power, f.size)

    meta = {**truth(cfg), "noise": noise.to_dict(), "seed": noise.seed}
    if kind is ValueKind.BOLOMETER_POWER:
        return SpectralTrace(f, p_b, kind, meta)
    t_b = temperature_from_power(p_b, cfg.t_phonon, cfg.body)
    if kind is ValueKind.BOLOMETER_TEMPERATURE:
        return SpectralTrace(f, t_b, kind, meta)
    if exact_thermometer:
        v = np.array([thermometer_voltage(t, cfg.thermometer) for t in t_b])
    else:
        v = thermometer_table(cfg.thermometer).voltage(t_b)
    if noise.mode == "voltage_std":
        v = v + rng.normal(0.0, noise.voltage_std, f.size)
    return SpectralTrace(f, v, kind, meta)


@dataclass
class RecoveryRun:
    seed: int
    f0: float
    gamma_t: float
    q_internal: float
    f0_stderr: float
    gamma_t_stderr: float
    q_internal_stderr: float
    error: str | None = None


@dataclass
class RoundTripReport:
    truth: dict
    runs: list
    noise: dict
    output_kind: str
    summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "truth": self.truth,
            "noise": self.noise,
            "output_kind": self.output_kind,
            "runs": [dataclasses.asdict(r) for r in self.runs],
            "summary": self.summary,
        }


def _summarize(runs, tr) -> dict:
    ok = [r for r in runs if r.error is None]
    out = {"n_runs": len(runs), "n_failed": len(runs) - len(ok)}
    if not ok:
        return out
    f0 = np.array([r.f0 for r in ok])
    g = np.array([r.gamma_t for r in ok])
    q = np.array([r.q_internal for r in ok])
    g_err = np.array([r.gamma_t_stderr for r in ok])
    out.update({
        "f0_abs_error_hz": (f0 - tr["truth_f0_hz"]).tolist(),
        "gamma_t_rel_error": ((g - tr["truth_gamma_t_hz"]) / tr["truth_gamma_t_hz"]).tolist(),
        "q_internal_rel_error": ((q - tr["truth_q_internal"]) / tr["truth_q_internal"]).tolist(),
        "gamma_t_1sigma_coverage": float(np.mean(np.abs(g - tr["truth_gamma_t_hz"]) <= g_err)),
    })
    return out


def round_trip(
    cfg: SynthConfig,
    noise: NoiseSpec,
    seeds=None,
    output_kind: ValueKind | str = ValueKind.THERMOMETER_VOLTAGE,
) -> RoundTripReport:
    """Synthesize, analyze on the single-trace path and score against the embedded truth.

    ``seeds`` repeats the experiment with independent noise streams; results
    are kept in seed order.
    """
    seeds = [noise.seed] if seeds is None else list(seeds)
    model = cfg.model()
    tr = truth(cfg)
    runs = []
    for s in seeds:
        trace = synthesize_trace(cfg, noise.with_seed(s), output_kind)
        try:
            res = analyze_trace(trace, model, cfg.p_in, fit_voltage=False)
        except Exception as exc:  # any stage failure is scored, not raised
            runs.append(RecoveryRun(s, math.nan, math.nan, math.nan, math.nan, math.nan, math.nan,
                                    f"{type(exc).__name__}: {exc}"))
            continue
        qi = res.internal_q
        runs.append(RecoveryRun(
            seed=s,
            f0=res.fit.center_f0,
            gamma_t=res.gamma_t,
            q_internal=qi.q_internal if qi else math.nan,
            f0_stderr=float(res.fit.stderr[0]),
            gamma_t_stderr=res.gamma_t_stderr,
            q_internal_stderr=qi.sigma_statistical if qi else math.nan,
            error=None if qi else "; ".join(res.diagnostics),
        ))
    return RoundTripReport(tr, runs, noise.to_dict(), ValueKind(output_kind).value, _summarize(runs, tr))
