"""Trace analysis: convert to absorbed power, fit, extract Q's, and run power sweeps."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bolometer import photon_number, temperature_from_power
from .circuit import quality_factors
from .config import DeviceModel
from .constants import watts_to_dbm
from .lorentzian import DIP, PEAK, FitError, LorentzianFit, fit_lorentzian
from .losses import (
    InternalQ,
    LossModelFit,
    LossModelFitError,
    UnphysicalLinewidthError,
    fit_loss_model,
    internal_q_from_linewidth,
)
from .nis import CalibrationFit, ThermometryError, temperature_from_voltage, thermometer_table
from .trace import SpectralTrace, ValueKind

log = logging.getLogger(__name__)

COUPLING_CAP_ERROR = 0.02  # fractional uncertainty on C_f and C_b used for the Q_i band
MIN_SWEEP_POINTS = 7


class AnalysisError(RuntimeError):
    pass


def electron_temperature(trace: SpectralTrace, model: DeviceModel, calibration: CalibrationFit | None = None):
    """Bolometer electron temperature at each point of a voltage or temperature trace."""
    if trace.value_kind is ValueKind.BOLOMETER_TEMPERATURE:
        return trace.values.copy()
    if trace.value_kind is not ValueKind.THERMOMETER_VOLTAGE:
        raise ValueError("trace carries power, not temperature")
    if calibration is not None:
        return temperature_from_voltage(trace.values, calibration, strict=True)
    return thermometer_table(model.thermometer).temperature(trace.values)


def absorbed_power(trace: SpectralTrace, model: DeviceModel, calibration: CalibrationFit | None = None):
    """Signal power P_b(f) = Sigma V (T_b^5 - T0^5) - P_e for any trace kind."""
    if trace.value_kind is ValueKind.BOLOMETER_POWER:
        return trace.values.copy()
    t_b = electron_temperature(trace, model, calibration)
    body = model.body
    return body.sigma_volume * (t_b**5 - model.t_phonon**5) - body.parasitic_power


@dataclass
class TraceAnalysis:
    p_in: float | None
    value_kind: ValueKind
    conversion: str
    fit: LorentzianFit
    q_total: float
    q_total_stderr: float
    internal_q: InternalQ | None
    photon_number_full: float
    photon_number_simplified: float
    t_baseline: float
    t_peak: float
    voltage_fit: LorentzianFit | None = None
    diagnostics: list = field(default_factory=list)

    @property
    def gamma_t(self) -> float:
        return self.fit.linewidth_gamma_t

    @property
    def gamma_t_stderr(self) -> float:
        return float(self.fit.stderr[1])

    @property
    def delta_t(self) -> float:
        return self.t_peak - self.t_baseline

    def to_dict(self) -> dict:
        d = {
            "p_in_watt": self.p_in,
            "p_in_dbm": watts_to_dbm(self.p_in) if self.p_in else None,
            "value_kind": self.value_kind.value,
            "conversion": self.conversion,
            "lorentzian_fit": self.fit.to_dict(),
            "q_total": self.q_total,
            "q_total_stderr": self.q_total_stderr,
            "internal_q": self.internal_q.to_dict() if self.internal_q else None,
            "photon_number": {"full": self.photon_number_full, "simplified": self.photon_number_simplified},
            "t_baseline_kelvin": self.t_baseline,
            "t_peak_kelvin": self.t_peak,
            "delta_t_kelvin": self.delta_t,
            "diagnostics": list(self.diagnostics),
        }
        if self.voltage_fit is not None:
            d["voltage_fit"] = self.voltage_fit.to_dict()
            g_p, g_v = self.gamma_t, self.voltage_fit.linewidth_gamma_t
            d["calibration_free_comparison"] = {
                "gamma_t_from_power": g_p,
                "gamma_t_from_voltage": g_v,
                "relative_difference": (g_v - g_p) / g_p,
            }
        return d


def analyze_trace(
    trace: SpectralTrace,
    model: DeviceModel,
    p_in: float | None = None,
    calibration: CalibrationFit | None = None,
    fit_voltage: bool = True,
) -> TraceAnalysis:
    """Convert a trace to absorbed power, fit the Lorentzian and derive Q_t, Q_i and photon number.

    For thermometer-voltage traces the raw voltage is also fitted directly
    (the calibration-free estimate) unless ``fit_voltage`` is False.
    """
    diagnostics = []
    if trace.value_kind is ValueKind.BOLOMETER_POWER:
        conversion = "none"
    elif trace.value_kind is ValueKind.BOLOMETER_TEMPERATURE:
        conversion = "electron-phonon"
    else:
        conversion = "linear calibration" if calibration is not None else "thermometer model inversion"
    p_b = absorbed_power(trace, model, calibration)
    fit = fit_lorentzian(trace.frequencies, p_b, orientation=PEAK)
    if not fit.reliable:
        diagnostics.append("power fit flagged unreliable")

    voltage_fit = None
    if fit_voltage and trace.value_kind is ValueKind.THERMOMETER_VOLTAGE:
        try:
            voltage_fit = fit_lorentzian(trace.frequencies, trace.values, orientation=DIP)
        except FitError as exc:
            diagnostics.append(f"direct voltage fit failed: {exc}")

    g, g_err = fit.linewidth_gamma_t, float(fit.stderr[1])
    f0 = fit.center_f0
    q_t = f0 / g
    q_t_err = q_t * math.hypot(g_err / g, float(fit.stderr[0]) / f0)

    internal_q = None
    try:
        internal_q = internal_q_from_linewidth(g, f0, model.assembly, g_err, COUPLING_CAP_ERROR)
    except UnphysicalLinewidthError as exc:
        diagnostics.append(str(exc))

    body = model.body
    p_base = fit.baseline
    p_peak = fit.baseline + fit.peak_amplitude
    try:
        t_base = float(temperature_from_power(p_base, model.t_phonon, body))
        t_peak = float(temperature_from_power(p_peak, model.t_phonon, body))
    except ValueError as exc:
        raise AnalysisError(f"fitted power levels are unphysical: {exc}") from exc
    if p_base < -0.1 * max(fit.peak_amplitude, 0.0):
        diagnostics.append(f"baseline power {p_base:.3e} W is below the background load")
    q_b = quality_factors(model.assembly).q_bolometer
    pn = photon_number(fit.peak_amplitude, q_b, f0, t_peak)

    return TraceAnalysis(
        p_in=p_in,
        value_kind=trace.value_kind,
        conversion=conversion,
        fit=fit,
        q_total=q_t,
        q_total_stderr=q_t_err,
        internal_q=internal_q,
        photon_number_full=pn.full,
        photon_number_simplified=pn.simplified,
        t_baseline=t_base,
        t_peak=t_peak,
        voltage_fit=voltage_fit,
        diagnostics=fit.diagnostics + diagnostics,
    )


@dataclass
class SweepReport:
    traces: list
    failures: list
    loss_fit: LossModelFit | None
    notices: list

    def to_dict(self) -> dict:
        return {
            "traces": [t.to_dict() for t in self.traces],
            "failures": list(self.failures),
            "loss_model_fit": self.loss_fit.to_dict() if self.loss_fit else None,
            "notices": list(self.notices),
        }


STAGE_ERRORS = (FitError, ThermometryError, AnalysisError, ValueError)


def analyze_power_sweep(
    traces: Sequence[tuple],
    model: DeviceModel,
    calibration: CalibrationFit | None = None,
) -> SweepReport:
    """Analyze (p_in [W], trace) pairs; fit the loss model when enough traces succeed.

    A failing trace is recorded in ``failures`` and does not stop the sweep.
    """
    done, failures, notices = [], [], []
    for i, (p_in, tr) in enumerate(traces):
        try:
            done.append(analyze_trace(tr, model, p_in, calibration))
        except STAGE_ERRORS as exc:
            log.warning("trace %d (P_in=%s W) failed: %s", i, p_in, exc)
            failures.append({"index": i, "p_in_watt": p_in, "error": f"{type(exc).__name__}: {exc}"})

    points = []
    for t in done:
        qi = t.internal_q
        if qi is None or not math.isfinite(qi.q_internal) or t.p_in is None:
            continue
        sigma = qi.sigma_statistical if qi.sigma_statistical > 0 else 0.0
        # Noiseless traces give a vanishing sigma; keep the weights finite.
        sigma = max(sigma, 1e-9 * qi.q_internal)
        points.append((t.p_in, qi.q_internal, sigma))

    loss_fit = None
    if len(points) < MIN_SWEEP_POINTS:
        notices.append(
            f"loss-model fit skipped: {len(points)} usable Q_i point(s), need at least {MIN_SWEEP_POINTS}"
        )
    else:
        try:
            loss_fit = fit_loss_model(points, model.assembly.resonator.f0, model.t_phonon)
        except LossModelFitError as exc:
            notices.append(f"loss-model fit failed: {exc}")
    return SweepReport(done, failures, loss_fit, notices)
