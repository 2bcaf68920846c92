"""Lumped-element model of a quarter-wave resonator probed by a feedline and a bolometer.

Near one of its modes the lambda/4 line is replaced by a parallel LCR circuit.
The feedline (two Z0 halves in parallel) and the bolometer absorber R_b hang
on the resonator through series capacitors C_f and C_b.  Each series RC port
is folded into a parallel (Norton) R_eff || C_eff pair, which is what makes
the quality-factor budget additive.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

log = logging.getLogger(__name__)

#: C_eff / C above this fraction voids the small-coupling Q formulas.
SMALL_COUPLING_LIMIT = 0.05


@dataclass(frozen=True)
class QuarterWaveResonator:
    """A lambda/4 transmission-line resonator addressed at one mode.

    At most one of ``attenuation_length_product`` (alpha*l) and
    ``internal_q_override`` may be given.  With neither, the line is lossless.
    """

    z0: float
    f_mode: float
    attenuation_length_product: Optional[float] = None
    internal_q_override: Optional[float] = None

    def __post_init__(self):
        if not (self.z0 > 0 and self.f_mode > 0):
            raise ValueError("z0 and f_mode must be positive")
        if self.attenuation_length_product is not None and self.internal_q_override is not None:
            raise ValueError("give either attenuation_length_product or internal_q_override, not both")
        for name in ("attenuation_length_product", "internal_q_override"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class LumpedResonator:
    inductance_L: float
    capacitance_C: float
    resistance_R: float = math.inf

    def __post_init__(self):
        if not (self.inductance_L > 0 and self.capacitance_C > 0 and self.resistance_R > 0):
            raise ValueError("L, C and R must be positive (R may be inf)")

    @property
    def omega0(self) -> float:
        return 1.0 / math.sqrt(self.inductance_L * self.capacitance_C)

    @property
    def f0(self) -> float:
        return self.omega0 / (2.0 * math.pi)

    @property
    def z_lc(self) -> float:
        return math.sqrt(self.inductance_L / self.capacitance_C)


@dataclass(frozen=True)
class PortCoupling:
    series_capacitance: float
    termination_resistance: float

    def __post_init__(self):
        if not (self.series_capacitance > 0 and self.termination_resistance > 0):
            raise ValueError("coupling capacitance and termination resistance must be positive")

    def impedance(self, omega):
        return self.termination_resistance + 1.0 / (1j * omega * self.series_capacitance)


@dataclass(frozen=True)
class CircuitAssembly:
    resonator: LumpedResonator
    feedline_port: PortCoupling
    bolometer_port: PortCoupling
    line_impedance_Z0: float

    def __post_init__(self):
        expected = self.line_impedance_Z0 / 2.0
        if not math.isclose(self.feedline_port.termination_resistance, expected, rel_tol=1e-12):
            raise ValueError(
                "feedline termination must be Z0/2 (both feedline halves in parallel), "
                f"got {self.feedline_port.termination_resistance} for Z0={self.line_impedance_Z0}"
            )

    @classmethod
    def from_design(
        cls,
        z0: float,
        f_mode: float,
        c_f: float,
        c_b: float,
        r_b: float,
        internal_q: Optional[float] = None,
        attenuation_length_product: Optional[float] = None,
    ) -> "CircuitAssembly":
        res = lumped_from_quarter_wave(
            QuarterWaveResonator(z0, f_mode, attenuation_length_product, internal_q)
        )
        return cls(res, PortCoupling(c_f, z0 / 2.0), PortCoupling(c_b, r_b), z0)

    def with_internal_q(self, q_internal: float) -> "CircuitAssembly":
        res = self.resonator
        r = q_internal / (res.omega0 * res.capacitance_C) if math.isfinite(q_internal) else math.inf
        return CircuitAssembly(
            LumpedResonator(res.inductance_L, res.capacitance_C, r),
            self.feedline_port,
            self.bolometer_port,
            self.line_impedance_Z0,
        )


@dataclass(frozen=True)
class QualityFactors:
    """Loss budget of the loaded resonator.

    ``gamma_*`` are linewidths in Hz (f0 / Q).  ``diagnostics`` carries
    human-readable notes about approximations that were stretched.
    """

    q_internal: float
    q_feedline: float
    q_bolometer: float
    q_total: float
    f0: float
    gamma_i: float
    gamma_f: float
    gamma_b: float
    gamma_t: float
    diagnostics: tuple = field(default=(), compare=False)

    @classmethod
    def from_components(cls, q_internal, q_feedline, q_bolometer, f0, diagnostics=()):
        inv = 1.0 / q_internal + 1.0 / q_feedline + 1.0 / q_bolometer
        q_total = 1.0 / inv
        return cls(
            q_internal=q_internal,
            q_feedline=q_feedline,
            q_bolometer=q_bolometer,
            q_total=q_total,
            f0=f0,
            gamma_i=f0 / q_internal,
            gamma_f=f0 / q_feedline,
            gamma_b=f0 / q_bolometer,
            gamma_t=f0 * inv,
            diagnostics=tuple(diagnostics),
        )

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in (
            "q_internal", "q_feedline", "q_bolometer", "q_total", "f0",
            "gamma_i", "gamma_f", "gamma_b", "gamma_t")}
        d["diagnostics"] = list(self.diagnostics)
        return d


def lumped_from_quarter_wave(r: QuarterWaveResonator) -> LumpedResonator:
    """Parallel LCR equivalent of a lambda/4 line near ``r.f_mode``.

    C = 1/(8 Z0 f), L = 2 Z0/(pi^2 f); R = Z0/(alpha l), or Q_i/(omega C) when
    an internal Q is imposed instead.
    """
    c = 1.0 / (8.0 * r.z0 * r.f_mode)
    ind = 2.0 * r.z0 / (math.pi**2 * r.f_mode)
    if r.attenuation_length_product is not None:
        res = r.z0 / r.attenuation_length_product
    elif r.internal_q_override is not None:
        res = r.internal_q_override / (2.0 * math.pi * r.f_mode * c)
    else:
        res = math.inf
    return LumpedResonator(ind, c, res)


def norton_equivalent(port: PortCoupling, omega):
    """Parallel (R_eff, C_eff) with the same admittance as the series port at ``omega``."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("omega must be positive")
    rk, ck = port.termination_resistance, port.series_capacitance
    xc = 1.0 / (omega * ck)
    r_eff = rk + xc**2 / rk
    c_eff = (1.0 / (omega**2 * ck)) / (rk**2 + xc**2)
    if r_eff.ndim == 0:
        return float(r_eff), float(c_eff)
    return r_eff, c_eff


def coupling_diagnostics(a: CircuitAssembly) -> list[str]:
    res = a.resonator
    notes = []
    for name, port in (("feedline", a.feedline_port), ("bolometer", a.bolometer_port)):
        r_eff, c_eff = norton_equivalent(port, res.omega0)
        frac = c_eff / res.capacitance_C
        if frac >= SMALL_COUPLING_LIMIT:
            notes.append(
                f"{name} C_eff/C = {frac:.4f} exceeds {SMALL_COUPLING_LIMIT}; "
                "small-coupling Q formulas are only approximate here"
            )
        dropped = res.omega0 * res.capacitance_C * port.termination_resistance
        q_k = res.z_lc / port.termination_resistance * (res.capacitance_C / port.series_capacitance) ** 2
        notes.append(f"{name} dropped omega0*C*R_k term relative size {dropped / q_k:.3e}")
    return notes


def quality_factors(a: CircuitAssembly) -> QualityFactors:
    """Q budget with the small-coupling formulas Q_k = (Z_LC/R_k)(C/C_k)^2.

    The feedline R_k is Z0/2, which gives the familiar (2 Z_LC/Z0)(C/C_f)^2.
    """
    res = a.resonator
    c = res.capacitance_C
    q_f = res.z_lc / a.feedline_port.termination_resistance * (c / a.feedline_port.series_capacitance) ** 2
    q_b = res.z_lc / a.bolometer_port.termination_resistance * (c / a.bolometer_port.series_capacitance) ** 2
    q_i = res.omega0 * c * res.resistance_R
    return QualityFactors.from_components(q_i, q_f, q_b, res.f0, coupling_diagnostics(a))


def shifted_resonance(a: CircuitAssembly) -> float:
    """Loaded resonance 1/(2 pi sqrt(L C_t)), with the Norton capacitances taken at the bare omega0."""
    res = a.resonator
    c_t = res.capacitance_C
    for port in (a.feedline_port, a.bolometer_port):
        c_t += norton_equivalent(port, res.omega0)[1]
    return 1.0 / (2.0 * math.pi * math.sqrt(res.inductance_L * c_t))


def loaded_quality_factors(a: CircuitAssembly, iterations: int = 50) -> QualityFactors:
    """Q budget of the loaded circuit, 1/Q_k = 1/(omega0' C_t R_k_eff), at the shifted resonance.

    Unlike :func:`quality_factors` this keeps the coupling capacitances in C_t
    and evaluates the frequency-dependent Norton elements self-consistently at
    omega0'.  Its ``f0`` is the shifted resonance.
    """
    res = a.resonator
    omega = res.omega0
    for _ in range(iterations):
        c_t = res.capacitance_C + sum(norton_equivalent(p, omega)[1] for p in (a.feedline_port, a.bolometer_port))
        new = 1.0 / math.sqrt(res.inductance_L * c_t)
        if abs(new - omega) <= 1e-15 * omega:
            omega = new
            break
        omega = new
    wc = omega * c_t
    q_f = wc * norton_equivalent(a.feedline_port, omega)[0]
    q_b = wc * norton_equivalent(a.bolometer_port, omega)[0]
    q_i = wc * res.resistance_R
    return QualityFactors.from_components(q_i, q_f, q_b, omega / (2.0 * math.pi))


def transmission_exact(a: CircuitAssembly, f):
    """Power transmission |S|^2 from the feedline input to the bolometer absorber.

    Full complex port impedances, no Lorentzian approximation.  Multiply by
    P_in for the power dissipated in R_b.  Values are clamped to [0, 1].
    """
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ValueError("frequency must be positive")
    w = 2.0 * math.pi * f
    res = a.resonator
    y_f = 1.0 / a.feedline_port.impedance(w)
    y_b = 1.0 / a.bolometer_port.impedance(w)
    y_r = 0.0 if math.isinf(res.resistance_R) else 1.0 / res.resistance_R
    denom = y_f + y_b + 1j * w * res.capacitance_C + 1.0 / (1j * w * res.inductance_L) + y_r
    s2 = 2.0 * y_f.real * y_b.real / np.abs(denom) ** 2
    clamped = np.clip(s2, 0.0, 1.0)
    resid = np.max(np.abs(clamped - s2)) if s2.size else 0.0
    if resid > 0:
        log.debug("transmission_exact clamped |S|^2 by %.3e", resid)
    return float(clamped) if clamped.ndim == 0 else clamped


def power_to_bolometer_lorentzian(f, qf: QualityFactors, p_in: float):
    """Lorentzian absorbed power 0.5 gamma_f gamma_b / ((f - f0)^2 + (gamma_t/2)^2) * P_in."""
    if p_in < 0:
        raise ValueError("p_in must be non-negative")
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ValueError("frequency must be positive")
    p = 0.5 * qf.gamma_f * qf.gamma_b / ((f - qf.f0) ** 2 + (qf.gamma_t / 2.0) ** 2) * p_in
    return float(p) if p.ndim == 0 else p


def assembly_for_mode(a: CircuitAssembly, mode_index: int, fundamental_f0: float | None = None) -> CircuitAssembly:
    """Re-derive the lumped equivalent at the ``mode_index``-th mode of the same line.

    A lambda/4 line resonates at odd multiples of its fundamental.  The line
    impedance is recovered from Z_LC = 4 Z0 / pi; couplings and internal Q are
    kept.
    """
    if mode_index < 1 or mode_index % 2 == 0:
        raise ValueError("a quarter-wave line only has odd modes (1, 3, 5, ...)")
    res = a.resonator
    f1 = res.f0 if fundamental_f0 is None else fundamental_f0
    if mode_index == 1 and fundamental_f0 is None:
        return a
    z0_line = math.pi * res.z_lc / 4.0
    q_i = res.omega0 * res.capacitance_C * res.resistance_R
    new = lumped_from_quarter_wave(
        QuarterWaveResonator(z0_line, mode_index * f1, internal_q_override=q_i if math.isfinite(q_i) else None)
    )
    return CircuitAssembly(new, a.feedline_port, a.bolometer_port, a.line_impedance_Z0)
