"""Thermal physics of the absorber: electron-phonon heat flow and derived figures of merit."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .constants import bose_einstein, h, k_B

CU_HEAT_CAPACITY_CONST = 71.0  # J K^-2 m^-3, Sommerfeld constant of copper per volume


class BolometerError(ValueError):
    pass


@dataclass(frozen=True)
class BolometerBody:
    sigma_ep: float  # W K^-5 m^-3
    volume: float  # m^3
    parasitic_power: float = 0.0  # W, background load P_e
    heat_capacity_const: float = CU_HEAT_CAPACITY_CONST
    wire_inductance: float = 8.5e-12  # H
    absorber_resistance: float = 12.23  # ohm

    def __post_init__(self):
        for name in ("sigma_ep", "volume", "heat_capacity_const", "wire_inductance", "absorber_resistance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.parasitic_power >= 0:
            raise ValueError("parasitic_power must be non-negative")

    @property
    def sigma_volume(self) -> float:
        return self.sigma_ep * self.volume


@dataclass(frozen=True)
class ThermalOperatingPoint:
    t_electron: float
    t_phonon: float

    def __post_init__(self):
        if not (self.t_electron > 0 and self.t_phonon > 0):
            raise ValueError("temperatures must be positive")


def electron_phonon_power(op: ThermalOperatingPoint, body: BolometerBody) -> float:
    """Signal power Sigma*V*(T_b^5 - T0^5) - P_e.  Negative below the background."""
    return body.sigma_volume * (op.t_electron**5 - op.t_phonon**5) - body.parasitic_power


def temperature_from_power(p_b, t0: float, body: BolometerBody):
    """Electron temperature reached with signal ``p_b`` on top of the background load."""
    arg = t0**5 + (np.asarray(p_b, dtype=float) + body.parasitic_power) / body.sigma_volume
    if np.any(arg <= 0):
        raise BolometerError("absorbed power is below -(P_e + Sigma V T0^5); no physical temperature")
    t = arg**0.2
    return float(t) if t.ndim == 0 else t


def thermal_conductance(t: float, body: BolometerBody) -> float:
    """G_th(T) = 5 Sigma V T^4."""
    return 5.0 * body.sigma_volume * t**4


def linearized_power(delta_t, t0: float, body: BolometerBody, diagnostics: list | None = None):
    """Small-signal power 5 Sigma V T0^4 dT.

    If ``diagnostics`` is a list, a note is appended when |dT/T0| > 0.1.
    """
    dt = np.asarray(delta_t, dtype=float)
    if diagnostics is not None and np.any(np.abs(dt / t0) > 0.1):
        diagnostics.append(f"|dT/T0| up to {np.max(np.abs(dt / t0)):.3f}; linearization error ~2 dT/T0")
    p = thermal_conductance(t0, body) * dt
    return float(p) if p.ndim == 0 else p


@dataclass(frozen=True)
class PhotonNumber:
    full: float
    simplified: float
    thermal: float


def photon_number(p_b_peak: float, q_bolometer: float, f0: float, t_bolometer: float) -> PhotonNumber:
    """Mean resonator photon number from the power the bolometer absorbs.

    ``simplified`` drops the thermal occupation of the absorber.
    """
    if not (q_bolometer > 0 and f0 > 0 and t_bolometer > 0):
        raise ValueError("q_bolometer, f0 and t_bolometer must be positive")
    simple = p_b_peak * q_bolometer / (2.0 * math.pi * h * f0**2)
    nb = bose_einstein(f0, t_bolometer)
    return PhotonNumber(full=simple + nb, simplified=simple, thermal=nb)


def single_photon_power(q_bolometer: float, f0: float) -> float:
    """Power reaching the absorber from one photon in the resonator, 2 pi h f0^2 / Q_b."""
    return 2.0 * math.pi * h * f0**2 / q_bolometer


@dataclass(frozen=True)
class FiguresOfMerit:
    g_th_at_tb: float
    g_th_at_t0: float
    nep_th: float
    nep_th_convention: str
    heat_capacity: float
    tau: float
    tau_convention: str
    cutoff_frequency: float
    single_photon_power: float
    t_b: float
    t0: float

    def to_dict(self) -> dict:
        return asdict(self)


def figures_of_merit(body: BolometerBody, t_b: float, t0: float, q_bolometer: float, f0: float) -> FiguresOfMerit:
    """Thermal-fluctuation NEP, relaxation time, LR cutoff and single-photon power.

    NEP_th = sqrt(4 k_B T_b^2 G_th(T_b)) and tau = C_h(T_b) / G_th(T0).  The two
    use different temperatures for G_th on purpose; each convention is named
    in the returned record.
    """
    if not (t_b > 0 and t0 > 0 and q_bolometer > 0 and f0 > 0):
        raise ValueError("temperatures, q_bolometer and f0 must be positive")
    g_b = thermal_conductance(t_b, body)
    g_0 = thermal_conductance(t0, body)
    c_h = body.heat_capacity_const * body.volume * t_b
    return FiguresOfMerit(
        g_th_at_tb=g_b,
        g_th_at_t0=g_0,
        nep_th=math.sqrt(4.0 * k_B * t_b**2 * g_b),
        nep_th_convention="G_th evaluated at T_b",
        heat_capacity=c_h,
        tau=c_h / g_0,
        tau_convention="C_h at T_b, G_th at T0",
        cutoff_frequency=body.absorber_resistance / (2.0 * math.pi * body.wire_inductance),
        single_photon_power=single_photon_power(q_bolometer, f0),
        t_b=t_b,
        t0=t0,
    )
