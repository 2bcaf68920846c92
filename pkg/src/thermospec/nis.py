"""NIS / SINIS tunnel-junction thermometry.

Forward model: Dynes-broadened BCS density of states, quasiparticle current of
a single NIS junction, and the voltage across a current-biased junction pair.
Inverse direction: a linear V_th(T0) calibration and, when the device
parameters are trusted, direct model inversion V_th -> T.
"""
from __future__ import annotations

import cmath
import functools
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np
from numba import types
from scipy import LowLevelCallable, integrate, interpolate, optimize

from .constants import e, k_B

#: Valid electron-temperature range of the forward model, kelvin.
T_MIN, T_MAX = 0.020, 0.600


class ThermometryError(RuntimeError):
    pass


class QuadratureError(ThermometryError):
    pass


@dataclass(frozen=True)
class JunctionParams:
    """Superconducting gap (eV), Dynes parameter and tunnel resistance (ohm).

    In a :class:`ThermometerConfig` the resistance is the total over all
    junctions in series; each junction gets an equal share.
    """

    gap_Delta: float
    dynes_d: float
    tunnel_resistance: float

    def __post_init__(self):
        if not self.gap_Delta > 0:
            raise ValueError("gap must be positive")
        if not 0 < self.dynes_d < 1:
            raise ValueError("Dynes parameter must lie in (0, 1)")
        if not self.tunnel_resistance > 0:
            raise ValueError("tunnel resistance must be positive")

    @property
    def gap_J(self) -> float:
        return self.gap_Delta * e


@dataclass(frozen=True)
class ThermometerConfig:
    junction: JunctionParams
    bias_current: float
    junction_count: int = 2

    def __post_init__(self):
        if not self.bias_current > 0:
            raise ValueError("bias current must be positive")
        if self.junction_count not in (1, 2):
            raise ValueError("junction_count must be 1 or 2")

    @property
    def single_junction(self) -> JunctionParams:
        j = self.junction
        return JunctionParams(j.gap_Delta, j.dynes_d, j.tunnel_resistance / self.junction_count)


@dataclass
class CalibrationFit:
    """Linear thermometer calibration V_th = slope_a * T0 + intercept_b."""

    slope_a: float
    intercept_b: float
    valid_range: tuple
    residuals: list = field(default_factory=list)
    rms_residual: float = 0.0

    def voltage_range(self) -> tuple:
        v = sorted(self.slope_a * t + self.intercept_b for t in self.valid_range)
        return v[0], v[1]

    def to_dict(self) -> dict:
        return {
            "slope_a": self.slope_a,
            "intercept_b": self.intercept_b,
            "valid_range": list(self.valid_range),
            "residuals": list(self.residuals),
            "rms_residual": self.rms_residual,
        }


def bcs_dos(energy_ratio, dynes_d: float):
    """|Re[(x + i d) / sqrt((x + i d)^2 - 1)]| with x = E / Delta."""
    if not dynes_d > 0:
        raise ValueError("Dynes parameter must be positive")
    z = np.asarray(energy_ratio, dtype=float) + 1j * dynes_d
    n = np.abs(np.real(z / np.sqrt(z * z - 1.0)))
    return float(n) if n.ndim == 0 else n


def _fermi(x):
    # 1 / (1 + e^x) without overflow warnings
    return 0.5 * (1.0 - np.tanh(0.5 * x))


@numba.cfunc(types.double(types.intc, types.CPointer(types.double)), cache=True)
def _qp_integrand(n, xx):
    # xx = (x, u, theta, d): x = E/Delta, u = eV/Delta, theta = k_B T/Delta
    x, u, theta, d = xx[0], xx[1], xx[2], xx[3]
    z = complex(x, d)
    dos = abs((z / cmath.sqrt(z * z - 1.0)).real)
    f_minus = 0.5 * (1.0 - math.tanh(0.5 * (x - u) / theta))
    f_plus = 0.5 * (1.0 - math.tanh(0.5 * (x + u) / theta))
    return dos * (f_minus - f_plus)


_INTEGRAND = LowLevelCallable(_qp_integrand.ctypes)


def qp_current(voltage: float, t_electron: float, j: JunctionParams) -> float:
    """Quasiparticle current (A) through one NIS junction at bias ``voltage``.

    Uses the evenness of the density of states to integrate over E >= 0 only,
    in units of Delta, split at the gap edge and the Fermi steps at +-eV.
    """
    if not t_electron > 0:
        raise ValueError("electron temperature must be positive")
    v = float(voltage)
    if v == 0.0:
        return 0.0
    sign = math.copysign(1.0, v)
    delta = j.gap_J
    u = abs(v) * e / delta  # eV / Delta
    theta = k_B * t_electron / delta  # k_B T / Delta
    d = j.dynes_d
    x_max = max(20.0, u + 20.0 * theta)

    w_gap = max(10.0 * d, 1e-6)
    w_f = 10.0 * theta
    pts = {0.0, x_max, 1.0, 1.0 - w_gap, 1.0 + w_gap, u, u - w_f, u + w_f, 2.0}
    pts = sorted(p for p in pts if 0.0 <= p <= x_max)
    total = 0.0
    err = 0.0
    with warnings.catch_warnings():
        # Segments that hold an exponentially small share trip quadpack's
        # roundoff detector; only the summed error estimate matters.
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(pts[:-1], pts[1:]):
            if hi - lo <= 0:
                continue
            val, ae = integrate.quad(
                _INTEGRAND, lo, hi, args=(u, theta, d), epsabs=0.0, epsrel=1e-11, limit=400
            )
            total += val
            err += ae
    if not np.isfinite(total) or err > 1e-8 * abs(total) + 1e-300:
        raise QuadratureError(
            f"quadrature error estimate {err:.3e} too large for integral {total:.3e} "
            f"(eV/Delta={u:.4g}, kT/Delta={theta:.4g}, breakpoints={pts})"
        )
    current = delta / (e * j.tunnel_resistance) * total
    return sign * current


def qp_current_simpson(voltage: float, t_electron: float, j: JunctionParams, points: int = 1_000_001,
                       e_max_ratio: float = 20.0) -> float:
    """Brute-force composite Simpson over E in [-20 Delta, 20 Delta] (reference only)."""
    if points % 2 == 0:
        points += 1
    x = np.linspace(-e_max_ratio, e_max_ratio, points)
    hstep = x[1] - x[0]
    delta = j.gap_J
    u = voltage * e / delta
    theta = k_B * t_electron / delta
    y = bcs_dos(x, j.dynes_d) * (_fermi((x - u) / theta) - _fermi((x + u) / theta))
    w = np.ones(points)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    integral = hstep / 3.0 * np.dot(w, y)
    return delta / (2.0 * e * j.tunnel_resistance) * integral


def _check_bias(cfg: ThermometerConfig) -> JunctionParams:
    jn = cfg.single_junction
    scale = jn.gap_Delta / jn.tunnel_resistance  # Delta / (e R_t) in amperes
    if cfg.bias_current >= scale:
        raise ThermometryError(
            f"bias current {cfg.bias_current:.3e} A exceeds junction scale Delta/(e R_t) = {scale:.3e} A"
        )
    return jn


def thermometer_voltage(t_electron: float, cfg: ThermometerConfig, xtol: float = 1e-15) -> float:
    """Total voltage across the junction(s) carrying ``cfg.bias_current`` at ``t_electron``."""
    if not T_MIN <= t_electron <= T_MAX:
        raise ThermometryError(f"t_electron={t_electron} K outside [{T_MIN}, {T_MAX}] K")
    jn = _check_bias(cfg)
    v_hi = 2.0 * jn.gap_Delta + 10.0 * cfg.bias_current * jn.tunnel_resistance

    def g(v):
        return qp_current(v, t_electron, jn) - cfg.bias_current

    try:
        v, info = optimize.brentq(g, 0.0, v_hi, xtol=xtol, rtol=4 * np.finfo(float).eps, full_output=True)
    except ValueError as exc:
        raise ThermometryError(f"no root for bias {cfg.bias_current} A in [0, {v_hi}] V") from exc
    if not info.converged:
        raise ThermometryError(f"root finder did not converge: {info.flag}")
    return cfg.junction_count * v


def temperature_from_thermometer(v_th: float, cfg: ThermometerConfig, xtol: float = 1e-12) -> float:
    """Invert :func:`thermometer_voltage` for the electron temperature.

    At fixed voltage the subgap current grows with temperature, so a single
    bracketed root in T gives the same answer as inverting T -> V.
    """
    jn = _check_bias(cfg)
    v1 = v_th / cfg.junction_count

    def g(t):
        return qp_current(v1, t, jn) - cfg.bias_current

    try:
        return optimize.brentq(g, T_MIN, T_MAX, xtol=xtol, rtol=4 * np.finfo(float).eps)
    except ValueError as exc:
        raise ThermometryError(
            f"V_th={v_th:.6e} V has no temperature in [{T_MIN}, {T_MAX}] K for this thermometer"
        ) from exc


def linear_calibration_fit(points: Sequence[tuple]) -> CalibrationFit:
    """Least-squares line through (T0, V_th) pairs."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 2 or arr.shape[1] != 2:
        raise ValueError("need at least two (t0, v_th) points")
    t, v = arr[:, 0], arr[:, 1]
    if np.ptp(t) <= 0.050:
        raise ValueError("calibration temperatures must span more than 50 mK (degenerate abscissas)")
    design = np.column_stack([t, np.ones_like(t)])
    (a, b), *_ = np.linalg.lstsq(design, v, rcond=None)
    resid = v - (a * t + b)
    return CalibrationFit(
        slope_a=float(a),
        intercept_b=float(b),
        valid_range=(float(t.min()), float(t.max())),
        residuals=resid.tolist(),
        rms_residual=float(np.sqrt(np.mean(resid**2))),
    )


def temperature_from_voltage(v_th, cal: CalibrationFit, strict: bool = True):
    """T = (V_th - b) / a.  With ``strict`` the voltage must lie in the calibrated span."""
    v = np.asarray(v_th, dtype=float)
    if strict:
        lo, hi = cal.voltage_range()
        tol = 1e-12 * max(abs(lo), abs(hi))
        if np.any(v < lo - tol) or np.any(v > hi + tol):
            raise ThermometryError(
                f"V_th outside calibrated interval [{lo:.6e}, {hi:.6e}] V "
                f"(T0 in [{cal.valid_range[0]}, {cal.valid_range[1]}] K)"
            )
    t = (v - cal.intercept_b) / cal.slope_a
    return float(t) if t.ndim == 0 else t


def calibration_curve(cfg: ThermometerConfig, t_min: float, t_max: float, points: int):
    """Forward-model V_th over a temperature grid, as (T, V) arrays."""
    t = np.linspace(t_min, t_max, points)
    return t, np.array([thermometer_voltage(x, cfg) for x in t])


class ThermometerTable:
    """Cubic-spline interpolant of V_th(T) and its inverse on [t_min, t_max].

    Built once from the exact forward model; used where thousands of
    conversions are needed (trace synthesis, trace analysis).  Interpolation
    error is far below the root-finder tolerance of the exact path for the
    default 401 nodes (checked in the test suite).
    """

    def __init__(self, cfg: ThermometerConfig, t_min: float = T_MIN, t_max: float = T_MAX, nodes: int = 401):
        self.cfg = cfg
        self.t_nodes = np.geomspace(t_min, t_max, nodes)
        self.v_nodes = np.array([thermometer_voltage(t, cfg) for t in self.t_nodes])
        if np.any(np.diff(self.v_nodes) >= 0):
            raise ThermometryError("thermometer voltage is not strictly decreasing on the table grid")
        self._forward = interpolate.CubicSpline(np.log(self.t_nodes), self.v_nodes)
        self._inverse = interpolate.CubicSpline(self.v_nodes[::-1], np.log(self.t_nodes[::-1]))

    @property
    def voltage_range(self) -> tuple[float, float]:
        return float(self.v_nodes[-1]), float(self.v_nodes[0])

    def voltage(self, t_electron):
        t = np.asarray(t_electron, dtype=float)
        if np.any(t < self.t_nodes[0]) or np.any(t > self.t_nodes[-1]):
            raise ThermometryError(f"temperature outside table range [{self.t_nodes[0]}, {self.t_nodes[-1]}] K")
        v = self._forward(np.log(t))
        return float(v) if v.ndim == 0 else v

    def temperature(self, v_th):
        v = np.asarray(v_th, dtype=float)
        lo, hi = self.voltage_range
        if np.any(v < lo) or np.any(v > hi):
            raise ThermometryError(f"V_th outside table range [{lo:.6e}, {hi:.6e}] V")
        # Spline inverse, then two Newton steps on the forward spline so that
        # voltage(temperature(v)) == v to rounding.
        x = self._inverse(v)
        d = self._forward.derivative()
        for _ in range(2):
            x = x - (self._forward(x) - v) / d(x)
        t = np.exp(x)
        return float(t) if t.ndim == 0 else t


@functools.lru_cache(maxsize=8)
def thermometer_table(cfg: ThermometerConfig, nodes: int = 401) -> ThermometerTable:
    return ThermometerTable(cfg, nodes=nodes)
