"""Physical constants (CODATA 2018, exact SI values) and unit helpers.

Everything in this package is SI unless a name says otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PhysicalConstants:
    planck_J_s: float = 6.62607015e-34
    boltzmann_J_per_K: float = 1.380649e-23
    electron_charge_C: float = 1.602176634e-19

    @property
    def reduced_planck_J_s(self) -> float:
        return self.planck_J_s / (2.0 * math.pi)


CODATA2018 = PhysicalConstants()

h = CODATA2018.planck_J_s
hbar = CODATA2018.reduced_planck_J_s
k_B = CODATA2018.boltzmann_J_per_K
e = CODATA2018.electron_charge_C


def dbm_to_watts(p_dbm):
    """Convert dBm to watts. Works elementwise on arrays."""
    p = np.asarray(p_dbm, dtype=float)
    if not np.all(np.isfinite(p)):
        raise ValueError(f"power in dBm must be finite, got {p_dbm!r}")
    out = 1e-3 * 10.0 ** (p / 10.0)
    return float(out) if out.ndim == 0 else out


def watts_to_dbm(p_watts):
    p = np.asarray(p_watts, dtype=float)
    if not np.all(p > 0):
        raise ValueError(f"power must be > 0 W to express in dBm, got {p_watts!r}")
    out = 10.0 * np.log10(p / 1e-3)
    return float(out) if out.ndim == 0 else out


def bose_einstein(f, t):
    """Mean photon occupation 1/(exp(hf/k_B T) - 1) of a mode at frequency ``f``.

    Returns exactly 0 for ``t == 0``.
    """
    f = np.asarray(f, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(f <= 0):
        raise ValueError("frequency must be positive")
    if np.any(t < 0):
        raise ValueError("temperature must be non-negative")
    with np.errstate(divide="ignore", over="ignore"):
        x = np.where(t > 0, h * f / (k_B * np.where(t > 0, t, 1.0)), np.inf)
        n = np.where(np.isinf(x), 0.0, 1.0 / np.expm1(x))
    return float(n) if n.ndim == 0 else n
