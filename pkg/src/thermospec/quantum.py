"""Driven harmonic oscillator coupled to thermal baths, solved on a truncated Fock space.

Rotating frame at the drive frequency, rotating-wave approximation:

    H / hbar = -(Omega - omega0) a^dag a + (Lambda / 2 hbar) (a + a^dag)

and for every bath i a decay channel sqrt(G_i (1 + n_i)) a and an excitation
channel sqrt(G_i n_i) a^dag, with G_i = omega0 / Q_i and n_i the Bose
occupation at (f0, T_i).  The factor 1/2 on the drive comes from
Lambda sin(Omega t) keeping only its co-rotating half; with it the steady
power into bath i is exactly

    P_i = (Lambda^2 / hbar) (Q_t^2 / Q_i) / (1 + (2 Q_t)^2 (Omega/omega0 - 1)^2).

Energies are counted in quanta of hbar*omega0.  Internally time is measured
in units of 1/kappa_t (kappa_t = omega0/Q_t) so that the Liouvillian is O(1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .constants import bose_einstein, hbar

TOP_POPULATION_LIMIT = 1e-6
DEFAULT_NMAX = 40
MAX_NMAX = 160


class SteadyStateError(RuntimeError):
    """The stationary linear system could not be solved reliably."""


@dataclass(frozen=True)
class BathSpec:
    quality_factor: float
    temperature: float = 0.0

    def __post_init__(self):
        if not self.quality_factor > 0:
            raise ValueError("bath quality factor must be positive")
        if not self.temperature >= 0:
            raise ValueError("bath temperature must be non-negative")


@dataclass(frozen=True)
class DriveSpec:
    amplitude_Lambda: float
    frequency_Omega: float  # Hz, i.e. Omega / 2 pi

    def __post_init__(self):
        if not self.amplitude_Lambda >= 0:
            raise ValueError("drive amplitude must be non-negative")
        if not self.frequency_Omega > 0:
            raise ValueError("drive frequency must be positive")


@dataclass
class TruncatedDensityMatrix:
    entries: np.ndarray
    converged: bool = True
    residual: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.entries))

    @property
    def top_population(self) -> float:
        return float(self.populations[-1])

    def mean_photon_number(self) -> float:
        p = self.populations
        return float(np.dot(np.arange(p.size), p))

    def expect_a(self) -> complex:
        """<a> = Tr(rho a) = sum_n sqrt(n) rho[n, n-1]."""
        n = np.arange(1, self.dimension)
        return complex(np.sum(np.sqrt(n) * np.diagonal(self.entries, offset=-1)))

    def check(self, tol: float = 1e-10) -> None:
        rho = self.entries
        if np.max(np.abs(rho - rho.conj().T)) > tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1.0) > tol:
            raise ValueError("density matrix trace differs from 1")
        if np.min(self.populations) < -1e-12:
            raise ValueError("negative population in density matrix")


def _operators(dim: int):
    a = sp.diags(np.sqrt(np.arange(1, dim, dtype=float)), 1, shape=(dim, dim), format="csr")
    return a.astype(complex), a.T.conj().tocsr().astype(complex)


def _liouvillian(dim, detuning, eps, rates_down, rates_up):
    """Column-stacking superoperator: vec(A rho B) = (B^T kron A) vec(rho)."""
    a, ad = _operators(dim)
    eye = sp.identity(dim, dtype=complex, format="csr")
    num = ad @ a
    ham = -detuning * num + eps * (a + ad)
    lv = -1j * (sp.kron(eye, ham) - sp.kron(ham.T, eye))
    for op, rate in [(a, g) for g in rates_down] + [(ad, g) for g in rates_up]:
        if rate == 0:
            continue
        opdop = op.conj().T @ op
        lv = lv + rate * (
            sp.kron(op.conj(), op) - 0.5 * sp.kron(eye, opdop) - 0.5 * sp.kron(opdop.T, eye)
        )
    return lv.tocsr()


@dataclass(frozen=True)
class _Scaled:
    kappa_t: float
    detuning: float
    eps: float
    down: tuple
    up: tuple


def _scaled_problem(f0, drive, baths) -> _Scaled:
    if not baths:
        raise ValueError("at least one bath is required")
    if not f0 > 0:
        raise ValueError("resonator frequency must be positive")
    omega0 = 2.0 * math.pi * f0
    kappas = [omega0 / b.quality_factor for b in baths]
    kappa_t = sum(kappas)
    occ = [bose_einstein(f0, b.temperature) for b in baths]
    detuning = 2.0 * math.pi * (drive.frequency_Omega - f0) / kappa_t
    eps = drive.amplitude_Lambda / (2.0 * hbar) / kappa_t
    down = tuple(k * (1.0 + n) / kappa_t for k, n in zip(kappas, occ))
    up = tuple(k * n / kappa_t for k, n in zip(kappas, occ))
    return _Scaled(kappa_t, detuning, eps, down, up)


def liouvillian(resonator_f0: float, drive: DriveSpec, baths: Sequence[BathSpec], n_max: int):
    """Sparse generator in units of kappa_t, plus the scale kappa_t in 1/s."""
    s = _scaled_problem(resonator_f0, drive, baths)
    return _liouvillian(n_max + 1, s.detuning, s.eps, s.down, s.up), s.kappa_t


def _solve_stationary(lv: sp.csr_matrix, dim: int):
    # Replace one equation by the trace condition Tr(rho) = 1.
    trace_row = np.zeros(dim * dim, dtype=complex)
    trace_row[:: dim + 1] = 1.0
    m = lv.tolil()
    m[0, :] = trace_row
    rhs = np.zeros(dim * dim, dtype=complex)
    rhs[0] = 1.0
    with np.errstate(all="raise"):
        try:
            x = spla.spsolve(m.tocsc(), rhs)
        except (FloatingPointError, RuntimeError) as exc:
            raise SteadyStateError(f"stationary solve failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SteadyStateError("stationary solve produced non-finite entries (singular generator)")
    resid = float(np.linalg.norm(lv @ x))
    return x.reshape((dim, dim), order="F"), resid


def steady_state(
    resonator_f0: float,
    drive: DriveSpec,
    baths: Sequence[BathSpec],
    n_max: int | None = None,
    auto_extend: bool = True,
) -> TruncatedDensityMatrix:
    """Stationary density matrix of the driven, damped oscillator.

    With ``n_max=None`` the cutoff starts at 40 and doubles (up to 160) until
    the top Fock population falls below 1e-6.  An explicit ``n_max`` is used
    as the starting cutoff; pass ``auto_extend=False`` to pin it.  If the
    threshold is never met the result comes back with ``converged=False``.
    """
    n = DEFAULT_NMAX if n_max is None else int(n_max)
    if n < 2:
        raise ValueError("n_max must be at least 2")
    s = _scaled_problem(resonator_f0, drive, baths)
    while True:
        dim = n + 1
        lv = _liouvillian(dim, s.detuning, s.eps, s.down, s.up)
        rho, resid = _solve_stationary(lv, dim)
        rho = 0.5 * (rho + rho.conj().T)
        rho /= np.trace(rho).real
        scale = max(1.0, s.eps, s.eps**2)
        if resid > 1e-8 * scale:
            raise SteadyStateError(
                f"stationarity residual {resid:.3e} too large (n_max={n}); generator is ill-conditioned"
            )
        state = TruncatedDensityMatrix(rho, residual=resid)
        if state.top_population < TOP_POPULATION_LIMIT:
            return state
        if not auto_extend or n >= MAX_NMAX:
            state.converged = False
            state.notes.append(
                f"top Fock population {state.top_population:.3e} >= {TOP_POPULATION_LIMIT} at n_max={n}"
            )
            return state
        n = min(2 * n, MAX_NMAX)


def evolve_to_steady_state(
    resonator_f0: float,
    drive: DriveSpec,
    baths: Sequence[BathSpec],
    n_max: int,
    t_final: float = 60.0,
) -> TruncatedDensityMatrix:
    """Integrate d rho/dt from vacuum with fixed-step RK4 for ``t_final`` units of 1/kappa_t.

    Slow but independent of the linear solve in :func:`steady_state`.
    """
    s = _scaled_problem(resonator_f0, drive, baths)
    dim = n_max + 1
    lv = _liouvillian(dim, s.detuning, s.eps, s.down, s.up)
    x = np.zeros(dim * dim, dtype=complex)
    x[0] = 1.0
    # Largest decay rate ~ n_max * max_rate, plus coherent frequencies.
    stiff = dim * (sum(s.down) + sum(s.up)) + dim * abs(s.detuning) + 2 * s.eps * math.sqrt(dim)
    steps = int(math.ceil(t_final * stiff / 1.5)) + 10
    dt = t_final / steps
    for _ in range(steps):
        k1 = lv @ x
        k2 = lv @ (x + 0.5 * dt * k1)
        k3 = lv @ (x + 0.5 * dt * k2)
        k4 = lv @ (x + dt * k3)
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    rho = x.reshape((dim, dim), order="F")
    rho = 0.5 * (rho + rho.conj().T)
    return TruncatedDensityMatrix(rho / np.trace(rho).real, residual=float(np.linalg.norm(lv @ x)))


def _occupation_factors(f0: float, temperature: float):
    """(1 + n, n) written as 1/(1 - e^-x) and 1/(e^x - 1)."""
    n = bose_einstein(f0, temperature)
    return 1.0 + n, n


def bath_power_from_state(rho: TruncatedDensityMatrix, bath: BathSpec, f0: float) -> float:
    """Net power flowing from the resonator into ``bath`` for the state ``rho``.

    Explicit population sum (hbar omega0^2 / Q) sum_r (r+1) [rho_{r+1}(1+n) - rho_r n].
    Raises if the state was flagged as unconverged.
    """
    if not rho.converged:
        raise SteadyStateError("state is not converged in the Fock cutoff; " + "; ".join(rho.notes))
    omega0 = 2.0 * math.pi * f0
    up, dn = _occupation_factors(f0, bath.temperature)
    p = rho.populations
    r = np.arange(p.size)
    # Zero-padded beyond the cutoff: emission from r+1 <= N, absorption from r <= N.
    emit = np.sum((r[:-1] + 1) * p[1:]) * up
    absorb = np.sum((r + 1) * p) * dn
    return hbar * omega0**2 / bath.quality_factor * float(emit - absorb)


def drive_power_from_state(rho: TruncatedDensityMatrix, drive: DriveSpec, f0: float) -> float:
    """Rate of energy injection by the drive, counted in quanta hbar*omega0."""
    omega0 = 2.0 * math.pi * f0
    eps = drive.amplitude_Lambda / (2.0 * hbar)
    return -2.0 * hbar * omega0 * eps * rho.expect_a().imag


def driven_bath_power(
    f0: float, drive: DriveSpec, baths: Sequence[BathSpec], index: int, n_max: int | None = None
) -> float:
    """Power into ``baths[index]`` caused by the drive.

    The undriven steady state is subtracted so that heat flowing between baths
    at different temperatures does not count.  When all baths share one
    temperature the subtracted term is zero.
    """
    driven = steady_state(f0, drive, baths, n_max)
    p = bath_power_from_state(driven, baths[index], f0)
    if len({b.temperature for b in baths}) > 1:
        idle = steady_state(f0, DriveSpec(0.0, drive.frequency_Omega), baths, n_max)
        p -= bath_power_from_state(idle, baths[index], f0)
    return p


def steady_power_analytic(drive: DriveSpec, f0: float, q_total: float, q_bath: float) -> float:
    """Closed-form steady power into one bath."""
    if not (f0 > 0 and q_total > 0 and q_bath > 0):
        raise ValueError("f0, q_total and q_bath must be positive")
    x = drive.frequency_Omega / f0 - 1.0
    return drive.amplitude_Lambda**2 / hbar * (q_total**2 / q_bath) / (1.0 + (2.0 * q_total) ** 2 * x**2)


def drive_amplitude_from_input_power(p_in: float, q_feedline: float, f0: float | None = None) -> float:
    """Drive amplitude Lambda = sqrt(2 hbar P_in / Q_f).

    Chosen so the closed-form bath power equals the circuit-theory Lorentzian
    for the same input power.  ``f0`` does not enter; it is accepted for
    call-site symmetry.
    """
    if not (p_in > 0 and q_feedline > 0):
        raise ValueError("p_in and q_feedline must be positive")
    return math.sqrt(2.0 * hbar * p_in / q_feedline)


def truncation_error_bound(rho: TruncatedDensityMatrix, bath: BathSpec, f0: float) -> float:
    """Crude bound on the bath power error from the Fock cutoff (watts)."""
    omega0 = 2.0 * math.pi * f0
    up, _ = _occupation_factors(f0, bath.temperature)
    return hbar * omega0**2 / bath.quality_factor * up * rho.dimension * max(rho.top_population, 0.0) + 1e-9 * abs(
        bath_power_from_state(rho, bath, f0)
    )


def circuit_equivalence_table(qf, p_in: float, n_max: int = DEFAULT_NMAX, points: int = 11, span: float = 3.0):
    """Bolometer power from the master equation, the closed form and the circuit Lorentzian.

    ``qf`` is a :class:`~thermospec.circuit.QualityFactors`; all baths are at
    zero temperature.  Rows are (drive frequency, numeric, analytic,
    Lorentzian, relative error numeric vs analytic, relative error numeric vs
    Lorentzian) over ``points`` drive frequencies within +/- span * gamma_t.
    """
    from .circuit import power_to_bolometer_lorentzian

    lam = drive_amplitude_from_input_power(p_in, qf.q_feedline)
    baths = [BathSpec(qf.q_internal), BathSpec(qf.q_feedline), BathSpec(qf.q_bolometer)]
    rows = []
    for f in qf.f0 + np.linspace(-span, span, points) * qf.gamma_t:
        drive = DriveSpec(lam, f)
        rho = steady_state(qf.f0, drive, baths, n_max)
        num = bath_power_from_state(rho, baths[2], qf.f0)
        ana = steady_power_analytic(drive, qf.f0, qf.q_total, qf.q_bolometer)
        lor = float(power_to_bolometer_lorentzian(f, qf, p_in))
        rows.append((f, num, ana, lor, abs(num - ana) / ana, abs(num - lor) / lor))
    return np.array(rows)
