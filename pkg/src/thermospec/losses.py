"""Internal-loss analysis: Q_i from a fitted linewidth and the TLS + quasiparticle loss model.

The power dependence of the internal quality factor is modelled as

    1/Q_i = 1/Q_TLS + 1/Q_QP
    Q_TLS = sqrt(1 + (P/P_c)^(beta/2)) / (delta0 * tanh(h f0 / 2 k_B T0))
    Q_QP  = A * exp(-P / P_q)

All powers are watts here; dBm lives only at the I/O boundary.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from .circuit import CircuitAssembly, quality_factors
from .constants import dbm_to_watts, h, k_B

BETA_BOUNDS = (0.05, 10.0)
LOSS_PARAM_NAMES = ("delta_tls0", "beta_exponent", "p_critical", "amplitude_A", "p_quasiparticle")


class UnphysicalLinewidthError(ValueError):
    pass


class LossModelFitError(RuntimeError):
    pass


class IdentifiabilityError(LossModelFitError):
    def __init__(self, message, parameters):
        super().__init__(message)
        self.parameters = tuple(parameters)


@dataclass(frozen=True)
class InternalQ:
    q_internal: float
    inverse_q_internal: float
    sigma_statistical: float
    q_coupling_band: tuple = (math.nan, math.nan)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["q_coupling_band"] = list(self.q_coupling_band)
        return d


def coupling_loss_terms(assembly: CircuitAssembly) -> tuple[float, float]:
    """(1/Q_f, 1/Q_b) of the small-coupling budget."""
    qf = quality_factors(assembly)
    return 1.0 / qf.q_feedline, 1.0 / qf.q_bolometer


def internal_q_from_linewidth(
    gamma_t: float,
    f0: float,
    assembly_geometry: CircuitAssembly,
    sigma_gamma_t: float = 0.0,
    coupling_fractional_error: float = 0.0,
) -> InternalQ:
    """Internal Q after subtracting the feedline and bolometer loss from gamma_t / f0.

    ``coupling_fractional_error`` is a relative error on both C_f and C_b; it
    maps to a relative error of twice that on each coupling term, applied in
    the same direction, and is returned as a (low, high) band on Q_i.
    """
    if not (gamma_t > 0 and f0 > 0):
        raise ValueError("gamma_t and f0 must be positive")
    inv_f, inv_b = coupling_loss_terms(assembly_geometry)
    coupling = inv_f + inv_b
    inv_qi = gamma_t / f0 - coupling
    if inv_qi < 0:
        raise UnphysicalLinewidthError(
            f"linewidth {gamma_t:.6g} Hz is narrower than the coupling losses alone: "
            f"gamma_t/f0 = {gamma_t / f0:.6e} < 1/Q_f + 1/Q_b = {coupling:.6e} "
            f"(deficit {-inv_qi:.3e})"
        )
    q_i = math.inf if inv_qi == 0 else 1.0 / inv_qi
    sigma = q_i**2 * sigma_gamma_t / f0 if math.isfinite(q_i) else math.inf
    band = (math.nan, math.nan)
    if coupling_fractional_error > 0:
        scale = 2.0 * coupling_fractional_error * coupling
        hi_inv, lo_inv = inv_qi - scale, inv_qi + scale
        band = (1.0 / lo_inv, 1.0 / hi_inv if hi_inv > 0 else math.inf)
    return InternalQ(q_i, inv_qi, sigma, band)


@dataclass(frozen=True)
class LossModelParams:
    delta_tls0: float
    beta_exponent: float
    p_critical: float
    amplitude_A: float
    p_quasiparticle: float
    f0: float
    t0: float

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not v > 0:
                raise ValueError(f"{k} must be positive")

    @classmethod
    def reference(cls) -> "LossModelParams":
        """Parameter set reported for the measured Nb resonator."""
        return cls(
            delta_tls0=5e-4,
            beta_exponent=2.2,
            p_critical=dbm_to_watts(-120.79),
            amplitude_A=2.3e5,
            p_quasiparticle=dbm_to_watts(-103.1),
            f0=7.026e9,
            t0=0.0524,
        )

    def free(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in LOSS_PARAM_NAMES])

    def with_free(self, values) -> "LossModelParams":
        return LossModelParams(*map(float, values), f0=self.f0, t0=self.t0)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LossModelQ:
    q_internal: np.ndarray | float
    q_tls: np.ndarray | float
    q_qp: np.ndarray | float


def _thermal_factor(f0, t0):
    return math.tanh(h * f0 / (2.0 * k_B * t0))


def loss_model_q(p_in, params: LossModelParams) -> LossModelQ:
    p = np.asarray(p_in, dtype=float)
    if np.any(p <= 0):
        raise ValueError("p_in must be positive")
    th = _thermal_factor(params.f0, params.t0)
    q_tls = np.sqrt(1.0 + (p / params.p_critical) ** (params.beta_exponent / 2.0)) / (params.delta_tls0 * th)
    q_qp = params.amplitude_A * np.exp(-p / params.p_quasiparticle)
    q = 1.0 / (1.0 / q_tls + 1.0 / q_qp)
    if p.ndim == 0:
        return LossModelQ(float(q), float(q_tls), float(q_qp))
    return LossModelQ(q, q_tls, q_qp)


def loss_model_jacobian(p_in, params: LossModelParams) -> np.ndarray:
    """dQ_i / d(delta0, beta, P_c, A, P_q), shape (len(p_in), 5)."""
    p = np.atleast_1d(np.asarray(p_in, dtype=float))
    th = _thermal_factor(params.f0, params.t0)
    d, beta, pc, a, pq = params.free()
    ratio = p / pc
    r = ratio ** (beta / 2.0)
    s = np.sqrt(1.0 + r)
    q_t = s / (d * th)
    q_q = a * np.exp(-p / pq)
    q = 1.0 / (1.0 / q_t + 1.0 / q_q)
    wt = (q / q_t) ** 2
    wq = (q / q_q) ** 2
    dqt_dr = 1.0 / (2.0 * s * d * th)
    jac = np.empty((p.size, 5))
    jac[:, 0] = wt * (-q_t / d)
    jac[:, 1] = wt * dqt_dr * r * np.log(ratio) / 2.0
    jac[:, 2] = wt * dqt_dr * (-(beta / 2.0) * r / pc)
    jac[:, 3] = wq * q_q / a
    jac[:, 4] = wq * q_q * p / pq**2
    return jac


@dataclass
class LossModelFit:
    params: LossModelParams
    covariance: np.ndarray
    cost: float
    n_points: int
    starts_tried: int
    diagnostics: list = field(default_factory=list)

    @property
    def stderr(self) -> dict:
        err = np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))
        return dict(zip(LOSS_PARAM_NAMES, map(float, err)))

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "stderr": self.stderr,
            "covariance": np.asarray(self.covariance).tolist(),
            "cost": self.cost,
            "n_points": self.n_points,
            "starts_tried": self.starts_tried,
            "diagnostics": list(self.diagnostics),
        }


def _check_coverage(p, q):
    i_max = int(np.argmax(q))
    if i_max == p.size - 1:
        raise IdentifiabilityError(
            "Q_i rises across the whole power range (no quasiparticle roll-off); "
            "amplitude_A and p_quasiparticle are unidentifiable",
            ("amplitude_A", "p_quasiparticle"),
        )
    if i_max == 0:
        raise IdentifiabilityError(
            "Q_i falls across the whole power range (no TLS saturation rise); "
            "delta_tls0, beta_exponent and p_critical are unidentifiable",
            ("delta_tls0", "beta_exponent", "p_critical"),
        )


def fit_loss_model(
    points: Sequence[tuple],
    f0: float,
    t0: float,
    grid: int = 5,
) -> LossModelFit:
    """Weighted least squares of the TLS + QP model over (p_in [W], Q_i, sigma_Q) points.

    f0 and t0 stay fixed.  The five free parameters are fitted in log space
    (beta linearly) from a grid of P_c and P_q starts; the lowest cost wins.
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError("points must be (p_in, q_i, sigma_q) triples")
    if arr.shape[0] < 7:
        raise LossModelFitError(f"need at least 7 points, got {arr.shape[0]}")
    arr = arr[np.argsort(arr[:, 0])]
    p, q, sig = arr.T
    if np.any(p <= 0) or np.any(q <= 0) or np.any(sig <= 0):
        raise ValueError("p_in, q_i and sigma_q must all be positive")
    _check_coverage(p, q)

    th = _thermal_factor(f0, t0)
    template = LossModelParams(1.0, 1.0, 1.0, 1.0, 1.0, f0, t0)

    def unpack(theta):
        return template.with_free([math.exp(theta[0]), theta[1], math.exp(theta[2]), math.exp(theta[3]), math.exp(theta[4])])

    def resid(theta):
        return (loss_model_q(p, unpack(theta)).q_internal - q) / sig

    def jac(theta):
        prm = unpack(theta)
        chain = np.array([prm.delta_tls0, 1.0, prm.p_critical, prm.amplitude_A, prm.p_quasiparticle])
        return loss_model_jacobian(p, prm) * chain / sig[:, None]

    delta_start = 1.0 / (th * q[0])
    a_start = 2.0 * float(np.max(q))
    pc_grid = np.geomspace(p[0], p[-1], grid)
    pq_grid = np.geomspace(p[int(np.argmax(q))], p[-1], grid)
    # beta is kept in a physically sensible window; the logs are unbounded.
    lower = np.array([-np.inf, BETA_BOUNDS[0], -np.inf, -np.inf, -np.inf])
    upper = np.array([np.inf, BETA_BOUNDS[1], np.inf, np.inf, np.inf])
    best = None
    tried = 0
    for pc, pq in itertools.product(pc_grid, pq_grid):
        theta0 = np.array([math.log(delta_start), 2.0, math.log(pc), math.log(a_start), math.log(pq)])
        tried += 1
        try:
            with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
                sol = optimize.least_squares(resid, theta0, jac=jac, method="trf", x_scale="jac",
                                             bounds=(lower, upper), xtol=1e-14, ftol=1e-14,
                                             gtol=1e-14, max_nfev=3000)
        except (ValueError, FloatingPointError, OverflowError):
            continue
        if not np.all(np.isfinite(sol.x)):
            continue
        if best is None or sol.cost < best.cost:
            best = sol
    if best is None:
        raise LossModelFitError("no start converged")

    prm = unpack(best.x)
    jw = loss_model_jacobian(p, prm) / sig[:, None]
    diagnostics = []
    try:
        cov = np.linalg.inv(jw.T @ jw)
    except np.linalg.LinAlgError:
        cov = np.full((5, 5), np.inf)
        diagnostics.append("singular normal matrix")
    rel = np.sqrt(np.clip(np.diag(cov), 0, None)) / prm.free()
    for name, rv in zip(LOSS_PARAM_NAMES, rel):
        if not rv < 1.0:
            diagnostics.append(f"{name} poorly constrained (relative stderr {rv:.2g})")
    if best.status <= 0:
        diagnostics.append(f"optimizer stopped without convergence: {best.message}")
    return LossModelFit(prm, cov, float(best.cost), int(p.size), tried, diagnostics)
