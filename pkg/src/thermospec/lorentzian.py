"""Four-parameter Lorentzian line fitting.

    value(f) = baseline + s * amplitude * (g/2)^2 / ((f - f0)^2 + (g/2)^2)

with s = +1 for a peak (absorbed power, temperature) and s = -1 for a dip
(thermometer voltage).  The fit runs in scaled coordinates so that every
parameter is O(1), using Levenberg-Marquardt with the analytic Jacobian.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

PEAK, DIP = "peak", "dip"
N_PARAMS = 4


class FitError(RuntimeError):
    pass


def lorentzian(f, f0, gamma, amplitude, baseline, sign=1.0):
    f = np.asarray(f, dtype=float)
    hw2 = (0.5 * gamma) ** 2
    return baseline + sign * amplitude * hw2 / ((f - f0) ** 2 + hw2)


def lorentzian_jacobian(f, f0, gamma, amplitude, baseline, sign=1.0):
    """d value / d (f0, gamma, amplitude, baseline), shape (len(f), 4)."""
    f = np.asarray(f, dtype=float)
    g = 0.5 * gamma
    x = f - f0
    den = x * x + g * g
    shape = g * g / den
    jac = np.empty((f.size, N_PARAMS))
    jac[:, 0] = sign * amplitude * 2.0 * g * g * x / den**2
    jac[:, 1] = sign * amplitude * g * x * x / den**2
    jac[:, 2] = sign * shape
    jac[:, 3] = 1.0
    return jac


@dataclass
class LorentzianFit:
    center_f0: float
    linewidth_gamma_t: float
    peak_amplitude: float
    baseline: float
    covariance: np.ndarray
    orientation: str
    noise_sigma: float = 0.0
    cost: float = 0.0
    n_points: int = 0
    reliable: bool = True
    diagnostics: list = field(default_factory=list)

    @property
    def sign(self) -> float:
        return 1.0 if self.orientation == PEAK else -1.0

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    @property
    def quality_factor(self) -> float:
        return self.center_f0 / self.linewidth_gamma_t

    def __call__(self, f):
        return lorentzian(f, self.center_f0, self.linewidth_gamma_t, self.peak_amplitude, self.baseline, self.sign)

    def to_dict(self) -> dict:
        err = self.stderr
        return {
            "center_f0": self.center_f0,
            "linewidth_gamma_t": self.linewidth_gamma_t,
            "peak_amplitude": self.peak_amplitude,
            "baseline": self.baseline,
            "orientation": self.orientation,
            "stderr": {k: float(v) for k, v in zip(("center_f0", "linewidth_gamma_t", "peak_amplitude", "baseline"), err)},
            "covariance": np.asarray(self.covariance).tolist(),
            "noise_sigma": self.noise_sigma,
            "cost": self.cost,
            "n_points": self.n_points,
            "reliable": self.reliable,
            "diagnostics": list(self.diagnostics),
        }


def _edge_median(y: np.ndarray) -> float:
    k = max(2, y.size // 10)
    return float(np.median(np.concatenate([y[:k], y[-k:]])))


def _half_max_width(f, excess, i_ext):
    """Full width at half maximum of ``excess`` (positive peak) around index ``i_ext``."""
    half = 0.5 * excess[i_ext]
    left = right = None
    i = i_ext
    while i > 0:
        if excess[i - 1] < half:
            t = (excess[i] - half) / (excess[i] - excess[i - 1])
            left = f[i] - t * (f[i] - f[i - 1])
            break
        i -= 1
    i = i_ext
    while i < f.size - 1:
        if excess[i + 1] < half:
            t = (excess[i] - half) / (excess[i] - excess[i + 1])
            right = f[i] + t * (f[i + 1] - f[i])
            break
        i += 1
    if left is None and right is None:
        return None
    if left is None:
        return 2.0 * (right - f[i_ext])
    if right is None:
        return 2.0 * (f[i_ext] - left)
    return right - left


def initial_guess(f, y, orientation):
    """Deterministic start: edge-median baseline, extremum, half-max width."""
    sign = 1.0 if orientation == PEAK else -1.0
    base = _edge_median(y)
    excess = sign * (y - base)
    i_ext = int(np.argmax(excess))
    amp = float(excess[i_ext])
    if not amp > 0:
        raise FitError("trace has no extremum above its edge baseline")
    width = _half_max_width(f, excess, i_ext)
    if width is None or not width > 0:
        width = 0.5 * (f[-1] - f[0])
    return np.array([f[i_ext], width, amp, base])


def detect_orientation(y: np.ndarray) -> str:
    base = _edge_median(y)
    return PEAK if np.max(y) - base >= base - np.min(y) else DIP


def fit_lorentzian(
    frequencies,
    values,
    orientation: str | None = None,
    sigma=None,
    max_restarts: int = 3,
) -> LorentzianFit:
    """Least-squares Lorentzian fit of a single resonance.

    ``sigma`` (scalar or per-point) gives absolute value uncertainties; when
    omitted, the noise level is estimated from residuals more than three
    linewidths from the center (all residuals if too few points lie there).
    """
    f = np.asarray(frequencies, dtype=float)
    y = np.asarray(values, dtype=float)
    if f.shape != y.shape or f.ndim != 1:
        raise FitError("frequencies and values must be 1-D arrays of equal length")
    if f.size < 2 * N_PARAMS:
        raise FitError(f"need at least {2 * N_PARAMS} points, got {f.size}")
    if np.any(np.diff(f) <= 0):
        raise FitError("frequencies must be strictly increasing")
    if not np.all(np.isfinite(y)):
        raise FitError("trace contains non-finite values")
    if not np.ptp(y) > 1e-12 * float(np.max(np.abs(y))):
        raise FitError("trace is flat; nothing to fit")
    orientation = orientation or detect_orientation(y)
    if orientation not in (PEAK, DIP):
        raise ValueError(f"orientation must be {PEAK!r} or {DIP!r}")
    sign = 1.0 if orientation == PEAK else -1.0

    p0 = initial_guess(f, y, orientation)
    diagnostics = []
    # Scaled coordinates: frequency in units of the width guess, values in units of the amplitude guess.
    f_c, f_s = float(np.mean(f)), float(p0[1])
    y_c, y_s = float(p0[3]), float(p0[2])
    x = (f - f_c) / f_s
    v = (y - y_c) / y_s
    if sigma is None:
        w = np.ones_like(v)
    else:
        sig = np.broadcast_to(np.asarray(sigma, dtype=float), f.shape)
        if np.any(sig <= 0):
            raise ValueError("sigma must be positive")
        w = y_s / sig

    def resid(q):
        return w * (lorentzian(x, q[0], q[1], q[2], q[3], sign) - v)

    def jac(q):
        return w[:, None] * lorentzian_jacobian(x, q[0], q[1], q[2], q[3], sign)

    start = np.array([(p0[0] - f_c) / f_s, 1.0, 1.0, 0.0])
    starts = [start]
    for factor in (0.5, 2.0, 0.25)[:max_restarts]:
        s = start.copy()
        s[1] *= factor
        starts.append(s)

    best = None
    for s in starts:
        try:
            sol = optimize.least_squares(
                resid, s, jac=jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000
            )
        except (ValueError, np.linalg.LinAlgError):
            continue
        if not np.all(np.isfinite(sol.x)):
            continue
        if best is None or sol.cost < best.cost:
            best = sol
        if sol.status > 0 and sol.x[1] != 0:
            break
    if best is None or best.status <= 0:
        cost = None if best is None else best.cost
        raise FitError(f"Lorentzian fit did not converge after {len(starts)} starts (best cost {cost})")

    q = best.x.copy()
    q[1] = abs(q[1])
    scale = np.array([f_s, f_s, y_s, y_s])
    params = np.array([f_c + f_s * q[0], f_s * q[1], y_s * q[2], y_c + y_s * q[3]])

    jm = lorentzian_jacobian(x, *q, sign)
    jw = w[:, None] * jm
    try:
        cov_s = np.linalg.inv(jw.T @ jw)
    except np.linalg.LinAlgError:
        cov_s = np.full((N_PARAMS, N_PARAMS), np.inf)
        diagnostics.append("singular normal matrix; covariance undefined")

    r_scaled = lorentzian(x, *q, sign) - v
    noise = 0.0
    if sigma is None:
        off = np.abs(f - params[0]) > 3.0 * params[1]
        if off.sum() >= 10:
            r_off = r_scaled[off]
            var_s = float(np.sum((r_off - r_off.mean()) ** 2) / (off.sum() - 1))
        else:
            var_s = float(np.sum(r_scaled**2) / (f.size - N_PARAMS))
            diagnostics.append("fewer than 10 off-resonance points; noise estimated from all residuals")
        cov_s = cov_s * var_s
        noise = math.sqrt(var_s) * abs(y_s)
    cov = cov_s * np.outer(scale, scale)
    cov = 0.5 * (cov + cov.T)

    span = f[-1] - f[0]
    if span < 2.0 * params[1]:
        diagnostics.append(f"trace spans only {span / params[1]:.2f} linewidths")
    reliable = True
    err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    if not params[2] > 0:
        reliable = False
        diagnostics.append("fitted amplitude has the wrong sign for the orientation")
    elif err[2] > params[2] / 3.0:
        reliable = False
        diagnostics.append(f"amplitude is only {params[2] / err[2]:.2f} sigma above zero")
    if not f[0] <= params[0] <= f[-1]:
        reliable = False
        diagnostics.append("fitted center lies outside the trace")

    return LorentzianFit(
        center_f0=float(params[0]),
        linewidth_gamma_t=float(params[1]),
        peak_amplitude=float(params[2]),
        baseline=float(params[3]),
        covariance=cov,
        orientation=orientation,
        noise_sigma=noise,
        cost=float(best.cost),
        n_points=int(f.size),
        reliable=reliable,
        diagnostics=diagnostics,
    )
