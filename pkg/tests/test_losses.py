import math

import numpy as np
import pytest

from thermospec.circuit import quality_factors
from thermospec.constants import dbm_to_watts, h, k_B, watts_to_dbm
from thermospec.losses import (
    IdentifiabilityError,
    LossModelFitError,
    LossModelParams,
    UnphysicalLinewidthError,
    fit_loss_model,
    internal_q_from_linewidth,
    loss_model_jacobian,
    loss_model_q,
)

from test_lorentzian import central_difference

REFERENCE = LossModelParams.reference()
POWERS = dbm_to_watts(np.linspace(-130, -95, 15))


def test_internal_q_round_trip(assembly):
    for q in (500.0, 5000.0, 1e5):
        qf = quality_factors(assembly.with_internal_q(q))
        res = internal_q_from_linewidth(qf.gamma_t, qf.f0, assembly)
        assert res.q_internal == pytest.approx(q, rel=1e-9)


def test_internal_q_boundary_and_error(assembly):
    qf = quality_factors(assembly)
    assert internal_q_from_linewidth(qf.gamma_t, qf.f0, assembly).q_internal > 1e12
    with pytest.raises(UnphysicalLinewidthError, match="deficit"):
        internal_q_from_linewidth(0.9 * qf.gamma_t, qf.f0, assembly)


def test_reference_budget_example(assembly):
    f0 = 7.026e9
    res = internal_q_from_linewidth(f0 * (1 / 1681 + 1 / 1716 + 1 / 5000), f0, assembly)
    assert res.q_internal == pytest.approx(5000, rel=0.1)


def test_coupling_band(assembly):
    qf = quality_factors(assembly.with_internal_q(5000))
    res = internal_q_from_linewidth(qf.gamma_t, qf.f0, assembly, sigma_gamma_t=1e3, coupling_fractional_error=0.02)
    lo, hi = res.q_coupling_band
    assert lo < res.q_internal < hi
    shift = 0.04 * (1 / qf.q_feedline + 1 / qf.q_bolometer)
    assert 1 / lo - 1 / res.q_internal == pytest.approx(shift, rel=1e-9)
    assert res.sigma_statistical == pytest.approx(5000**2 * 1e3 / qf.f0, rel=1e-9)


def test_loss_model_limits():
    th = math.tanh(h * REFERENCE.f0 / (2 * k_B * REFERENCE.t0))
    low = loss_model_q(1e-25, REFERENCE)
    assert low.q_tls == pytest.approx(1 / (REFERENCE.delta_tls0 * th), rel=1e-6)
    assert low.q_qp == pytest.approx(REFERENCE.amplitude_A, rel=1e-9)
    at_pc = loss_model_q(REFERENCE.p_critical, REFERENCE)
    assert at_pc.q_tls == pytest.approx(math.sqrt(2) / (REFERENCE.delta_tls0 * th), rel=1e-12)


def test_loss_model_shape():
    p = dbm_to_watts(np.linspace(-130, -95, 351))
    q = loss_model_q(p, REFERENCE).q_internal
    i = int(np.argmax(q))
    assert 0 < i < p.size - 1
    assert np.all(np.diff(q[: i + 1]) > 0) and np.all(np.diff(q[i:]) < 0)
    assert -110 < watts_to_dbm(p[i]) < -100
    no_qp = LossModelParams(**{**REFERENCE.to_dict(), "amplitude_A": 1e300})
    assert np.all(np.diff(loss_model_q(p, no_qp).q_internal) >= 0)


def test_loss_jacobian_finite_differences():
    rng = np.random.default_rng(9)
    for _ in range(100):
        prm = REFERENCE.with_free(REFERENCE.free() * rng.uniform(0.5, 2.0, 5))
        ana = loss_model_jacobian(POWERS, prm)
        num = central_difference(lambda v: loss_model_q(POWERS, prm.with_free(v)).q_internal, prm.free())
        assert np.max(np.abs(num - ana) / np.abs(ana).max(axis=0)) < 1e-6


def test_fit_noiseless_recovery():
    q = loss_model_q(POWERS, REFERENCE).q_internal
    fit = fit_loss_model(list(zip(POWERS, q, 0.01 * q)), REFERENCE.f0, REFERENCE.t0)
    assert np.allclose(fit.params.free(), REFERENCE.free(), rtol=1e-6)


def test_fit_noisy_monte_carlo():
    rng = np.random.Generator(np.random.PCG64(77))
    q0 = loss_model_q(POWERS, REFERENCE).q_internal
    err = []
    for _ in range(25):
        q = q0 * (1 + 0.03 * rng.normal(size=q0.size))
        fit = fit_loss_model(list(zip(POWERS, q, 0.03 * q0)), REFERENCE.f0, REFERENCE.t0)
        err.append(np.abs(fit.params.free() / REFERENCE.free() - 1))
    err = np.array(err)
    assert np.quantile(err[:, 0], 0.9) < 0.15
    assert np.quantile(err[:, 4], 0.9) < 0.15


def test_fit_flags_unidentifiable():
    no_qp = LossModelParams(**{**REFERENCE.to_dict(), "amplitude_A": 1e300})
    q = loss_model_q(POWERS, no_qp).q_internal
    with pytest.raises(IdentifiabilityError) as info:
        fit_loss_model(list(zip(POWERS, q, 0.01 * q)), REFERENCE.f0, REFERENCE.t0)
    assert "p_quasiparticle" in info.value.parameters
    high = dbm_to_watts(np.linspace(-100, -90, 8))
    q = loss_model_q(high, REFERENCE).q_internal
    with pytest.raises(IdentifiabilityError) as info:
        fit_loss_model(list(zip(high, q, 0.01 * q)), REFERENCE.f0, REFERENCE.t0)
    assert "beta_exponent" in info.value.parameters


def test_fit_needs_seven_points():
    q = loss_model_q(POWERS[:6], REFERENCE).q_internal
    with pytest.raises(LossModelFitError):
        fit_loss_model(list(zip(POWERS[:6], q, q)), REFERENCE.f0, REFERENCE.t0)
