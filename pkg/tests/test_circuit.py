import math

import numpy as np
import pytest

from thermospec.circuit import (
    CircuitAssembly,
    LumpedResonator,
    PortCoupling,
    QualityFactors,
    QuarterWaveResonator,
    assembly_for_mode,
    loaded_quality_factors,
    lumped_from_quarter_wave,
    norton_equivalent,
    power_to_bolometer_lorentzian,
    quality_factors,
    shifted_resonance,
    transmission_exact,
)


def test_lumped_reference_values():
    r = lumped_from_quarter_wave(QuarterWaveResonator(50, 7.026e9))
    assert r.capacitance_C == pytest.approx(355.8e-15, rel=1e-3)
    assert r.inductance_L == pytest.approx(1.442e-9, rel=1e-3)
    assert r.resistance_R == math.inf


def test_lumped_third_mode():
    r = lumped_from_quarter_wave(QuarterWaveResonator(50, 3 * 7.026e9))
    assert r.capacitance_C == pytest.approx(118.6e-15, rel=1e-3)
    assert r.inductance_L == pytest.approx(0.4807e-9, rel=1e-3)
    assert r.f0 == pytest.approx(21.078e9, rel=1e-12)


@pytest.mark.parametrize("z0, f", [(50, 7.026e9), (25, 1e9), (75, 3.3e10)])
def test_lumped_resonance_identity(z0, f):
    r = lumped_from_quarter_wave(QuarterWaveResonator(z0, f))
    assert r.f0 == pytest.approx(f, rel=1e-12)
    assert r.z_lc == pytest.approx(4 * z0 / math.pi, rel=1e-12)


def test_internal_q_override_and_alpha():
    r = lumped_from_quarter_wave(QuarterWaveResonator(50, 7e9, internal_q_override=5000))
    assert r.omega0 * r.capacitance_C * r.resistance_R == pytest.approx(5000, rel=1e-12)
    r = lumped_from_quarter_wave(QuarterWaveResonator(50, 7e9, attenuation_length_product=1e-3))
    assert r.resistance_R == pytest.approx(5e4)
    with pytest.raises(ValueError):
        QuarterWaveResonator(50, 7e9, 1e-3, 5000)


def test_norton_limits():
    w = 2 * math.pi * 7.026e9
    r_eff, c_eff = norton_equivalent(PortCoupling(19.6e-15, 12.23), w)
    x = 1 / (w * 19.6e-15)
    assert r_eff == pytest.approx(12.23 + x**2 / 12.23, rel=1e-12)
    assert c_eff == pytest.approx((x / w) / (12.23**2 + x**2), rel=1e-12)
    r_big, _ = norton_equivalent(PortCoupling(19.6e-15, 1e12), w)
    assert r_big > 1e11
    r_strong, c_small = norton_equivalent(PortCoupling(1e-9, 10.0), w)
    assert r_strong == pytest.approx(10.0, rel=1e-3)
    assert c_small < 1e-3 * 1e-9


def test_quality_factor_budget(assembly):
    qf = quality_factors(assembly)
    assert qf.q_feedline == pytest.approx(1681, rel=0.01)
    assert qf.q_bolometer == pytest.approx(1716, rel=0.01)
    assert qf.q_internal == math.inf
    assert 1 / qf.q_total == pytest.approx(1 / qf.q_feedline + 1 / qf.q_bolometer, rel=1e-12)
    assert any("exceeds" in d for d in qf.diagnostics)


def test_quality_factor_symmetric():
    qf = QualityFactors.from_components(math.inf, 2000.0, 2000.0, 7e9)
    assert qf.q_total == pytest.approx(1000.0, rel=1e-12)
    assert qf.gamma_t == pytest.approx(7e9 / 1000.0, rel=1e-12)


def test_shifted_resonance(assembly):
    f = shifted_resonance(assembly)
    assert 0.9 * 7.026e9 < f < 7.026e9
    res = assembly.resonator
    bigger = CircuitAssembly(
        res,
        PortCoupling(2 * assembly.feedline_port.series_capacitance, 25.0),
        PortCoupling(2 * assembly.bolometer_port.series_capacitance, 12.23),
        50.0,
    )
    assert shifted_resonance(bigger) < f


def test_transmission_tail_and_peak(assembly):
    a = assembly.with_internal_q(5000)
    lq = loaded_quality_factors(a)
    peak = transmission_exact(a, lq.f0)
    assert peak == pytest.approx(2 * lq.q_total**2 / (lq.q_feedline * lq.q_bolometer), rel=0.01)
    far = transmission_exact(a, lq.f0 + 150 * lq.gamma_t)
    assert far < 1e-4 * peak


def test_transmission_bounded_and_decoupled(assembly):
    f = np.linspace(5e9, 9e9, 4001)
    s = transmission_exact(assembly, f)
    assert np.all(s >= 0) and s.max() <= 0.5 + 1e-12
    a = CircuitAssembly.from_design(50, 7.026e9, 13.85e-15, 1e-21, 12.23)
    assert transmission_exact(a, f).max() < 1e-9


def test_lorentzian_examples():
    qf = QualityFactors.from_components(math.inf, 1700.0, 1700.0, 7e9)
    assert power_to_bolometer_lorentzian(7e9, qf, 1.0) == pytest.approx(0.5, rel=1e-12)
    half = power_to_bolometer_lorentzian(7e9 + qf.gamma_t / 2, qf, 1.0)
    assert half == pytest.approx(0.25, rel=1e-12)
    f = np.linspace(6.9e9, 7.1e9, 11)
    assert np.allclose(power_to_bolometer_lorentzian(f, qf, 2.0), 2 * power_to_bolometer_lorentzian(f, qf, 1.0))


def test_assembly_invariant():
    res = LumpedResonator(1e-9, 1e-13)
    with pytest.raises(ValueError):
        CircuitAssembly(res, PortCoupling(1e-14, 50.0), PortCoupling(1e-14, 10.0), 50.0)


def test_third_mode(assembly):
    a3 = assembly_for_mode(assembly, 3)
    assert a3.resonator.f0 == pytest.approx(3 * 7.026e9, rel=1e-12)
    assert a3.resonator.capacitance_C == pytest.approx(assembly.resonator.capacitance_C / 3, rel=1e-12)
    with pytest.raises(ValueError):
        assembly_for_mode(assembly, 2)
