import math

import numpy as np
import pytest

from thermospec.bolometer import (
    BolometerBody,
    BolometerError,
    ThermalOperatingPoint,
    electron_phonon_power,
    figures_of_merit,
    linearized_power,
    photon_number,
    single_photon_power,
    temperature_from_power,
    thermal_conductance,
)


@pytest.fixture
def body():
    return BolometerBody(2e9, 2.52e-20)


def test_electron_phonon_examples(body):
    assert electron_phonon_power(ThermalOperatingPoint(0.05, 0.05), body) == 0.0
    p = electron_phonon_power(ThermalOperatingPoint(0.13, 0.05), body)
    assert p == pytest.approx(5.04e-11 * (0.13**5 - 0.05**5), rel=1e-12)
    assert p == pytest.approx(1.856e-15, rel=1e-3)
    loaded = BolometerBody(2e9, 2.52e-20, parasitic_power=2e-15)
    assert electron_phonon_power(ThermalOperatingPoint(0.13, 0.05), loaded) == pytest.approx(-0.144e-15, rel=0.01)


def test_temperature_round_trip(body):
    assert temperature_from_power(0.0, 0.05, body) == pytest.approx(0.05, rel=1e-15)
    assert temperature_from_power(1.856e-15, 0.05, body) == pytest.approx(0.13, rel=1e-3)
    for t in np.linspace(0.04, 0.5, 40):
        p = electron_phonon_power(ThermalOperatingPoint(t, 0.05), body)
        assert temperature_from_power(p, 0.05, body) == pytest.approx(t, rel=1e-12)
    with pytest.raises(BolometerError):
        temperature_from_power(-1e-12, 0.05, body)


def test_negative_power_is_allowed(body):
    loaded = BolometerBody(2e9, 2.52e-20, parasitic_power=2e-15)
    t = temperature_from_power(-1e-16, 0.05, loaded)
    assert 0.05 < t < temperature_from_power(0.0, 0.05, loaded)


def test_linearized_power(body):
    assert linearized_power(0.0, 0.05, body) == 0.0
    assert linearized_power(1e-3, 0.05, body) == pytest.approx(1.575e-18, rel=1e-12)
    exact = electron_phonon_power(ThermalOperatingPoint(0.0525, 0.05), body)
    assert abs(linearized_power(0.0025, 0.05, body) / exact - 1) < 0.11
    notes = []
    linearized_power(0.01, 0.05, body, notes)
    assert notes
    for dt in (1e-5, 1e-4, 1e-3, 5e-3):
        exact = electron_phonon_power(ThermalOperatingPoint(0.05 + dt, 0.05), body)
        ratio = linearized_power(dt, 0.05, body) / exact
        assert 1 - 3 * dt / 0.05 <= ratio <= 1


def test_conductance_scaling(body):
    assert thermal_conductance(0.2, body) == pytest.approx(16 * thermal_conductance(0.1, body), rel=1e-14)
    n1 = figures_of_merit(body, 0.1, 0.05, 1716, 7.026e9).nep_th
    n2 = figures_of_merit(body, 0.2, 0.05, 1716, 7.026e9).nep_th
    assert n2 / n1 == pytest.approx(8.0, rel=1e-12)


def test_photon_number():
    pn = photon_number(1.198e-16, 1716, 7.026e9, 0.130)
    assert pn.simplified == pytest.approx(1.0, rel=0.01)
    assert pn.full - pn.simplified == pytest.approx(pn.thermal)
    zero = photon_number(0.0, 1716, 7.026e9, 0.130)
    assert zero.full == pytest.approx(0.081, abs=0.001)
    double = photon_number(2.396e-16, 1716, 7.026e9, 0.130)
    assert double.simplified == pytest.approx(2 * pn.simplified, rel=1e-14)


def test_single_photon_power():
    assert single_photon_power(1716, 7.026e9) == pytest.approx(11.9e-17, rel=0.01)


def test_figures_of_merit():
    body = BolometerBody(2e9, 2.52e-20, 2e-15, 71, 8.5e-12, 12.23)
    fom = figures_of_merit(body, 0.130, 0.050, 1716, 7.026e9)
    assert fom.nep_th == pytest.approx(2.59e-19, rel=0.01)
    assert fom.tau == pytest.approx(147.7e-6, rel=1e-3)
    assert fom.cutoff_frequency == pytest.approx(12.23 / (2 * math.pi * 8.5e-12), rel=1e-14)
    assert fom.cutoff_frequency == pytest.approx(229e9, rel=0.005)
    assert "T_b" in fom.nep_th_convention and "T0" in fom.tau_convention
