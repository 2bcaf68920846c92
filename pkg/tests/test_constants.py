import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from thermospec.constants import CODATA2018, bose_einstein, dbm_to_watts, h, k_B, watts_to_dbm


def test_reduced_planck():
    assert CODATA2018.reduced_planck_J_s == CODATA2018.planck_J_s / (2 * math.pi)


@pytest.mark.parametrize("dbm, watts", [(0, 1e-3), (-120, 1e-15), (-95, 3.1622776601683794e-13)])
def test_dbm_to_watts(dbm, watts):
    assert dbm_to_watts(dbm) == pytest.approx(watts, rel=1e-14)


def test_watts_to_dbm_examples():
    assert watts_to_dbm(1e-3) == 0.0
    assert watts_to_dbm(1e-15) == pytest.approx(-120, abs=1e-12)
    assert watts_to_dbm(1.198e-16) == pytest.approx(-129.2, abs=0.05)


@given(st.floats(-160, 10))
def test_dbm_round_trip(p):
    assert watts_to_dbm(dbm_to_watts(p)) == pytest.approx(p, rel=1e-12, abs=1e-12)


def test_dbm_monotone():
    p = np.linspace(-160, 10, 500)
    assert np.all(np.diff(dbm_to_watts(p)) > 0)


def test_domain_errors():
    with pytest.raises(ValueError):
        dbm_to_watts(float("nan"))
    with pytest.raises(ValueError):
        watts_to_dbm(0.0)
    with pytest.raises(ValueError):
        bose_einstein(0.0, 1.0)


def test_bose_einstein_examples():
    assert bose_einstein(7.026e9, 0.0) == 0.0
    assert bose_einstein(7.026e9, 0.130) == pytest.approx(0.081, abs=0.001)
    f = 1e9
    t = h * f / (k_B * math.log(2))
    assert bose_einstein(f, t) == pytest.approx(1.0, rel=1e-12)


def test_bose_einstein_rayleigh_jeans():
    f = 1e9
    for x in (0.01, 0.03, 0.049):
        t = h * f / (k_B * x)
        assert bose_einstein(f, t) == pytest.approx(1 / x - 0.5, rel=0.01)


def test_bose_einstein_monotone_in_t():
    t = np.linspace(0.01, 1, 200)
    assert np.all(np.diff(bose_einstein(7e9, t)) > 0)
