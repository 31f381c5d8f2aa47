import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracmag import DomainError, FractionalParams, critical_exponent, cs_constant

from oracles import CS_075


def test_cs_half_is_one_over_pi_squared():
    assert cs_constant(0.5) == pytest.approx(1.0 / math.pi ** 2, rel=1e-12)


def test_cs_three_quarters_regression():
    assert cs_constant(0.75) == pytest.approx(CS_075, rel=1e-13)


def test_cs_vanishes_at_zero():
    assert cs_constant(1e-9) < 1e-8
    assert cs_constant(1e-9) > 0


@pytest.mark.parametrize("s", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_cs_domain(s):
    with pytest.raises(DomainError):
        cs_constant(s)


@given(st.floats(min_value=1e-4, max_value=1 - 1e-4))
def test_cs_matches_mpmath_and_is_positive(s):
    with mp.workdps(25):
        ref = s * mp.power(2, 2 * s) * mp.gamma((3 + 2 * mp.mpf(s)) / 2) / (mp.pi ** 1.5 * mp.gamma(1 - mp.mpf(s)))
    assert cs_constant(s) > 0
    assert cs_constant(s) == pytest.approx(float(ref), rel=1e-12)


def test_cs_continuity():
    s = np.linspace(0.01, 0.99, 400)
    c = np.array([cs_constant(x) for x in s])
    assert np.all(c > 0)
    assert np.max(np.abs(np.diff(c))) < 0.05


def test_params_invariants():
    p = FractionalParams(0.5, 3.0)
    assert p.p_crit == pytest.approx(3.0)
    assert p.is_critical
    assert p.c_s == cs_constant(0.5)
    assert FractionalParams.critical(0.25).p == pytest.approx(critical_exponent(0.25))
    assert critical_exponent(0.75) == pytest.approx(4.0)


@pytest.mark.parametrize("s,p", [(0.5, 2.0), (0.5, 3.5), (1.2, 3.0), (0.5, float("nan"))])
def test_params_reject(s, p):
    with pytest.raises(ValueError):
        FractionalParams(s, p)
