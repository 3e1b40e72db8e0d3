import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from polycycle_lab.errors import DomainError
from polycycle_lab.numeric_core import (UNDERFLOW, LogLogCoord, NegLog, circle_reduce,
                                        detect_rational, power_law_step_u, x_from_xi,
                                        xi_from_u, xi_from_x)


def test_xi_of_known_points():
    assert xi_from_x(math.exp(-1.0)) == pytest.approx(0.0, abs=1e-15)
    assert xi_from_x(0.25) == pytest.approx(math.log(math.log(4.0)), rel=1e-15)


def test_xi_near_one_keeps_relative_accuracy():
    x = 1.0 - 2.0**-40
    # -ln x = 2^-40 + 2^-81 + ...
    assert xi_from_x(x) == pytest.approx(math.log(2.0**-40), abs=1e-12)


def test_underflow_sentinel():
    assert x_from_xi(800.0) is UNDERFLOW
    assert x_from_xi(7.0) is UNDERFLOW  # exp(-1097) is below the subnormals
    assert not UNDERFLOW
    assert x_from_xi(1.0) == pytest.approx(math.exp(-math.e))


@pytest.mark.parametrize("x", [0.0, 1.0, -0.5, 2.0])
def test_x_outside_unit_interval(x):
    with pytest.raises(DomainError):
        xi_from_x(x)


def test_negative_neglog_rejected():
    with pytest.raises(DomainError):
        NegLog(-1.0)
    with pytest.raises(DomainError):
        xi_from_u(0.0)


def test_loglog_order_reverses_x():
    a, b = LogLogCoord.from_x(0.1), LogLogCoord.from_x(0.01)
    assert a < b
    assert a.neglog().u == pytest.approx(-math.log(0.1))
    assert NegLog(3.0).loglog().xi == pytest.approx(math.log(3.0))


@given(st.floats(min_value=1e-300, max_value=0.999999))
def test_roundtrip_x(x):
    xi = xi_from_x(x)
    assert x_from_xi(xi) == pytest.approx(x, rel=1e-12)


def test_power_law_step():
    assert power_law_step_u(2.0, 2.0, math.log(2.0)) == pytest.approx(4.0 - math.log(2.0))
    with pytest.raises(DomainError):
        power_law_step_u(0.1, 1.0, 1.0)


@given(st.floats(-1e6, 1e6), st.floats(0.01, 100.0))
def test_circle_reduce_range(t, c):
    r = circle_reduce(t, c)
    assert 0.0 <= r < c


def test_circle_reduce_arrays_and_tiny_negative():
    r = circle_reduce(np.array([-1e-18, 0.5, 1.5]), 1.0)
    assert list(r) == [0.0, 0.5, 0.5]
    assert circle_reduce(-1e-18, 1.0) == 0.0
    with pytest.raises(DomainError):
        circle_reduce(1.0, 0.0)


def test_detect_rational():
    assert detect_rational(0.5) == Fraction(1, 2)
    assert detect_rational(0.4) == Fraction(2, 5)
    assert detect_rational(math.log(1.25) / math.log(2.0)) is None
    # the golden conjugate sits within 6.5e-13 absolute of 514229/832040
    assert detect_rational((math.sqrt(5) - 1) / 2) is None
    assert detect_rational(1 / 3 + 1e-15) == Fraction(1, 3)
    assert detect_rational(0.0) == 0
