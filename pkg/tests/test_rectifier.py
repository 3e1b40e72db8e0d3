import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _oracles import closed_form_chart
from polycycle_lab.errors import DomainError, NonContracting
from polycycle_lab.map_models import PowerLawModel
from polycycle_lab.rectifier import (build_chart, chart_residual, chart_sequence, rectify,
                                     rectify_contracting_inverse)


def test_double_square_closed_form():
    m = PowerLawModel(C=2.0, Lambda=2.0, additive_eps=False)
    # 2x^2 at x = 0.1: ln(ln 10 + ln 2) = 0.4758849953271107
    assert rectify(m, 0.1, tol=1e-13) == pytest.approx(0.4758849953271107, abs=1e-12)


def test_contracting_map_through_its_inverse():
    m = PowerLawModel(C=1.5, Lambda=0.5)
    # the inverse is (x/1.5)^2, i.e. C' = 1/2.25 and Lambda' = 2
    want = closed_form_chart(0.01, 1 / 2.25, 2.0)
    assert want == pytest.approx(1.6893760735, abs=1e-9)
    assert rectify_contracting_inverse(m, 0.01, tol=1e-13) == pytest.approx(want, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.2, 4.0), st.floats(0.5, 4.0), st.floats(-25.0, -2.5))
def test_closed_form_property(lam, C, log10x):
    m = PowerLawModel(C=C, Lambda=lam, additive_eps=False)
    x = 10.0**log10x
    if not -math.log(x) > 2 * math.log(C) / (lam - 1) + 1:
        return  # outside the basin of 0
    assert rectify(m, x, tol=1e-12) == pytest.approx(closed_form_chart(x, C, lam), abs=1e-10)


def test_basin_check():
    m = PowerLawModel(C=2.0, Lambda=2.0, additive_eps=False)
    with pytest.raises(NonContracting):
        rectify(m, 0.6)  # 2x^2 > x above the repelling point 1/2
    with pytest.raises(DomainError):
        rectify(PowerLawModel(Lambda=0.5), 0.1)


def test_partial_values_converge():
    m = PowerLawModel(C=2.0, Lambda=2.0, a=0.1, additive_eps=False)
    seq = chart_sequence(m, 0.05, 60)
    d = np.abs(np.diff(seq))
    assert (d[3:40] < d[2:39]).all()
    assert seq[-1] == pytest.approx(rectify(m, 0.05), abs=1e-9)


@pytest.mark.parametrize("model", [
    PowerLawModel(C=2.0, Lambda=2.0, a=0.2, beta=0.5, additive_eps=False),
    PowerLawModel(C=1.5, Lambda=0.5, a=-0.2, beta=2.0),
    PowerLawModel(C=1.0, Lambda=0.8, a=0.1, beta=1.0),
])
def test_conjugacy(model):
    chart = build_chart(model, tol=1e-11)
    for x in np.geomspace(1e-2, 1e-12, 9):
        assert chart_residual(chart, x) < 1e-10


def test_chart_is_increasing_towards_zero():
    chart = build_chart(PowerLawModel(Lambda=0.5, a=0.1, beta=1.0))
    xs = np.geomspace(1e-2, 1e-30, 20)
    vals = [chart(x) for x in xs]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_normalization_constant_stays_bounded():
    chart = build_chart(PowerLawModel(C=1.5, Lambda=0.5, a=0.1, beta=1.0))
    scaled = [abs(chart(x) - math.log(-math.log(x))) * -math.log(x) for x in chart.probes]
    assert max(scaled) < 2.0
    assert scaled[-1] <= 1.5 * scaled[0]
    assert chart.normalization == pytest.approx(max(scaled), rel=1e-6)


def test_eps_moves_the_attractor_off_zero():
    # sqrt(x) + eps has no preimage below eps, so the inverse orbit cannot reach 0
    chart = build_chart(PowerLawModel(Lambda=0.5, additive_eps=False))
    assert chart_residual(chart, 1e-3) < 1e-10
    with pytest.raises(DomainError):
        build_chart(PowerLawModel(Lambda=0.5), eps=1e-30)
