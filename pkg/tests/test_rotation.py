import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polycycle_lab.errors import DomainError
from polycycle_lab.rotation import (Interval, RotationProblem, orbit_frequency, predicted_limit,
                                    rational_orbit_count, tail_window)

GOLDEN = (math.sqrt(5) - 1) / 2


def test_golden_frequency():
    tr = orbit_frequency(RotationProblem(0.0, GOLDEN, Interval(0.1, 0.35)), 10**5)
    assert 0.2485 <= tr.at(10**5) <= 0.2515


def test_whole_circle():
    tr = orbit_frequency(RotationProblem(0.3, GOLDEN, Interval(0.0, 1.0)), 500)
    assert (tr.psi == 1.0).all()


def test_half_rotation():
    tr = orbit_frequency(RotationProblem(0.0, 0.5, Interval(0.4, 0.6)), 10**4)
    assert tr.at(10**4) == 0.5
    p = predicted_limit(0.5, Interval(0.4, 0.6))
    assert p.kind == "bounds" and p.q == 2
    assert tr.limsup_est <= 0.2 + 0.5 and p.holds(tr.liminf_est, tr.limsup_est)


def test_predictions():
    assert predicted_limit(GOLDEN, Interval(0.1, 0.35)).kind == "exact"
    assert predicted_limit(GOLDEN, Interval(0.1, 0.35)).value == pytest.approx(0.25)
    p = predicted_limit(0.0, Interval(0.2, 0.5))
    assert (p.kind, p.q) == ("bounds", 1)
    assert predicted_limit(1 - 1e-15, Interval(0, 0.5)).q == 1
    assert predicted_limit(2.4, Interval(0, 0.5)).q == 5


def test_fixed_orbit_bounds_hold():
    tr = orbit_frequency(RotationProblem(0.3, 0.0, Interval(0.2, 0.5)), 100)
    assert tr.at(100) == 1.0
    assert predicted_limit(0.0, Interval(0.2, 0.5)).holds(tr.liminf_est, tr.limsup_est)


def test_orbit_counts():
    assert rational_orbit_count(0.0, 1, 4, Interval(0.0, 0.26)) == 2
    assert rational_orbit_count(0.0, 1, 3, Interval(0.0, 1.0)) == 3
    assert rational_orbit_count(0.1, 1, 2, Interval(0.55, 0.65)) == 1
    with pytest.raises(DomainError):
        rational_orbit_count(0.0, 2, 4, Interval(0.0, 0.5))


@pytest.mark.parametrize("kind, want", [("closed", 2), ("open", 0), ("closed-open", 1),
                                        ("open-closed", 1)])
def test_endpoint_kinds(kind, want):
    # orbit {0.25, 0.5, 0.75, 0} against the arc [0.25, 0.5]
    assert rational_orbit_count(0.0, 1, 4, Interval(0.25, 0.5, kind)) == want


def test_wrapping_arc():
    J = Interval(0.9, 1.2)
    assert list(J.contains(np.array([0.95, 0.05, 0.5, 0.15]))) == [True, True, False, True]


def test_bad_interval():
    with pytest.raises(DomainError):
        Interval(0.5, 0.2)
    with pytest.raises(DomainError):
        Interval(0.0, 0.5, "half")


def test_drift_and_moving_target():
    drift = lambda j: 0.3 / j  # noqa: E731
    Jseq = lambda j: (0.1 - 0.2 / j, 0.35 + 0.1 / j)  # noqa: E731
    tr = orbit_frequency(RotationProblem(0.0, GOLDEN, Interval(0.1, 0.35), drift, Jseq), 10**5)
    assert abs(tr.at(10**5) - 0.25) < 0.003


def test_tail_window():
    assert tail_window(500) == 500
    assert tail_window(10**4) == 1000
    assert tail_window(10**6) == 10**5


def test_weyl_rate():
    J = Interval(0.1, 0.35)
    tr = orbit_frequency(RotationProblem(0.0, GOLDEN, J), 10**6)
    n = np.unique(np.geomspace(1e3, 1e6, 40).astype(int))
    err = np.abs(tr.psi[n - 1] - 0.25)
    K = float((err * n / np.log(n)).max())
    assert K < 3.0


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 50), st.data())
def test_rational_bounds_random(q, data):
    p = data.draw(st.integers(0, q - 1).filter(lambda v: math.gcd(v, q) == 1))
    c = data.draw(st.floats(0, 1, exclude_max=True))
    a = data.draw(st.floats(0, 1))
    length = data.draw(st.floats(0, 1))
    J = Interval(a, a + length, data.draw(st.sampled_from(["closed", "open", "closed-open"])))
    rational_orbit_count(c, p, q, J)
    n = 2000
    tr = orbit_frequency(RotationProblem(c, p / q, J), n)
    # a periodic count deviates from its limit by at most q / n at index n
    slack = q / (n - tail_window(n) + 1)
    assert predicted_limit(p / q, J).holds(tr.liminf_est, tr.limsup_est, slack)


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0.0, 0.9), st.floats(1e-4, 0.05))
def test_sandwich(c, a, length, d):
    J = Interval(a, a + length)
    base = orbit_frequency(RotationProblem(c, GOLDEN, J), 3000).counts
    thin = orbit_frequency(RotationProblem(c, GOLDEN, J.shrunk(d)), 3000).counts
    wide = orbit_frequency(RotationProblem(c, GOLDEN, J.widened(d)), 3000).counts
    assert (thin <= base).all() and (base <= wide).all()


def test_drift_robustness_rational():
    # orbit of 1/3 from 0.05 stays 0.05 away from the endpoints 0.0 and 0.5
    J = Interval(0.0, 0.5)
    a = orbit_frequency(RotationProblem(0.05, 1 / 3, J, lambda j: 0.01 * np.sin(j)), 999).counts
    b = orbit_frequency(RotationProblem(0.05, 1 / 3, J, lambda j: -0.02 / j), 999).counts
    assert np.array_equal(a, b)


def test_reproducible():
    p = RotationProblem(0.1, GOLDEN, Interval(0.2, 0.7))
    assert np.array_equal(orbit_frequency(p, 5000).counts, orbit_frequency(p, 5000).counts)
