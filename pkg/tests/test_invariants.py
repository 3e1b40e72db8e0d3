import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polycycle_lab.errors import AmbiguousRegime, DegenerateClass, DomainError, OutOfRange
from polycycle_lab.invariants import (InvariantVector, assign_k, assign_k_merge,
                                      equivalence_verdict, frequencies, invariant_vector, phi_of,
                                      projective_class, projective_invariant, rotation_problems)
from polycycle_lab.rotation import orbit_frequency
from polycycle_lab.scenario import Perturbation, THConfig
from polycycle_lab.sparkler import th_sparks

N2 = THConfig(0.5, 1.25, (0.0, 0.1), (0.3,))
LN2 = math.log(2.0)


def test_phi_examples():
    assert phi_of(THConfig.from_lambda_mu(0.5, 5, [0.0], 0.3)) == pytest.approx(0.321928, abs=1e-6)
    assert phi_of(THConfig(math.exp(-1), math.e, (0.0,), (0.0,))) == pytest.approx(1.0)
    iv = invariant_vector(THConfig(0.5, math.sqrt(2), (0.0,), (0.0,)))
    assert iv.phi == pytest.approx(0.5) and iv.q == 2 and iv.p == 1


def test_phi_vector_n2():
    iv = invariant_vector(N2)
    assert iv.Phi == pytest.approx((0.1 / LN2, (math.log(1.25) - 0.1) / LN2))
    assert iv.Phi == pytest.approx((0.144270, 0.177658), abs=1e-6)
    assert iv.q is None


def test_single_arc():
    iv = invariant_vector(THConfig(0.4, 1.7, (0.2,), (0.0,)))
    assert iv.Phi[0] == pytest.approx(iv.phi, rel=1e-15)


def _marks(draw_vals, period):
    vals = sorted(draw_vals)
    lo = vals[0]
    return tuple(v for v in vals if v < lo + period)


@settings(max_examples=60)
@given(st.floats(0.05, 0.95), st.floats(1.05, 20.0),
       st.lists(st.floats(0.0, 1.0), min_size=1, max_size=6, unique=True),
       st.floats(-5, 5))
def test_sum_and_translation(Li, Le, fr, shift):
    L = math.log(Le)
    xs = tuple(sorted({round(f * 0.999 * L, 12) for f in fr}))
    cfg = THConfig(Li, Le, xs, (0.0,))
    iv = invariant_vector(cfg)
    assert sum(iv.Phi) == pytest.approx(iv.phi, abs=1e-12)
    assert all(p > 0 for p in iv.Phi)
    moved = invariant_vector(cfg.shifted(dE=shift))
    assert moved.Phi == pytest.approx(iv.Phi, abs=1e-12)


def test_base_point_change_rotates_arcs_onto_the_circle():
    # replacing E_1 by Delta_e(E_1) = xi + ln Lambda_e and re-enumerating keeps the arc set
    L = math.log(1.25)
    cfg = THConfig(0.5, 1.25, (0.0, 0.05, 0.15), (0.3,))
    moved = THConfig(0.5, 1.25, (0.05, 0.15, L), (0.3,))
    assert sorted(invariant_vector(moved).Phi) == pytest.approx(sorted(invariant_vector(cfg).Phi))


def test_projective_examples():
    one = projective_invariant(THConfig(0.5, 1.25, (0.0,), (0.3,)))
    phi = phi_of(THConfig(0.5, 1.25, (0.0,), (0.3,)))
    assert one == pytest.approx((1.0, 1 / phi))
    assert projective_invariant(N2) == pytest.approx((1.0, 1.2314355, 6.9314718), abs=1e-6)
    tripled = THConfig(0.5**3, 1.25**3, (0.0, 0.3), (0.9,))
    assert projective_invariant(tripled) == pytest.approx(projective_invariant(N2))


def test_projective_multiple_interior_marks():
    cfg = THConfig(0.5, 1.25, (0.0,), (0.0, 0.2, 0.5))
    v = projective_invariant(cfg)
    assert len(v) == 4
    assert v[1:] == pytest.approx(tuple(x / math.log(1.25) for x in (0.2, 0.3, LN2 - 0.5)))


def test_degenerate_class():
    with pytest.raises(DegenerateClass):
        projective_class([0.0, 0.0])


def test_assign_matches_merge_walk():
    t = th_sparks(N2, 10_000)
    a, b = assign_k(t), assign_k_merge(t)
    assert np.array_equal(a.k, b.k) and np.array_equal(a.m, b.m)


def test_assign_interval_convention():
    t = th_sparks(N2, 5)
    exi, ek, em = t.certified_eps()
    # place one iota value exactly on an exterior root: it belongs to the arc ending there
    t.iota_xi = np.array([exi[4]])
    t.iota_n = np.array([1])
    a = assign_k(t)
    assert (a.k[0], a.m[0]) == (ek[3], em[3])


def test_single_arc_assignment():
    t = th_sparks(THConfig(0.5, 1.25, (0.0,), (0.3,)), 100)
    assert (assign_k(t).k == 1).all()


def test_assign_out_of_range():
    t = th_sparks(N2, 5)
    t.iota_xi = np.array([-10.0])
    t.iota_n = np.array([1])
    with pytest.raises(OutOfRange):
        assign_k(t)
    assert len(assign_k(t, skip_uncertified=True)) == 0
    t.iota_xi = np.array([1e6])
    with pytest.raises(OutOfRange):
        assign_k(t)


def test_frequencies_n2():
    t = th_sparks(N2, 10**5)
    rep = frequencies(assign_k(t), 10**5, invariant_vector(N2))
    assert rep.psi.sum() == pytest.approx(1.0, abs=0)
    assert int(rep.counts.sum()) == 10**5
    assert (rep.abs_error < 0.01).all() and rep.passed
    assert [r["k"] for r in rep.records()] == [1, 2]


def test_frequencies_single_arc():
    cfg = THConfig(0.5, 1.25, (0.0,), (0.3,))
    rep = frequencies(assign_k(th_sparks(cfg, 1000)), 1000, invariant_vector(cfg))
    assert rep.psi[0] == 1.0 and rep.predicted[0] == pytest.approx(1.0)


def test_rational_sandwich():
    cfg = THConfig(0.5, math.sqrt(2), (0.0, 0.2), (0.1,))
    iv = invariant_vector(cfg)
    rep = frequencies(assign_k(th_sparks(cfg, 10**4)), 10**4, iv)
    assert iv.q == 2 and rep.bounds is not None
    for (lo, hi), P in zip(rep.bounds, iv.Phi):
        assert lo <= P <= hi


def test_cut_validation():
    a = assign_k(th_sparks(N2, 10))
    with pytest.raises(DomainError):
        frequencies(a, 0, invariant_vector(N2))


def test_counts_equal_rotation_counts():
    t = th_sparks(N2, 10**5)
    rep = frequencies(assign_k(t), 10**5, invariant_vector(N2))
    counts = [int(orbit_frequency(p, 10**5).counts[-1]) for p in rotation_problems(N2)]
    assert counts == [int(c) for c in rep.counts]


def test_perturbation_does_not_change_the_limit():
    cfg = THConfig(0.5, 1.25, (0.0, 0.1), (0.3,), Perturbation(0.2, (0.05, -0.03), 0.7))
    t = th_sparks(cfg, 10**5)
    rep = frequencies(assign_k(t, skip_uncertified=True), 10**5, invariant_vector(cfg))
    assert (rep.abs_error < 0.01).all()


def test_verdict_examples():
    A = invariant_vector(N2)
    assert equivalence_verdict(A, A).status == "NotDistinguished"
    B = invariant_vector(THConfig(0.5, math.sqrt(2), (0.0, 0.1), (0.3,)))
    v = equivalence_verdict(A, B, regime="irrational")
    assert v.status == "Inequivalent" and v.bullet == "phi"
    C = InvariantVector(A.phi, (0.160964, 0.160964))
    v = equivalence_verdict(A, C)
    assert v.inequivalent and v.bullet == "Phi-irrational"


def test_verdict_rational_slack():
    A = InvariantVector(0.5, (0.2, 0.3), 2)
    B = InvariantVector(0.5, (0.3, 0.2), 2)
    assert equivalence_verdict(A, B).status == "NotDistinguished"
    A5 = InvariantVector(0.6, (0.05, 0.55), 5)
    B5 = InvariantVector(0.6, (0.55, 0.05), 5)
    v = equivalence_verdict(A5, B5)
    assert v.inequivalent and v.bullet == "Phi-rational"


def test_verdict_ambiguity_must_be_resolved():
    A = InvariantVector(0.5, (0.25, 0.25), 2)
    B = InvariantVector(0.5 + 1e-11, (0.25, 0.25 + 1e-11), None)
    with pytest.raises(AmbiguousRegime):
        equivalence_verdict(A, B)
    assert equivalence_verdict(A, B, regime=2).status == "NotDistinguished"
    with pytest.raises(DomainError):
        equivalence_verdict(A, InvariantVector(0.5, (0.5,), 2))
