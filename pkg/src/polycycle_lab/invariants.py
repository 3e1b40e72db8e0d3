"""Moduli of the TH scenario and the visit frequencies of interior connections.

phi = ln Lambda_e / (-ln Lambda_i) and the arc lengths Phi_k of the
exterior separatrices on the circle R / (ln Lambda_e) Z, rescaled by
-ln Lambda_i, obstruct equivalence of two families.  Interior connection
parameters iota_n visit the exterior arcs with frequencies Phi_k / phi when
phi is irrational; for phi = p/q only a 1/q sandwich survives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (AmbiguousRegime, DegenerateClass, DomainError, InvalidConfig,
                     OutOfRange)
from .numeric_core import detect_rational
from .rotation import Interval, RotationProblem, tail_window
from .scenario import THConfig
from .sparkler import SparkTable

__all__ = [
    "THConfig",
    "InvariantVector",
    "Assignments",
    "FrequencyReport",
    "Verdict",
    "phi_of",
    "invariant_vector",
    "projective_invariant",
    "projective_class",
    "assign_k",
    "assign_k_merge",
    "frequencies",
    "equivalence_verdict",
    "rotation_problems",
]

Q_MAX = 10**6
RATIONAL_RTOL = 1e-12


def phi_of(config: THConfig) -> float:
    if not isinstance(config, THConfig):
        raise InvalidConfig(f"expected a THConfig, got {type(config).__name__}")
    return config.lnLambda_e / config.neg_lnLambda_i


@dataclass(frozen=True)
class InvariantVector:
    """phi, the rescaled arc lengths Phi_1..Phi_N and the denominator of phi (if rational)."""

    phi: float
    Phi: tuple
    q: int | None = None

    @property
    def N(self) -> int:
        return len(self.Phi)

    @property
    def p(self) -> int | None:
        if self.q is None:
            return None
        return Fraction(self.phi).limit_denominator(self.q).numerator

    def to_dict(self) -> dict:
        return {"phi": self.phi, "Phi": list(self.Phi), "q": self.q}


def invariant_vector(config: THConfig, q_max: int = Q_MAX,
                     rel_tol: float = RATIONAL_RTOL) -> InvariantVector:
    phi = phi_of(config)
    s = config.neg_lnLambda_i
    xs = list(config.xi_E) + [config.xi_E[0] + config.lnLambda_e]
    Phi = tuple((b - a) / s for a, b in zip(xs, xs[1:]))
    frac = detect_rational(phi, q_max, rel_tol)
    return InvariantVector(phi, Phi, None if frac is None else frac.denominator)


def projective_class(coords) -> tuple:
    """Representative of [c_1 : ... : c_n] with first nonzero coordinate 1."""
    c = [float(v) for v in coords]
    lead = next((v for v in c if v != 0.0), None)
    if lead is None:
        raise DegenerateClass("all coordinates vanish; no projective class")
    return tuple(v / lead for v in c)


def projective_invariant(config: THConfig) -> tuple:
    """[Phi : Psi] without rescaling, for K interior marks xi_I.

    The interior list closes with xi_I[0] + (-ln Lambda_i), mirroring the
    exterior closing with xi_E[0] + ln Lambda_e.
    """
    xe = list(config.xi_E) + [config.xi_E[0] + config.lnLambda_e]
    xi = list(config.xi_I) + [config.xi_I[0] + config.neg_lnLambda_i]
    raw = [b - a for a, b in zip(xe, xe[1:])] + [b - a for a, b in zip(xi, xi[1:])]
    return projective_class(raw)


@dataclass
class Assignments:
    """For each assigned iota_n: the arc k_n (from 1) and the index m_n."""

    n: np.ndarray
    k: np.ndarray
    m: np.ndarray
    N: int
    skipped: int = 0

    def __len__(self):
        return int(self.n.size)

    def records(self):
        for n, k, m in zip(self.n, self.k, self.m):
            yield {"n": int(n), "k": int(k), "m": int(m)}


def assign_k(table: SparkTable, skip_uncertified: bool = False) -> Assignments:
    """k_n, m_n with eps_{k_n, m_n} the smallest exterior root above iota_n.

    On the xi-scale this is the certified entry with the largest value
    strictly below xi(iota_n), so iota_n lies in [eps_{k+1,m}, eps_{k,m}).
    Interior roots that no certified entry dominates raise OutOfRange, or are
    dropped when ``skip_uncertified`` is set.
    """
    exi, ek, em = table.certified_eps()
    y = np.asarray(table.iota_xi, dtype=float)
    if y.size == 0 or exi.size == 0:
        raise OutOfRange("spark table is empty")
    idx = np.searchsorted(exi, y, side="left") - 1
    over = idx >= exi.size - 1
    if over.any():
        j = int(np.argmax(over))
        raise OutOfRange(
            f"iota_{int(table.iota_n[j])} (xi = {y[j]!r}) lies beyond the last stored "
            f"exterior root; generate a deeper table")
    low = idx < 0
    keep = ~low
    if low.any() and not skip_uncertified:
        j = int(np.argmax(low))
        raise OutOfRange(
            f"iota_{int(table.iota_n[j])} (xi = {y[j]!r}) exceeds every certified exterior "
            f"root (ordering certified from m0 = {table.m0})")
    sel = idx[keep]
    return Assignments(n=np.asarray(table.iota_n)[keep], k=ek[sel], m=em[sel], N=table.N,
                       skipped=int(low.sum()))


def assign_k_merge(table: SparkTable, skip_uncertified: bool = False) -> Assignments:
    """Reference for assign_k by a single merge walk over both sorted sequences."""
    exi, ek, em = table.certified_eps()
    ys = [float(v) for v in table.iota_xi]
    if any(b <= a for a, b in zip(ys, ys[1:])):
        raise OutOfRange("interior roots are not strictly decreasing; merge walk needs order")
    ns, ks, ms = [], [], []
    skipped = 0
    j = -1
    last = exi.size - 1
    for n, y in zip(table.iota_n, ys):
        while j < last and exi[j + 1] < y:
            j += 1
        if j == last:
            raise OutOfRange(f"iota_{int(n)} lies beyond the last stored exterior root")
        if j < 0:
            if not skip_uncertified:
                raise OutOfRange(f"iota_{int(n)} exceeds every certified exterior root")
            skipped += 1
            continue
        ns.append(int(n))
        ks.append(int(ek[j]))
        ms.append(int(em[j]))
    return Assignments(np.array(ns, dtype=int), np.array(ks, dtype=int),
                       np.array(ms, dtype=int), table.N, skipped)


@dataclass
class FrequencyReport:
    depth: int
    counts: np.ndarray
    psi: np.ndarray
    predicted: np.ndarray
    liminf: np.ndarray
    limsup: np.ndarray
    Phi: tuple
    phi: float
    q: int | None
    bounds: list | None
    verdict: list
    tol: float

    @property
    def abs_error(self) -> np.ndarray:
        return np.abs(self.psi - self.predicted)

    @property
    def passed(self) -> bool:
        return all(v == "pass" for v in self.verdict)

    def records(self):
        for j in range(self.psi.size):
            yield {"k": j + 1, "psi": float(self.psi[j]), "predicted": float(self.predicted[j]),
                   "abs_error": float(self.abs_error[j])}

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "phi": self.phi,
            "q": self.q,
            "tol": self.tol,
            "records": [
                dict(r, count=int(self.counts[r["k"] - 1]), Phi=self.Phi[r["k"] - 1],
                     liminf=float(self.liminf[r["k"] - 1]),
                     limsup=float(self.limsup[r["k"] - 1]),
                     bounds=None if self.bounds is None else list(self.bounds[r["k"] - 1]),
                     verdict=self.verdict[r["k"] - 1])
                for r in self.records()
            ],
        }


def frequencies(assignments: Assignments, cut: int, invariant: InvariantVector,
                tol: float = 0.01, window: int | None = None) -> FrequencyReport:
    """psi_k at the cut, the predicted limits Phi_k/phi and the tail sandwich.

    Frequencies are taken over the assigned iota_n with n <= cut; with no
    skipped entries the denominator is the cut itself.
    """
    if cut < 1:
        raise DomainError(f"cut must be at least 1, got {cut!r}")
    if invariant.N != assignments.N:
        raise DomainError(f"invariant has N = {invariant.N}, assignments N = {assignments.N}")
    sel = assignments.n <= cut
    if assignments.n.size and cut > int(assignments.n.max()):
        raise DomainError(f"cut {cut} exceeds the available depth {int(assignments.n.max())}")
    k = assignments.k[sel]
    total = k.size
    if total == 0:
        raise DomainError(f"no assigned interior roots up to n = {cut}")
    N = assignments.N
    hits = k[None, :] == np.arange(1, N + 1)[:, None]
    running = np.cumsum(hits, axis=1, dtype=np.int64)
    counts = running[:, -1]
    denom = np.arange(1, total + 1)
    w = window or tail_window(total)
    tail = running[:, -w:] / denom[-w:]
    psi = counts / total
    liminf, limsup = tail.min(axis=1), tail.max(axis=1)
    phi = invariant.phi
    Phi = np.asarray(invariant.Phi)
    predicted = Phi / phi
    bounds = None
    if invariant.q is None:
        verdict = ["pass" if e < tol else "fail" for e in np.abs(psi - predicted)]
    else:
        q = invariant.q
        bounds = [(-1.0 / q + phi * hi, 1.0 / q + phi * lo) for lo, hi in zip(liminf, limsup)]
        verdict = ["pass" if lo <= P <= hi else "fail" for (lo, hi), P in zip(bounds, Phi)]
    return FrequencyReport(cut, counts, psi, predicted, liminf, limsup, tuple(invariant.Phi),
                           phi, invariant.q, bounds, verdict, tol)


@dataclass(frozen=True)
class Verdict:
    status: str
    bullet: str | None = None
    detail: str = ""

    @property
    def inequivalent(self) -> bool:
        return self.status == "Inequivalent"


def equivalence_verdict(A: InvariantVector, B: InvariantVector, tol: float = 1e-9,
                        regime=None) -> Verdict:
    """Obstruction test: Inequivalent with the violated condition, else NotDistinguished.

    ``regime`` is "irrational" or an integer denominator q; it must be given
    when rational detection disagrees between A and B.
    """
    if A.N != B.N:
        raise DomainError(f"dimension mismatch: N = {A.N} vs {B.N}")
    if abs(A.phi - B.phi) > tol:
        return Verdict("Inequivalent", "phi",
                       f"phi differs: {A.phi!r} vs {B.phi!r}")
    if regime is None:
        if A.q != B.q:
            raise AmbiguousRegime(
                f"rational detection disagrees (q = {A.q} vs {B.q}); pass regime explicitly")
        regime = "irrational" if A.q is None else A.q
    d = [abs(a - b) for a, b in zip(A.Phi, B.Phi)]
    worst = max(range(len(d)), key=d.__getitem__)
    if regime == "irrational":
        if d[worst] > tol:
            return Verdict("Inequivalent", "Phi-irrational",
                           f"Phi_{worst + 1} differs by {d[worst]!r} with phi irrational")
    else:
        q = int(regime)
        if q < 1:
            raise DomainError(f"regime denominator must be positive, got {regime!r}")
        if d[worst] > 2.0 / q + tol:
            return Verdict("Inequivalent", "Phi-rational",
                           f"Phi_{worst + 1} differs by {d[worst]!r} > 2/{q}")
    return Verdict("NotDistinguished")


def rotation_problems(config: THConfig) -> list:
    """The interior sequence seen as a rotation orbit against each exterior arc.

    The circle R / (ln Lambda_e) Z is rescaled to length 1 with xi_E[0] at 0;
    iota_n falls in arc k exactly when the rotation point lies in the
    open-closed arc J_k.
    """
    L = config.lnLambda_e
    base = config.xi_E[0]
    c = (config.xi_I[0] - base) / L
    rho = config.neg_lnLambda_i / L
    ends = [(e - base) / L for e in config.xi_E] + [1.0]
    return [RotationProblem(c, rho, Interval(a, b, "open-closed"))
            for a, b in zip(ends, ends[1:])]
