"""Visit frequencies of sequences close to orbits of a circle rotation.

For x_j = c + j*rho + drift(j) on R/Z and target intervals J_j converging to
J, the frequency psi_n = #{j <= n : x_j in J_j} / n tends to |J| when rho is
irrational.  For rho = p/q the orbit is periodic and only

    -1/q + limsup psi_n <= |J| <= 1/q + liminf psi_n

survives.  Counting is exact integer arithmetic over numpy masks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BoundViolation, DomainError
from .numeric_core import circle_reduce, detect_rational

__all__ = [
    "Interval",
    "RotationProblem",
    "FrequencyTrace",
    "Prediction",
    "orbit_frequency",
    "predicted_limit",
    "rational_orbit_count",
    "tail_window",
]

KINDS = ("closed", "open", "closed-open", "open-closed")


@dataclass(frozen=True)
class Interval:
    """Arc [a, b] of R/Z (endpoint inclusion set by ``kind``), 0 <= b - a <= 1."""

    a: float
    b: float
    kind: str = "closed"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown interval kind {self.kind!r}")
        if not 0 <= self.b - self.a <= 1:
            raise DomainError(f"interval length {self.b - self.a!r} outside [0, 1]")

    @property
    def length(self) -> float:
        return self.b - self.a

    def contains(self, x):
        return _contains(x, self.a, self.b - self.a, self.kind)

    def widened(self, d: float) -> "Interval":
        a, b = self.a - d, self.b + d
        if b - a > 1:
            return Interval(0.0, 1.0, "closed")
        return Interval(a, b, self.kind)

    def shrunk(self, d: float) -> "Interval":
        if self.b - self.a <= 2 * d:
            mid = 0.5 * (self.a + self.b)
            return Interval(mid, mid, "open")
        return Interval(self.a + d, self.b - d, self.kind)


def _contains(x, a, length, kind):
    t = circle_reduce(np.asarray(x, dtype=float) - a, 1.0)
    length = np.asarray(length, dtype=float)
    full = length >= 1.0
    at_a = t == 0.0
    # for a full-length arc the endpoint b coincides with a
    at_b = (t == length) | (at_a & full)
    out = (t > 0.0) & (t < length)
    if kind in ("closed", "closed-open"):
        out = out | at_a
    if kind in ("closed", "open-closed"):
        out = out | at_b
    if kind == "closed":
        out = out | full
    else:
        out = out & ~(length == 0.0)
    return out


@dataclass(frozen=True)
class RotationProblem:
    """x_j = c + j*rho + drift(j) against J_seq(j) (J_limit when None).

    ``drift`` and ``J_seq`` take an integer numpy array of indices; J_seq
    returns a pair of arrays (a_j, b_j) sharing the limit's endpoint kind.
    """

    c: float
    rho: float
    J_limit: Interval
    drift: Callable | None = None
    J_seq: Callable | None = None

    def points(self, j: np.ndarray) -> np.ndarray:
        x = self.c + j * self.rho
        if self.drift is not None:
            x = x + self.drift(j)
        return circle_reduce(np.asarray(x, dtype=float), 1.0)

    def hits(self, n: int) -> np.ndarray:
        j = np.arange(1, n + 1)
        x = self.points(j)
        if self.J_seq is None:
            return self.J_limit.contains(x)
        a, b = self.J_seq(j)
        a = np.asarray(a, dtype=float)
        return _contains(x, a, np.asarray(b, dtype=float) - a, self.J_limit.kind)


def tail_window(n: int) -> int:
    """Trailing window used for liminf/limsup estimates: max(n/10, 1000), capped at n."""
    return min(n, max(n // 10, 1000))


@dataclass
class FrequencyTrace:
    """Running frequencies psi_1..psi_n with integer counts and tail extrema."""

    counts: np.ndarray
    psi: np.ndarray
    liminf_est: float
    limsup_est: float

    @property
    def n(self) -> int:
        return int(self.psi.size)

    def at(self, n: int) -> float:
        return float(self.psi[n - 1])


def orbit_frequency(problem: RotationProblem, n: int, window: int | None = None) -> FrequencyTrace:
    """Exact counting of visits x_j in J_j for j = 1..n."""
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n!r}")
    hits = problem.hits(n)
    counts = np.cumsum(hits, dtype=np.int64)
    psi = counts / np.arange(1, n + 1)
    w = window or tail_window(n)
    tail = psi[-w:]
    return FrequencyTrace(counts, psi, float(tail.min()), float(tail.max()))


@dataclass(frozen=True)
class Prediction:
    """Limit behaviour of psi: "exact" (value = |J|) or "bounds" with denominator q."""

    kind: str
    value: float
    q: int | None = None
    p: int | None = None

    def holds(self, liminf: float, limsup: float, tol: float = 0.0) -> bool:
        if self.kind == "exact":
            return abs(liminf - self.value) <= tol and abs(limsup - self.value) <= tol
        return (-1.0 / self.q + limsup <= self.value + tol
                and self.value <= 1.0 / self.q + liminf + tol)


def predicted_limit(rho: float, J: Interval, q_max: int = 10**6,
                    rel_tol: float = 1e-12) -> Prediction:
    """Exact(|J|) for irrational rho, Bounds(q) when rho is close to p/q, q <= q_max."""
    r = circle_reduce(rho, 1.0)
    frac = detect_rational(r, q_max, rel_tol)
    if frac is None:
        # values just below 1 reduce to a rational near 1
        frac1 = detect_rational(r - 1.0, q_max, rel_tol) if r > 0.5 else None
        if frac1 is None:
            return Prediction("exact", J.length)
        frac = frac1 + 1
    frac = frac % 1
    return Prediction("bounds", J.length, frac.denominator, frac.numerator)


def rational_orbit_count(c: float, p: int, q: int, J: Interval) -> int:
    """#{1 <= j <= q : c + j p/q in J}; checked against [ceil(q|J|) - 1, floor(q|J|) + 1]."""
    if q < 1:
        raise DomainError(f"q must be at least 1, got {q!r}")
    if math.gcd(p, q) != 1:
        raise DomainError(f"gcd({p}, {q}) != 1")
    j = np.arange(1, q + 1)
    x = circle_reduce(c + ((j * p) % q) / q, 1.0)
    count = int(J.contains(x).sum())
    ql = q * J.length
    lo, hi = math.ceil(ql) - 1, math.floor(ql) + 1
    if not lo <= count <= hi:
        raise BoundViolation(f"count {count} outside [{lo}, {hi}] for q|J| = {ql!r}")
    return count
