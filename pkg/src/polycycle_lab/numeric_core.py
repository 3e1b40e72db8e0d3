"""Arithmetic on the neg-log scale u = -ln x and the log-log scale xi = ln(-ln x).

Quantities such as exp(-exp(n * |ln L|)) underflow double precision after a
handful of iterations, while their log-log coordinates stay moderate.  The
lab therefore computes on the u-scale and reports on the xi-scale; points of
(0, 1) are only materialised as floats when they are representable.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError

__all__ = [
    "LogLogCoord",
    "NegLog",
    "UNDERFLOW",
    "Underflow",
    "xi_from_x",
    "x_from_xi",
    "xi_from_u",
    "power_law_step_u",
    "circle_reduce",
    "detect_rational",
    "DEFAULT_ATOL",
]

DEFAULT_ATOL = 1e-12


class Underflow(enum.Enum):
    """Marker returned when exp(-exp(xi)) is not representable."""

    UNDERFLOW = "underflow"

    def __repr__(self):
        return "UNDERFLOW"

    def __bool__(self):
        return False


UNDERFLOW = Underflow.UNDERFLOW


@dataclass(frozen=True, order=True)
class LogLogCoord:
    """A point x of (0, 1) stored as xi = ln(-ln x).

    The natural ordering of LogLogCoord is the ordering of xi, which is the
    reverse of the ordering of x.
    """

    xi: float

    @property
    def u(self) -> float:
        return math.exp(self.xi)

    @property
    def x(self):
        return x_from_xi(self.xi)

    def neglog(self) -> "NegLog":
        return NegLog(math.exp(self.xi))

    @classmethod
    def from_x(cls, x: float) -> "LogLogCoord":
        return cls(xi_from_x(x))


@dataclass(frozen=True, order=True)
class NegLog:
    """A point x of (0, 1) stored as u = -ln x > 0."""

    u: float

    def __post_init__(self):
        if not self.u > 0:
            raise DomainError(f"neg-log value must be positive, got {self.u!r}")

    @property
    def xi(self) -> float:
        return math.log(self.u)

    def loglog(self) -> LogLogCoord:
        return LogLogCoord(math.log(self.u))

    @classmethod
    def from_x(cls, x: float) -> "NegLog":
        return cls(_neglog(x))


def _neglog(x: float) -> float:
    if not 0.0 < x < 1.0:
        raise DomainError(f"x must lie in (0, 1), got {x!r}")
    if x > 0.5:
        # x - 1 is exact here; log1p keeps the relative accuracy of u
        return -math.log1p(x - 1.0)
    return -math.log(x)


def xi_from_x(x: float) -> float:
    """Return ln(-ln x) for 0 < x < 1."""
    return math.log(_neglog(x))


def xi_from_u(u: float) -> float:
    if not u > 0:
        raise DomainError(f"neg-log value must be positive, got {u!r}")
    return math.log(u)


def x_from_xi(xi: float):
    """Return exp(-exp(xi)), or UNDERFLOW when that is not a positive double."""
    try:
        u = math.exp(xi)
    except OverflowError:
        return UNDERFLOW
    x = math.exp(-u)
    if x == 0.0:
        return UNDERFLOW
    return x


def power_law_step_u(u: float, Lambda: float, c: float) -> float:
    """Image of u under x -> exp(c) * x**Lambda written on the u-scale."""
    if not Lambda > 0:
        raise DomainError(f"exponent must be positive, got {Lambda!r}")
    out = Lambda * u - c
    if not out > 0:
        raise DomainError(
            f"image u' = {out!r} <= 0: the point left (0, 1)"
        )
    return out


def circle_reduce(t, circumference):
    """Reduce t modulo circumference into [0, circumference).

    Works elementwise on numpy arrays.
    """
    if not circumference > 0:
        raise DomainError(f"circumference must be positive, got {circumference!r}")
    if isinstance(t, np.ndarray):
        r = np.mod(t, circumference)
        r[r >= circumference] = 0.0
        return r
    r = t % circumference
    # tiny negative t rounds up to the circumference itself
    if r >= circumference:
        r = 0.0
    return r


def detect_rational(value: float, q_max: int = 10**6, rel_tol: float = 1e-12):
    """Best rational approximation p/q with q <= q_max, if it is close enough.

    Returns a Fraction when |value - p/q| < rel_tol * |value|, else None.
    The approximation comes from the continued-fraction expansion of value.
    """
    if value == 0:
        return Fraction(0)
    frac = Fraction(value).limit_denominator(q_max)
    if abs(value - float(frac)) < rel_tol * abs(value):
        return frac
    return None
