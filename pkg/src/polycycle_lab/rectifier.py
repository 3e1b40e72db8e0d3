"""Rectifying charts xi with xi(Delta(x)) = xi(x) + ln Lambda.

For Lambda > 1 the chart is the limit of

    xi_n(x) = ln(-ln Delta^n(x)) - n ln Lambda,

computed on the u-scale.  The increments obey |xi_{n+1} - xi_n| <= K / u_n
and u_n eventually grows at least geometrically with ratio sqrt(Lambda), so
the remaining tail after step n is at most K sqrt(L) / ((sqrt(L) - 1) u_n).
K is not known for user models; it is measured online as the running
maximum of |xi_{n+1} - xi_n| * u_n and inflated by a safety factor of 2.

Maps with Lambda < 1 are rectified through their inverse, which has
exponent 1/Lambda and the same chart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DomainError, NonContracting
from .map_models import MapFamily
from .numeric_core import NegLog

__all__ = [
    "RectifyingChart",
    "rectify",
    "rectify_u",
    "rectify_contracting_inverse",
    "build_chart",
    "chart_residual",
    "chart_sequence",
]

SAFETY = 2.0
DEFAULT_BUDGET = 10_000
_U_CEILING = 1e300
_MIN_STEPS = 2


@dataclass(frozen=True)
class ChartValue:
    xi: float
    steps: int
    tail_constant: float
    tail_bound: float


def _eps_u(eps: float) -> float:
    if eps < 0:
        raise DomainError(f"eps must be non-negative, got {eps!r}")
    return math.inf if eps == 0 else -math.log(eps)


def _chart_from_u(step, u0: float, lnlam: float, tol: float, budget: int) -> ChartValue:
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    if not u0 > 0:
        raise DomainError(f"u = {u0!r} is not the neg-log of a point of (0, 1)")
    sq = math.exp(0.5 * lnlam)
    geom = sq / (sq - 1.0)
    u = u0
    xi = math.log(u)
    c_run = 0.0
    for n in range(1, budget + 1):
        u_next = step(u)
        if not u_next > u:
            raise NonContracting(
                f"iterate {n} does not move towards 0 (u: {u!r} -> {u_next!r}); "
                "the point is outside the attraction basin of 0"
            )
        if u_next > _U_CEILING:
            raise DomainError(
                f"tolerance {tol!r} not certified before u overflowed at step {n}"
            )
        xi_next = math.log(u_next) - n * lnlam
        c_run = max(c_run, abs(xi_next - xi) * u)
        in_geometric_regime = u_next >= sq * u
        u, xi = u_next, xi_next
        bound = SAFETY * c_run * geom / u
        if n >= _MIN_STEPS and in_geometric_regime and bound < tol:
            return ChartValue(xi, n, SAFETY * c_run, bound)
    raise NonContracting(f"tail bound not below {tol!r} within {budget} steps")


def rectify_u(model: MapFamily, u: float, tol: float = 1e-12, eps: float = 0.0,
              budget: int = DEFAULT_BUDGET) -> ChartValue:
    """Chart value at the point exp(-u) for an expanding-in-u map (Lambda > 1)."""
    if not model.Lambda > 1:
        raise DomainError(f"rectify needs Lambda > 1, got {model.Lambda!r}")
    eu = _eps_u(eps)
    return _chart_from_u(lambda v: model.step_u(v, eu), u, math.log(model.Lambda), tol, budget)


def rectify(model: MapFamily, x: float, tol: float = 1e-12, eps: float = 0.0,
            budget: int = DEFAULT_BUDGET) -> float:
    """xi(x) for a map with Lambda > 1, accurate to tol.

    Raises NonContracting when x is not attracted to 0.
    """
    if not 0 < x < model.delta:
        raise DomainError(f"x = {x!r} outside (0, {model.delta!r})")
    return rectify_u(model, NegLog.from_x(x).u, tol, eps, budget).xi


def _inverse_chart_u(model: MapFamily, u: float, tol: float, eps: float,
                     budget: int) -> ChartValue:
    if not 0 < model.Lambda < 1:
        raise DomainError(f"the inverse route needs 0 < Lambda < 1, got {model.Lambda!r}")
    eu = _eps_u(eps)
    return _chart_from_u(lambda v: model.inverse_step_u(v, eu), u,
                         -math.log(model.Lambda), tol, budget)


def rectify_contracting_inverse(model: MapFamily, x: float, tol: float = 1e-12,
                                eps: float = 0.0, budget: int = DEFAULT_BUDGET) -> float:
    """Chart of a map with Lambda < 1, built by rectifying its inverse.

    The result satisfies xi(Delta(x)) = xi(x) + ln Lambda.
    """
    if not 0 < x < 1:
        raise DomainError(f"x = {x!r} outside (0, 1)")
    return _inverse_chart_u(model, NegLog.from_x(x).u, tol, eps, budget).xi


def chart_sequence(model: MapFamily, x: float, n_max: int, eps: float = 0.0):
    """The partial values xi_0(x), ..., xi_n_max(x) for a Lambda > 1 map."""
    eu = _eps_u(eps)
    lnlam = math.log(model.Lambda)
    u = NegLog.from_x(x).u
    out = [math.log(u)]
    for n in range(1, n_max + 1):
        u = model.step_u(u, eu)
        out.append(math.log(u) - n * lnlam)
    return out


NORMALIZATION_PROBES = tuple(10.0 ** -k for k in range(2, 13, 2))


@dataclass(frozen=True)
class RectifyingChart:
    """Chart xi of a fixed map Delta_eps, conjugating it to a shift by ln Lambda.

    ``tail_constant`` is the measured K with |xi_{n+1} - xi_n| <= K / u_n and
    ``normalization`` the measured max of |xi(x) - ln(-ln x)| * (-ln x) over
    the probe points.
    """

    source: MapFamily
    eps: float
    tol: float
    lnLambda: float
    tail_constant: float
    normalization: float
    budget: int = DEFAULT_BUDGET
    probes: tuple = field(default=NORMALIZATION_PROBES)

    def value_u(self, u: float) -> ChartValue:
        if self.source.Lambda > 1:
            return rectify_u(self.source, u, self.tol, self.eps, self.budget)
        return _inverse_chart_u(self.source, u, self.tol, self.eps, self.budget)

    def evaluate_u(self, u: float) -> float:
        return self.value_u(u).xi

    def evaluate(self, x: float) -> float:
        return self.evaluate_u(NegLog.from_x(x).u)

    __call__ = evaluate

    def image_u(self, u: float) -> float:
        eu = _eps_u(self.eps)
        return self.source.step_u(u, eu)


def build_chart(model: MapFamily, tol: float = 1e-12, eps: float = 0.0,
                budget: int = DEFAULT_BUDGET, probes=NORMALIZATION_PROBES) -> RectifyingChart:
    """Build the chart of Delta_eps and measure its constants on ``probes``."""
    if model.Lambda == 1:
        raise DomainError("Lambda = 1 has no rectifying chart of this form")
    tail = 0.0
    norm = 0.0
    for x in probes:
        u = NegLog.from_x(x).u
        if model.Lambda > 1:
            cv = rectify_u(model, u, tol, eps, budget)
        else:
            cv = _inverse_chart_u(model, u, tol, eps, budget)
        tail = max(tail, cv.tail_constant)
        norm = max(norm, abs(cv.xi - math.log(u)) * u)
    return RectifyingChart(
        source=model,
        eps=eps,
        tol=tol,
        lnLambda=math.log(model.Lambda),
        tail_constant=tail,
        normalization=norm,
        budget=budget,
        probes=tuple(probes),
    )


def chart_residual(chart: RectifyingChart, x: float) -> float:
    """|xi(Delta(x)) - xi(x) - ln Lambda| at x."""
    u = NegLog.from_x(x).u
    v = chart.image_u(u)
    if not v > 0:
        raise DomainError(f"Delta(x) = {math.exp(-v)!r} is outside the chart domain")
    return abs(chart.evaluate_u(v) - chart.evaluate_u(u) - chart.lnLambda)
