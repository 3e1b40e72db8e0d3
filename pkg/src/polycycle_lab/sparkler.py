"""Sparkling-connection roots Delta_eps^n(eps) = P(eps) and TH spark tables.

The root eps_n is found by bisection on xi = ln(-ln eps).  The map
eps -> Delta_eps^n(eps) is strictly increasing, so the objective

    g(xi) = -ln Delta_eps^n(eps) + ln P(eps)

is strictly increasing in xi, and a bracket with a sign change certifies the
root.  Everything is evaluated on the u-scale with eps carried as
eps_u = exp(xi); eps itself is never materialised once it underflows.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, InvalidConfig, NoBracket, OrderingViolation
from .map_models import MapFamily
from .numeric_core import LogLogCoord, NegLog, UNDERFLOW, x_from_xi
from .rectifier import rectify_contracting_inverse
from .scenario import THConfig

__all__ = [
    "SparkProblem",
    "SparkSequence",
    "SparkTable",
    "solve_spark",
    "spark_bracket",
    "spark_objective",
    "spark_sequence",
    "th_sparks",
    "interleaving_start",
    "polynomial_P",
]

XI_MAX = 690.0  # exp(XI_MAX) stays a finite double
WIDEN_BUDGET = 40
BISECT_STEPS = 200


def polynomial_P(coeffs: Sequence[float]) -> Callable[[float], float]:
    """P(eps) = c0 + c1*eps + c2*eps**2 + ..."""
    cs = [float(c) for c in coeffs]

    def P(eps):
        acc = 0.0
        for c in reversed(cs):
            acc = acc * eps + c
        return acc

    return P


@dataclass(frozen=True)
class SparkProblem:
    """Equation Delta_eps^n(eps) = P(eps) for a family with Lambda < 1."""

    model: MapFamily
    P: Callable[[float], float] | float
    n: int

    def target(self, eps: float) -> float:
        return self.P(eps) if callable(self.P) else float(self.P)

    @property
    def p0(self) -> float:
        return self.target(0.0)

    def with_n(self, n: int) -> "SparkProblem":
        return SparkProblem(self.model, self.P, n)


def spark_objective(problem: SparkProblem, xi: float) -> float:
    """-ln Delta_eps^n(eps) + ln P(eps) at eps = exp(-exp(xi)).

    Returns -inf when an iterate reaches delta before step n; such eps lie
    above every admissible root.
    """
    model, n = problem.model, problem.n
    eps_u = math.exp(xi)
    eps = x_from_xi(xi)
    target = problem.target(0.0 if eps is UNDERFLOW else eps)
    if not 0 < target < 1:
        raise DomainError(f"P(eps) = {target!r} outside (0, 1)")
    lower = -math.log(model.delta)
    if not eps_u > lower:
        return -math.inf
    u = eps_u
    try:
        for _ in range(n):
            u = model.step_u(u, eps_u)
            if not u > lower:
                return -math.inf
    except DomainError:
        return -math.inf
    return u + math.log(target)


def _check_problem(problem: SparkProblem):
    if problem.n < 1:
        raise DomainError(f"n must be at least 1, got {problem.n!r}")
    if not 0 < problem.model.Lambda < 1:
        raise DomainError(f"sparkler maps need 0 < Lambda < 1, got {problem.model.Lambda!r}")
    p0 = problem.p0
    if not 0 < p0 < problem.model.delta:
        raise DomainError(f"P(0) = {p0!r} outside (0, {problem.model.delta!r})")


def spark_bracket(problem: SparkProblem, tol: float = 1e-12) -> tuple[float, float]:
    """Bracket [lo, hi] on the xi-scale with g(lo) < 0 <= g(hi), hi - lo <= tol."""
    _check_problem(problem)
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    lnlam = math.log(problem.model.Lambda)
    center = -problem.n * lnlam + math.log(-math.log(problem.p0))
    g = lambda xi: spark_objective(problem, xi)  # noqa: E731
    w = 0.5
    for _ in range(WIDEN_BUDGET):
        lo, hi = center - w, min(center + w, XI_MAX)
        glo, ghi = g(lo), g(hi)
        if glo < 0 <= ghi:
            break
        if glo >= 0 and lo < -30 and ghi >= 0:
            break
        w *= 2.0
    else:
        raise NoBracket(f"no sign change for n = {problem.n} within the widening budget")
    if not glo < 0 <= ghi:
        raise NoBracket(
            f"no sign change for n = {problem.n}: n too small or P(0) outside the basin"
        )
    for _ in range(BISECT_STEPS):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return lo, hi


def solve_spark(problem: SparkProblem, tol: float = 1e-12) -> LogLogCoord:
    """Root eps_n of Delta_eps^n(eps) = P(eps), returned as ln(-ln eps_n)."""
    lo, hi = spark_bracket(problem, tol)
    return LogLogCoord(0.5 * (lo + hi))


@dataclass
class SparkSequence:
    """Roots eps_n over a range of n, with residuals against the linear law.

    ``first_n`` is the smallest n in the range for which a bracket existed;
    ``chart_p0`` is xi(P(0)) in the rectifying chart of Delta_0.
    """

    entries: list
    first_n: int | None
    chart_p0: float
    skipped: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    @property
    def ns(self):
        return [e[0] for e in self.entries]

    @property
    def xis(self):
        return [e[1].xi for e in self.entries]

    @property
    def residuals(self):
        return [e[2] for e in self.entries]


def spark_sequence(model: MapFamily, P, n_range, tol: float = 1e-12,
                   chart_tol: float = 1e-13) -> SparkSequence:
    """Solve for eps_n, n in n_range, and report ln(-ln eps_n) + n ln L - xi(P(0))."""
    ns = list(n_range)
    if not ns:
        raise DomainError("n_range is empty")
    base = SparkProblem(model, P, ns[0])
    chart_p0 = rectify_contracting_inverse(model, base.p0, chart_tol)
    lnlam = math.log(model.Lambda)
    entries, skipped = [], []
    for n in ns:
        try:
            root = solve_spark(base.with_n(n), tol)
        except NoBracket:
            if entries:
                raise
            skipped.append(n)
            continue
        entries.append((n, root, root.xi + n * lnlam - chart_p0))
    if not entries:
        raise NoBracket(f"no n in {ns[0]}..{ns[-1]} could be bracketed")
    return SparkSequence(entries, entries[0][0], chart_p0, skipped)


def interleaving_start(eps_xi: np.ndarray, N: int, m_first: int = 1) -> int | None:
    """Smallest m0 with the exterior order strict for every stored m >= m0.

    eps_xi holds xi-values in traversal order (1, m), ..., (N, m), (1, m + 1).
    Returns None when fewer than two full blocks are certified.
    """
    t = np.asarray(eps_xi, dtype=float)
    M = t.size // N
    if M < 2:
        return None
    bad = np.nonzero(~(np.diff(t) > 0))[0]
    if bad.size == 0:
        return m_first
    after = int(bad[-1]) + 1
    block, k = divmod(after, N)
    start = block if k == 0 else block + 1
    if start > M - 2:
        return None
    return m_first + start


@dataclass
class SparkTable:
    """Interior roots iota_n and exterior roots eps_{k,m} on the xi-scale.

    Exterior arrays are stored in traversal order (m major, k minor), with k
    counted from 1.
    """

    config: THConfig
    iota_n: np.ndarray
    iota_xi: np.ndarray
    iota_residual: np.ndarray
    eps_k: np.ndarray
    eps_m: np.ndarray
    eps_xi: np.ndarray
    eps_residual: np.ndarray
    m0: int | None
    n0: int | None
    mode: str = "synthetic"

    @property
    def N(self) -> int:
        return self.config.N

    def certified_eps(self):
        """(xi, k, m) arrays for m >= m0, strictly increasing in xi."""
        if self.m0 is None:
            raise OrderingViolation("exterior roots are not interleaved for any stored tail")
        sel = self.eps_m >= self.m0
        return self.eps_xi[sel], self.eps_k[sel], self.eps_m[sel]

    def rows(self):
        for n, xi, r in zip(self.iota_n, self.iota_xi, self.iota_residual):
            yield {"side": "iota", "k": None, "n_or_m": int(n), "xi_value": float(xi),
                   "residual": float(r)}
        for k, m, xi, r in zip(self.eps_k, self.eps_m, self.eps_xi, self.eps_residual):
            yield {"side": "eps", "k": int(k), "n_or_m": int(m), "xi_value": float(xi),
                   "residual": float(r)}

    def to_csv(self, fh=None) -> str:
        own = fh is None
        fh = fh or io.StringIO()
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["side", "k", "n_or_m", "xi_value", "residual"])
        for row in self.rows():
            w.writerow([row["side"], "" if row["k"] is None else row["k"], row["n_or_m"],
                        f"{row['xi_value']:.17g}", f"{row['residual']:.17g}"])
        return fh.getvalue() if own else ""


def _decreasing_start(xi: np.ndarray, first: int = 1) -> int | None:
    bad = np.nonzero(~(np.diff(xi) > 0))[0]
    if bad.size == 0:
        return first if xi.size else None
    start = int(bad[-1]) + 1
    if start >= xi.size - 1:
        return None
    return first + start


def _eps_depth(config: THConfig, iota_max: float, depth: int) -> int:
    need = math.ceil((iota_max - config.xi_E[0]) / config.lnLambda_e) + 2
    return max(depth, need)


def th_sparks(config: THConfig, depth: int, tol: float = 1e-12, mode: str | None = None) -> SparkTable:
    """Generate iota_n (n <= depth) and eps_{k,m} for a TH scenario.

    Synthetic mode instantiates the linear laws with the decaying
    perturbation r * q**n; model mode solves every root with solve_spark.
    Exterior roots are generated far enough to cover every iota value.
    """
    if depth < 1:
        raise DomainError(f"depth must be at least 1, got {depth!r}")
    mode = mode or ("model" if config.models is not None else "synthetic")
    if mode == "synthetic":
        return _synthetic(config, depth)
    if mode == "model":
        if config.models is None:
            raise InvalidConfig("model mode needs a 'models' attachment", "models")
        return _model(config, depth, tol)
    raise InvalidConfig(f"unknown mode {mode!r}", "mode")


def _synthetic(config: THConfig, depth: int) -> SparkTable:
    p = config.perturbation
    n = np.arange(1, depth + 1)
    pert_i = p.r_iota * p.q ** n.astype(float)
    iota_xi = config.xi_I[0] + n * config.neg_lnLambda_i + pert_i
    M = _eps_depth(config, float(iota_xi.max()), depth)
    N = config.N
    m = np.repeat(np.arange(1, M + 1), N)
    k = np.tile(np.arange(1, N + 1), M)
    xiE = np.asarray(config.xi_E)[k - 1]
    amp = np.array([p.eps_amplitude(j) for j in range(N)])[k - 1]
    pert_e = amp * p.q ** m.astype(float)
    eps_xi = xiE + m * config.lnLambda_e + pert_e
    return SparkTable(
        config=config,
        iota_n=n,
        iota_xi=iota_xi,
        iota_residual=pert_i,
        eps_k=k,
        eps_m=m,
        eps_xi=eps_xi,
        eps_residual=pert_e,
        m0=interleaving_start(eps_xi, N),
        n0=_decreasing_start(iota_xi),
        mode="synthetic",
    )


def _model(config: THConfig, depth: int, tol: float) -> SparkTable:
    att = config.models
    N = config.N
    inner = spark_sequence(att.interior, att.I, range(1, depth + 1), tol)
    iota_n = np.array(inner.ns)
    iota_xi = np.array(inner.xis)
    iota_res = iota_xi - (config.xi_I[0] + iota_n * config.neg_lnLambda_i)
    M = _eps_depth(config, float(iota_xi.max()), depth)
    rows = {}
    m_first = 1
    for j, E in enumerate(att.E):
        seq = spark_sequence(att.exterior, E, range(1, M + 1), tol)
        m_first = max(m_first, seq.first_n)
        rows[j] = dict(zip(seq.ns, seq.xis))
    ms = np.arange(m_first, M + 1)
    m = np.repeat(ms, N)
    k = np.tile(np.arange(1, N + 1), ms.size)
    eps_xi = np.array([rows[kk - 1][mm] for kk, mm in zip(k, m)])
    xiE = np.asarray(config.xi_E)[k - 1]
    eps_res = eps_xi - (xiE + m * config.lnLambda_e)
    return SparkTable(
        config=config,
        iota_n=iota_n,
        iota_xi=iota_xi,
        iota_residual=iota_res,
        eps_k=k,
        eps_m=m,
        eps_xi=eps_xi,
        eps_residual=eps_res,
        m0=interleaving_start(eps_xi, N, m_first),
        n0=_decreasing_start(iota_xi, int(iota_n[0])),
        mode="model",
    )
