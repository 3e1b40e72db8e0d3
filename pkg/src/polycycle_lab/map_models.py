"""One-dimensional map families Delta_eps(x) and their grid certification.

A map family is a monotone map of a small interval (0, delta) with
Delta_eps(x) = x**Lambda * exp(O(1)) near the origin.  Families with
Lambda < 1 play the role of the sparkling-connection maps; families with
Lambda > 1 are the ones handed to the rectifier.

Every family exposes a u-scale step (u = -ln x) so that iterates can be
followed long after x itself underflows.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, EscapedDomain, InvalidConfig, InversionFailure

__all__ = [
    "MapFamily",
    "PowerLawModel",
    "GridSpec",
    "EstimateCertificate",
    "eval_map",
    "iterate_map",
    "iterate_u",
    "dx_iterate",
    "certify_estimates",
    "model_from_spec",
    "SHIPPED_MODELS",
]

_INV_RTOL = 1e-14


def _logaddexp(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    m = max(a, b)
    return m + math.log1p(math.exp(-abs(a - b)))


class MapFamily(ABC):
    """Abstract family Delta_eps on (0, delta) with exponent Lambda.

    Subclasses provide eval/dx/deps (numpy-vectorised) and may override the
    u-scale step and its inverse with exact formulas.
    """

    Lambda: float
    delta: float

    @abstractmethod
    def eval(self, eps, x):
        """Delta_eps(x)."""

    @abstractmethod
    def dx(self, eps, x):
        """Partial derivative of Delta_eps(x) in x."""

    @abstractmethod
    def deps(self, eps, x):
        """Partial derivative of Delta_eps(x) in eps."""

    @property
    def eps_dependent(self) -> bool:
        return True

    def step_u(self, u: float, eps_u: float = math.inf) -> float:
        """-ln Delta_eps(exp(-u)) with eps = exp(-eps_u)."""
        x = math.exp(-u)
        eps = math.exp(-eps_u)
        if x == 0.0:
            raise DomainError("generic models need representable x; override step_u")
        y = float(self.eval(eps, x))
        if not y > 0:
            raise DomainError(f"image {y!r} is not positive")
        return -math.log(y)

    def inverse_step_u(self, v: float, eps_u: float = math.inf) -> float:
        """Solve step_u(u, eps_u) = v for u by monotone bisection."""
        return _bisect_inverse(self, v, eps_u)


def _bisect_inverse(model: MapFamily, v: float, eps_u: float) -> float:
    f = lambda u: model.step_u(u, eps_u) - v  # noqa: E731
    guess = max(v / model.Lambda, 1e-6)
    width = max(1.0, 1e-3 * guess)
    lo = hi = guess
    for _ in range(200):
        lo = max(guess - width, guess * 1e-12, 1e-300)
        hi = guess + width
        try:
            flo, fhi = f(lo), f(hi)
        except DomainError:
            flo, fhi = math.nan, math.nan
        if flo <= 0 <= fhi:
            break
        width *= 2.0
        if hi > 1e300:
            break
    else:
        raise InversionFailure(f"could not bracket the preimage of u = {v!r}")
    if not flo <= 0 <= fhi:
        raise InversionFailure(f"could not bracket the preimage of u = {v!r}")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= _INV_RTOL * hi:
            break
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class PowerLawModel(MapFamily):
    """Delta_eps(x) = C * x**Lambda * (1 + a * x**beta) + eps * [additive_eps]."""

    C: float = 1.0
    Lambda: float = 0.5
    a: float = 0.0
    beta: float = 1.0
    additive_eps: bool = True
    delta: float = 0.9

    def __post_init__(self):
        if not self.C > 0:
            raise InvalidConfig(f"C must be positive, got {self.C!r}", "C")
        if not self.Lambda > 0:
            raise InvalidConfig(f"Lambda must be positive, got {self.Lambda!r}", "Lambda")
        if not self.beta > 0:
            raise InvalidConfig(f"beta must be positive, got {self.beta!r}", "beta")
        if not 0 < self.delta < 1:
            raise InvalidConfig(f"delta must lie in (0, 1), got {self.delta!r}", "delta")

    @property
    def eps_dependent(self) -> bool:
        return self.additive_eps

    @property
    def lnC(self) -> float:
        return math.log(self.C)

    def eval(self, eps, x):
        out = self.C * x**self.Lambda * (1.0 + self.a * x**self.beta)
        if self.additive_eps:
            out = out + eps
        return out

    def dx(self, eps, x):
        lam, a, b = self.Lambda, self.a, self.beta
        return self.C * x ** (lam - 1.0) * (lam + a * (lam + b) * x**b)

    def deps(self, eps, x):
        one = 1.0 if self.additive_eps else 0.0
        if np.ndim(x):
            return np.full(np.shape(x), one)
        return one

    def _base_u(self, u: float) -> float:
        out = self.Lambda * u - self.lnC
        if self.a != 0.0:
            t = self.a * math.exp(-self.beta * u)
            if not t > -1.0:
                raise DomainError(
                    f"1 + a*x**beta = {1 + t!r} <= 0 at u = {u!r}: image not positive"
                )
            out -= math.log1p(t)
        return out

    def step_u(self, u: float, eps_u: float = math.inf) -> float:
        base = self._base_u(u)
        if self.additive_eps and eps_u != math.inf:
            return -_logaddexp(-base, -eps_u)
        return base

    def inverse_step_u(self, v: float, eps_u: float = math.inf) -> float:
        if self.a == 0.0 and (not self.additive_eps or eps_u == math.inf):
            return (v + self.lnC) / self.Lambda
        return _bisect_inverse(self, v, eps_u)

    def to_spec(self) -> dict:
        return {
            "kind": "power_law",
            "C": self.C,
            "Lambda": self.Lambda,
            "a": self.a,
            "beta": self.beta,
            "additive_eps": self.additive_eps,
            "delta": self.delta,
        }


def model_from_spec(spec: dict) -> PowerLawModel:
    """Build a model from its JSON record."""
    if not isinstance(spec, dict):
        raise InvalidConfig("model specification must be a JSON object", "model")
    kind = spec.get("kind", "power_law")
    if kind != "power_law":
        raise InvalidConfig(f"unknown model kind {kind!r}", "kind")
    if "Lambda" not in spec:
        raise InvalidConfig("model specification is missing field 'Lambda'", "Lambda")
    known = {"kind", "C", "Lambda", "a", "beta", "additive_eps", "delta"}
    extra = set(spec) - known
    if extra:
        raise InvalidConfig(f"unknown model field(s): {sorted(extra)}", sorted(extra)[0])
    kwargs = {k: spec[k] for k in known - {"kind"} if k in spec}
    for key, value in kwargs.items():
        if key == "additive_eps":
            if not isinstance(value, bool):
                raise InvalidConfig("field 'additive_eps' must be true or false", key)
        elif not isinstance(value, (int, float)) or isinstance(value, bool):
            raise InvalidConfig(f"field {key!r} must be a number", key)
    return PowerLawModel(**kwargs)


def _check_angle(model: MapFamily, eps: float, x: float):
    if not (x > 0 and 0 <= eps <= x < model.delta):
        raise DomainError(
            f"(eps, x) = ({eps!r}, {x!r}) outside the angle 0 <= eps <= x < {model.delta!r}"
        )


def eval_map(model: MapFamily, eps: float, x: float) -> float:
    """Delta_eps(x) for (eps, x) inside the angle 0 <= eps <= x < delta."""
    _check_angle(model, eps, x)
    y = float(model.eval(eps, x))
    if not y > 0:
        raise DomainError(f"image Delta_eps(x) = {y!r} is not positive")
    return y


def iterate_map(model: MapFamily, eps: float, x: float, n: int) -> float:
    """n-th iterate Delta_eps^n(x); every iterate must stay in (0, delta)."""
    if n < 0:
        raise DomainError(f"n must be non-negative, got {n!r}")
    _check_angle(model, eps, x)
    y = x
    for k in range(1, n + 1):
        y = float(model.eval(eps, y))
        if not 0.0 < y < model.delta:
            raise EscapedDomain(k, y, model.delta)
    return y


def iterate_u(model: MapFamily, u: float, n: int, eps_u: float = math.inf,
              delta_check: bool = True) -> float:
    """n-th iterate on the u-scale; eps is passed as eps_u = -ln eps."""
    lower = -math.log(model.delta)
    for k in range(1, n + 1):
        u = model.step_u(u, eps_u)
        if delta_check and not u > lower:
            raise EscapedDomain(k, math.exp(-u), model.delta)
    return u


def dx_iterate(model: MapFamily, eps: float, x: float, n: int) -> float:
    """Chain-rule product for the x-derivative of Delta_eps^n at x."""
    d = 1.0
    y = x
    for _ in range(n):
        d *= float(model.dx(eps, y))
        y = float(model.eval(eps, y))
    return d


@dataclass(frozen=True)
class GridSpec:
    """Certification grid: log-spaced x below delta, eps spread over [0, x].

    x runs over ``decades`` decades below delta with ``per_decade`` points per
    decade; iterate bounds are spot-checked on every ``stride``-th x.
    """

    per_decade: int = 64
    decades: int = 12
    eps_per_x: int = 16
    stride: int = 8
    max_iter: int = 64
    lambda_prime: float | None = None
    jitter: float = 0.0
    seed: int = 0

    def xs(self, delta: float) -> np.ndarray:
        count = self.per_decade * self.decades
        if count <= 0 or self.eps_per_x < 2:
            raise DomainError("empty certification grid")
        expo = -self.decades + np.arange(count) / self.per_decade
        if self.jitter:
            rng = np.random.default_rng(self.seed)
            expo = expo + self.jitter * rng.uniform(-0.5, 0.5, count) / self.per_decade
        x = delta * 10.0 ** np.minimum(expo, -0.5 / self.per_decade)
        return np.sort(x)


@dataclass
class EstimateCertificate:
    """Outcome of a grid certification of the per-step and iterate estimates."""

    c: float
    C: float
    delta: float
    grid_size: int
    worst_ratios: dict
    passed: bool
    failures: list = field(default_factory=list)
    exemptions: list = field(default_factory=list)
    lambda_prime: float | None = None
    checks: dict = field(default_factory=dict)

    def records(self):
        """Flat (property, status, detail) rows for tabular output."""
        rows = []
        for name, status in self.checks.items():
            rows.append({"property": name, "status": status})
        return rows


_MARGIN = 1e-9


def certify_estimates(model: MapFamily, grid: GridSpec | None = None) -> EstimateCertificate:
    """Find the tightest (c, C) valid on the grid and spot-check iterate bounds."""
    grid = grid or GridSpec()
    xs = grid.xs(model.delta)
    fr = np.linspace(0.0, 1.0, grid.eps_per_x)
    X = np.repeat(xs, grid.eps_per_x)
    E = X * np.tile(fr, xs.size)
    lam = model.Lambda
    failures: list[str] = []
    exemptions: list[str] = []
    checks: dict[str, str] = {}

    with np.errstate(all="ignore"):
        D = np.asarray(model.eval(E, X), dtype=float)
        DX = np.asarray(model.dx(E, X), dtype=float)
        DE = np.broadcast_to(np.asarray(model.deps(E, X), dtype=float), X.shape)
        r_map = D / X**lam
        r_dx = X * DX / D

    bad = ~(np.isfinite(D) & (D > 0))
    if bad.any():
        x_bad = float(X[bad].min())
        failures.append(f"step:map: image not positive (first at x = {x_bad:.6g})")
    bad_dx = ~(np.isfinite(DX) & (DX > 0))
    if bad_dx.any():
        failures.append(
            f"step:dx: map not strictly increasing (first at x = {float(X[bad_dx].min()):.6g})"
        )

    ratios = np.concatenate([r_map, r_dx])
    good = np.isfinite(ratios) & (ratios > 0)
    worst = {
        "map_min": float(np.nanmin(r_map)) if r_map.size else math.nan,
        "map_max": float(np.nanmax(r_map)) if r_map.size else math.nan,
        "dx_min": float(np.nanmin(r_dx)) if r_dx.size else math.nan,
        "dx_max": float(np.nanmax(r_dx)) if r_dx.size else math.nan,
        "deps_min": float(DE.min()),
        "deps_max": float(DE.max()),
    }
    if good.all():
        c = min(float(ratios.min()) * (1 - _MARGIN), 1 - _MARGIN)
        C = max(float(ratios.max()) * (1 + _MARGIN), 1 + _MARGIN)
    else:
        c, C = math.nan, math.nan
    checks["step:map"] = "fail" if bad.any() or not good.all() else "pass"
    checks["step:dx"] = "fail" if bad_dx.any() or not good.all() else "pass"

    if model.eps_dependent:
        ok = bool(((DE > 0.5) & (DE < 2.0)).all())
        checks["step:deps"] = "pass" if ok else "fail"
        if not ok:
            failures.append("step:deps: D_eps Delta outside (1/2, 2)")
    else:
        checks["step:deps"] = "exempt"
        exemptions.append(
            "step:deps: eps-independent model (D_eps Delta = 0); "
            "valid only with eps fixed at 0"
        )

    lam_p = grid.lambda_prime if grid.lambda_prime is not None else (lam + 1.0) / 2.0
    if lam < 1 and not failures:
        floor = model.delta * 10.0 ** (-grid.decades / 2)
        it_fail, it_worst, it_checks = _iterate_checks(model, xs[:: grid.stride], fr, c, C,
                                                      lam_p, grid.max_iter, floor)
        failures.extend(it_fail)
        worst.update(it_worst)
        checks.update(it_checks)
        if not model.eps_dependent:
            exemptions.append("iterate:dist: eps-independent model, difference is 0")
    else:
        reason = "n/a" if lam >= 1 else "skipped"
        for name in ("iterate:map", "iterate:dx", "iterate:dist"):
            checks[name] = reason

    return EstimateCertificate(
        c=c,
        C=C,
        delta=model.delta,
        grid_size=int(X.size),
        worst_ratios=worst,
        passed=not failures,
        failures=failures,
        exemptions=exemptions,
        lambda_prime=lam_p,
        checks=checks,
    )


def _iterate_checks(model, xs, fr, c, C, lam_p, max_iter, delta_prime_floor):
    lam = model.Lambda
    X0 = np.repeat(xs, fr.size)
    E = X0 * np.tile(fr, xs.size)
    lnx0 = np.log(X0)
    lo_map = math.log(c) / (1 - lam)
    hi_map = math.log(C) / (1 - lam)
    y = X0.copy()
    y0 = X0.copy()
    logD = np.zeros_like(X0)
    active = np.ones(X0.shape, dtype=bool)
    fails = {"iterate:map": 0, "iterate:dx": 0, "iterate:dist": 0}
    worst = {"iter_map_lo": math.inf, "iter_map_hi": -math.inf,
             "iter_dx_per_step_lo": math.inf, "iter_dx_per_step_hi": -math.inf,
             "iter_dist_ratio_max": 0.0}
    dist_first_bad = math.inf
    eps_dep = model.eps_dependent
    with np.errstate(all="ignore"):
        for n in range(1, max_iter + 1):
            logD = logD + np.log(model.dx(E, y))
            y = model.eval(E, y)
            y0 = model.eval(0.0 * E, y0)
            active &= (y > 0) & (y < model.delta)
            if not active.any():
                break
            a = active
            m = np.log(y[a]) - lam**n * lnx0[a]
            worst["iter_map_lo"] = min(worst["iter_map_lo"], float(m.min()))
            worst["iter_map_hi"] = max(worst["iter_map_hi"], float(m.max()))
            fails["iterate:map"] += int(((m <= lo_map) | (m >= hi_map)).sum())

            d = logD[a] - (np.log(y[a]) - lnx0[a])
            worst["iter_dx_per_step_lo"] = min(worst["iter_dx_per_step_lo"], float((d / n).min()))
            worst["iter_dx_per_step_hi"] = max(worst["iter_dx_per_step_hi"], float((d / n).max()))
            fails["iterate:dx"] += int(((d <= n * math.log(c)) | (d >= n * math.log(C))).sum())

            if eps_dep:
                sel = a & (E > 0)
                diff = y[sel] - y0[sel]
                bound = E[sel] * X0[sel] ** (-lam_p)
                viol = (diff <= 0) | (diff >= bound)
                if viol.any():
                    dist_first_bad = min(dist_first_bad, float(X0[sel][viol].min()))
                if diff.size:
                    worst["iter_dist_ratio_max"] = max(worst["iter_dist_ratio_max"],
                                                       float((diff / bound).max()))
    # the distance bound is only claimed below some delta' > 0
    worst["delta_prime"] = dist_first_bad
    if eps_dep and dist_first_bad < delta_prime_floor:
        fails["iterate:dist"] = 1
    failures = [f"{name}: {count} grid point(s) violate the bound"
                for name, count in fails.items() if count and name != "iterate:dist"]
    if fails["iterate:dist"]:
        failures.append(
            f"iterate:dist: bound fails at x = {dist_first_bad:.6g}, below the "
            f"required delta' floor {delta_prime_floor:.6g}"
        )
    checks = {name: ("fail" if count else "pass") for name, count in fails.items()}
    if not eps_dep:
        checks["iterate:dist"] = "exempt"
    return failures, worst, checks


SHIPPED_MODELS = {
    "sqrt": PowerLawModel(C=1.0, Lambda=0.5, additive_eps=False),
    "sqrt_plus_eps": PowerLawModel(C=1.0, Lambda=0.5, additive_eps=True),
    "perturbed_sqrt": PowerLawModel(C=1.0, Lambda=0.5, a=0.1, beta=1.0, additive_eps=True, delta=0.5),
    "scaled_sqrt": PowerLawModel(C=1.5, Lambda=0.5, additive_eps=True, delta=0.4),
    "exterior_inverse": PowerLawModel(C=1.0, Lambda=0.8, additive_eps=True),
    "double_square": PowerLawModel(C=2.0, Lambda=2.0, additive_eps=False),
}
