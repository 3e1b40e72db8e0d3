"""Abstract "tears of the heart" scenario: exponents and marked chart values.

A scenario records the two Poincare exponents (interior Lambda_i < 1,
exterior Lambda_e > 1), the chart values xi_e(E_1) < ... < xi_e(E_N) of the
exterior separatrices inside one fundamental domain of length ln Lambda_e,
and the chart value(s) xi_i(I_j) of the interior separatrices.

In model mode the chart values are computed from attached map families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InvalidConfig
from .map_models import PowerLawModel, model_from_spec
from .numeric_core import circle_reduce

__all__ = ["THConfig", "ModelAttachment", "Perturbation", "normalize_marks"]


def _number(d: dict, key: str, where: str = "config") -> float:
    if key not in d:
        raise InvalidConfig(f"{where} is missing field '{key}'", key)
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise InvalidConfig(f"field '{key}' must be a finite number, got {v!r}", key)
    return float(v)


def _numbers(v, key: str) -> tuple:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        v = [v]
    if not isinstance(v, list) or not v:
        raise InvalidConfig(f"field '{key}' must be a number or a non-empty list", key)
    out = []
    for item in v:
        if isinstance(item, bool) or not isinstance(item, (int, float)) or not math.isfinite(item):
            raise InvalidConfig(f"field '{key}' must hold finite numbers, got {item!r}", key)
        out.append(float(item))
    return tuple(out)


def normalize_marks(values, period: float) -> tuple:
    """Re-enumerate marks on the circle R/(period Z), keeping the first one.

    Every mark is moved into [values[0], values[0] + period) and the others
    are sorted, so the first entry stays the distinguished one.
    """
    base = values[0]
    rest = sorted(base + circle_reduce(v - base, period) for v in values[1:])
    return (base, *rest)


@dataclass(frozen=True)
class Perturbation:
    """Decaying o(1) term r * q**n injected into synthetic chart sequences."""

    r_iota: float = 0.0
    r_eps: tuple = ()
    q: float = 0.5

    def eps_amplitude(self, k: int) -> float:
        if not self.r_eps:
            return 0.0
        return self.r_eps[k] if len(self.r_eps) > 1 else self.r_eps[0]


@dataclass(frozen=True)
class ModelAttachment:
    """Map families for model mode, both written with exponent < 1.

    ``exterior`` is the inverse exterior map, with exponent 1/Lambda_e.
    """

    interior: PowerLawModel
    exterior: PowerLawModel
    I: float
    E: tuple


@dataclass(frozen=True)
class THConfig:
    Lambda_i: float
    Lambda_e: float
    xi_E: tuple
    xi_I: tuple
    perturbation: Perturbation = field(default_factory=Perturbation)
    models: ModelAttachment | None = None

    def __post_init__(self):
        if not 0 < self.Lambda_i < 1:
            raise InvalidConfig(f"Lambda_i must lie in (0, 1), got {self.Lambda_i!r}", "Lambda_i")
        if not self.Lambda_e > 1:
            raise InvalidConfig(f"Lambda_e must exceed 1, got {self.Lambda_e!r}", "Lambda_e")
        if not self.xi_E:
            raise InvalidConfig("xi_E must hold at least one value", "xi_E")
        if not self.xi_I:
            raise InvalidConfig("xi_I must hold at least one value", "xi_I")
        _check_marks(self.xi_E, self.lnLambda_e, "xi_E", "ln Lambda_e")
        _check_marks(self.xi_I, -math.log(self.Lambda_i), "xi_I", "-ln Lambda_i")
        p = self.perturbation
        if not 0 < p.q < 1:
            raise InvalidConfig(f"perturbation q must lie in (0, 1), got {p.q!r}", "q")
        if len(p.r_eps) not in (0, 1, self.N):
            raise InvalidConfig(f"perturbation r must be a number or a list of {self.N}", "r")

    @property
    def N(self) -> int:
        return len(self.xi_E)

    @property
    def lnLambda_e(self) -> float:
        return math.log(self.Lambda_e)

    @property
    def neg_lnLambda_i(self) -> float:
        return -math.log(self.Lambda_i)

    @classmethod
    def from_lambda_mu(cls, lam: float, mu: float, xi_E, xi_I, **kw) -> "THConfig":
        xi_I = tuple(xi_I) if isinstance(xi_I, (list, tuple)) else (float(xi_I),)
        return cls(Lambda_i=lam, Lambda_e=lam * lam * mu, xi_E=tuple(xi_E), xi_I=xi_I, **kw)

    def shifted(self, dE: float = 0.0, dI: float = 0.0) -> "THConfig":
        return THConfig(self.Lambda_i, self.Lambda_e,
                        tuple(v + dE for v in self.xi_E),
                        tuple(v + dI for v in self.xi_I),
                        self.perturbation, self.models)

    @classmethod
    def from_dict(cls, d: dict) -> "THConfig":
        """Parse the JSON scenario record.

        Accepts {"lambda", "mu"} or {"Lambda_i", "Lambda_e"}, "xi_E", "xi_I",
        optional "perturbation": {"r", "q", "r_iota"} and optional "models".
        """
        if not isinstance(d, dict):
            raise InvalidConfig("scenario must be a JSON object")
        if "lambda" in d or "mu" in d:
            lam = _number(d, "lambda")
            mu = _number(d, "mu")
            Li, Le = lam, lam * lam * mu
        else:
            Li = _number(d, "Lambda_i")
            Le = _number(d, "Lambda_e")

        pert = Perturbation()
        if "perturbation" in d:
            pd = d["perturbation"]
            if not isinstance(pd, dict):
                raise InvalidConfig("field 'perturbation' must be an object", "perturbation")
            r_eps = _numbers(pd.get("r", 0.0), "r")
            r_iota = float(pd["r_iota"]) if "r_iota" in pd else r_eps[0]
            pert = Perturbation(r_iota=r_iota, r_eps=r_eps, q=_number(pd, "q", "perturbation"))

        models = None
        if "models" in d:
            models = _parse_models(d["models"])
            Li_m = models.interior.Lambda
            Le_m = 1.0 / models.exterior.Lambda
            if abs(Li_m - Li) > 1e-12 * Li:
                raise InvalidConfig(
                    f"interior model exponent {Li_m!r} differs from Lambda_i {Li!r}", "Lambda_i")
            if abs(Le_m - Le) > 1e-12 * Le:
                raise InvalidConfig(
                    f"exterior model exponent 1/{models.exterior.Lambda!r} differs from "
                    f"Lambda_e {Le!r}", "Lambda_e")

        if models is not None and "xi_E" not in d:
            xi_E, xi_I = _model_charts(models)
        else:
            if "xi_E" not in d:
                raise InvalidConfig("config is missing field 'xi_E'", "xi_E")
            if "xi_I" not in d:
                raise InvalidConfig("config is missing field 'xi_I'", "xi_I")
            xi_E = _numbers(d["xi_E"], "xi_E")
            xi_I = _numbers(d["xi_I"], "xi_I")
        return cls(Li, Le, xi_E, xi_I, pert, models)

    def to_dict(self) -> dict:
        out = {
            "Lambda_i": self.Lambda_i,
            "Lambda_e": self.Lambda_e,
            "xi_E": list(self.xi_E),
            "xi_I": list(self.xi_I) if len(self.xi_I) > 1 else self.xi_I[0],
        }
        p = self.perturbation
        if p.r_eps or p.r_iota:
            out["perturbation"] = {"r": list(p.r_eps), "r_iota": p.r_iota, "q": p.q}
        if self.models is not None:
            out["models"] = {
                "interior": self.models.interior.to_spec(),
                "exterior": self.models.exterior.to_spec(),
                "I": self.models.I,
                "E": list(self.models.E),
            }
        return out


def _check_marks(values, period, name, period_name):
    for a, b in zip(values, values[1:]):
        if not a < b:
            raise InvalidConfig(
                f"{name} must be strictly increasing (fundamental-domain order), "
                f"got {a!r} >= {b!r}", name)
    if not values[-1] < values[0] + period:
        raise InvalidConfig(
            f"{name} must fit in one fundamental domain: last value {values[-1]!r} "
            f">= first + {period_name} = {values[0] + period!r}", name)


def _parse_models(md) -> ModelAttachment:
    if not isinstance(md, dict):
        raise InvalidConfig("field 'models' must be an object", "models")
    for key in ("interior", "exterior", "I", "E"):
        if key not in md:
            raise InvalidConfig(f"models is missing field '{key}'", key)
    interior = model_from_spec(md["interior"])
    exterior = model_from_spec(md["exterior"])
    if not interior.Lambda < 1 or not exterior.Lambda < 1:
        raise InvalidConfig("model-mode maps must have exponent < 1 "
                            "(exterior given as the inverse map)", "models")
    I = _number(md, "I", "models")
    E = _numbers(md["E"], "E")
    for name, v, m in [("I", I, interior)] + [("E", e, exterior) for e in E]:
        if not 0 < v < m.delta:
            raise InvalidConfig(f"models.{name} = {v!r} outside (0, delta)", name)
    return ModelAttachment(interior, exterior, I, E)


def _model_charts(models: ModelAttachment, tol: float = 1e-13):
    from .rectifier import rectify_contracting_inverse

    xi_I = (rectify_contracting_inverse(models.interior, models.I, tol),)
    xi_E = tuple(rectify_contracting_inverse(models.exterior, e, tol) for e in models.E)
    return xi_E, xi_I
