"""Numerics for polycycle moduli: rectifying charts, sparkling connections,
visit frequencies and rotation-orbit counting."""

__version__ = "0.1.0"

from .errors import (AmbiguousRegime, BoundViolation, DegenerateClass, DomainError,
                     EscapedDomain, InvalidConfig, InversionFailure, NoBracket,
                     NonContracting, OrderingViolation, OutOfRange)
from .numeric_core import UNDERFLOW, LogLogCoord, NegLog, circle_reduce, detect_rational
from .map_models import (SHIPPED_MODELS, EstimateCertificate, GridSpec, MapFamily,
                         PowerLawModel, certify_estimates, eval_map, iterate_map,
                         model_from_spec)
from .rectifier import (RectifyingChart, build_chart, chart_residual, rectify,
                        rectify_contracting_inverse)
from .scenario import THConfig
from .sparkler import SparkProblem, SparkTable, solve_spark, spark_sequence, th_sparks
from .invariants import (InvariantVector, assign_k, equivalence_verdict, frequencies,
                         invariant_vector, phi_of, projective_invariant)
from .rotation import (Interval, RotationProblem, orbit_frequency, predicted_limit,
                       rational_orbit_count)
