"""Laboratory for polynomial étale self-maps of C^2.

Exact polynomial-map algebra, resultant-based fiber solving, canonical
rational substitutions, characteristic domains and Monte Carlo estimates
of the multiplicity-weighted symmetric-difference metric.
"""

from .poly import (
    BivarPoly,
    LaurentBivar,
    PolyMap,
    compose,
    equal_exact,
    is_keller_normalized,
    jacobian_det,
    normalize_by_shear,
    parse_map,
    parse_poly,
)
from .scalars import GaussianRational
from .fiber import FiberSolver, geometric_degree, image_contains, solve_fiber
from .asymptotics import CanonicalRational, dual_map, substitute, validate_canonical
from .domains import build_domain, equality_witness, load_domain, verify_domain
from .volume import mult_volume, rho
from .semigroup import iterate, left_injectivity_probe, primality_classify, right_injectivity_probe

__version__ = "0.1.0"

__all__ = [
    "BivarPoly",
    "CanonicalRational",
    "FiberSolver",
    "GaussianRational",
    "LaurentBivar",
    "PolyMap",
    "build_domain",
    "compose",
    "dual_map",
    "equal_exact",
    "equality_witness",
    "geometric_degree",
    "image_contains",
    "is_keller_normalized",
    "iterate",
    "jacobian_det",
    "left_injectivity_probe",
    "load_domain",
    "mult_volume",
    "normalize_by_shear",
    "parse_map",
    "parse_poly",
    "primality_classify",
    "rho",
    "right_injectivity_probe",
    "solve_fiber",
    "substitute",
    "validate_canonical",
    "verify_domain",
]
