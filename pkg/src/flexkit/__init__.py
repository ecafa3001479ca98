"""Flexibility analysis for linear constraint systems under uncertainty.

Given an affine constraint system with recourse and a Gaussian description
of its uncertain parameters, this package computes:

- the feasibility function psi and the flexibility test chi,
- the classical hyperbox flexibility index and its l1/l2/linf relatives,
- the ellipsoidal flexibility index (largest inscribed covariance ellipsoid,
  measured as a squared Mahalanobis radius) and its chi-squared confidence
  level, which lower-bounds the probability of feasible operation,
- Monte Carlo estimates of the stochastic flexibility index for validation.

See the README and the demos/ directory for worked examples.
"""

from .activeset import ActiveCandidate, enumerate_candidates, multiplier_check
from .errors import (
    DimensionError,
    DomainError,
    FlexkitError,
    IterationLimitError,
    NoCandidatesError,
    NotInteriorError,
    NotSPDError,
    RankDeficientError,
    SchemaError,
    SingularError,
    UnboundedPsiError,
)
from .flexindex import (
    ChiResult,
    IndexResult,
    PsiResult,
    VerificationReport,
    confidence_level,
    flexibility_index,
    flexibility_test,
    psi,
    set_measure,
    verify_solution,
)
from .model import (
    GaussianUncertainty,
    HyperboxSpec,
    LinearConstraint,
    SystemModel,
    UncertaintySetSpec,
    box_from_sigmas,
    evaluate_constraint,
    load_model,
    parse_model,
    serialize_model,
)
from .montecarlo import McEstimate, estimate_alpha, estimate_sf
from .stats import chi2_cdf, chi2_quantile, make_rng, sample_gaussian

__version__ = "0.1.0"

__all__ = [
    "ActiveCandidate",
    "ChiResult",
    "DimensionError",
    "DomainError",
    "FlexkitError",
    "GaussianUncertainty",
    "HyperboxSpec",
    "IndexResult",
    "IterationLimitError",
    "LinearConstraint",
    "McEstimate",
    "NoCandidatesError",
    "NotInteriorError",
    "NotSPDError",
    "PsiResult",
    "RankDeficientError",
    "SchemaError",
    "SingularError",
    "SystemModel",
    "UnboundedPsiError",
    "UncertaintySetSpec",
    "VerificationReport",
    "box_from_sigmas",
    "chi2_cdf",
    "chi2_quantile",
    "confidence_level",
    "enumerate_candidates",
    "estimate_alpha",
    "estimate_sf",
    "evaluate_constraint",
    "flexibility_index",
    "flexibility_test",
    "load_model",
    "make_rng",
    "multiplier_check",
    "parse_model",
    "psi",
    "sample_gaussian",
    "serialize_model",
    "set_measure",
    "verify_solution",
    "__version__",
]
