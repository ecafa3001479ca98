"""Exception types shared across the toolkit."""


class FlexkitError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(FlexkitError):
    """Model document does not match the expected JSON schema."""


class DimensionError(FlexkitError):
    """Vector or matrix dimensions are inconsistent with the model."""


class NotSPDError(FlexkitError):
    """Matrix expected to be symmetric positive definite is not."""


class SingularError(FlexkitError):
    """Linear system matrix is numerically singular."""


class RankDeficientError(FlexkitError):
    """Constraint matrix does not have full row rank."""


class IterationLimitError(FlexkitError):
    """Solver exceeded its pivot/iteration budget (numerical pathology)."""


class DomainError(FlexkitError):
    """Argument outside the mathematical domain of a special function."""


class NoCandidatesError(FlexkitError):
    """No active-set candidate admits valid multipliers; the recourse can
    improve every constraint simultaneously and the problem is unbounded."""


class NotInteriorError(FlexkitError):
    """Nominal point is infeasible (psi(theta_bar) > 0)."""


class UnboundedPsiError(FlexkitError):
    """Recourse drives every constraint to -inf; psi is unbounded below."""
