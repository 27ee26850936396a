"""Exception types shared across the package."""


class G2KitError(Exception):
    """Base class for all g2kit errors."""


class DegreeError(G2KitError):
    """Form degree out of range or mismatched between operands."""


class MetricError(G2KitError):
    """Metric is singular, non-symmetric or not positive-definite."""


class NotG2FormError(G2KitError):
    """A 3-form that does not define a G2-structure (degenerate or wrongly oriented)."""


class NotIntegrableError(G2KitError):
    """Structure fails the integrability condition d*w = theta ^ *w.

    Carries the relative size of the offending component for diagnostics.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConventionError(G2KitError):
    """Two expressions that must agree by convention (star / codifferential signs) do not."""


class IdentityViolation(G2KitError):
    """A pointwise algebraic identity that should hold exactly failed beyond tolerance."""


class JetOrderError(G2KitError):
    """An operation requested more derivatives than the jet carries."""


class DomainError(G2KitError):
    """Evaluation point outside the chart box."""


class FrameError(G2KitError):
    """Adapted orthonormal frame could not be built (metric square root degenerate)."""


class ImmersionError(G2KitError):
    """Immersion differential is rank-deficient at the evaluation point."""


class KillingViolation(G2KitError):
    """Killing-spinor preconditions fail at the point, so the dilation formula does not apply."""
