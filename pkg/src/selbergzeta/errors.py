"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: precondition failures exit 2,
numerical non-convergence exits 3, balance budget violations exit 4.
"""


class SelbergError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SelbergError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class PoleError(DomainError):
    """Evaluation requested at (or numerically indistinguishable from) a pole."""


class RegionError(DomainError):
    """A spectral point lies outside the region required by a backend."""


class ConvergenceRegionError(DomainError):
    """A closed-form matrix element is requested where its series diverge."""


class TailBoundError(DomainError):
    """An integrand violates the decay envelope it was declared with."""


class PhaseGridError(DomainError):
    """A tabulated scattering phase was sampled outside its grid."""


class SizeBoundError(DomainError):
    """A requested size exceeds the configured bound."""


class DecompositionError(DomainError):
    """A matrix could not be written as a word in S and T."""


class DiscriminantError(DomainError):
    """Not a reduced discriminant of an indefinite quaternion division algebra."""


class MissingLevelError(DomainError):
    """Some divisor level is absent from the supplied data."""


class IngestError(DomainError):
    """An eigenvalue file failed validation."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class CacheCorruptionError(SelbergError):
    """A cache file failed its checksum or format check."""


class ConvergenceError(SelbergError, ArithmeticError):
    """An iterative or truncated computation failed to converge."""


class BoundaryZeroError(ConvergenceError):
    """A zero-counting contour passes too close to a zero."""


class ZeroWeightError(SelbergError, ZeroDivisionError):
    """A factor with negative exponent vanishes at the evaluation point."""


class BudgetExceededError(SelbergError):
    """A trace-formula residual exceeds its computed error budget."""
