"""Exception hierarchy shared across the library.

Exit-code mapping for the CLI: GhLabIndeterminate -> 2 (honest
indeterminacy), everything else derived from GhLabError -> 1.
"""


class GhLabError(Exception):
    """Base class for all library errors."""


class PrecisionExhausted(GhLabError):
    """A certified computation ran out of stored or requestable precision."""


class GhLabIndeterminate(GhLabError):
    """A decision could not be certified either way at the working precision.

    Carries a `diagnostic` dict describing what was attempted.
    """

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


class ExpressionSyntaxError(GhLabError):
    """Parse failure; `offset` is the byte offset into the source text."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownIdentifier(GhLabError):
    """An identifier is neither a declared variable nor a known function."""


class DomainViolation(GhLabError):
    """Evaluation left the declared domain (division blow-up, overflow)."""


class QuadratureNotConverged(GhLabError):
    """Richardson pair disagreed; carries both estimates."""

    def __init__(self, message, coarse, fine):
        super().__init__(f"{message}: estimates {coarse!r} vs {fine!r}")
        self.coarse = coarse
        self.fine = fine


class RationalInsideRadius(GhLabError):
    """A Diophantine scan hit an exact lattice point; carries the witness."""

    def __init__(self, xi):
        super().__init__(f"rational witness xi={xi} inside scan radius")
        self.xi = tuple(xi)


class DivisorBelowTol(GhLabError):
    """Small divisor for a Fourier mode fell below the solve tolerance."""

    def __init__(self, xi, divisor, tol):
        super().__init__(f"divisor {divisor:.3e} < tol {tol:.3e} at xi={xi}")
        self.xi = tuple(xi)
        self.divisor = divisor
        self.tol = tol


class NoCycles(GhLabError):
    """Operation needs homology generators but the manifold has d = 0."""


class NotIntegral(GhLabError):
    """A construction required an integral 1-form and the check failed."""


class WitnessRejected(GhLabError):
    """A claimed Liouville witness failed verification."""


class GridTooCoarse(GhLabError):
    """Torus sampling grid cannot resolve the requested frequency cutoff."""


class InsufficientShells(GhLabError):
    """Decay analysis needs more frequency shells than are available."""


class SchemaError(GhLabError):
    """Scenario file failed validation; message carries the key path."""
