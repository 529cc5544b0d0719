"""Exception hierarchy shared across the package."""


class DivestError(Exception):
    """Base class for all library errors."""


class DomainError(DivestError):
    """Input outside the mathematically admissible range."""


class UnsupportedKind(DivestError):
    """Operation not defined for this divergence kind."""


class DimensionMismatch(DivestError):
    """Array shapes inconsistent with the owning spec."""


class InvalidRequest(DivestError):
    """Malformed schedule or configuration request."""


class TransformMismatch(DivestError):
    """Objective requires a specific output transform the spec lacks."""


class NonFinite(DivestError):
    """A value that must be finite was not; indicates a bug upstream."""


class InvalidSigma(DivestError):
    """Gaussian scale parameter must be positive."""


class InvalidRho(DivestError):
    """Correlation must lie strictly inside (-1, 1)."""


class RejectionStall(DivestError):
    """Rejection sampler acceptance rate collapsed."""


class DimensionTooHigh(DivestError):
    """Quadrature oracle refused above its supported dimension."""


class NonIntegrable(DivestError):
    """Defining integral diverges for the requested pair."""


class DegenerateFit(DivestError):
    """Rate fit impossible (zero errors or too few points)."""


class SpecParseError(DivestError):
    """Distribution spec string failed to parse.

    Carries the offending position and what was expected there.
    """

    def __init__(self, text: str, pos: int, expected: str):
        self.text = text
        self.pos = pos
        self.expected = expected
        super().__init__(
            f"parse error at position {pos} in {text!r}: expected {expected}"
        )
