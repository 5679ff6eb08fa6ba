"""Exception types shared across the package."""


class UcsmError(Exception):
    """Base class for all package errors."""


class SingularMatrix(UcsmError):
    """A pivot underflowed the singularity threshold during factorization."""


class DimensionMismatch(UcsmError):
    """Array shapes of a problem or query are mutually inconsistent."""


class ParseError(UcsmError):
    """Case file could not be parsed.

    Carries the 1-based line number and a human-readable reason.
    """

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class ValidationError(UcsmError):
    """Parsed case violates a structural invariant."""


class BalancingFailed(UcsmError):
    """Dataset class balancing budget exhausted."""

    def __init__(self, attempts: int, achieved_ratio: float):
        self.attempts = attempts
        self.achieved_ratio = achieved_ratio
        super().__init__(
            f"class balancing failed after {attempts} attempts "
            f"(ratio {achieved_ratio:.3f})"
        )


class SingleClassData(UcsmError):
    """Training data contains only one class label."""


class FeatureMismatch(UcsmError):
    """Hyperplane feature layout does not match the system case."""


class TooLarge(UcsmError):
    """Instance exceeds the brute-force enumeration budget."""
