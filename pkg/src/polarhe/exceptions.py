"""Exception hierarchy of the package."""

from typing import Optional


class PolarHEError(Exception):
    """Base class of every error raised by polarhe."""


class InvalidArgumentError(PolarHEError, ValueError):
    """An argument violates a documented precondition."""


class DecompositionError(PolarHEError):
    """A Mueller matrix could not be polar-decomposed.

    Attributes:
        reason (str): Stable reason code, one of ``non_finite``,
            ``zero_transmittance``, ``unphysical``, ``diattenuation`` or
            ``singular``
    """

    def __init__(self, reason: str) -> None:
        super().__init__(f"Mueller decomposition failed: {reason}")
        self.reason = reason


class RegistrationError(PolarHEError):
    """No transform reached the correlation floor."""

    def __init__(self, score: float, floor: float) -> None:
        super().__init__(
            f"registration failed: best correlation {score:.4f} below floor {floor:.2f}"
        )
        self.score = score
        self.floor = floor


class NumericalError(PolarHEError):
    """Training produced a non-finite loss."""

    def __init__(self, message: str, step: Optional[int] = None) -> None:
        if step is not None:
            message = f"{message} at step {step}"
        super().__init__(message)
        self.step = step


class MalformedInputError(PolarHEError):
    """An input file does not follow its format."""
