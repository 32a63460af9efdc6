"""
Error hierarchy for the QIPA Separation Lab.

Input problems subclass ``ValueError`` and numeric failures subclass
``ArithmeticError`` so callers that only know the builtins still catch them.
"""

from typing import Optional


class LabError(Exception):
    """Root of every error raised by the lab."""


class InputError(LabError, ValueError):
    """Invalid input or violated precondition."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NoGapError(InputError):
    """Spectrum has a single level, so there is nothing to amplify."""


class EnumerationLimitError(InputError):
    """Instance is larger than the exhaustive-enumeration guard."""


class NumericalError(LabError, ArithmeticError):
    """Overflow, non-finite intermediate or inconsistent linear system."""


class NoAmplificationError(NumericalError):
    """Oracle maps the solution and the runner-up to the same value."""
