"""
Exception hierarchy for the risnet package.

Every error raised on bad input derives from ``ValueError`` so callers
that only catch ``ValueError`` keep working.
"""
from typing import Optional, Sequence


class RisNetError(ValueError):
    """Base class for all risnet errors."""


class ConversionSingularityError(RisNetError):
    """Raised when ``Z + I*R`` or ``I - S`` cannot be factorized."""

    def __init__(self, message: str, pivot: Optional[int] = None):
        super().__init__(message)
        self.pivot = pivot


class GeometryError(RisNetError):
    """Invalid link geometry (non-positive distance, shape mismatch)."""


class StructureError(RisNetError):
    """Matrix does not have the block structure the operation requires."""


class TerminationError(RisNetError):
    """RIS termination is not lossless or not representable."""


class OpenCircuitError(TerminationError):
    """Reflection coefficient equal to 1 has no finite reactance."""

    def __init__(self, message: str, indices: Sequence[int] = ()):
        super().__init__(message)
        self.indices = tuple(indices)


class NormalizationError(RisNetError):
    """Path-loss normalization is undefined for the given reference."""


class GridBudgetError(RisNetError):
    """Exhaustive grid exceeds the configured cell budget."""


class OptimizationError(RisNetError):
    """Objective became non-finite during a search."""

    def __init__(self, message: str, variables=None):
        super().__init__(message)
        self.variables = variables


class FormatError(RisNetError):
    """Malformed scenario or block file."""

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        location = ""
        if path is not None:
            location += f"{path}:"
        if line is not None:
            location += f"{line}:"
        super().__init__(f"{location} {message}" if location else message)
        self.line = line
        self.path = path


class CrossCheckError(RisNetError):
    """An internal consistency check exceeded its tolerance."""
