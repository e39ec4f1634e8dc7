"""
Error types - BD-IRS THz Simulator

Library code raises these; the sweep runner and the CLI decide whether a
failure stops the run or is recorded as a flagged row.
"""

from pathlib import Path
from typing import Optional, Union


class BDIRSError(Exception):
    """Base class for every error raised by the simulator."""


class ConfigurationError(BDIRSError, ValueError):
    """Scenario or solver settings are inconsistent (dimensions, counts, ranges)."""


class DomainError(BDIRSError, ValueError):
    """A physical or numerical argument lies outside the function's domain."""


class OutOfRangeError(DomainError):
    """Lookup outside a tabulated span (no extrapolation is done)."""


class DimensionError(BDIRSError, ValueError):
    """Array shapes do not agree."""


class DecompositionError(BDIRSError, ArithmeticError):
    """A matrix factorization could not be formed (e.g. rank-deficient input)."""


class BracketingError(BDIRSError, RuntimeError):
    """Bisection could not bracket the power multiplier."""


class EmitError(BDIRSError, OSError):
    """Writing results failed; keeps the offending path for the diagnostic."""

    def __init__(self, message: str, path: Optional[Union[str, Path]] = None):
        super().__init__(f"{message} [{path}]" if path is not None else message)
        self.path = Path(path) if path is not None else None
