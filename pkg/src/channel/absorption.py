"""
Molecular absorption lookup - BD-IRS THz Simulator

The absorption coefficient tau(f_c) is read from a small tabulated curve
instead of a line-by-line database. Tables are two-column text files
(frequency_Hz, tau_per_m) with '#' comments; the built-in table is used when
no file is configured.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Tuple, Union

import numpy as np

from src.core.errors import ConfigurationError, OutOfRangeError

logger = logging.getLogger(__name__)

# Span every table must cover
MIN_COVERAGE_HZ = 0.1e12
MAX_COVERAGE_HZ = 1.0e12

DEFAULT_KNOTS_HZ = (0.1e12, 0.3e12, 0.55e12, 0.85e12, 1.0e12)
DEFAULT_TAU_PER_M = (0.005, 0.0116, 0.0535, 0.1, 0.2)


@dataclass(frozen=True)
class AbsorptionTable:
    """Ordered (frequency [Hz], tau [1/m]) knots, interpolated piecewise-linearly."""

    frequencies: Tuple[float, ...]
    taus: Tuple[float, ...]

    def __post_init__(self):
        freqs = np.asarray(self.frequencies, dtype=float)
        taus = np.asarray(self.taus, dtype=float)

        if freqs.ndim != 1 or freqs.shape != taus.shape or freqs.size < 2:
            raise ConfigurationError("Absorption table needs at least two (frequency, tau) pairs")
        if not np.all(np.isfinite(freqs)) or not np.all(np.isfinite(taus)):
            raise ConfigurationError("Absorption table entries must be finite")
        if np.any(np.diff(freqs) <= 0):
            raise ConfigurationError("Absorption table frequencies must be strictly increasing")
        if np.any(taus < 0):
            raise ConfigurationError("Absorption coefficients must be non-negative")
        # small slack so 0.1e12 written as 1e11 in a file still counts
        if freqs[0] > MIN_COVERAGE_HZ * (1 + 1e-12) or freqs[-1] < MAX_COVERAGE_HZ * (1 - 1e-12):
            raise ConfigurationError(
                f"Absorption table must cover [{MIN_COVERAGE_HZ:.3g}, {MAX_COVERAGE_HZ:.3g}] Hz "
                f"(got [{freqs[0]:.3g}, {freqs[-1]:.3g}])"
            )

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[float, float]]) -> "AbsorptionTable":
        pairs = list(pairs)
        return cls(tuple(float(f) for f, _ in pairs), tuple(float(t) for _, t in pairs))

    @property
    def span(self) -> Tuple[float, float]:
        return self.frequencies[0], self.frequencies[-1]


def default_table() -> AbsorptionTable:
    return AbsorptionTable(DEFAULT_KNOTS_HZ, DEFAULT_TAU_PER_M)


def load_absorption_table(path: Optional[Union[str, Path]] = None) -> AbsorptionTable:
    """Read a two-column table; None returns the built-in default."""
    if path is None:
        return default_table()

    path = Path(path)
    if not path.is_absolute() and not path.exists():
        path = Path(__file__).resolve().parents[2] / path
    if not path.exists():
        raise ConfigurationError(f"Absorption table not found: {path}")

    try:
        data = np.loadtxt(path, comments="#", ndmin=2, dtype=float)
    except ValueError as e:
        raise ConfigurationError(f"Could not parse absorption table {path}: {e}") from e

    if data.shape[1] != 2:
        raise ConfigurationError(f"Absorption table {path} must have exactly two columns")

    table = AbsorptionTable(tuple(data[:, 0]), tuple(data[:, 1]))
    logger.info(f"[Absorption] Loaded {len(table.frequencies)} knots from {path.name}")
    return table


def absorption_coefficient(table: AbsorptionTable, f_c: float) -> float:
    """
    Piecewise-linear tau at f_c (exact at knots).

    Raises OutOfRangeError outside the tabulated span; no extrapolation.
    """
    lo, hi = table.span
    if not (lo <= f_c <= hi):
        raise OutOfRangeError(f"f_c={f_c:.6g} Hz outside absorption table span [{lo:.6g}, {hi:.6g}] Hz")
    return float(np.interp(f_c, table.frequencies, table.taus))
