"""
THz line-of-sight channel synthesis - BD-IRS THz Simulator

Builds the BS->IRS matrix G and the IRS->user vectors h_n from scenario
geometry:

    q(f_c, d)  = c / (4 pi f_c d) * exp(-tau(f_c) d / 2)
    G          = q(f_c, d1) * a_rx(theta_rx) a_tx(theta_tx)^H      (K x M)
    h_n        = q(f_c, d2_n) * a(theta_n)                         (K)

Antenna spacing is half a wavelength at the carrier, so the spatial
frequency of an angle phi is simply sin(phi). The IRS is a K-element ULA.
All functions are pure and thread-safe.
"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from src.channel.absorption import AbsorptionTable, absorption_coefficient
from src.core.errors import ConfigurationError, DimensionError, DomainError
from src.core.system_config import REFLECTIVE, TRANSMISSIVE, SystemConfig

logger = logging.getLogger(__name__)

_GROUPS = (REFLECTIVE, TRANSMISSIVE)
_HALF_PI = math.pi / 2 + 1e-12


@dataclass(frozen=True)
class Geometry:
    """Distances [m], angles [rad] and group membership of one scenario."""

    d1: float
    d2: Tuple[float, ...]
    phi_tx: float
    phi_rx: float
    phi_users: Tuple[float, ...]
    groups: Tuple[str, ...]

    def __post_init__(self):
        n = len(self.d2)
        if len(self.phi_users) != n or len(self.groups) != n:
            raise ConfigurationError(
                f"Geometry lists disagree: {n} distances, {len(self.phi_users)} angles, "
                f"{len(self.groups)} group labels"
            )
        if not self.d1 > 0 or any(not d > 0 for d in self.d2):
            raise ConfigurationError("All geometry distances must be positive")
        for phi in (self.phi_tx, self.phi_rx, *self.phi_users):
            if not (-_HALF_PI <= phi <= _HALF_PI):
                raise ConfigurationError(f"Angle {phi} outside [-pi/2, pi/2]")
        bad = [g for g in self.groups if g not in _GROUPS]
        if bad:
            raise ConfigurationError(f"Unknown group label(s): {bad}")

    @property
    def N(self) -> int:
        return len(self.d2)


@dataclass(frozen=True)
class ChannelSet:
    """G: K x M complex; h: N x K complex (row n is h_n)."""

    G: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        G = np.asarray(self.G, dtype=complex)
        h = np.atleast_2d(np.asarray(self.h, dtype=complex))
        if G.ndim != 2:
            raise DimensionError(f"G must be a matrix (got shape {G.shape})")
        if h.shape[0] > 0 and h.shape[1] != G.shape[0]:
            raise DimensionError(f"h_n length {h.shape[1]} does not match K={G.shape[0]}")
        if not (np.all(np.isfinite(G)) and np.all(np.isfinite(h))):
            raise DomainError("Channel entries must be finite")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "h", h)

    @property
    def K(self) -> int:
        return self.G.shape[0]

    @property
    def M(self) -> int:
        return self.G.shape[1]

    @property
    def N(self) -> int:
        return self.h.shape[0]

    def subset(self, users: Sequence[int]) -> "ChannelSet":
        users = list(users)
        h = self.h[users] if users else np.zeros((0, self.K), dtype=complex)
        return ChannelSet(self.G, h)


def path_gain(f_c: float, d: float, tau: float) -> float:
    """Free-space spreading times half the molecular absorption over distance d."""
    if not f_c > 0:
        raise DomainError(f"Carrier frequency must be positive (got {f_c})")
    if not d > 0:
        raise DomainError(f"Distance must be positive (got {d})")
    if not tau >= 0:
        raise DomainError(f"Absorption coefficient must be non-negative (got {tau})")
    return SPEED_OF_LIGHT / (4.0 * math.pi * f_c * d) * math.exp(-0.5 * tau * d)


def array_response(theta: float, L: int) -> np.ndarray:
    """ULA steering vector, entry k = exp(j pi k theta)."""
    if L < 1:
        raise DomainError(f"Array needs at least one element (L={L})")
    return np.exp(1j * math.pi * theta * np.arange(L))


def spatial_frequency(phi: float) -> float:
    # 2 d0 f_c sin(phi) / c with d0 = c / (2 f_c)
    return math.sin(phi)


def synthesize_channels(cfg: SystemConfig, geo: Geometry, table: AbsorptionTable) -> ChannelSet:
    if geo.N != cfg.N:
        raise ConfigurationError(f"Geometry has {geo.N} users but config expects N={cfg.N}")
    if tuple(geo.groups) != cfg.groups:
        raise ConfigurationError("Geometry group labels do not follow the config's N_r/N_t split")

    tau = absorption_coefficient(table, cfg.f_c)

    a_rx = array_response(spatial_frequency(geo.phi_rx), cfg.K)
    a_tx = array_response(spatial_frequency(geo.phi_tx), cfg.M)
    G = path_gain(cfg.f_c, geo.d1, tau) * np.outer(a_rx, a_tx.conj())

    h = np.empty((cfg.N, cfg.K), dtype=complex)
    for n in range(cfg.N):
        h[n] = path_gain(cfg.f_c, geo.d2[n], tau) * array_response(spatial_frequency(geo.phi_users[n]), cfg.K)

    logger.debug(
        f"[Channel] f_c={cfg.f_c:.3g} Hz tau={tau:.4g}/m |G|_F={np.linalg.norm(G):.4g} "
        f"|h|={np.round(np.linalg.norm(h, axis=1), 12).tolist()}"
    )
    return ChannelSet(G, h)
