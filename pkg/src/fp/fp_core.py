"""
Fractional-programming core - BD-IRS THz Simulator

SINR, sum rate, the quadratic-transform surrogate F and its closed-form
auxiliary updates.

Conventions
-----------
- Composite precoders are stored column-wise: W is M x N, w_n = W[:, n].
- Effective channels are stored row-wise: hbar is N x M, row n is hbar_n.
- The interference sum inside Xi_n and in the alpha* denominator runs over
  ALL users n' (self term included). That is what makes the trace rewriting
  of the IRS subproblem exact and gives F == sum rate at optimal auxiliaries.
- F is the quadratic transform of the base-2 sum rate:

      F = sum_n [ log2(1 + beta_n) + (Gamma_n - beta_n - Xi_n) / ln 2 ]

  With this scaling beta* = gamma and alpha* are the exact maximizers, so
  every block update of the outer loop is an ascent step. The 1/ln 2 factor
  leaves the reference values untouched: F = 0 at zero auxiliaries, F = 1 in
  the scalar case beta = 1, alpha = 1/sqrt(2), and F = sum rate at optimal
  auxiliaries.
"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from src.channel.thz_channel import ChannelSet
from src.core.errors import DimensionError, DomainError
from src.core.system_config import dbm_to_watts

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)


@dataclass(frozen=True)
class NoiseModel:
    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise DomainError(f"Noise power must be positive (got {self.sigma2})")


@dataclass(frozen=True)
class EffectiveChannels:
    hbar: np.ndarray

    def __post_init__(self):
        hbar = np.atleast_2d(np.asarray(self.hbar, dtype=complex))
        if not np.all(np.isfinite(hbar)):
            raise DomainError("Effective channels must be finite")
        object.__setattr__(self, "hbar", hbar)

    @property
    def N(self) -> int:
        return self.hbar.shape[0]

    @property
    def M(self) -> int:
        return self.hbar.shape[1]


@dataclass(frozen=True)
class AuxState:
    beta: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float).reshape(-1)
        alpha = np.asarray(self.alpha, dtype=complex).reshape(-1)
        if beta.shape != alpha.shape:
            raise DimensionError(f"beta has {beta.size} entries, alpha has {alpha.size}")
        if np.any(beta < 0):
            raise DomainError("beta must be non-negative")
        if not (np.all(np.isfinite(beta)) and np.all(np.isfinite(alpha))):
            raise DomainError("Auxiliary variables must be finite")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def zeros(cls, N: int) -> "AuxState":
        return cls(np.zeros(N), np.zeros(N, dtype=complex))


HbarLike = Union[EffectiveChannels, np.ndarray]


def noise_power(N0_dbm_hz: float, bandwidth: float) -> NoiseModel:
    """sigma^2 = N0 * B in Watts."""
    return NoiseModel(dbm_to_watts(N0_dbm_hz) * bandwidth)


# ---------------------------------------------------------------------
# Effective channels
# ---------------------------------------------------------------------
def effective_channel(h_n: np.ndarray, Theta_i: np.ndarray, G: np.ndarray) -> np.ndarray:
    """(h_n^H Theta_i G)^H as an M-vector."""
    h_n = np.asarray(h_n, dtype=complex).reshape(-1)
    Theta_i = np.asarray(Theta_i, dtype=complex)
    G = np.asarray(G, dtype=complex)
    if Theta_i.shape != (h_n.size, G.shape[0]):
        raise DimensionError(
            f"Theta_i shape {Theta_i.shape} incompatible with h_n ({h_n.size}) and G {G.shape}"
        )
    return (h_n.conj() @ Theta_i @ G).conj()


def effective_channels(channels: ChannelSet, theta_blocks: Sequence[np.ndarray]) -> EffectiveChannels:
    """Stack hbar_n for every user; theta_blocks[n] is the block Theta_{i_n} user n sees."""
    if len(theta_blocks) != channels.N:
        raise DimensionError(f"{len(theta_blocks)} Theta blocks for {channels.N} users")
    rows = [effective_channel(channels.h[n], theta_blocks[n], channels.G) for n in range(channels.N)]
    if not rows:
        return EffectiveChannels(np.zeros((0, channels.M), dtype=complex))
    return EffectiveChannels(np.vstack(rows))


# ---------------------------------------------------------------------
# SINR and rates
# ---------------------------------------------------------------------
def _gains(hbar: HbarLike, W: np.ndarray) -> np.ndarray:
    """C[n, n'] = hbar_n^H w_n'."""
    H = hbar.hbar if isinstance(hbar, EffectiveChannels) else np.atleast_2d(np.asarray(hbar, dtype=complex))
    W = np.asarray(W, dtype=complex)
    if W.ndim != 2 or H.shape[1] != W.shape[0] or H.shape[0] != W.shape[1]:
        raise DimensionError(f"hbar {H.shape} and precoders {W.shape} do not match (need N x M and M x N)")
    return H.conj() @ W


def sinr_vector(hbar: HbarLike, W: np.ndarray, noise: NoiseModel) -> np.ndarray:
    power = np.abs(_gains(hbar, W)) ** 2
    signal = np.diag(power).copy()
    interference = power.sum(axis=1) - signal
    return signal / (interference + noise.sigma2)


def sinr(n: int, hbar: HbarLike, W: np.ndarray, noise: NoiseModel) -> float:
    return float(sinr_vector(hbar, W, noise)[n])


def user_rates(hbar: HbarLike, W: np.ndarray, noise: NoiseModel) -> np.ndarray:
    return np.log2(1.0 + sinr_vector(hbar, W, noise))


def sum_rate(hbar: HbarLike, W: np.ndarray, noise: NoiseModel) -> float:
    return float(np.sum(user_rates(hbar, W, noise)))


# ---------------------------------------------------------------------
# Quadratic-transform surrogate
# ---------------------------------------------------------------------
def fp_objective(hbar: HbarLike, W: np.ndarray, aux: AuxState, noise: NoiseModel) -> float:
    C = _gains(hbar, W)
    if aux.beta.size != C.shape[0]:
        raise DimensionError(f"Auxiliary state has {aux.beta.size} users, channels have {C.shape[0]}")

    beta, alpha = aux.beta, aux.alpha
    signal = np.diag(C)
    total = np.sum(np.abs(C) ** 2, axis=1) + noise.sigma2

    gamma_term = 2.0 * np.sqrt(1.0 + beta) * np.real(alpha.conj() * signal)
    xi_term = np.abs(alpha) ** 2 * total
    return float(np.sum(np.log2(1.0 + beta) + (gamma_term - beta - xi_term) / LN2))


def update_beta(hbar: HbarLike, W: np.ndarray, noise: NoiseModel) -> np.ndarray:
    return sinr_vector(hbar, W, noise)


def update_alpha(hbar: HbarLike, W: np.ndarray, beta: np.ndarray, noise: NoiseModel) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    if np.any(beta < 0):
        raise DomainError("beta must be non-negative")
    C = _gains(hbar, W)
    total = np.sum(np.abs(C) ** 2, axis=1) + noise.sigma2
    return np.sqrt(1.0 + beta) * np.diag(C) / total


def optimal_aux(hbar: HbarLike, W: np.ndarray, noise: NoiseModel) -> AuxState:
    """beta <- gamma, then alpha <- alpha*(beta)."""
    beta = update_beta(hbar, W, noise)
    return AuxState(beta, update_alpha(hbar, W, beta, noise))
