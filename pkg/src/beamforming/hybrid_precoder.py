"""
Hybrid beamforming - BD-IRS THz Simulator

Solves the two beamforming blocks of the outer loop for fixed auxiliaries
and fixed scattering matrix:

    digital: max_{V_BB} F   s.t. ||V_RF V_BB||_F^2 <= P_max
             closed form b_n = sqrt(1+beta_n) (Q + lam A^H A)^{-1} alpha_n A^H hbar_n,
             lam >= 0 by bisection (complementary slackness)

    analog:  max_{V_RF} F   s.t. |V_RF(i,j)| = 1
             cyclic exact per-entry phase updates (monotone coordinate ascent)

With A = V_RF the digital subproblem is a concave quadratic on the power
ball of the column space of A. It is diagonalized once by an eigendecomposition
of the reduced quadratic Q, after which the transmit power is
sum_i e_i / (lam_i + lam)^2 and the multiplier search is a scalar bisection.
V_RF may be rank-deficient; a line-of-sight BS-IRS link aligns its columns.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.linalg

from src.core.errors import BracketingError, DecompositionError, DimensionError, DomainError
from src.fp.fp_core import AuxState, EffectiveChannels, HbarLike, NoiseModel, fp_objective

logger = logging.getLogger(__name__)

# Singular values of V_RF and eigenvalues of the reduced quadratic below these
# fractions of the largest are treated as zero
SVD_RTOL = 1e-8
EIG_RTOL = 1e-12
POWER_RTOL = 1e-10
MAX_DOUBLINGS = 2000
MAX_BISECTIONS = 400


@dataclass(frozen=True)
class HybridPrecoder:
    """V_RF: M x M_RF unit-modulus analog network; V_BB: M_RF x N digital precoder."""

    V_RF: np.ndarray
    V_BB: np.ndarray

    def __post_init__(self):
        V_RF = np.asarray(self.V_RF, dtype=complex)
        V_BB = np.asarray(self.V_BB, dtype=complex)
        if V_RF.ndim != 2 or V_BB.ndim != 2 or V_RF.shape[1] != V_BB.shape[0]:
            raise DimensionError(f"V_RF {V_RF.shape} and V_BB {V_BB.shape} cannot be chained")
        if not (np.all(np.isfinite(V_RF)) and np.all(np.isfinite(V_BB))):
            raise DomainError("Precoder entries must be finite")
        object.__setattr__(self, "V_RF", V_RF)
        object.__setattr__(self, "V_BB", V_BB)

    @property
    def W(self) -> np.ndarray:
        """Composite precoders, column n is w_n = V_RF V_BB[:, n]."""
        return self.V_RF @ self.V_BB

    @property
    def power(self) -> float:
        return transmit_power(self.V_RF, self.V_BB)

    def modulus_residual(self) -> float:
        """max_ij | |V_RF(i,j)| - 1 |"""
        return float(np.max(np.abs(np.abs(self.V_RF) - 1.0)))


def _hbar_matrix(hbar: HbarLike) -> np.ndarray:
    if isinstance(hbar, EffectiveChannels):
        return hbar.hbar
    return np.atleast_2d(np.asarray(hbar, dtype=complex))


def transmit_power(V_RF: np.ndarray, V_BB: np.ndarray) -> float:
    return float(np.linalg.norm(V_RF @ V_BB, "fro") ** 2)


def enforce_power(V_RF: np.ndarray, V_BB: np.ndarray, P_max: float) -> np.ndarray:
    """Scale V_BB down so that ||V_RF V_BB||_F^2 <= P_max; feasible input is returned unchanged."""
    power = transmit_power(V_RF, V_BB)
    if power <= P_max:
        return V_BB
    return V_BB * np.sqrt(P_max / power)


# ---------------------------------------------------------------------
# Initialization
# ---------------------------------------------------------------------
def initial_precoder(hbar: HbarLike, M_RF: int, P_max: float, rng: np.random.Generator) -> HybridPrecoder:
    """
    Random-phase analog network and a matched-filter digital start at full power.
    The phases come from the caller's seeded generator.
    """
    H = _hbar_matrix(hbar)
    N, M = H.shape
    V_RF = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=(M, M_RF)))
    if N == 0:
        return HybridPrecoder(V_RF, np.zeros((M_RF, 0), dtype=complex))

    norms = np.linalg.norm(H, axis=1)
    if np.all(norms == 0):
        V_BB = np.eye(M_RF, N, dtype=complex)
    else:
        directions = np.zeros((M, N), dtype=complex)
        for n in range(N):
            if norms[n] > 0:
                directions[:, n] = H[n] / norms[n]
        V_BB = np.linalg.pinv(V_RF) @ directions
        if transmit_power(V_RF, V_BB) == 0:
            V_BB = np.eye(M_RF, N, dtype=complex)

    V_BB = V_BB * np.sqrt(P_max / transmit_power(V_RF, V_BB))
    return HybridPrecoder(V_RF, V_BB)


# ---------------------------------------------------------------------
# Digital step
# ---------------------------------------------------------------------
def solve_digital(
    V_RF: np.ndarray,
    hbar: HbarLike,
    aux: AuxState,
    noise: NoiseModel,
    P_max: float,
    return_info: bool = False,
):
    """
    Maximize F over V_BB under the total power budget. Returns V_BB, or
    (V_BB, info) with the multiplier and KKT residual when return_info is set.

    The step works in the column space of V_RF, so a rank-deficient analog
    network (all columns phase-aligned to one LoS direction) is handled: with
    the compact SVD V_RF = U S V^H the composite precoder is W = U_r u,
    ||W||_F = ||u||_F, and the minimum-norm V_BB = V_r S_r^{-1} u is returned.

    noise only shifts F by a V_BB-independent constant; it is accepted so all
    block solvers share one signature.
    """
    A = np.asarray(V_RF, dtype=complex)
    H = _hbar_matrix(hbar)
    N, M = H.shape
    R = A.shape[1]
    if A.shape[0] != M:
        raise DimensionError(f"V_RF has {A.shape[0]} rows, channels have M={M}")
    if aux.beta.size != N:
        raise DimensionError(f"Auxiliary state has {aux.beta.size} users, channels have {N}")

    kappa = np.sqrt(1.0 + aux.beta) * aux.alpha
    weights = np.abs(aux.alpha) ** 2

    info = {"lambda": 0.0, "power": 0.0, "kkt_residual": 0.0, "bisections": 0, "rank": 0}
    zero = np.zeros((R, N), dtype=complex)
    if R == 0 or N == 0:
        return (zero, info) if return_info else zero

    try:
        U, sv, Vh = scipy.linalg.svd(A, full_matrices=False)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise DecompositionError(f"SVD of V_RF failed: {e}") from e
    if sv[0] <= 0:
        return (zero, info) if return_info else zero

    span = sv > SVD_RTOL * sv[0]
    U_r, s_r, V_r = U[:, span], sv[span], Vh[span].conj().T
    info["rank"] = int(span.sum())

    Gr = U_r.conj().T @ H.T                     # column n: U_r^H hbar_n
    C = Gr * kappa[None, :]                     # column n: c_n in range coordinates
    if not np.any(C):
        return (zero, info) if return_info else zero
    Q = (Gr * weights[None, :]) @ Gr.conj().T   # sum_m |alpha_m|^2 U_r^H hbar_m hbar_m^H U_r
    Q = 0.5 * (Q + Q.conj().T)

    eigvals, E = scipy.linalg.eigh(Q)
    lam_max = float(np.max(eigvals))
    if lam_max <= 0:
        return (zero, info) if return_info else zero

    keep = eigvals > EIG_RTOL * lam_max
    eig = eigvals[keep]
    D = (E.conj().T @ C)[keep]
    energy = np.sum(np.abs(D) ** 2, axis=1)

    def power_at(lam: float) -> float:
        return float(np.sum(energy / (eig + lam) ** 2))

    lam = 0.0
    if power_at(0.0) > P_max:
        lam_ref = float(np.min(eig))
        lo, hi = 0.0, 1.0
        doublings = 0
        while power_at(hi * lam_ref) > P_max:
            hi *= 2.0
            doublings += 1
            if doublings > MAX_DOUBLINGS:
                raise BracketingError("Could not bracket the power multiplier")

        for step in range(MAX_BISECTIONS):
            if hi - lo < 1e-12 * (1.0 + hi):
                break
            if abs(power_at(hi * lam_ref) - P_max) <= POWER_RTOL * P_max:
                break
            mid = 0.5 * (lo + hi)
            if power_at(mid * lam_ref) > P_max:
                lo = mid
            else:
                hi = mid
        info["bisections"] = step + 1
        lam = hi * lam_ref

    u = E[:, keep] @ (D / (eig + lam)[:, None])
    V_BB = V_r @ (u / s_r[:, None])

    info["lambda"] = lam
    info["power"] = transmit_power(A, V_BB)
    info["kkt_residual"] = float(np.linalg.norm(Q @ u + lam * u - C) / np.linalg.norm(C))

    logger.debug(
        f"[Digital] lambda={lam:.4g} power={info['power']:.4g}/{P_max:.4g} "
        f"kkt={info['kkt_residual']:.2e} rank={info['rank']}/{R}"
    )
    return (V_BB, info) if return_info else V_BB


# ---------------------------------------------------------------------
# Analog step
# ---------------------------------------------------------------------
def phase_update(c: complex, current: complex) -> complex:
    """Maximizer of Re{c x} over |x| = 1; c == 0 keeps the current entry."""
    if c == 0:
        return current
    return np.exp(-1j * np.angle(c))


def solve_analog(
    V_RF: np.ndarray,
    V_BB: np.ndarray,
    hbar: HbarLike,
    aux: AuxState,
    noise: NoiseModel,
    tol: float = 1e-9,
    max_sweeps: int = 20,
    callback: Optional[Callable[[np.ndarray], None]] = None,
) -> Tuple[np.ndarray, int]:
    """
    Cyclic coordinate ascent over the entries of V_RF.

    For entry (i, j), F = const + 2 Re{c_ij x} / ln 2 on |x| = 1, maximized by
    x = exp(-j arg c_ij). Sweeps stop when a full sweep gains at most tol
    relative to |F|.
    callback, if given, receives V_RF after every entry update.

    Returns (V_RF, sweeps_run).
    """
    A = np.array(V_RF, dtype=complex, copy=True)
    B = np.asarray(V_BB, dtype=complex)
    H = _hbar_matrix(hbar)
    M, R = A.shape
    if H.shape[1] != M or B.shape[0] != R:
        raise DimensionError(f"V_RF {A.shape}, V_BB {B.shape} and hbar {H.shape} do not match")

    kappa = np.sqrt(1.0 + aux.beta) * aux.alpha
    weights = np.abs(aux.alpha) ** 2

    L = (B * kappa.conj()[None, :]) @ H.conj()     # R x M, linear term 2 Re Tr(A L)
    P = B @ B.conj().T                             # R x R
    Hq = (H.T * weights[None, :]) @ H.conj()       # M x M, sum |alpha|^2 hbar hbar^H
    T = A.conj().T @ Hq                            # R x M, kept in sync with A

    F_prev = fp_objective(H, A @ B, aux, noise)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        for i in range(M):
            for j in range(R):
                x0 = A[i, j]
                quad = P[j, :] @ T[:, i] - np.conj(x0) * P[j, j] * Hq[i, i]
                x = phase_update(L[j, i] - quad, x0)
                delta = x - x0
                if delta == 0:
                    continue
                A[i, j] = x
                T[j, :] += np.conj(delta) * Hq[i, :]
                if callback is not None:
                    callback(A)

        F_new = fp_objective(H, A @ B, aux, noise)
        gain = F_new - F_prev
        F_prev = F_new
        if gain <= tol * abs(F_new):
            break

    logger.debug(f"[Analog] {sweeps} sweep(s), F={F_prev:.8g}")
    return A, sweeps


# ---------------------------------------------------------------------
# Block driver
# ---------------------------------------------------------------------
class HybridBeamformer:
    """
    Runs the beamforming half of one outer iteration: analog sweeps, digital
    closed form, power repair.

    An analog sweep raises F at the current V_BB but may push the transmit
    power above P_max; it is kept only if F at (new V_RF, rescaled V_BB) is
    still no worse than before, otherwise V_RF is reverted. The digital step
    then starts from a feasible point, so the whole block never lowers F.
    """

    def __init__(self, P_max: float, analog_tol: float = 1e-9, max_analog_sweeps: int = 20):
        if not P_max > 0:
            raise DomainError(f"P_max must be positive (got {P_max})")
        self.P_max = P_max
        self.analog_tol = analog_tol
        self.max_analog_sweeps = max_analog_sweeps

    def update(
        self,
        precoder: HybridPrecoder,
        hbar: HbarLike,
        aux: AuxState,
        noise: NoiseModel,
    ) -> Tuple[HybridPrecoder, dict]:
        F_start = fp_objective(hbar, precoder.W, aux, noise)

        V_RF, sweeps = solve_analog(
            precoder.V_RF, precoder.V_BB, hbar, aux, noise,
            tol=self.analog_tol, max_sweeps=self.max_analog_sweeps,
        )
        V_BB = enforce_power(V_RF, precoder.V_BB, self.P_max)
        analog_kept = fp_objective(hbar, V_RF @ V_BB, aux, noise) >= F_start
        if not analog_kept:
            logger.debug("[HybridBeamformer] Analog sweep lost F after power repair, reverting V_RF")
            V_RF = precoder.V_RF

        V_BB, digital = solve_digital(V_RF, hbar, aux, noise, self.P_max, return_info=True)
        V_BB = enforce_power(V_RF, V_BB, self.P_max)

        info = {
            "analog_sweeps": sweeps,
            "analog_kept": analog_kept,
            "lambda": digital["lambda"],
            "kkt_residual": digital["kkt_residual"],
        }
        return HybridPrecoder(V_RF, V_BB), info
