"""
BD-IRS scattering-matrix optimization - BD-IRS THz Simulator

For fixed precoders and auxiliaries the IRS subproblem is

    min_Theta  f(Theta) = Tr(Theta Y Theta^H Z) - 2 Re Tr(Theta X)
    s.t.       Theta^H Theta = I_K

with Theta = [Theta_t; Theta_r] stacked (2K x K) in hybrid mode, or a single
K x K unitary block when the surface works in one mode only. The solver walks
the manifold with rotations R = taylor3(exp(-mu J)), J = grad Theta^H - Theta grad^H,
doubling or halving mu Armijo-style and retracting through the polar factor
after every accepted step.

Layout of the stacked matrix: rows 0..K-1 are Theta_t, rows K..2K-1 are Theta_r.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from src.channel.thz_channel import ChannelSet
from src.core.errors import DecompositionError, DimensionError, DomainError
from src.core.system_config import REFLECTIVE, TRANSMISSIVE
from src.fp.fp_core import AuxState

logger = logging.getLogger(__name__)

HYBRID = "hybrid"
MODES = (HYBRID, REFLECTIVE, TRANSMISSIVE)

FEASIBILITY_TOL = 1e-8
RANK_RTOL = 1e-12
MU_MAX = 1e12


def _check_mode(mode: str):
    if mode not in MODES:
        raise DomainError(f"Unknown surface mode '{mode}' (expected one of {MODES})")


# ---------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------
@dataclass(frozen=True)
class ScatteringMatrix:
    Theta: np.ndarray
    mode: str = HYBRID

    def __post_init__(self):
        _check_mode(self.mode)
        Theta = np.asarray(self.Theta, dtype=complex)
        if Theta.ndim != 2:
            raise DimensionError(f"Theta must be a matrix (got shape {Theta.shape})")
        rows, K = Theta.shape
        expected = 2 * K if self.mode == HYBRID else K
        if rows != expected:
            raise DimensionError(f"{self.mode} Theta must be {expected} x {K} (got {Theta.shape})")
        object.__setattr__(self, "Theta", Theta)
        residual = self.c1_residual()
        if residual > FEASIBILITY_TOL:
            raise DomainError(f"Theta violates Theta^H Theta = I (residual {residual:.3e})")

    @property
    def K(self) -> int:
        return self.Theta.shape[1]

    @property
    def theta_t(self) -> np.ndarray:
        if self.mode == HYBRID:
            return self.Theta[: self.K]
        if self.mode == TRANSMISSIVE:
            return self.Theta
        return np.zeros((self.K, self.K), dtype=complex)

    @property
    def theta_r(self) -> np.ndarray:
        if self.mode == HYBRID:
            return self.Theta[self.K:]
        if self.mode == REFLECTIVE:
            return self.Theta
        return np.zeros((self.K, self.K), dtype=complex)

    def c1_residual(self) -> float:
        K = self.Theta.shape[1]
        return float(np.linalg.norm(self.Theta.conj().T @ self.Theta - np.eye(K), "fro"))


@dataclass(frozen=True)
class TraceProblem:
    """X: K x rows(Theta); Y: K x K; Z: rows(Theta) x rows(Theta)."""

    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=complex)
        Y = np.asarray(self.Y, dtype=complex)
        Z = np.asarray(self.Z, dtype=complex)
        K = Y.shape[0]
        if Y.shape != (K, K) or X.shape != (K, Z.shape[0]) or Z.shape[0] != Z.shape[1]:
            raise DimensionError(f"Inconsistent trace problem: X {X.shape}, Y {Y.shape}, Z {Z.shape}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "Z", Z)

    @property
    def K(self) -> int:
        return self.Y.shape[0]

    @property
    def scale(self) -> float:
        """Bound on the gradient magnitude over the manifold; zero only for a constant problem."""
        return float(np.linalg.norm(self.Z, 2) * np.linalg.norm(self.Y, 2) + np.linalg.norm(self.X, 2))


@dataclass(frozen=True)
class ManifoldOptions:
    grad_tol: float = 1e-6
    max_inner: int = 500
    max_halvings: int = 30
    mu0: float = 1.0

    def __post_init__(self):
        if not self.grad_tol > 0 or not self.mu0 > 0:
            raise DomainError("grad_tol and mu0 must be positive")
        if self.max_inner < 1 or self.max_halvings < 1:
            raise DomainError("max_inner and max_halvings must be >= 1")


@dataclass
class ManifoldTrace:
    objective: List[float] = field(default_factory=list)
    iterations: int = 0
    gradient_evaluations: int = 0
    converged: bool = False
    stalled: bool = False
    hit_cap: bool = False
    final_mu: float = 0.0
    j_norm2: float = 0.0


# ---------------------------------------------------------------------
# Problem assembly
# ---------------------------------------------------------------------
def assemble_trace_problem(
    channels: ChannelSet,
    W: np.ndarray,
    aux: AuxState,
    groups: Sequence[str],
    mode: str = HYBRID,
) -> TraceProblem:
    _check_mode(mode)
    W = np.asarray(W, dtype=complex)
    N, K = channels.N, channels.K
    if W.shape != (channels.M, N):
        raise DimensionError(f"Precoders {W.shape} do not match M={channels.M}, N={N}")
    if len(groups) != N or aux.beta.size != N:
        raise DimensionError(f"{len(groups)} group labels and {aux.beta.size} auxiliaries for {N} users")

    GW = channels.G @ W                                  # column n: G w_n
    kappa = np.sqrt(1.0 + aux.beta) * aux.alpha.conj()
    weights = np.abs(aux.alpha) ** 2

    blocks = {}
    for group in (TRANSMISSIVE, REFLECTIVE):
        members = [n for n in range(N) if groups[n] == group]
        X_i = np.zeros((K, K), dtype=complex)
        Z_i = np.zeros((K, K), dtype=complex)
        if members:
            X_i = (GW[:, members] * kappa[members]) @ channels.h[members].conj()
            Z_i = (channels.h[members].T * weights[members]) @ channels.h[members].conj()
        blocks[group] = (X_i, Z_i)

    Y = GW @ GW.conj().T

    if mode == HYBRID:
        X = np.hstack([blocks[TRANSMISSIVE][0], blocks[REFLECTIVE][0]])
        Z = scipy.linalg.block_diag(blocks[TRANSMISSIVE][1], blocks[REFLECTIVE][1])
    else:
        X, Z = blocks[mode]
    return TraceProblem(X, Y, Z)


# ---------------------------------------------------------------------
# Objective, gradient, rotation
# ---------------------------------------------------------------------
def trace_objective(prob: TraceProblem, Theta: np.ndarray) -> float:
    Theta = np.asarray(Theta, dtype=complex)
    quadratic = np.vdot(Theta, prob.Z @ Theta @ prob.Y)
    linear = np.sum(Theta * prob.X.T)
    return float(np.real(quadratic) - 2.0 * np.real(linear))


def euclidean_gradient(prob: TraceProblem, Theta: np.ndarray) -> np.ndarray:
    Theta = np.asarray(Theta, dtype=complex)
    if Theta.shape != (prob.Z.shape[0], prob.K):
        raise DimensionError(f"Theta {Theta.shape} does not match the trace problem")
    return 2.0 * prob.Z @ Theta @ prob.Y - 2.0 * prob.X.conj().T


def riemannian_direction(grad: np.ndarray, Theta: np.ndarray) -> np.ndarray:
    """J = grad Theta^H - Theta grad^H (skew-Hermitian)."""
    A = grad @ Theta.conj().T
    return A - A.conj().T


def rotation(J: np.ndarray, mu: float) -> np.ndarray:
    """Third-order Taylor truncation of exp(-mu J)."""
    if mu < 0:
        raise DomainError(f"Step size must be non-negative (got {mu})")
    S = mu * J
    S2 = S @ S
    return np.eye(J.shape[0], dtype=complex) - S + S2 / 2.0 - S2 @ S / 6.0


def _rotate(J: np.ndarray, mu: float, Theta: np.ndarray) -> np.ndarray:
    # R Theta without forming R
    S1 = mu * (J @ Theta)
    S2 = mu * (J @ S1)
    S3 = mu * (J @ S2)
    return Theta - S1 + S2 / 2.0 - S3 / 6.0


def _polar(Theta_raw: np.ndarray) -> np.ndarray:
    U, s, Vh = scipy.linalg.svd(Theta_raw, full_matrices=False)
    if s.size == 0 or s[0] == 0 or s[-1] <= RANK_RTOL * s[0]:
        raise DecompositionError("Cannot retract a rank-deficient Theta")
    return U @ Vh


def retract(Theta_raw: np.ndarray, mode: str = HYBRID) -> ScatteringMatrix:
    """Unitary-column polar factor Theta_raw (Theta_raw^H Theta_raw)^{-1/2}."""
    return ScatteringMatrix(_polar(np.asarray(Theta_raw, dtype=complex)), mode)


# ---------------------------------------------------------------------
# Initialization and per-user views
# ---------------------------------------------------------------------
def initial_theta(K: int, mode: str = HYBRID) -> ScatteringMatrix:
    _check_mode(mode)
    eye = np.eye(K, dtype=complex)
    if mode == HYBRID:
        return ScatteringMatrix(np.vstack([eye, eye]) / math.sqrt(2.0), mode)
    return ScatteringMatrix(eye, mode)


def theta_blocks(theta: ScatteringMatrix, groups: Sequence[str]) -> List[np.ndarray]:
    """Theta_{i_n} for every user; users of an inactive group see a zero block."""
    lookup = {TRANSMISSIVE: theta.theta_t, REFLECTIVE: theta.theta_r}
    try:
        return [lookup[g] for g in groups]
    except KeyError as e:
        raise DomainError(f"Unknown group label {e}") from e


# ---------------------------------------------------------------------
# Optimizer
# ---------------------------------------------------------------------
class ManifoldOptimizer:
    """
    Rotation-based descent on Theta^H Theta = I.

    Step rule per iteration, starting from the current mu:
      - U = R^2 strictly better than both R and the current point: take U, double mu
      - else R better than the current point: take R
      - else halve mu and retry, at most max_halvings times

    The stopping test ||J||_F^2 <= grad_tol is applied to the problem scaled by
    1 / TraceProblem.scale, so the tolerance does not depend on the path-loss
    magnitude of the channels.
    """

    def __init__(self, options: Optional[ManifoldOptions] = None):
        self.options = options or ManifoldOptions()

    def optimize(self, prob: TraceProblem, theta_init: ScatteringMatrix) -> Tuple[ScatteringMatrix, ManifoldTrace]:
        opts = self.options
        mode = theta_init.mode
        Theta = theta_init.Theta
        if Theta.shape != (prob.Z.shape[0], prob.K):
            raise DimensionError(f"Initial Theta {Theta.shape} does not match the trace problem")

        scale = prob.scale
        norm = 1.0 / scale if scale > 0 else 1.0

        f_cur = trace_objective(prob, Theta)
        mu = opts.mu0
        trace = ManifoldTrace(objective=[f_cur])

        for it in range(opts.max_inner):
            grad = euclidean_gradient(prob, Theta)
            trace.gradient_evaluations += 1
            J = riemannian_direction(grad, Theta)
            trace.j_norm2 = float(np.linalg.norm(J * norm, "fro") ** 2)
            if trace.j_norm2 <= opts.grad_tol:
                trace.converged = True
                break

            accepted = False
            for _ in range(opts.max_halvings):
                Theta_R = _rotate(J, mu, Theta)
                Theta_U = _rotate(J, mu, Theta_R)
                try:
                    Theta_R = _polar(Theta_R)
                    Theta_U = _polar(Theta_U)
                except DecompositionError:
                    mu *= 0.5
                    continue
                f_R = trace_objective(prob, Theta_R)
                f_U = trace_objective(prob, Theta_U)

                if f_U < f_R and f_U < f_cur:
                    Theta, f_cur = Theta_U, f_U
                    mu = min(2.0 * mu, MU_MAX)
                    accepted = True
                elif f_R < f_cur:
                    Theta, f_cur = Theta_R, f_R
                    accepted = True
                else:
                    mu *= 0.5
                if accepted:
                    break

            if not accepted:
                trace.stalled = True
                break
            trace.iterations = it + 1
            trace.objective.append(f_cur)
        else:
            trace.hit_cap = True

        trace.final_mu = mu
        if trace.hit_cap:
            logger.debug(f"[ManifoldOptimizer] Reached max_inner={opts.max_inner}, ||J||^2={trace.j_norm2:.3e}")
        logger.debug(
            f"[ManifoldOptimizer] {trace.iterations} step(s), f={f_cur:.6g}, ||J||^2={trace.j_norm2:.3e}, "
            f"converged={trace.converged}, stalled={trace.stalled}"
        )
        return ScatteringMatrix(Theta, mode), trace


def optimize_theta(
    prob: TraceProblem,
    Theta_init: Union[ScatteringMatrix, np.ndarray],
    opts: Optional[ManifoldOptions] = None,
) -> Tuple[ScatteringMatrix, ManifoldTrace]:
    if not isinstance(Theta_init, ScatteringMatrix):
        Theta_init = np.asarray(Theta_init, dtype=complex)
        mode = HYBRID if Theta_init.shape[0] == 2 * Theta_init.shape[1] else REFLECTIVE
        Theta_init = ScatteringMatrix(Theta_init, mode)
    return ManifoldOptimizer(opts).optimize(prob, Theta_init)
