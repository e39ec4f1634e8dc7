import numpy as np
import pytest
import scipy.linalg
from scipy.optimize import minimize_scalar

from src.core.errors import DecompositionError, DimensionError, DomainError
from src.core.system_config import REFLECTIVE, TRANSMISSIVE
from src.fp.fp_core import LN2, AuxState, NoiseModel, effective_channels, fp_objective
from src.manifold.irs_manifold import (
    HYBRID,
    ManifoldOptions,
    ManifoldOptimizer,
    ScatteringMatrix,
    TraceProblem,
    assemble_trace_problem,
    euclidean_gradient,
    initial_theta,
    optimize_theta,
    retract,
    riemannian_direction,
    rotation,
    theta_blocks,
    trace_objective,
)

GROUPS = (REFLECTIVE, TRANSMISSIVE, REFLECTIVE)


def _random_theta(crandn, K, mode=HYBRID):
    rows = 2 * K if mode == HYBRID else K
    return retract(crandn(rows, K), mode)


def _random_aux(rng, crandn, N):
    return AuxState(rng.uniform(0.0, 2.0, N), crandn(N))


def _hermitian_psd(crandn, n):
    B = crandn(n, n)
    return B @ B.conj().T


def _random_problem(crandn, K):
    return TraceProblem(crandn(K, 2 * K), _hermitian_psd(crandn, K), _hermitian_psd(crandn, 2 * K))


def _skew(crandn, n):
    B = crandn(n, n)
    J = B - B.conj().T
    return J / np.linalg.norm(J)


# ---------------------------------------------------------------------
# Problem assembly
# ---------------------------------------------------------------------
def test_zero_alpha_gives_zero_linear_and_weight_terms(random_channels, crandn):
    ch = random_channels(3, 2, 4)
    prob = assemble_trace_problem(ch, crandn(4, 3), AuxState.zeros(3), GROUPS)
    np.testing.assert_array_equal(prob.X, 0)
    np.testing.assert_array_equal(prob.Z, 0)
    assert prob.X.shape == (2, 4) and prob.Z.shape == (4, 4)
    assert np.linalg.norm(prob.Y) > 0


def test_empty_group_has_zero_blocks(rng, crandn, random_channels):
    K = 3
    ch = random_channels(2, K, 4)
    prob = assemble_trace_problem(ch, crandn(4, 2), _random_aux(rng, crandn, 2), (REFLECTIVE, REFLECTIVE))
    # transmissive block comes first
    np.testing.assert_array_equal(prob.X[:, :K], 0)
    np.testing.assert_array_equal(prob.Z[:K, :K], 0)
    assert np.linalg.norm(prob.X[:, K:]) > 0


def test_single_mode_assembly_shapes(rng, crandn, random_channels):
    ch = random_channels(3, 2, 4)
    prob = assemble_trace_problem(ch, crandn(4, 3), _random_aux(rng, crandn, 3), GROUPS, mode=REFLECTIVE)
    assert prob.X.shape == (2, 2) and prob.Z.shape == (2, 2)


def test_surrogate_equals_constant_minus_trace_form(rng, crandn, random_channels):
    for mode in (HYBRID, REFLECTIVE, TRANSMISSIVE):
        K, M = 3, 4
        ch = random_channels(3, K, M)
        W = crandn(M, 3)
        aux = _random_aux(rng, crandn, 3)
        noise = NoiseModel(0.7)
        theta = _random_theta(crandn, K, mode)

        hbar = effective_channels(ch, theta_blocks(theta, GROUPS))
        F = fp_objective(hbar, W, aux, noise)
        constant = np.sum(np.log2(1 + aux.beta) - (aux.beta + np.abs(aux.alpha) ** 2 * noise.sigma2) / LN2)
        f = trace_objective(assemble_trace_problem(ch, W, aux, GROUPS, mode), theta.Theta)
        assert F == pytest.approx(constant - f / LN2, rel=1e-10, abs=1e-10)


def test_assembly_dimension_checks(rng, crandn, random_channels):
    ch = random_channels(3, 2, 4)
    with pytest.raises(DimensionError):
        assemble_trace_problem(ch, crandn(5, 3), _random_aux(rng, crandn, 3), GROUPS)
    with pytest.raises(DimensionError):
        assemble_trace_problem(ch, crandn(4, 3), _random_aux(rng, crandn, 3), GROUPS[:2])


# ---------------------------------------------------------------------
# Gradient and rotation
# ---------------------------------------------------------------------
def test_gradient_trivial_cases(crandn):
    K = 2
    Theta = initial_theta(K).Theta
    X = crandn(K, 2 * K)
    only_linear = TraceProblem(X, np.zeros((K, K)), np.zeros((2 * K, 2 * K)))
    np.testing.assert_allclose(euclidean_gradient(only_linear, Theta), -2 * X.conj().T)

    flat = TraceProblem(np.zeros((K, 2 * K)), np.eye(K), np.eye(2 * K))
    np.testing.assert_allclose(euclidean_gradient(flat, Theta), 2 * Theta)


def _numeric_gradient(prob, Theta, t=1e-3):
    """Entrywise central differences; d/dRe + 1j d/dIm matches the Re<grad, D> convention."""
    grad = np.zeros_like(Theta)
    for idx in np.ndindex(Theta.shape):
        for step, unit in ((t, 1.0), (1j * t, 1j)):
            E = np.zeros_like(Theta)
            E[idx] = step
            slope = (trace_objective(prob, Theta + E) - trace_objective(prob, Theta - E)) / (2 * t)
            grad[idx] += unit * slope
    return grad


def test_gradient_matches_finite_differences(rng, crandn):
    # central differences are exact on a quadratic up to rounding
    for _ in range(50):
        K = int(rng.integers(1, 5))
        prob = _random_problem(crandn, K)
        Theta = crandn(2 * K, K)
        grad = euclidean_gradient(prob, Theta)
        numeric = _numeric_gradient(prob, Theta)
        assert np.linalg.norm(numeric - grad) <= 1e-5 * np.linalg.norm(grad)


def test_gradient_directional_derivatives(crandn):
    K = 3
    prob = _random_problem(crandn, K)
    Theta = crandn(2 * K, K)
    grad = euclidean_gradient(prob, Theta)
    t = 1e-3
    for _ in range(5):
        D = crandn(2 * K, K)
        numeric = (trace_objective(prob, Theta + t * D) - trace_objective(prob, Theta - t * D)) / (2 * t)
        assert numeric == pytest.approx(np.real(np.vdot(grad, D)), rel=1e-6, abs=1e-6)


def test_riemannian_direction_is_skew_hermitian(crandn):
    K = 3
    prob = _random_problem(crandn, K)
    Theta = _random_theta(crandn, K).Theta
    J = riemannian_direction(euclidean_gradient(prob, Theta), Theta)
    np.testing.assert_allclose(J + J.conj().T, 0, atol=1e-14)


def test_rotation_is_a_descent_direction(crandn):
    K = 3
    prob = _random_problem(crandn, K)
    Theta = _random_theta(crandn, K).Theta
    J = riemannian_direction(euclidean_gradient(prob, Theta), Theta)
    J2 = np.linalg.norm(J) ** 2

    t = 1e-5 / np.linalg.norm(J)
    ahead = trace_objective(prob, rotation(J, t) @ Theta)
    behind = trace_objective(prob, rotation(-J, t) @ Theta)
    slope = (ahead - behind) / (2 * t)
    assert slope == pytest.approx(-0.5 * J2, rel=1e-4)


def test_rotation_trivial_cases(crandn):
    np.testing.assert_array_equal(rotation(np.zeros((3, 3)), 0.7), np.eye(3))
    np.testing.assert_array_equal(rotation(_skew(crandn, 3), 0.0), np.eye(3))
    with pytest.raises(DomainError):
        rotation(np.zeros((2, 2)), -1.0)


def test_rotation_truncation_order(crandn):
    J = _skew(crandn, 4)
    err = [np.linalg.norm(rotation(J, mu) - scipy.linalg.expm(-mu * J)) for mu in (0.1, 0.05)]
    assert 12 <= err[0] / err[1] <= 20


def test_rotation_nearly_unitary(crandn):
    J = _skew(crandn, 4)
    R = rotation(J, 0.01)
    assert np.linalg.norm(R.conj().T @ R - np.eye(4)) <= 1e-8


# ---------------------------------------------------------------------
# Retraction and views
# ---------------------------------------------------------------------
def test_retract_is_idempotent_on_feasible_points(crandn):
    theta = _random_theta(crandn, 3)
    np.testing.assert_allclose(retract(theta.Theta).Theta, theta.Theta, atol=1e-12)


def test_retract_ignores_positive_scaling(crandn):
    theta = _random_theta(crandn, 3)
    np.testing.assert_allclose(retract(3.0 * theta.Theta).Theta, theta.Theta, atol=1e-12)


def test_retract_is_the_polar_factor(crandn):
    T = crandn(6, 3)
    expected = T @ np.linalg.inv(scipy.linalg.sqrtm(T.conj().T @ T))
    theta = retract(T)
    np.testing.assert_allclose(theta.Theta, expected, atol=1e-10)
    assert theta.c1_residual() <= 1e-12


def test_retract_rank_deficient_raises(crandn):
    u, v = crandn(6, 1), crandn(3, 1)
    with pytest.raises(DecompositionError):
        retract(u @ v.conj().T)
    with pytest.raises(DecompositionError):
        retract(np.zeros((2, 2)), REFLECTIVE)


def test_scattering_matrix_validation(crandn):
    with pytest.raises(DimensionError):
        ScatteringMatrix(np.eye(3))
    with pytest.raises(DomainError):
        ScatteringMatrix(np.vstack([np.eye(2), np.eye(2)]))
    with pytest.raises(DomainError):
        ScatteringMatrix(np.eye(2), "diagonal")


def test_initial_theta_splits_energy_evenly():
    theta = initial_theta(4)
    assert theta.c1_residual() <= 1e-14
    np.testing.assert_allclose(theta.theta_t, np.eye(4) / np.sqrt(2))
    np.testing.assert_allclose(theta.theta_r, np.eye(4) / np.sqrt(2))


def test_single_mode_views():
    refl = initial_theta(3, REFLECTIVE)
    np.testing.assert_array_equal(refl.theta_r, np.eye(3))
    np.testing.assert_array_equal(refl.theta_t, 0)

    trans = initial_theta(3, TRANSMISSIVE)
    np.testing.assert_array_equal(trans.theta_t, np.eye(3))
    np.testing.assert_array_equal(trans.theta_r, 0)


def test_theta_blocks_follow_groups(crandn):
    theta = _random_theta(crandn, 2)
    blocks = theta_blocks(theta, (REFLECTIVE, TRANSMISSIVE))
    np.testing.assert_array_equal(blocks[0], theta.theta_r)
    np.testing.assert_array_equal(blocks[1], theta.theta_t)
    with pytest.raises(DomainError):
        theta_blocks(theta, ("diagonal",))


# ---------------------------------------------------------------------
# Optimizer
# ---------------------------------------------------------------------
def test_constant_problem_stops_at_once():
    K = 2
    prob = TraceProblem(np.zeros((K, 2 * K)), np.eye(K), np.zeros((2 * K, 2 * K)))
    theta, trace = ManifoldOptimizer().optimize(prob, initial_theta(K))
    assert trace.converged
    assert trace.gradient_evaluations == 1
    assert trace.iterations == 0
    np.testing.assert_array_equal(theta.Theta, initial_theta(K).Theta)


def test_single_element_matches_grid_oracle(rng, crandn):
    opts = ManifoldOptions(grad_tol=1e-12, max_inner=2000)
    for _ in range(20):
        y = rng.uniform(0.5, 2.0)
        z_t, z_r = rng.uniform(0.1, 2.0, 2)
        x = crandn(1, 2)
        prob = TraceProblem(x, np.array([[y]]), np.diag([z_t, z_r]))

        # phases align with x at the optimum, leaving one angle to search
        def f_of_t(t):
            return y * (z_t * np.cos(t) ** 2 + z_r * np.sin(t) ** 2) - 2 * (
                np.cos(t) * abs(x[0, 0]) + np.sin(t) * abs(x[0, 1])
            )

        grid = np.linspace(0, np.pi / 2, 2001)
        t0 = grid[np.argmin(f_of_t(grid))]
        lo, hi = max(t0 - 1e-3, 0.0), min(t0 + 1e-3, np.pi / 2)
        f_star = min(minimize_scalar(f_of_t, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12}).fun, f_of_t(t0))

        theta, trace = optimize_theta(prob, initial_theta(1), opts)
        f_final = trace_objective(prob, theta.Theta)
        assert f_final <= f_star + 1e-8 * prob.scale
        assert f_final >= f_star - 1e-9 * prob.scale


def test_optimizer_monotone_and_feasible(rng, crandn, random_channels):
    K, M = 3, 4
    ch = random_channels(3, K, M)
    prob = assemble_trace_problem(ch, crandn(M, 3), _random_aux(rng, crandn, 3), GROUPS)
    theta, trace = optimize_theta(prob, initial_theta(K), ManifoldOptions(max_inner=300))

    assert all(b <= a for a, b in zip(trace.objective, trace.objective[1:]))
    assert trace.objective[-1] == pytest.approx(trace_objective(prob, theta.Theta), rel=1e-12, abs=1e-12)
    assert theta.c1_residual() <= 1e-8
    assert trace.iterations == len(trace.objective) - 1
    assert trace.converged or trace.stalled or trace.hit_cap


def test_optimize_theta_infers_single_mode(crandn):
    K = 2
    prob = TraceProblem(crandn(K, K), _hermitian_psd(crandn, K), _hermitian_psd(crandn, K))
    theta, _ = optimize_theta(prob, np.eye(K))
    assert theta.mode == REFLECTIVE
    assert theta.Theta.shape == (K, K)
    assert theta.c1_residual() <= 1e-8


def test_optimizer_rejects_mismatched_start(crandn):
    with pytest.raises(DimensionError):
        ManifoldOptimizer().optimize(_random_problem(crandn, 3), initial_theta(2))


@pytest.mark.parametrize("kwargs", [{"grad_tol": 0.0}, {"mu0": -1.0}, {"max_inner": 0}, {"max_halvings": 0}])
def test_manifold_options_validation(kwargs):
    with pytest.raises(DomainError):
        ManifoldOptions(**kwargs)
