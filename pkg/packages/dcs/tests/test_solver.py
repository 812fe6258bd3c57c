"""Tests for the BPDN solver and the exhaustive l0 oracle."""

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.optimize import linprog

from dcs.analysis import bpdn_constant
from dcs.errors import (
    DimensionMismatchError,
    InstanceTooLargeError,
    InvalidParamsError,
    NonFiniteInputError,
)
from dcs.sensing import gen_matrix
from dcs.solver import (
    BpdnSolver,
    SolverConfig,
    l0_oracle,
    project_l2_ball,
    soft_threshold,
    solve_bpdn,
)


def _sparse(n: int, k: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    theta = np.zeros(n)
    theta[rng.choice(n, size=k, replace=False)] = rng.standard_normal(k)
    return theta


def _basis_pursuit_value(A: np.ndarray, y: np.ndarray) -> float:
    """Optimal l1 norm of A theta = y, as a linear program over theta = p - q."""
    m, n = A.shape
    result = linprog(
        c=np.ones(2 * n),
        A_eq=np.hstack([A, -A]),
        b_eq=y,
        bounds=(0, None),
        method="highs",
    )
    assert result.status == 0
    return float(result.fun)


def test_soft_threshold() -> None:
    shrunk = soft_threshold(np.array([-3.0, -0.5, 0.0, 0.5, 2.0]), 1.0)
    assert shrunk.tolist() == [-2.0, 0.0, 0.0, 0.0, 1.0]


def test_project_l2_ball() -> None:
    center = np.array([1.0, 1.0])
    inside = np.array([1.5, 1.0])
    assert project_l2_ball(inside, center, 1.0) is inside
    projected = project_l2_ball(np.array([4.0, 5.0]), center, 1.0)
    assert np.allclose(projected, [1.6, 1.8])


@pytest.mark.parametrize("m,n", [(20, 50), (50, 20)])
def test_normal_equations_match_direct_inverse(m: int, n: int) -> None:
    A = np.random.default_rng(m).standard_normal((m, n))
    rhs = np.random.default_rng(n).standard_normal(n)
    expected = np.linalg.solve(np.eye(n) + A.T @ A, rhs)
    assert np.allclose(BpdnSolver(A)._solve_normal(rhs), expected, rtol=1e-9, atol=1e-10)


def test_exact_recovery_without_noise() -> None:
    Phi = gen_matrix(40, 128, seed=17)
    theta = _sparse(128, 5, seed=18)
    result = solve_bpdn(Phi, Phi.entries @ theta)

    assert np.allclose(result.theta_hat, theta, atol=1e-8)
    assert result.residual_norm <= 1e-8


def test_matches_linear_programming_optimum() -> None:
    Phi = gen_matrix(15, 40, seed=3)
    # not sparse, so the l1 minimizer is a genuine optimization result
    y = Phi.entries @ np.random.default_rng(4).standard_normal(40)
    result = solve_bpdn(Phi, y, config=SolverConfig(polish=False))

    optimum = _basis_pursuit_value(Phi.entries, y)
    assert np.sum(np.abs(result.theta_hat)) <= optimum * (1 + 1e-3)
    assert result.residual_norm <= 1e-3 * np.linalg.norm(y)


def test_noisy_recovery_within_stability_bound() -> None:
    rng = np.random.default_rng(31)
    A, _ = np.linalg.qr(rng.standard_normal((32, 32)))
    theta = _sparse(32, 4, seed=32)
    noise = rng.standard_normal(32)
    epsilon = 0.1
    noise *= epsilon / np.linalg.norm(noise)

    result = solve_bpdn(A, A @ theta + noise, epsilon)

    assert result.residual_norm <= epsilon + 1e-4
    assert np.linalg.norm(result.theta_hat - theta) <= bpdn_constant(0.0) * epsilon + 1e-4


def test_feasibility_bound() -> None:
    solver = BpdnSolver(gen_matrix(16, 32, seed=1))
    assert solver.feasibility_bound(0.0) == pytest.approx(1e-7)
    # the sqrt(m) absolute slack is tighter than the relative one at epsilon = 1
    assert solver.feasibility_bound(1.0) == pytest.approx(1.0 + 4e-7, rel=0, abs=1e-12)


@pytest.mark.parametrize("seed", range(6))
def test_converged_solves_are_feasible(seed: int) -> None:
    # large amplitudes make ‖y‖ dominate the relative stopping slack
    Phi = gen_matrix(40, 256, seed=seed)
    y = Phi.entries @ (10.0 * _sparse(256, 25, seed=100 + seed))
    epsilon = 0.01
    solver = BpdnSolver(Phi)

    result = solver.solve(y, epsilon)

    assert result.residual_norm == pytest.approx(
        np.linalg.norm(Phi.entries @ result.theta_hat - y), rel=1e-12
    )
    if result.converged:
        assert result.residual_norm <= epsilon * (1 + 1e-5) + 1e-7
        assert result.residual_norm <= epsilon + 1e-7 * np.sqrt(40)


def test_single_coordinate_moves_do_not_lower_l1_norm() -> None:
    Phi = gen_matrix(15, 40, seed=3)
    A = Phi.entries
    y = A @ np.random.default_rng(4).standard_normal(40)
    theta = solve_bpdn(Phi, y, config=SolverConfig(polish=False)).theta_hat
    pinv = np.linalg.pinv(A)
    best = np.sum(np.abs(theta))

    for i in np.random.default_rng(5).choice(40, size=10, replace=False):
        for step in (-1e-3, 1e-3):
            moved = theta.copy()
            moved[i] += step
            # minimum-norm correction back onto A theta = y
            moved -= pinv @ (A @ moved - y)
            assert np.sum(np.abs(moved)) >= best * (1 - 2e-3)


def test_large_epsilon_gives_zero() -> None:
    Phi = gen_matrix(10, 30, seed=2)
    y = Phi.entries @ _sparse(30, 3, seed=2)
    result = solve_bpdn(Phi, y, epsilon=float(np.linalg.norm(y)) + 1.0)
    assert not result.theta_hat.any()
    assert result.converged


def test_zero_measurements_give_zero() -> None:
    result = solve_bpdn(gen_matrix(10, 30, seed=5), np.zeros(10))
    assert not result.theta_hat.any()
    assert result.residual_norm == 0.0


def test_iteration_cap_reports_non_convergence() -> None:
    Phi = gen_matrix(20, 60, seed=8)
    y = Phi.entries @ _sparse(60, 4, seed=9)
    result = solve_bpdn(Phi, y, 0.0, SolverConfig(max_iter=1, polish=False))
    assert not result.converged
    assert result.iterations == 1


def test_one_solver_serves_many_solves() -> None:
    Phi = gen_matrix(30, 80, seed=10)
    solver = BpdnSolver(Phi)
    for seed in range(3):
        theta = _sparse(80, 3, seed=seed)
        assert np.allclose(solver.solve(Phi.entries @ theta).theta_hat, theta, atol=1e-8)


def test_invalid_solve_inputs() -> None:
    solver = BpdnSolver(gen_matrix(4, 8, seed=0))
    with pytest.raises(DimensionMismatchError):
        solver.solve(np.zeros(5))
    with pytest.raises(NonFiniteInputError):
        solver.solve(np.array([0.0, np.nan, 0.0, 0.0]))
    with pytest.raises(InvalidParamsError):
        solver.solve(np.zeros(4), epsilon=-1.0)
    with pytest.raises(NonFiniteInputError):
        BpdnSolver(np.array([[1.0, np.inf]]))


def test_solver_config_is_validated() -> None:
    with pytest.raises(ValidationError):
        SolverConfig(rho=0.0)
    with pytest.raises(ValidationError):
        SolverConfig(step=1.0)  # type: ignore[call-arg]


def test_oracle_recovers_sparse_signal() -> None:
    Phi = gen_matrix(6, 12, seed=40)
    theta = _sparse(12, 2, seed=41)
    assert np.allclose(l0_oracle(Phi, Phi.entries @ theta, k_max=2), theta, atol=1e-10)


def test_oracle_of_zero_measurements() -> None:
    assert not l0_oracle(gen_matrix(5, 10, seed=1), np.zeros(5), k_max=3).any()


def test_oracle_prefers_smaller_support() -> None:
    # column 0 alone explains y exactly; every larger support does too
    A = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    theta = l0_oracle(A, np.array([2.0, 0.0]), k_max=2)
    assert theta.tolist() == pytest.approx([2.0, 0.0, 0.0])


def test_oracle_rejects_large_instances() -> None:
    with pytest.raises(InstanceTooLargeError):
        l0_oracle(np.ones((3, 21)), np.ones(3), k_max=1)


def test_basis_pursuit_agrees_with_oracle() -> None:
    Phi = gen_matrix(10, 16, seed=50)
    theta = _sparse(16, 2, seed=51)
    y = Phi.entries @ theta
    assert np.allclose(solve_bpdn(Phi, y).theta_hat, l0_oracle(Phi, y, k_max=2), atol=1e-8)
