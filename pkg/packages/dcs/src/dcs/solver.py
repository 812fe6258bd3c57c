"""Sparse recovery engine.

``solve_bpdn`` solves basis pursuit denoising

    minimize ‖theta‖_1  subject to  ‖A theta - y‖_2 <= epsilon

with ADMM on the split  x = z,  A x = w:

    x <- (I + AᵀA)⁻¹ ((z - u) + Aᵀ(w - v))
    z <- soft_threshold(x + u, 1 / rho)
    w <- projection of A x + v onto the epsilon-ball around y
    u <- u + x - z,   v <- v + A x - w

epsilon = 0 reduces to equality-constrained basis pursuit. ``l0_oracle`` solves
the l0 problem by exhaustive search for toy sizes and serves as ground truth.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import cho_factor, cho_solve

from shared.logging import get_logger
from shared.types import Matrix, Vector

from .errors import (
    DimensionMismatchError,
    InstanceTooLargeError,
    InvalidParamsError,
    NonFiniteInputError,
)
from .sensing import SensingMatrix, as_array

logger = get_logger(__name__)

ORACLE_MAX_N = 20
ORACLE_MAX_SUPPORTS = 10**6


class SolverConfig(BaseModel):
    """ADMM penalty, stopping tolerances and iteration cap."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    rho: float = Field(default=1.0, gt=0)
    abs_tol: float = Field(default=1e-7, gt=0)
    rel_tol: float = Field(default=1e-5, gt=0)
    max_iter: int = Field(default=10000, ge=1)
    polish: bool = Field(
        default=True,
        description="For epsilon = 0, refit least squares on the recovered support.",
    )


@dataclass(frozen=True)
class SolveResult:
    theta_hat: Vector
    iterations: int
    converged: bool
    residual_norm: float


def soft_threshold(v: Vector, tau: float) -> Vector:
    """Proximal operator of tau * ‖·‖_1."""
    shrunk: Vector = np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)
    return shrunk


def project_l2_ball(v: Vector, center: Vector, radius: float) -> Vector:
    """Euclidean projection of v onto {w : ‖w - center‖_2 <= radius}."""
    offset = v - center
    distance = float(np.linalg.norm(offset))
    if distance <= radius:
        return v
    projected: Vector = center + offset * (radius / distance)
    return projected


class BpdnSolver:
    """BPDN solver bound to one matrix.

    The factorization behind the x-update is computed once and only read
    afterwards, so one instance can serve concurrent solves. When m < n the
    m x m system (I + A Aᵀ) is factored and applied through the Woodbury identity.
    """

    def __init__(self, A: SensingMatrix | Matrix, config: SolverConfig | None = None) -> None:
        self.A = as_array(A)
        if not np.all(np.isfinite(self.A)):
            raise NonFiniteInputError("sensing matrix contains NaN or infinity")
        self.config = config or SolverConfig()
        self.m, self.n = self.A.shape
        self._wide = self.m < self.n
        if self._wide:
            gram = np.eye(self.m) + self.A @ self.A.T
        else:
            gram = np.eye(self.n) + self.A.T @ self.A
        self._factor = cho_factor(gram)

    def _solve_normal(self, rhs: Vector) -> Vector:
        """Apply (I + AᵀA)⁻¹."""
        if self._wide:
            solved: Vector = rhs - self.A.T @ cho_solve(self._factor, self.A @ rhs)
            return solved
        result: Vector = cho_solve(self._factor, rhs)
        return result

    def feasibility_bound(self, epsilon: float) -> float:
        """Largest residual ‖A theta - y‖ a converged solve may return."""
        cfg = self.config
        return min(
            epsilon * (1.0 + cfg.rel_tol) + cfg.abs_tol,
            epsilon + cfg.abs_tol * math.sqrt(self.m),
        )

    def _candidate(self, z: Vector, y: Vector, epsilon: float) -> tuple[Vector, float]:
        theta = z
        if epsilon == 0 and self.config.polish:
            theta = self._polish(theta, y)
        return theta, float(np.linalg.norm(self.A @ theta - y))

    def solve(self, y: Vector, epsilon: float = 0.0) -> SolveResult:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.m,):
            raise DimensionMismatchError(f"measurements of shape {y.shape}, matrix has {self.m} rows")
        if not np.all(np.isfinite(y)) or not math.isfinite(epsilon):
            raise NonFiniteInputError("measurements or epsilon are not finite")
        if epsilon < 0:
            raise InvalidParamsError(f"epsilon must be nonnegative, got {epsilon}")

        cfg = self.config
        A, rho = self.A, cfg.rho
        tau = 1.0 / rho
        eps_abs_primal = math.sqrt(self.n + self.m) * cfg.abs_tol
        eps_abs_dual = math.sqrt(self.n) * cfg.abs_tol
        bound = self.feasibility_bound(epsilon)

        z = np.zeros(self.n)
        u = np.zeros(self.n)
        w = project_l2_ball(np.zeros(self.m), y, epsilon)
        v = np.zeros(self.m)

        converged = False
        theta: Vector | None = None
        residual = math.inf
        iteration = 0
        for iteration in range(1, cfg.max_iter + 1):
            x = self._solve_normal((z - u) + A.T @ (w - v))
            Ax = A @ x
            z_old, w_old = z, w
            z = soft_threshold(x + u, tau)
            w = project_l2_ball(Ax + v, y, epsilon)
            u = u + x - z
            v = v + Ax - w

            primal = math.hypot(np.linalg.norm(x - z), np.linalg.norm(Ax - w))
            dual = rho * float(np.linalg.norm((z - z_old) + A.T @ (w - w_old)))
            scale_primal = max(
                math.hypot(np.linalg.norm(x), np.linalg.norm(Ax)),
                math.hypot(np.linalg.norm(z), np.linalg.norm(w)),
            )
            scale_dual = rho * float(np.linalg.norm(u + A.T @ v))
            if (
                primal <= eps_abs_primal + cfg.rel_tol * scale_primal
                and dual <= eps_abs_dual + cfg.rel_tol * scale_dual
            ):
                # the split residuals can be small while z still sits outside the ball
                theta, residual = self._candidate(z, y, epsilon)
                if residual <= bound:
                    converged = True
                    break

        if not converged:
            theta, residual = self._candidate(z, y, epsilon)
            logger.debug(
                "BPDN did not converge",
                iterations=iteration,
                residual=residual,
                epsilon=epsilon,
            )
        assert theta is not None
        return SolveResult(
            theta_hat=theta, iterations=iteration, converged=converged, residual_norm=residual
        )

    def _polish(self, theta: Vector, y: Vector) -> Vector:
        """Least-squares refit on the support of ``theta`` when it has at most m entries."""
        support = np.flatnonzero(theta)
        if support.size == 0 or support.size > self.m:
            return theta
        coef, *_ = np.linalg.lstsq(self.A[:, support], y, rcond=None)
        refit = np.zeros(self.n)
        refit[support] = coef
        if np.linalg.norm(self.A @ refit - y) <= np.linalg.norm(self.A @ theta - y):
            return refit
        return theta


def solve_bpdn(
    A: SensingMatrix | Matrix,
    y: Vector,
    epsilon: float = 0.0,
    config: SolverConfig | None = None,
) -> SolveResult:
    """One-off BPDN solve; build a :class:`BpdnSolver` to reuse the factorization."""
    return BpdnSolver(A, config).solve(y, epsilon)


def l0_oracle(A: SensingMatrix | Matrix, y: Vector, k_max: int) -> Vector:
    """Exhaustive l0 search over all supports of size <= k_max.

    Each support is fitted by least squares; the smallest residual wins, ties go
    to the smaller support and then to the lexicographically smallest one.
    """
    entries = as_array(A)
    m, n = entries.shape
    y = np.asarray(y, dtype=float)
    if y.shape != (m,):
        raise DimensionMismatchError(f"measurements of shape {y.shape}, matrix has {m} rows")
    k_max = min(k_max, n)
    supports_total = sum(math.comb(n, s) for s in range(k_max + 1))
    if n > ORACLE_MAX_N or supports_total > ORACLE_MAX_SUPPORTS:
        raise InstanceTooLargeError(
            f"exhaustive search over {supports_total} supports with n={n} is too large"
        )

    # residuals within this tolerance count as ties
    tie_tol = 1e-12 * max(1.0, float(np.linalg.norm(y)))
    best_theta = np.zeros(n)
    best_residual = float(np.linalg.norm(y))
    for size in range(1, k_max + 1):
        for support in itertools.combinations(range(n), size):
            columns = entries[:, support]
            coef, *_ = np.linalg.lstsq(columns, y, rcond=None)
            residual = float(np.linalg.norm(columns @ coef - y))
            if residual < best_residual - tie_tol:
                best_residual = residual
                best_theta = np.zeros(n)
                best_theta[list(support)] = coef
    return best_theta
