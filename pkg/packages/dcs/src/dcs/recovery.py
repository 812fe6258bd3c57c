"""Joint reconstruction algorithms for an ensemble of correlated signals.

Side-information algorithms (node 1 known exactly at the decoder):

- ``recover_doi``: recover the difference of innovations from y_j - y_1, add theta_1.
- ``recover_texas_doi``: average all measurements to isolate innovation measurements,
  then recover innovations individually and combine them with theta_1.

Baselines:

- ``recover_separate``: independent BPDN per node.
- ``recover_texas_holdem``: average to estimate the common component, subtract, recover.
- ``recover_tecc``: transpose estimate of a dense common component from per-node matrices.

Every entry point computes its shared quantities first; per-node recoveries then
only read them and may run on the optional ``executor``.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Any, TypeVar

import numpy as np

from shared.logging import get_logger
from shared.types import Counts, Flags, Matrix, Vector

from .errors import (
    DimensionMismatchError,
    InvalidParamsError,
    MissingSideInformationError,
    SharedMatrixError,
)
from .sensing import MeasurementSet, Quantizer, SensingMatrix, as_array
from .solver import BpdnSolver, SolveResult, SolverConfig

logger = get_logger(__name__)

T = TypeVar("T")


@dataclass(frozen=True)
class SideInformation:
    """Node 1's signal, known exactly, and the measurements the decoder holds for it."""

    theta_1: Vector
    y_1: Vector

    @classmethod
    def from_measurements(cls, theta_1: Vector, measurements: MeasurementSet) -> SideInformation:
        if measurements.J < 1:
            raise MissingSideInformationError("measurement set has no node 1")
        return cls(theta_1=np.asarray(theta_1, dtype=float), y_1=measurements.y[0])


@dataclass(frozen=True)
class EnsembleRecovery:
    """Per-node reconstructions (row 0 is node 1) and solver diagnostics."""

    algorithm: str
    theta_hat: Matrix
    per_node_converged: Flags
    residual_norms: Vector
    iterations: Counts

    @property
    def J(self) -> int:
        return int(self.theta_hat.shape[0])

    @property
    def converged_fraction(self) -> float:
        return float(np.mean(self.per_node_converged))


def quantization_epsilon(quantizer: Quantizer | None, m: int) -> float:
    """Norm bound Delta * sqrt(m) / 2 on one node's quantization error; 0 when unquantized."""
    if quantizer is None:
        return 0.0
    return quantizer.step * math.sqrt(m) / 2.0


def inner_epsilon(delta_k: float, eta_hat: float, J: int, eps_quant: float = 0.0) -> float:
    """Radius for the inner BPDN solves of averaging schemes.

    sqrt(1 + delta_k) * eta_hat / sqrt(J) bounds the residual innovation energy
    left by averaging J nodes; quantization noise is added on top.
    """
    return math.sqrt(1.0 + delta_k) * eta_hat / math.sqrt(J) + eps_quant


def _map(executor: Executor | None, fn: Callable[[Any], T], items: Iterable[Any]) -> list[T]:
    if executor is None:
        return [fn(item) for item in items]
    return list(executor.map(fn, items))


def _solver_for(
    A: SensingMatrix | Matrix, solver: BpdnSolver | None, config: SolverConfig | None
) -> BpdnSolver:
    if solver is not None:
        return solver
    return BpdnSolver(A, config)


def _check_measurements(A: Matrix, measurements: MeasurementSet, min_nodes: int = 1) -> None:
    if measurements.m != A.shape[0]:
        raise DimensionMismatchError(
            f"measurements have length {measurements.m}, matrix has {A.shape[0]} rows"
        )
    if measurements.J < min_nodes:
        raise InvalidParamsError(f"need at least {min_nodes} nodes, got J={measurements.J}")


def _require_side_information(
    A: Matrix, measurements: MeasurementSet, si: SideInformation | None
) -> SideInformation:
    if si is None or measurements.J < 1:
        raise MissingSideInformationError("side information for node 1 is required")
    if si.theta_1.shape != (A.shape[1],) or si.y_1.shape != (A.shape[0],):
        raise DimensionMismatchError(
            f"side information shapes {si.theta_1.shape}/{si.y_1.shape} "
            f"do not match a {A.shape[0]}x{A.shape[1]} matrix"
        )
    return si


def _assemble(
    algorithm: str,
    theta_hat: Sequence[Vector],
    results: Sequence[Sequence[SolveResult]],
) -> EnsembleRecovery:
    """Collect per-node outputs; a node converged when every solve it depends on did."""
    return EnsembleRecovery(
        algorithm=algorithm,
        theta_hat=np.stack(theta_hat),
        per_node_converged=np.array([all(r.converged for r in node) for node in results]),
        residual_norms=np.array(
            [max((r.residual_norm for r in node), default=0.0) for node in results]
        ),
        iterations=np.array([sum(r.iterations for r in node) for node in results]),
    )


def recover_separate(
    A: SensingMatrix | Matrix,
    measurements: MeasurementSet,
    epsilon: float,
    *,
    config: SolverConfig | None = None,
    solver: BpdnSolver | None = None,
    executor: Executor | None = None,
) -> EnsembleRecovery:
    """Independent BPDN recovery of every node."""
    entries = as_array(A)
    _check_measurements(entries, measurements)
    bpdn = _solver_for(entries, solver, config)

    results = _map(executor, lambda y: bpdn.solve(y, epsilon), measurements.y)
    return _assemble("separate", [r.theta_hat for r in results], [[r] for r in results])


def recover_doi(
    A: SensingMatrix | Matrix,
    measurements: MeasurementSet,
    si: SideInformation | None,
    epsilon: float,
    *,
    config: SolverConfig | None = None,
    solver: BpdnSolver | None = None,
    executor: Executor | None = None,
) -> EnsembleRecovery:
    """Difference-of-innovations recovery.

    y_j - y_1 cancels any component common to both signals, so only the
    difference theta_I[j] - theta_I[1] is recovered; theta_1 is added back.
    Valid for a sparse or a dense common component.
    """
    entries = as_array(A)
    _check_measurements(entries, measurements)
    si = _require_side_information(entries, measurements, si)
    bpdn = _solver_for(entries, solver, config)

    def recover_node(y_j: Vector) -> SolveResult:
        return bpdn.solve(y_j - si.y_1, epsilon)

    results = _map(executor, recover_node, measurements.y[1:])
    theta_hat = [si.theta_1.copy()] + [si.theta_1 + r.theta_hat for r in results]
    return _assemble("doi", theta_hat, [[]] + [[r] for r in results])


def recover_texas_doi(
    A: SensingMatrix | Matrix,
    measurements: MeasurementSet,
    si: SideInformation | None,
    epsilon_inner: float,
    *,
    config: SolverConfig | None = None,
    solver: BpdnSolver | None = None,
    executor: Executor | None = None,
) -> EnsembleRecovery:
    """Averaging plus side information, without reconstructing the common component.

    The mean of all measurements estimates the common measurements; subtracting
    it from y_1 gives node 1's innovation measurements. For j >= 2,
    (y_j - y_1) + y_hat_I1 are node j's innovation measurements and
    theta_j = theta_1 - theta_hat_I1 + theta_hat_Ij.
    """
    entries = as_array(A)
    _check_measurements(entries, measurements, min_nodes=2)
    si = _require_side_information(entries, measurements, si)
    bpdn = _solver_for(entries, solver, config)

    y_common = measurements.y.mean(axis=0)
    y_innovation_1 = si.y_1 - y_common
    first = bpdn.solve(y_innovation_1, epsilon_inner)
    anchor = si.theta_1 - first.theta_hat

    def recover_node(y_j: Vector) -> SolveResult:
        return bpdn.solve((y_j - si.y_1) + y_innovation_1, epsilon_inner)

    results = _map(executor, recover_node, measurements.y[1:])
    theta_hat = [si.theta_1.copy()] + [anchor + r.theta_hat for r in results]
    return _assemble("texas_doi", theta_hat, [[]] + [[first, r] for r in results])


def recover_texas_holdem(
    A: SensingMatrix | Matrix,
    measurements: MeasurementSet,
    epsilon_inner: float,
    *,
    config: SolverConfig | None = None,
    solver: BpdnSolver | None = None,
    executor: Executor | None = None,
) -> EnsembleRecovery:
    """Estimate the common component from averaged measurements, subtract it, recover innovations.

    All measurements of every node are treated as community measurements.
    """
    entries = as_array(A)
    _check_measurements(entries, measurements, min_nodes=2)
    bpdn = _solver_for(entries, solver, config)

    y_common = measurements.y.mean(axis=0)
    common = bpdn.solve(y_common, epsilon_inner)

    results = _map(executor, lambda y_j: bpdn.solve(y_j - y_common, epsilon_inner), measurements.y)
    theta_hat = [common.theta_hat + r.theta_hat for r in results]
    return _assemble("texas_holdem", theta_hat, [[common, r] for r in results])


def recover_tecc(
    matrices: Sequence[SensingMatrix],
    measurements: MeasurementSet,
    epsilon_inner: float,
    *,
    config: SolverConfig | None = None,
    executor: Executor | None = None,
) -> EnsembleRecovery:
    """Transpose estimation of a dense common component, then per-node innovation recovery.

    x_C = (1/J) sum_j Phi_jᵀ y_j is consistent because unit-norm columns make
    E[Phi_jᵀ Phi_j] the identity; the node matrices must differ.
    """
    J = measurements.J
    if J < 2:
        raise InvalidParamsError(f"stacking needs at least two nodes, got J={J}")
    if len(matrices) != J:
        raise DimensionMismatchError(f"{len(matrices)} matrices for {J} nodes")
    if len({Phi.seed for Phi in matrices}) == 1:
        raise SharedMatrixError("TECC needs a distinct sensing matrix per node")
    for Phi in matrices:
        _check_measurements(Phi.entries, measurements)

    x_common = tecc_common_estimate(matrices, measurements)

    def recover_node(index: int) -> SolveResult:
        Phi = matrices[index]
        residual = measurements.y[index] - Phi.entries @ x_common
        return BpdnSolver(Phi, config).solve(residual, epsilon_inner)

    results = _map(executor, recover_node, range(J))
    theta_hat = [x_common + r.theta_hat for r in results]
    return _assemble("tecc", theta_hat, [[r] for r in results])


def tecc_common_estimate(
    matrices: Sequence[SensingMatrix], measurements: MeasurementSet
) -> Vector:
    """Transpose estimate (1/J) sum_j Phi_jᵀ y_j of the common component."""
    if len(matrices) != measurements.J:
        raise DimensionMismatchError(f"{len(matrices)} matrices for {measurements.J} nodes")
    estimate: Vector = np.mean(
        [Phi.entries.T @ y for Phi, y in zip(matrices, measurements.y)], axis=0
    )
    return estimate

