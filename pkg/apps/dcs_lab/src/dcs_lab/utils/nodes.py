"""Node implementations for the per-trial pipeline graph."""

from __future__ import annotations

import time
from collections.abc import Callable
from typing import Any

import numpy as np

from dcs.analysis import ensemble_mse, relative_errors
from dcs.model import gen_ensemble
from dcs.recovery import (
    EnsembleRecovery,
    SideInformation,
    inner_epsilon,
    quantization_epsilon,
    recover_doi,
    recover_separate,
    recover_tecc,
    recover_texas_doi,
    recover_texas_holdem,
)
from dcs.sensing import (
    MeasurementSet,
    estimate_rip,
    gen_matrix,
    gen_node_matrices,
    measure_ensemble,
    measure_ensemble_per_node,
    quantize_measurements,
)
from shared.logging import get_logger
from shared.types import ALGORITHM_NAMES, AlgorithmName, Seed

from ..state import AlgorithmReport, TrialState
from .state import AVERAGING_ALGORITHMS, ExperimentConfig, ResultRow
from .tools import dump_measurements

logger = get_logger(__name__)


def derive_seeds(seed: Seed, J: int) -> dict[str, Any]:
    """Independent sub-seeds for every random draw of a cell."""
    ensemble, matrix, nodes, rip = np.random.SeedSequence(seed).spawn(4)
    return {
        "ensemble": int(ensemble.generate_state(1, np.uint64)[0]),
        "matrix": int(matrix.generate_state(1, np.uint64)[0]),
        "nodes": [int(s) for s in nodes.generate_state(J, np.uint64)],
        "rip": int(rip.generate_state(1, np.uint64)[0]),
    }


def _config(state: TrialState) -> ExperimentConfig:
    if state.experiment is None:
        raise ValueError("trial state carries no experiment config")
    return state.experiment


def generate(state: TrialState) -> dict[str, Any]:
    """Draw the signal ensemble of the cell."""
    config = _config(state)
    seeds = derive_seeds(state.seed, config.J)
    ensemble = gen_ensemble(config.ensemble_params(seeds["ensemble"]))
    logger.debug("Generated cell ensemble", trial=state.trial, m=state.m)
    return {"ensemble": ensemble}


def acquire(state: TrialState) -> dict[str, Any]:
    """Draw the sensing matrices, measure every node and estimate delta when needed."""
    config = _config(state)
    assert state.ensemble is not None
    seeds = derive_seeds(state.seed, config.J)
    update: dict[str, Any] = {}

    matrix = None
    if config.needs_shared_matrix:
        matrix = gen_matrix(state.m, config.n, seeds["matrix"])
        update["matrix"] = matrix
        update["measurements"] = measure_ensemble(matrix, state.ensemble)
    node_matrices = []
    if "tecc" in config.algorithms:
        node_matrices = gen_node_matrices(state.m, config.n, seeds["nodes"])
        update["node_matrices"] = node_matrices
        update["node_measurements"] = measure_ensemble_per_node(node_matrices, state.ensemble)

    if config.needs_rip_estimate:
        reference = matrix if matrix is not None else node_matrices[0]
        k = max(1, min(config.n, config.J * config.k_I))
        update["delta_hat"] = estimate_rip(reference, k, config.rip_samples, seeds["rip"])
    else:
        update["delta_hat"] = config.delta_hat
    return update


def quantize(state: TrialState) -> dict[str, Any]:
    """Quantize all measurements at R bits; node 1 at R1 when a side-information budget is set."""
    config = _config(state)
    update: dict[str, Any] = {}
    for key in ("measurements", "node_measurements"):
        raw: MeasurementSet | None = getattr(state, key)
        if raw is None:
            continue
        quantized = quantize_measurements(raw, config.R, si_R=config.si_rate)
        update[key] = quantized
        if config.dump_measurements and state.dump_dir is not None:
            suffix = "_tecc" if key == "node_measurements" else ""
            dump_measurements(state.dump_dir, f"trial{state.trial}_m{state.m}{suffix}", quantized)
    return update


def route_after_acquire(state: TrialState) -> str | list[str]:
    """Quantize first when a rate is set, otherwise fan out to the algorithms."""
    if _config(state).R > 0:
        return "quantize"
    return route_algorithms(state)


def route_algorithms(state: TrialState) -> list[str]:
    """Run every selected algorithm in parallel on the same inputs."""
    return list(_config(state).algorithms)


def algorithm_epsilon(
    name: AlgorithmName,
    config: ExperimentConfig,
    measurements: MeasurementSet,
    delta_hat: float | None,
) -> float:
    """Constraint radius for ``name`` from quantization noise and, for averaging, the floor term."""
    if name in config.epsilon_overrides:
        return config.epsilon_overrides[name]
    eps_quant = quantization_epsilon(measurements.quantizer, measurements.m)
    if name == "separate":
        return eps_quant
    if name == "doi":
        return eps_quant + quantization_epsilon(measurements.node_quantizers[0], measurements.m)
    assert name in AVERAGING_ALGORITHMS
    return inner_epsilon(delta_hat or 0.0, config.innovation_norm_estimate(), config.J, eps_quant)


def _side_information(state: TrialState, measurements: MeasurementSet) -> SideInformation:
    assert state.ensemble is not None
    return SideInformation.from_measurements(state.ensemble.signals[0], measurements)


def _recover(name: AlgorithmName, state: TrialState) -> EnsembleRecovery:
    config = _config(state)
    if name == "tecc":
        assert state.node_measurements is not None
        eps = algorithm_epsilon(name, config, state.node_measurements, state.delta_hat)
        return recover_tecc(state.node_matrices, state.node_measurements, eps, config=config.solver)

    assert state.matrix is not None and state.measurements is not None
    ms = state.measurements
    eps = algorithm_epsilon(name, config, ms, state.delta_hat)
    if name == "separate":
        return recover_separate(state.matrix, ms, eps, config=config.solver)
    if name == "doi":
        return recover_doi(state.matrix, ms, _side_information(state, ms), eps, config=config.solver)
    if name == "texas_doi":
        return recover_texas_doi(
            state.matrix, ms, _side_information(state, ms), eps, config=config.solver
        )
    return recover_texas_holdem(state.matrix, ms, eps, config=config.solver)


def _failed_recovery(name: AlgorithmName, J: int, n: int) -> EnsembleRecovery:
    return EnsembleRecovery(
        algorithm=name,
        theta_hat=np.zeros((J, n)),
        per_node_converged=np.zeros(J, dtype=bool),
        residual_norms=np.full(J, np.inf),
        iterations=np.zeros(J, dtype=np.int64),
    )


def make_algorithm_node(name: AlgorithmName) -> Callable[[TrialState], dict[str, Any]]:
    """Build the graph node that runs one recovery algorithm and times it."""

    def run(state: TrialState) -> dict[str, Any]:
        config = _config(state)
        start = time.perf_counter()
        try:
            recovery = _recover(name, state)
        except np.linalg.LinAlgError as exc:
            logger.warning(
                "Recovery failed", algorithm=name, trial=state.trial, m=state.m, error=str(exc)
            )
            recovery = _failed_recovery(name, config.J, config.n)
        elapsed = time.perf_counter() - start
        return {"reports": {name: AlgorithmReport(recovery=recovery, wall_time=elapsed)}}

    run.__name__ = name
    return run


ALGORITHM_NODES: dict[AlgorithmName, Callable[[TrialState], dict[str, Any]]] = {
    name: make_algorithm_node(name) for name in ALGORITHM_NAMES
}


def score(state: TrialState) -> dict[str, Any]:
    """Turn every algorithm report of the cell into a result row."""
    config = _config(state)
    assert state.ensemble is not None
    rows = []
    for name, report in state.reports.items():
        recovery = report.recovery
        rows.append(
            ResultRow(
                algorithm=name,
                m=state.m,
                J=config.J,
                R=config.R,
                trial=state.trial,
                mse=ensemble_mse(recovery, state.ensemble, include_si=config.include_si_in_mse),
                mean_relative_error=float(np.mean(relative_errors(recovery, state.ensemble))),
                converged_fraction=recovery.converged_fraction,
                wall_time=report.wall_time,
            )
        )
    logger.debug("Scored cell", trial=state.trial, m=state.m, algorithms=len(rows))
    return {"rows": rows}
