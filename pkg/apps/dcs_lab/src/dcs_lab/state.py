"""State definitions for the per-trial pipeline graph."""

from __future__ import annotations

from dataclasses import dataclass, field

from typing_extensions import Annotated

from dcs.model import SignalEnsemble
from dcs.recovery import EnsembleRecovery
from dcs.sensing import MeasurementSet, SensingMatrix

from .utils.state import ExperimentConfig, ResultRow


@dataclass(frozen=True)
class AlgorithmReport:
    """Output of one algorithm on one trial cell."""

    recovery: EnsembleRecovery
    wall_time: float


def merge_reports(
    left: dict[str, AlgorithmReport] | None, right: dict[str, AlgorithmReport] | None
) -> dict[str, AlgorithmReport]:
    """Combine reports written by algorithm nodes running in the same step."""
    return {**(left or {}), **(right or {})}


@dataclass
class InputState:
    """One (trial, m) cell of a sweep: the narrow interface callers provide."""

    experiment: ExperimentConfig | None = None
    trial: int = 0
    m: int = 0
    seed: int = 0
    dump_dir: str | None = None


@dataclass
class TrialState(InputState):
    """Everything the algorithms of a cell share, plus their reports and scored rows."""

    ensemble: SignalEnsemble | None = None
    matrix: SensingMatrix | None = None
    node_matrices: list[SensingMatrix] = field(default_factory=list)
    measurements: MeasurementSet | None = None
    node_measurements: MeasurementSet | None = None
    delta_hat: float | None = None
    reports: Annotated[dict[str, AlgorithmReport], merge_reports] = field(default_factory=dict)
    rows: list[ResultRow] = field(default_factory=list)
