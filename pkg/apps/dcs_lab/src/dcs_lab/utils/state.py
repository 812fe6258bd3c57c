"""Experiment configuration and result row models for the harness."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from dcs.analysis import doi_gain_expected
from dcs.errors import InvalidConfigError, InvalidParamsError
from dcs.model import EnsembleParams, JsmModel, NormPolicy
from dcs.sensing import MAX_RATE
from dcs.solver import SolverConfig
from shared.logging import get_logger
from shared.types import AlgorithmName, Seed, SupportPolicyName

logger = get_logger(__name__)

AVERAGING_ALGORITHMS: frozenset[AlgorithmName] = frozenset({"texas_doi", "texas_holdem", "tecc"})


class NormPolicyConfig(BaseModel):
    """Innovation amplitude policy; a bare string selects the kind."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["gaussian-amplitudes", "equal-norm"] = "gaussian-amplitudes"
    eta: float | None = Field(default=None, gt=0)

    def to_policy(self) -> NormPolicy:
        if self.kind == "equal-norm":
            if self.eta is None:
                raise ValueError("equal-norm requires eta")
            return NormPolicy.equal_norm(self.eta)
        return NormPolicy.gaussian()


class SiBudget(BaseModel):
    """Measurements and rate spent on the side-information node."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    m1: int = Field(gt=0)
    R1: int = Field(ge=1, le=MAX_RATE)


class ExperimentConfig(BaseModel):
    """A declarative Monte Carlo sweep over the number of measurements per node."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "experiment"
    model: Literal["jsm1", "jsm3"]
    n: int = Field(gt=0)
    J: int = Field(ge=2)
    k_C: int | None = Field(default=None, ge=0)
    k_I: int = Field(ge=0)
    m_values: list[int] = Field(min_length=1)
    R: int = Field(default=0, ge=0, le=MAX_RATE, description="Bits per measurement; 0 = unquantized.")
    trials: int = Field(default=1, ge=1)
    base_seed: int = Field(default=0, ge=0, lt=2**64)
    algorithms: list[AlgorithmName] = Field(min_length=1)
    support_policy: SupportPolicyName = "independent-uniform"
    norm_policy: NormPolicyConfig = NormPolicyConfig()
    solver: SolverConfig = SolverConfig()
    si_budget: SiBudget | None = None
    output_path: str | None = None

    eta_hat: float | None = Field(default=None, ge=0)
    delta_hat: float | None = Field(default=None, ge=0, lt=1)
    rip_samples: int = Field(default=1000, ge=1)
    epsilon_overrides: dict[AlgorithmName, float] = Field(default_factory=dict)
    include_si_in_mse: bool = False
    dump_measurements: bool = False

    @field_validator("norm_policy", mode="before")
    @classmethod
    def _norm_policy_from_string(cls, value: Any) -> Any:
        if isinstance(value, str):
            return {"kind": value}
        return value

    @field_validator("algorithms")
    @classmethod
    def _unique_algorithms(cls, value: list[AlgorithmName]) -> list[AlgorithmName]:
        if len(set(value)) != len(value):
            raise ValueError(f"algorithms listed more than once: {value}")
        return value

    @field_validator("epsilon_overrides")
    @classmethod
    def _nonnegative_overrides(cls, value: dict[AlgorithmName, float]) -> dict[AlgorithmName, float]:
        for name, eps in value.items():
            if not (math.isfinite(eps) and eps >= 0):
                raise ValueError(f"epsilon override for {name} must be finite and >= 0, got {eps}")
        return value

    @model_validator(mode="after")
    def _check_consistency(self) -> ExperimentConfig:
        bad = [m for m in self.m_values if not 1 <= m <= self.n]
        if bad:
            raise ValueError(f"every m must lie in 1..n={self.n}, got {bad}")
        if self.model == "jsm1" and self.k_C is None:
            raise ValueError("model jsm1 requires k_C")
        if self.model == "jsm3" and self.k_C is not None:
            raise ValueError("model jsm3 has a dense common component and takes no k_C")
        if "tecc" in self.algorithms and self.model != "jsm3":
            raise ValueError("tecc estimates a dense common component and requires model jsm3")
        if self.dump_measurements and self.R == 0:
            raise ValueError("dump_measurements needs quantized measurements (R > 0)")
        try:
            self.ensemble_params(self.base_seed)
        except InvalidParamsError as exc:
            raise ValueError(str(exc)) from exc
        return self

    def jsm_model(self) -> JsmModel:
        if self.model == "jsm1":
            assert self.k_C is not None
            return JsmModel.jsm1(self.k_C)
        return JsmModel.jsm3()

    def ensemble_params(self, seed: Seed) -> EnsembleParams:
        return EnsembleParams(
            n=self.n,
            J=self.J,
            model=self.jsm_model(),
            k_I=self.k_I,
            support_policy=self.support_policy,
            norm_policy=self.norm_policy.to_policy(),
            seed=seed,
        )

    def innovation_norm_estimate(self) -> float:
        """eta_hat when given, eta under equal-norm, sqrt(k_I) for Gaussian amplitudes."""
        if self.eta_hat is not None:
            return self.eta_hat
        if self.norm_policy.kind == "equal-norm" and self.norm_policy.eta is not None:
            return self.norm_policy.eta
        return math.sqrt(self.k_I)

    @property
    def si_rate(self) -> int | None:
        """Rate of node 1 when rate accounting is active and measurements are quantized."""
        if self.si_budget is None or self.R == 0:
            return None
        return self.si_budget.R1

    @property
    def expects_doi_gain(self) -> bool:
        """Whether the common part is dense enough for DOI to beat separate recovery."""
        if self.k_C is None:
            return True
        return doi_gain_expected(self.k_C, self.k_I)

    @property
    def needs_shared_matrix(self) -> bool:
        return any(name != "tecc" for name in self.algorithms)

    @property
    def needs_rip_estimate(self) -> bool:
        return self.delta_hat is None and any(a in AVERAGING_ALGORITHMS for a in self.algorithms)


class ResultRow(BaseModel):
    """One (algorithm, m, trial) outcome; field order is the CSV column order."""

    model_config = ConfigDict(frozen=True)

    algorithm: AlgorithmName
    m: int
    J: int
    R: int
    trial: int
    mse: float = Field(ge=0)
    mean_relative_error: float = Field(ge=0)
    converged_fraction: float = Field(ge=0, le=1)
    wall_time: float = Field(ge=0)


CSV_HEADER: tuple[str, ...] = tuple(ResultRow.model_fields)


def load_config(path: str | Path) -> ExperimentConfig:
    """Read and validate a JSON experiment description."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        config = ExperimentConfig.model_validate_json(text)
    except ValidationError as exc:
        raise InvalidConfigError(f"invalid config {path}:\n{exc}") from exc
    logger.info("Loaded experiment config", path=str(path), name=config.name)
    return config
