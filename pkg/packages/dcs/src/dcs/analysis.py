"""Error metrics, analytic error bounds, the averaging-noise diagnostic and rate accounting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from shared.types import Matrix, Vector

from .errors import DimensionMismatchError, InvalidParamsError, InvalidRegimeError
from .model import JsmModel, SignalEnsemble
from .recovery import EnsembleRecovery
from .sensing import SensingMatrix, as_array

# BPDN stability needs delta_2k below this value
RIP_REGIME_LIMIT = math.sqrt(2.0) - 1.0


@dataclass(frozen=True)
class BoundInputs:
    """Inputs of the analytic error bounds; C is infinite outside the BPDN regime."""

    C: float
    delta_k: float
    J: int
    eta: float
    epsilon: float = 0.0

    @classmethod
    def from_rip_estimate(
        cls, delta_k: float, J: int, eta: float, epsilon: float = 0.0
    ) -> BoundInputs:
        C = bpdn_constant(delta_k) if 0.0 <= delta_k < RIP_REGIME_LIMIT else math.inf
        return cls(C=C, delta_k=delta_k, J=J, eta=eta, epsilon=epsilon)

    @property
    def valid(self) -> bool:
        """Whether the RIP estimate lies in the regime where C is meaningful."""
        return 0.0 <= self.delta_k < RIP_REGIME_LIMIT

    def texas_doi_floor(self) -> float:
        return texas_doi_bound(self.C, self.delta_k, self.J, self.eta)


@dataclass(frozen=True)
class RateBudget:
    """Bit budget of one ensemble: J - 1 compressed nodes plus the side-information node."""

    J: int
    m: int
    R: int
    m1: int
    R1: int

    def __post_init__(self) -> None:
        for name in ("J", "m", "R", "m1", "R1"):
            value = getattr(self, name)
            if not (isinstance(value, int) and value > 0):
                raise InvalidParamsError(f"rate budget field {name} must be a positive integer")


@dataclass(frozen=True)
class RateReport:
    total_bits: int
    m_prime: float
    delta_m: float


def _check_shapes(recovered: EnsembleRecovery, truth: SignalEnsemble) -> Matrix:
    signals = truth.signals
    if recovered.theta_hat.shape != signals.shape:
        raise DimensionMismatchError(
            f"recovery of shape {recovered.theta_hat.shape} vs ensemble {signals.shape}"
        )
    return signals


def ensemble_mse(
    recovered: EnsembleRecovery, truth: SignalEnsemble, include_si: bool = False
) -> float:
    """Mean squared error per entry over nodes 2..J (all nodes with ``include_si``)."""
    signals = _check_shapes(recovered, truth)
    start = 0 if include_si else 1
    errors = recovered.theta_hat[start:] - signals[start:]
    return float(np.sum(errors**2) / errors.size)


def relative_errors(recovered: EnsembleRecovery, truth: SignalEnsemble) -> Vector:
    """‖theta_hat_j - theta_j‖ / ‖theta_j‖ for nodes 2..J; absolute error where theta_j = 0."""
    signals = _check_shapes(recovered, truth)
    errors = np.linalg.norm(recovered.theta_hat[1:] - signals[1:], axis=1)
    norms = np.linalg.norm(signals[1:], axis=1)
    ratios: Vector = np.divide(errors, norms, out=errors.copy(), where=norms > 0)
    return ratios


def bpdn_constant(delta: float) -> float:
    """Stability constant C = 4 sqrt(1 + delta) / (1 - (1 + sqrt 2) delta) of BPDN."""
    if not 0.0 <= delta < RIP_REGIME_LIMIT:
        raise InvalidRegimeError(
            f"RIP constant {delta:.4f} outside [0, sqrt(2) - 1); no BPDN guarantee applies"
        )
    return 4.0 * math.sqrt(1.0 + delta) / (1.0 - (1.0 + math.sqrt(2.0)) * delta)


def doi_bound(C: float, epsilon: float) -> float:
    """Error bound C * epsilon of difference-of-innovations recovery."""
    if C <= 0 or epsilon < 0:
        raise InvalidParamsError(f"need C > 0 and epsilon >= 0, got C={C}, epsilon={epsilon}")
    return C * epsilon


def texas_doi_bound(C: float, delta_k: float, J: int, eta: float) -> float:
    """Error floor 2 C sqrt(1 + delta_k) eta / sqrt(J) of averaging with side information."""
    if C <= 0 or J < 1 or eta < 0 or not 0.0 <= delta_k < 1.0:
        raise InvalidParamsError(
            f"invalid bound inputs C={C}, delta_k={delta_k}, J={J}, eta={eta}"
        )
    return 2.0 * C * math.sqrt(1.0 + delta_k) * eta / math.sqrt(J)


def averaging_noise(A: SensingMatrix | Matrix, theta_I: Matrix) -> float:
    """‖(1/J) sum_l A theta_I[l]‖: innovation energy left in the averaged measurements."""
    entries = as_array(A)
    theta_I = np.atleast_2d(np.asarray(theta_I, dtype=float))
    if theta_I.shape[1] != entries.shape[1]:
        raise DimensionMismatchError(
            f"innovations of length {theta_I.shape[1]}, matrix has {entries.shape[1]} columns"
        )
    return float(np.linalg.norm(entries @ theta_I.mean(axis=0)))


def rate_accounting(budget: RateBudget) -> RateReport:
    """Total bits (J-1) m R + m1 R1 and the per-node measurements m' a rate-matched scheme gets."""
    total = (budget.J - 1) * budget.m * budget.R + budget.m1 * budget.R1
    return RateReport(
        total_bits=total,
        m_prime=total / (budget.J * budget.R),
        delta_m=(budget.m1 * budget.R1 - budget.m * budget.R) / (budget.J * budget.R),
    )


def default_si_budget(
    model: JsmModel, k_I: int, n: int, J: int, m: int, R: int, R1: int = 8
) -> RateBudget:
    """Side-information budget: about 5 k measurements under JSM-1, n under JSM-3."""
    if model.kind == "jsm1":
        assert model.k_C is not None
        m1 = min(n, 5 * (model.k_C + k_I))
    else:
        m1 = n
    return RateBudget(J=J, m=m, R=R, m1=max(m1, 1), R1=R1)


def doi_gain_expected(k_C: int, k_I: int) -> bool:
    """Rule of thumb: differencing pays off when the common part is at least twice as dense."""
    return k_C >= 2 * k_I
