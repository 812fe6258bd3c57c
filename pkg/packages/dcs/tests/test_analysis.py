"""Tests for error metrics, bounds and rate accounting."""

import math

import numpy as np
import pytest

from dcs.analysis import (
    RIP_REGIME_LIMIT,
    BoundInputs,
    RateBudget,
    averaging_noise,
    bpdn_constant,
    default_si_budget,
    doi_bound,
    doi_gain_expected,
    ensemble_mse,
    rate_accounting,
    relative_errors,
    texas_doi_bound,
)
from dcs.errors import DimensionMismatchError, InvalidParamsError, InvalidRegimeError
from dcs.model import EnsembleParams, JsmModel, NormPolicy, SignalEnsemble, gen_ensemble
from dcs.recovery import EnsembleRecovery


def _recovery(theta_hat: np.ndarray) -> EnsembleRecovery:
    J = theta_hat.shape[0]
    return EnsembleRecovery(
        algorithm="separate",
        theta_hat=theta_hat,
        per_node_converged=np.ones(J, dtype=bool),
        residual_norms=np.zeros(J),
        iterations=np.zeros(J, dtype=np.int64),
    )


@pytest.fixture
def truth() -> SignalEnsemble:
    params = EnsembleParams(n=2, J=3, model=JsmModel.jsm1(1), k_I=1)
    return SignalEnsemble(
        params=params,
        theta_C=np.zeros(2),
        theta_I=np.array([[1.0, 0.0], [0.0, 2.0], [0.0, 0.0]]),
    )


def test_mse_excludes_side_information_node(truth: SignalEnsemble) -> None:
    estimate = truth.signals.copy()
    estimate[0] += 10.0
    estimate[1, 1] += 1.0
    recovery = _recovery(estimate)

    assert ensemble_mse(recovery, truth) == pytest.approx(1.0 / 4)
    assert ensemble_mse(recovery, truth, include_si=True) == pytest.approx(201.0 / 6)


def test_mse_is_invariant_to_node_order() -> None:
    params = EnsembleParams(n=20, J=5, model=JsmModel.jsm1(3), k_I=2, seed=6)
    truth = gen_ensemble(params)
    estimate = truth.signals + np.random.default_rng(7).normal(scale=0.1, size=(5, 20))
    order = np.array([0, 3, 1, 4, 2])
    permuted = SignalEnsemble(params=params, theta_C=truth.theta_C, theta_I=truth.theta_I[order])

    assert ensemble_mse(_recovery(estimate[order]), permuted) == pytest.approx(
        ensemble_mse(_recovery(estimate), truth), rel=1e-12
    )


def test_relative_errors_fall_back_to_absolute(truth: SignalEnsemble) -> None:
    estimate = truth.signals.copy()
    estimate[1, 1] = 1.0
    estimate[2, 0] = 3.0
    assert relative_errors(_recovery(estimate), truth).tolist() == pytest.approx([0.5, 3.0])


def test_metrics_check_shapes(truth: SignalEnsemble) -> None:
    with pytest.raises(DimensionMismatchError):
        ensemble_mse(_recovery(np.zeros((2, 2))), truth)


def test_bpdn_constant() -> None:
    assert bpdn_constant(0.0) == pytest.approx(4.0)
    expected = 4 * math.sqrt(1.2) / (1 - (1 + math.sqrt(2)) * 0.2)
    assert bpdn_constant(0.2) == pytest.approx(expected)
    assert bpdn_constant(0.3) > bpdn_constant(0.2)


@pytest.mark.parametrize("delta", [-0.1, RIP_REGIME_LIMIT, 0.5])
def test_bpdn_constant_outside_regime(delta: float) -> None:
    with pytest.raises(InvalidRegimeError):
        bpdn_constant(delta)


def test_bound_inputs_validity() -> None:
    assert BoundInputs(C=4.0, delta_k=0.1, J=10, eta=1.0).valid
    assert not BoundInputs(C=4.0, delta_k=0.6, J=10, eta=1.0).valid


def test_bound_inputs_from_rip_estimate() -> None:
    inside = BoundInputs.from_rip_estimate(0.0, J=16, eta=1.0)
    assert inside.valid
    assert inside.C == pytest.approx(4.0)
    assert inside.texas_doi_floor() == pytest.approx(2.0)

    outside = BoundInputs.from_rip_estimate(0.6, J=16, eta=1.0)
    assert not outside.valid
    assert outside.C == math.inf


def test_doi_bound() -> None:
    assert doi_bound(4.0, 0.5) == pytest.approx(2.0)
    assert doi_bound(4.0, 0.0) == 0.0
    with pytest.raises(InvalidParamsError):
        doi_bound(4.0, -1.0)


def test_texas_doi_bound_shrinks_with_nodes() -> None:
    assert texas_doi_bound(4.0, 0.0, 4, 1.0) == pytest.approx(4.0)
    bounds = [texas_doi_bound(4.0, 0.1, J, 1.0) for J in (10, 40, 160)]
    assert bounds[0] / bounds[1] == pytest.approx(2.0)
    assert bounds[1] / bounds[2] == pytest.approx(2.0)
    with pytest.raises(InvalidParamsError):
        texas_doi_bound(4.0, 0.1, 0, 1.0)


def test_averaging_noise_of_orthogonal_innovations() -> None:
    params = EnsembleParams(
        n=64,
        J=16,
        model=JsmModel.jsm1(0),
        k_I=2,
        support_policy="disjoint-innovations",
        norm_policy=NormPolicy.equal_norm(2.0),
        seed=8,
    )
    theta_I = gen_ensemble(params).theta_I
    Q, _ = np.linalg.qr(np.random.default_rng(9).standard_normal((64, 64)))

    assert averaging_noise(Q, theta_I) == pytest.approx(2.0 / math.sqrt(16))


def test_averaging_noise_of_identical_copies() -> None:
    Phi = np.random.default_rng(3).standard_normal((12, 30))
    theta = np.random.default_rng(4).standard_normal(30)
    copies = np.tile(theta, (5, 1))
    assert averaging_noise(Phi, copies) == pytest.approx(np.linalg.norm(Phi @ theta))


def test_averaging_noise_shape_check() -> None:
    with pytest.raises(DimensionMismatchError):
        averaging_noise(np.eye(4), np.zeros((2, 5)))


def test_rate_accounting() -> None:
    report = rate_accounting(RateBudget(J=4, m=10, R=4, m1=20, R1=8))
    assert report.total_bits == 3 * 10 * 4 + 20 * 8
    assert report.m_prime == pytest.approx(17.5)
    assert report.delta_m == pytest.approx(report.m_prime - 10)


def test_rate_accounting_without_extra_side_information() -> None:
    report = rate_accounting(RateBudget(J=5, m=12, R=6, m1=12, R1=6))
    assert report.m_prime == pytest.approx(12.0)
    assert report.delta_m == 0.0


@pytest.mark.parametrize("field", ["J", "m", "R", "m1", "R1"])
def test_rate_budget_rejects_non_positive(field: str) -> None:
    values = {"J": 4, "m": 10, "R": 4, "m1": 20, "R1": 8, field: 0}
    with pytest.raises(InvalidParamsError):
        RateBudget(**values)


def test_default_side_information_budget() -> None:
    jsm1 = default_si_budget(JsmModel.jsm1(20), k_I=5, n=256, J=10, m=40, R=4)
    assert (jsm1.m1, jsm1.R1) == (125, 8)
    assert default_si_budget(JsmModel.jsm1(60), 10, 256, 10, 40, 4).m1 == 256
    assert default_si_budget(JsmModel.jsm3(), 5, 50, 10, 20, 4, R1=12).m1 == 50


def test_doi_gain_rule_of_thumb() -> None:
    assert doi_gain_expected(20, 5)
    assert doi_gain_expected(10, 5)
    assert not doi_gain_expected(4, 5)
