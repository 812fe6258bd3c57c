"""Built-in acceptance suite run by ``dcs-lab verify``.

Each check draws its own seeded instances and returns a :class:`CheckResult`.
The bound check only asserts on trials whose RIP estimate lies in delta < sqrt(2) - 1
and reports ``inconclusive`` when none does: the stability constant is undefined there.
"""

from __future__ import annotations

import math
import tempfile
import time
from collections import defaultdict
from collections.abc import Callable, Iterable
from dataclasses import dataclass, replace
from functools import cache
from pathlib import Path
from typing import Literal

import numpy as np

from dcs.analysis import (
    BoundInputs,
    RateBudget,
    averaging_noise,
    ensemble_mse,
    rate_accounting,
    relative_errors,
)
from dcs.errors import DcsError
from dcs.model import EnsembleParams, JsmModel, NormPolicy, gen_ensemble
from dcs.recovery import SideInformation, inner_epsilon, recover_doi, recover_texas_doi
from dcs.sensing import SensingMatrix, estimate_rip, gen_matrix, measure_ensemble
from dcs.solver import BpdnSolver, l0_oracle, solve_bpdn
from shared.logging import get_logger
from shared.types import Matrix, SupportPolicyName

from .runner import run_experiment
from .utils.nodes import derive_seeds
from .utils.state import ExperimentConfig, ResultRow
from .utils.tools import export_csv, trial_seed

logger = get_logger(__name__)

CheckStatus = Literal["passed", "failed", "inconclusive"]

FLOOR_J_VALUES = (8, 32, 128)


@dataclass(frozen=True)
class CheckResult:
    number: int
    name: str
    status: CheckStatus
    detail: str
    seconds: float = 0.0


@dataclass(frozen=True)
class SuiteOptions:
    quick: bool = False
    threads: int = 1
    base_seed: int = 20100

    def count(self, full: int, quick: int) -> int:
        return quick if self.quick else full


def _status(ok: bool) -> CheckStatus:
    return "passed" if ok else "failed"


def _mean_mse(rows: Iterable[ResultRow]) -> dict[str, float]:
    grouped: dict[str, list[float]] = defaultdict(list)
    for row in rows:
        grouped[row.algorithm].append(row.mse)
    return {name: float(np.mean(values)) for name, values in grouped.items()}


def _format(values: dict[str, float]) -> str:
    return ", ".join(f"{name}={value:.3e}" for name, value in values.items())


def check_doi_exactness(opts: SuiteOptions) -> CheckResult:
    m, trials = 24, opts.count(100, 20)
    params = EnsembleParams(
        n=64, J=4, model=JsmModel.jsm1(8), k_I=2, support_policy="disjoint-innovations"
    )
    exact = 0
    for t in range(trials):
        seeds = derive_seeds(trial_seed(opts.base_seed, t, m), params.J)
        ensemble = gen_ensemble(replace(params, seed=seeds["ensemble"]))
        Phi = gen_matrix(m, params.n, seeds["matrix"])
        ms = measure_ensemble(Phi, ensemble)
        si = SideInformation.from_measurements(ensemble.signals[0], ms)
        recovery = recover_doi(Phi, ms, si, 0.0)
        exact += bool(np.max(relative_errors(recovery, ensemble)) <= 1e-5)
    fraction = exact / trials
    return CheckResult(
        1,
        "DOI exactness",
        _status(fraction >= 0.95),
        f"{exact}/{trials} trials recovered every node to relative error <= 1e-5",
    )


@dataclass(frozen=True)
class FloorTrial:
    rmse: float
    node_errors: Matrix
    matrix: SensingMatrix


@cache
def _texas_doi_floor_runs(quick: bool, base_seed: int) -> dict[int, list[FloorTrial]]:
    """Texas DOI at m = 80 for each J; shared by the floor-scaling and bound checks."""
    n, m, k_C, k_I, eta = 128, 80, 10, 2, 1.0
    trials = 10 if quick else 50
    rip_samples = 200 if quick else 1000
    runs: dict[int, list[FloorTrial]] = {}
    for J in FLOOR_J_VALUES:
        # disjoint supports stop fitting once J * k_I exceeds n
        policy: SupportPolicyName = (
            "disjoint-innovations" if J * k_I <= n else "independent-uniform"
        )
        params = EnsembleParams(
            n=n,
            J=J,
            model=JsmModel.jsm1(k_C),
            k_I=k_I,
            support_policy=policy,
            norm_policy=NormPolicy.equal_norm(eta),
        )
        outcomes = []
        for t in range(trials):
            seeds = derive_seeds(trial_seed(base_seed, t, J), J)
            ensemble = gen_ensemble(replace(params, seed=seeds["ensemble"]))
            Phi = gen_matrix(m, n, seeds["matrix"])
            ms = measure_ensemble(Phi, ensemble)
            delta = estimate_rip(Phi, min(n, J * k_I), rip_samples, seeds["rip"])
            recovery = recover_texas_doi(
                Phi,
                ms,
                SideInformation.from_measurements(ensemble.signals[0], ms),
                inner_epsilon(delta, eta, J),
                solver=BpdnSolver(Phi),
            )
            errors = np.linalg.norm(recovery.theta_hat[1:] - ensemble.signals[1:], axis=1)
            outcomes.append(
                FloorTrial(
                    rmse=math.sqrt(ensemble_mse(recovery, ensemble)),
                    node_errors=errors,
                    matrix=Phi,
                )
            )
        runs[J] = outcomes
        logger.debug("Finished floor run", J=J, trials=trials, support_policy=policy)
    return runs


def check_floor_scaling(opts: SuiteOptions) -> CheckResult:
    runs = _texas_doi_floor_runs(opts.quick, opts.base_seed)
    means = [float(np.mean([trial.rmse for trial in runs[J]])) for J in FLOOR_J_VALUES]
    ratios = [later / earlier for earlier, later in zip(means, means[1:])]
    ok = all(0.35 <= ratio <= 0.72 for ratio in ratios)
    detail = "mean RMSE " + ", ".join(
        f"J={J}: {value:.3e}" for J, value in zip(FLOOR_J_VALUES, means)
    )
    detail += "; ratios " + ", ".join(f"{ratio:.3f}" for ratio in ratios)
    return CheckResult(2, "Texas DOI floor scaling", _status(ok), detail)


def check_floor_bound(opts: SuiteOptions) -> CheckResult:
    runs = _texas_doi_floor_runs(opts.quick, opts.base_seed)
    k, eta = 10 + 2 * 2, 1.0
    samples = opts.count(10_000, 1000)
    within = total = in_regime = trials = 0
    worst_delta = 0.0
    for J in FLOOR_J_VALUES:
        for t, trial in enumerate(runs[J]):
            trials += 1
            delta = estimate_rip(trial.matrix, k, samples, trial_seed(opts.base_seed, t, k))
            inputs = BoundInputs.from_rip_estimate(delta, J, eta)
            if not inputs.valid:
                worst_delta = max(worst_delta, delta)
                continue
            in_regime += 1
            within += int(np.sum(trial.node_errors <= inputs.texas_doi_floor()))
            total += trial.node_errors.size

    coverage = f"{in_regime}/{trials} trials with delta_{k} < sqrt(2) - 1"
    if in_regime == 0:
        return CheckResult(
            3,
            "Texas DOI error bound",
            "inconclusive",
            f"{coverage} (largest estimate {worst_delta:.3f}); "
            "the BPDN constant is undefined for every matrix",
        )
    fraction = within / total
    return CheckResult(
        3,
        "Texas DOI error bound",
        _status(fraction >= 0.99),
        f"{within}/{total} node-trials within the bound ({fraction:.1%}); {coverage}",
    )


def ordering_config(opts: SuiteOptions) -> ExperimentConfig:
    return ExperimentConfig(
        name="low-m-ordering",
        model="jsm1",
        n=256,
        J=100,
        k_C=20,
        k_I=5,
        m_values=[40],
        R=8,
        trials=opts.count(20, 3),
        base_seed=opts.base_seed,
        algorithms=["separate", "doi", "texas_doi", "texas_holdem"],
    )


def check_low_m_ordering(opts: SuiteOptions) -> CheckResult:
    mse = _mean_mse(run_experiment(ordering_config(opts), threads=opts.threads))
    ok = (
        mse["texas_doi"] < mse["doi"] < mse["separate"]
        and mse["texas_doi"] < mse["texas_holdem"]
    )
    return CheckResult(4, "Low-m ordering", _status(ok), f"mean MSE {_format(mse)}")


def check_jsm3_versus_tecc(opts: SuiteOptions) -> CheckResult:
    config = ExperimentConfig(
        name="jsm3-versus-tecc",
        model="jsm3",
        n=64,
        J=20,
        k_I=4,
        m_values=[24],
        R=8,
        trials=opts.count(20, 5),
        base_seed=opts.base_seed,
        algorithms=["doi", "texas_doi", "tecc"],
    )
    mse = _mean_mse(run_experiment(config, threads=opts.threads))
    ok = mse["doi"] < mse["tecc"] and mse["texas_doi"] < mse["tecc"]
    return CheckResult(5, "JSM-3 versus TECC", _status(ok), f"mean MSE {_format(mse)}")


def check_rate_accounting(opts: SuiteOptions) -> CheckResult:
    report = rate_accounting(RateBudget(J=100, m=40, R=8, m1=125, R1=8))
    ok = (
        report.total_bits == 32680
        and abs(report.m_prime - 40.85) <= 1e-12
        and abs(report.delta_m - 0.85) <= 1e-12
    )
    return CheckResult(
        6,
        "Rate accounting",
        _status(ok),
        f"total_bits={report.total_bits}, m'={report.m_prime!r}, delta_m={report.delta_m!r}",
    )


def check_oracle_equivalence(opts: SuiteOptions) -> CheckResult:
    n, m, instances = 10, 7, opts.count(200, 50)
    matched = 0
    for i in range(instances):
        seeds = derive_seeds(trial_seed(opts.base_seed, i, m), 1)
        A = gen_matrix(m, n, seeds["matrix"])
        rng = np.random.default_rng(seeds["ensemble"])
        theta = np.zeros(n)
        theta[rng.integers(n)] = rng.standard_normal()
        y = A.entries @ theta
        basis_pursuit = solve_bpdn(A, y).theta_hat
        oracle = l0_oracle(A, y, k_max=1)
        support = np.flatnonzero(np.abs(basis_pursuit) > 1e-6)
        if np.array_equal(support, np.flatnonzero(oracle)) and np.allclose(
            basis_pursuit[support], oracle[support], rtol=0, atol=1e-4
        ):
            matched += 1
    return CheckResult(
        7,
        "Solver oracle equivalence",
        _status(matched / instances >= 0.95),
        f"{matched}/{instances} instances matched the l0 oracle",
    )


def check_averaging_noise(opts: SuiteOptions) -> CheckResult:
    n, m, J, k_I, eta = 128, 80, 64, 2, 1.0
    draws, samples = opts.count(200, 50), opts.count(1000, 200)
    params = EnsembleParams(
        n=n,
        J=J,
        model=JsmModel.jsm1(0),
        k_I=k_I,
        support_policy="disjoint-innovations",
        norm_policy=NormPolicy.equal_norm(eta),
    )
    within = 0
    for d in range(draws):
        seeds = derive_seeds(trial_seed(opts.base_seed, d, m), J)
        ensemble = gen_ensemble(replace(params, seed=seeds["ensemble"]))
        Phi = gen_matrix(m, n, seeds["matrix"])
        delta = estimate_rip(Phi, min(n, J * k_I), samples, seeds["rip"])
        noise = averaging_noise(Phi, ensemble.theta_I)
        within += noise <= math.sqrt(1.0 + delta) * eta / math.sqrt(J)
    return CheckResult(
        8,
        "Averaging-noise bound",
        _status(within / draws >= 0.95),
        f"{within}/{draws} draws within sqrt(1 + delta) * eta / sqrt(J)",
    )


def check_determinism(opts: SuiteOptions) -> CheckResult:
    config = ordering_config(opts)
    with tempfile.TemporaryDirectory() as tmp:
        paths = []
        for attempt in range(2):
            rows = run_experiment(config, threads=opts.threads)
            paths.append(export_csv(rows, Path(tmp) / f"run{attempt}.csv", deterministic=True))
        identical = paths[0].read_bytes() == paths[1].read_bytes()
    return CheckResult(
        9,
        "Determinism",
        _status(identical),
        "repeated runs produced identical CSVs" if identical else "CSVs differ between runs",
    )


CHECKS: dict[int, Callable[[SuiteOptions], CheckResult]] = {
    1: check_doi_exactness,
    2: check_floor_scaling,
    3: check_floor_bound,
    4: check_low_m_ordering,
    5: check_jsm3_versus_tecc,
    6: check_rate_accounting,
    7: check_oracle_equivalence,
    8: check_averaging_noise,
    9: check_determinism,
}


def run_acceptance(
    opts: SuiteOptions, only: Iterable[int] | None = None
) -> list[CheckResult]:
    """Run the selected checks in order; a library error inside a check fails only that check."""
    selected = sorted(set(only)) if only else sorted(CHECKS)
    results = []
    for number in selected:
        check = CHECKS[number]
        start = time.perf_counter()
        try:
            result = check(opts)
        except DcsError as exc:
            result = CheckResult(number, check.__name__, "failed", f"error: {exc}")
        result = replace(result, seconds=time.perf_counter() - start)
        log = logger.info if result.status != "failed" else logger.error
        log(
            "Acceptance check finished",
            check=number,
            status=result.status,
            seconds=round(result.seconds, 2),
        )
        results.append(result)
    return results
