"""Joint-sparse signal ensembles under the JSM-1 and JSM-3 correlation models.

Every node signal is the sum of a common component shared by all nodes and a
sparse innovation component of its own:

    theta_j = theta_C + theta_I[j]

Under JSM-1 the common component is k_C-sparse; under JSM-3 it is dense. The
sparsity basis is the identity, so signals and coefficients coincide.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from shared.logging import get_logger
from shared.types import Matrix, Seed, SupportPolicyName, Vector

from .errors import InvalidParamsError, NodeIndexError

logger = get_logger(__name__)


@dataclass(frozen=True)
class JsmModel:
    """Correlation model selector; ``k_C`` is only meaningful for JSM-1."""

    kind: Literal["jsm1", "jsm3"]
    k_C: int | None = None

    def __post_init__(self) -> None:
        if self.kind == "jsm1":
            if self.k_C is None or self.k_C < 0:
                raise InvalidParamsError(f"JSM-1 requires a common sparsity k_C >= 0, got {self.k_C}")
        elif self.k_C is not None:
            raise InvalidParamsError(f"JSM-3 has a dense common component, got k_C={self.k_C}")

    @classmethod
    def jsm1(cls, k_C: int) -> JsmModel:
        return cls("jsm1", k_C)

    @classmethod
    def jsm3(cls) -> JsmModel:
        return cls("jsm3")


@dataclass(frozen=True)
class NormPolicy:
    """How innovation amplitudes are normalized after drawing them."""

    kind: Literal["gaussian-amplitudes", "equal-norm"] = "gaussian-amplitudes"
    eta: float | None = None

    def __post_init__(self) -> None:
        if self.kind == "equal-norm":
            if self.eta is None or not self.eta > 0:
                raise InvalidParamsError(f"equal-norm requires eta > 0, got {self.eta}")
        elif self.eta is not None:
            raise InvalidParamsError("gaussian-amplitudes does not take an eta")

    @classmethod
    def gaussian(cls) -> NormPolicy:
        return cls()

    @classmethod
    def equal_norm(cls, eta: float) -> NormPolicy:
        return cls("equal-norm", eta)


@dataclass(frozen=True)
class EnsembleParams:
    """Everything needed to draw one ensemble; the draw is a pure function of these."""

    n: int
    J: int
    model: JsmModel
    k_I: int
    support_policy: SupportPolicyName = "independent-uniform"
    norm_policy: NormPolicy = NormPolicy()
    seed: Seed = 0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InvalidParamsError(f"signal length must be positive, got n={self.n}")
        if self.J < 2:
            raise InvalidParamsError(f"an ensemble needs at least two nodes, got J={self.J}")
        if not 0 <= self.k_I <= self.n:
            raise InvalidParamsError(f"innovation sparsity k_I={self.k_I} outside [0, n={self.n}]")
        if self.model.k_C is not None and self.model.k_C > self.n:
            raise InvalidParamsError(f"common sparsity k_C={self.model.k_C} exceeds n={self.n}")
        if self.support_policy == "disjoint-innovations" and self.J * self.k_I > self.n:
            raise InvalidParamsError(
                f"disjoint innovations need J*k_I <= n, got {self.J}*{self.k_I} > {self.n}"
            )
        if self.norm_policy.kind == "equal-norm" and self.k_I == 0:
            raise InvalidParamsError("equal-norm innovations need k_I >= 1")
        if not 0 <= self.seed < 2**64:
            raise InvalidParamsError(f"seed must fit in 64 bits, got {self.seed}")


@dataclass(frozen=True)
class SignalEnsemble:
    """A drawn ensemble. ``theta_I`` is a (J, n) array; row 0 is node 1."""

    params: EnsembleParams
    theta_C: Vector
    theta_I: Matrix

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def J(self) -> int:
        return self.params.J

    @property
    def signals(self) -> Matrix:
        """All composed node signals as a (J, n) array."""
        return self.theta_C[np.newaxis, :] + self.theta_I


def gen_ensemble(params: EnsembleParams) -> SignalEnsemble:
    """Draw a joint-sparse ensemble deterministically from ``params.seed``.

    Supports are drawn uniformly without replacement and nonzero amplitudes are
    i.i.d. standard Gaussian. Under equal-norm each innovation is rescaled to
    l2 norm eta. Under JSM-3 the common component is a dense Gaussian vector.
    """
    rng = np.random.default_rng(params.seed)
    n, J, k_I = params.n, params.J, params.k_I

    theta_C = np.zeros(n)
    if params.model.kind == "jsm3":
        theta_C = rng.standard_normal(n)
    elif params.model.k_C:
        support = rng.choice(n, size=params.model.k_C, replace=False)
        theta_C[support] = rng.standard_normal(params.model.k_C)

    theta_I = np.zeros((J, n))
    if k_I > 0:
        if params.support_policy == "disjoint-innovations":
            supports = rng.permutation(n)[: J * k_I].reshape(J, k_I)
        else:
            supports = np.stack([rng.choice(n, size=k_I, replace=False) for _ in range(J)])
        amplitudes = rng.standard_normal((J, k_I))
        if params.norm_policy.kind == "equal-norm":
            assert params.norm_policy.eta is not None
            amplitudes *= params.norm_policy.eta / np.linalg.norm(amplitudes, axis=1, keepdims=True)
        np.put_along_axis(theta_I, supports, amplitudes, axis=1)

    logger.debug(
        "Generated ensemble",
        model=params.model.kind,
        n=n,
        J=J,
        k_I=k_I,
        support_policy=params.support_policy,
        seed=params.seed,
    )
    return SignalEnsemble(params=params, theta_C=theta_C, theta_I=theta_I)


def node_signal(ensemble: SignalEnsemble, j: int) -> Vector:
    """Return theta_C + theta_I[j] for the 1-based node index ``j``."""
    if not 1 <= j <= ensemble.J:
        raise NodeIndexError(f"node index {j} outside 1..{ensemble.J}")
    signal: Vector = ensemble.theta_C + ensemble.theta_I[j - 1]
    return signal
