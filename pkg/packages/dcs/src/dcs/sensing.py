"""Random sensing matrices, measurements, scalar quantization and empirical RIP estimates."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from shared.logging import get_logger
from shared.types import Codes, Matrix, Seed, Vector

from .errors import (
    DimensionMismatchError,
    InvalidParamsError,
    UnwritablePathError,
)
from .model import SignalEnsemble

logger = get_logger(__name__)

MAX_RATE = 32
# RIP constants live in [0, 1); larger empirical values are reported as this ceiling
RIP_CEILING = float(np.nextafter(1.0, 0.0))
_HEADER_DTYPE = np.dtype([("m", "<u4"), ("J", "<u4"), ("R", "<u4"), ("S", "<f8")])


@dataclass(frozen=True)
class SensingMatrix:
    """An m x n Gaussian matrix with unit-norm columns (A = Phi, Psi = identity)."""

    entries: Matrix
    seed: Seed

    @property
    def m(self) -> int:
        return int(self.entries.shape[0])

    @property
    def n(self) -> int:
        return int(self.entries.shape[1])


def gen_matrix(m: int, n: int, seed: Seed) -> SensingMatrix:
    """Draw i.i.d. standard Gaussian entries and normalize every column to unit l2 norm."""
    if m < 1 or n < 1:
        raise InvalidParamsError(f"sensing matrix needs m >= 1 and n >= 1, got {m}x{n}")
    rng = np.random.default_rng(seed)
    entries = rng.standard_normal((m, n))
    entries /= np.linalg.norm(entries, axis=0, keepdims=True)
    return SensingMatrix(entries=entries, seed=seed)


def gen_node_matrices(m: int, n: int, seeds: Sequence[Seed]) -> list[SensingMatrix]:
    """One matrix per node, as required when nodes must not share a sensing operator."""
    return [gen_matrix(m, n, seed) for seed in seeds]


def as_array(A: SensingMatrix | Matrix) -> Matrix:
    """Accept either a SensingMatrix or a bare 2-D array."""
    entries = A.entries if isinstance(A, SensingMatrix) else np.asarray(A, dtype=float)
    if entries.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-D matrix, got shape {entries.shape}")
    return entries


def measure(Phi: SensingMatrix | Matrix, x: Vector) -> Vector:
    """Exact matrix-vector product y = Phi x."""
    entries = as_array(Phi)
    x = np.asarray(x, dtype=float)
    if x.shape != (entries.shape[1],):
        raise DimensionMismatchError(
            f"signal of shape {x.shape} does not match a {entries.shape[0]}x{entries.shape[1]} matrix"
        )
    y: Vector = entries @ x
    return y


@dataclass(frozen=True)
class Quantizer:
    """Uniform midrise quantizer with 2**R levels over [-S, S]."""

    R: int
    scale: float

    def __post_init__(self) -> None:
        if not 1 <= self.R <= MAX_RATE:
            raise InvalidParamsError(f"rate must be in 1..{MAX_RATE} bits, got R={self.R}")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise InvalidParamsError(f"quantizer scale must be positive, got S={self.scale}")

    @property
    def levels(self) -> int:
        return 1 << self.R

    @property
    def step(self) -> float:
        return 2.0 * self.scale / self.levels

    @classmethod
    def for_measurements(cls, values: Matrix | Vector, R: int) -> Quantizer:
        """Shared-max policy: S is the largest magnitude over all nodes' measurements.

        An all-zero measurement set falls back to S = 1.
        """
        peak = float(np.max(np.abs(values))) if np.size(values) else 0.0
        return cls(R=R, scale=peak if peak > 0 else 1.0)


def quantize(y: Vector | Matrix, q: Quantizer) -> tuple[Codes, Quantizer]:
    """Map values to integer codes; values outside [-S, S] saturate at the extreme codes."""
    y = np.asarray(y, dtype=float)
    codes = np.floor((y + q.scale) / q.step)
    return np.clip(codes, 0, q.levels - 1).astype(np.int64), q


def dequantize(codes: Codes, q: Quantizer) -> Vector | Matrix:
    """Reconstruction levels at the centre of each cell: -S + (c + 1/2) * step."""
    values: Vector = -q.scale + (np.asarray(codes, dtype=float) + 0.5) * q.step
    return values


@dataclass(frozen=True)
class MeasurementSet:
    """The J measurement vectors as a (J, m) array; row 0 belongs to node 1.

    When quantized, ``y`` holds the dequantized values and ``codes`` the integer codes.
    ``si_quantizer`` is set when node 1 was quantized at its own rate.
    """

    y: Matrix
    quantized: bool = False
    quantizer: Quantizer | None = None
    codes: Codes | None = None
    si_quantizer: Quantizer | None = None

    def __post_init__(self) -> None:
        if self.y.ndim != 2:
            raise DimensionMismatchError(f"measurements must be a (J, m) array, got {self.y.shape}")
        if self.quantized and self.quantizer is None:
            raise InvalidParamsError("a quantized measurement set needs its quantizer")

    @property
    def J(self) -> int:
        return int(self.y.shape[0])

    @property
    def m(self) -> int:
        return int(self.y.shape[1])

    @property
    def node_quantizers(self) -> list[Quantizer | None]:
        """Quantizer applied to each node, node 1 first."""
        if not self.quantized:
            return [None] * self.J
        first = self.si_quantizer or self.quantizer
        return [first] + [self.quantizer] * (self.J - 1)


def measure_ensemble(Phi: SensingMatrix, ensemble: SignalEnsemble) -> MeasurementSet:
    """Measure every node with one shared matrix."""
    if Phi.n != ensemble.n:
        raise DimensionMismatchError(f"matrix has {Phi.n} columns, signals have length {ensemble.n}")
    return MeasurementSet(y=ensemble.signals @ Phi.entries.T)


def measure_ensemble_per_node(
    matrices: Sequence[SensingMatrix], ensemble: SignalEnsemble
) -> MeasurementSet:
    """Measure node j with matrices[j - 1]."""
    if len(matrices) != ensemble.J:
        raise DimensionMismatchError(f"{len(matrices)} matrices for {ensemble.J} nodes")
    signals = ensemble.signals
    return MeasurementSet(y=np.stack([measure(Phi, x) for Phi, x in zip(matrices, signals)]))


def quantize_measurements(
    measurements: MeasurementSet, R: int, si_R: int | None = None
) -> MeasurementSet:
    """Quantize all nodes at R bits with one shared scale; node 1 at ``si_R`` when given."""
    q = Quantizer.for_measurements(measurements.y, R)
    codes, _ = quantize(measurements.y, q)
    y = np.asarray(dequantize(codes, q))
    si_q = None
    if si_R is not None and si_R != R:
        si_q = Quantizer(R=si_R, scale=q.scale)
        codes[0], _ = quantize(measurements.y[0], si_q)
        y[0] = dequantize(codes[0], si_q)
    return MeasurementSet(y=y, quantized=True, quantizer=q, codes=codes, si_quantizer=si_q)


def write_codes(path: str | Path, codes: Codes, q: Quantizer) -> Path:
    """Write a (J, m) code array in the quantized measurement file format.

    Header: m, J, R as little-endian uint32 and S as little-endian float64, then
    J*m codes of ceil(R/8) little-endian bytes each, node by node.
    """
    codes = np.atleast_2d(np.asarray(codes, dtype=np.int64))
    if np.any(codes < 0) or np.any(codes >= q.levels):
        raise InvalidParamsError(f"codes outside 0..{q.levels - 1} for R={q.R}")
    J, m = codes.shape
    width = math.ceil(q.R / 8)
    header = np.array([(m, J, q.R, q.scale)], dtype=_HEADER_DTYPE)
    payload = codes.astype("<u8").reshape(-1, 1).view(np.uint8)[:, :width]
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(header.tobytes() + payload.tobytes())
    except OSError as exc:
        raise UnwritablePathError(f"cannot write measurement codes to {path}: {exc}") from exc
    logger.debug("Wrote measurement codes", path=str(path), J=J, m=m, R=q.R)
    return path


def read_codes(path: str | Path) -> tuple[Codes, Quantizer]:
    """Inverse of :func:`write_codes`."""
    raw = Path(path).read_bytes()
    header = np.frombuffer(raw, dtype=_HEADER_DTYPE, count=1)[0]
    m, J, R, S = int(header["m"]), int(header["J"]), int(header["R"]), float(header["S"])
    q = Quantizer(R=R, scale=S)
    width = math.ceil(R / 8)
    body = np.frombuffer(raw, dtype=np.uint8, offset=_HEADER_DTYPE.itemsize)
    if body.size != J * m * width:
        raise DimensionMismatchError(f"{path} holds {body.size} code bytes, expected {J * m * width}")
    padded = np.zeros((J * m, 8), dtype=np.uint8)
    padded[:, :width] = body.reshape(-1, width)
    codes = padded.view("<u8").reshape(J, m).astype(np.int64)
    return codes, q


def estimate_rip(
    A: SensingMatrix | Matrix,
    k: int,
    samples: int,
    seed: Seed,
    mode: Literal["vectors", "supports"] = "vectors",
) -> float:
    """Empirical lower bound on the RIP constant delta_k of ``A``.

    ``vectors`` takes the largest |‖A theta‖² - 1| over random unit-norm k-sparse
    theta; ``supports`` takes, for each random support S, the extreme eigenvalues
    of A_S^T A_S. Samples are drawn one at a time from a single stream, so for a
    fixed seed the estimate never decreases as ``samples`` grows.

    A matrix with no restricted isometry at order k (an observed distortion of 1
    or more) saturates at :data:`RIP_CEILING`.
    """
    entries = as_array(A)
    n = entries.shape[1]
    if not 1 <= k <= n:
        raise InvalidParamsError(f"sparsity k={k} outside 1..{n}")
    if samples < 1:
        raise InvalidParamsError(f"need at least one sample, got {samples}")

    rng = np.random.default_rng(seed)
    delta = 0.0
    for _ in range(samples):
        support = rng.choice(n, size=k, replace=False)
        columns = entries[:, support]
        if mode == "supports":
            eigenvalues = np.linalg.eigvalsh(columns.T @ columns)
            worst = max(eigenvalues[-1] - 1.0, 1.0 - eigenvalues[0])
        else:
            theta = rng.standard_normal(k)
            theta /= np.linalg.norm(theta)
            worst = abs(float(np.sum((columns @ theta) ** 2)) - 1.0)
        delta = max(delta, float(worst))
    if delta >= RIP_CEILING:
        logger.info("RIP estimate saturated", k=k, samples=samples, mode=mode, observed=delta)
        return RIP_CEILING
    logger.debug("Estimated RIP constant", k=k, samples=samples, mode=mode, delta=delta)
    return delta

