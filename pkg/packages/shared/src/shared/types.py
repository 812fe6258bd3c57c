"""Common type definitions shared by the numerical library and the harness."""

from typing import Literal, TypeAlias

import numpy as np
import numpy.typing as npt

# Real vectors and matrices. Node-indexed stacks are (J, n) or (J, m) arrays.
Vector: TypeAlias = npt.NDArray[np.float64]
Matrix: TypeAlias = npt.NDArray[np.float64]
Codes: TypeAlias = npt.NDArray[np.int64]
Counts: TypeAlias = npt.NDArray[np.int64]
Flags: TypeAlias = npt.NDArray[np.bool_]

# 64-bit seeds accepted by numpy.random.default_rng
Seed: TypeAlias = int

AlgorithmName: TypeAlias = Literal["separate", "doi", "texas_doi", "texas_holdem", "tecc"]
ALGORITHM_NAMES: tuple[AlgorithmName, ...] = (
    "separate",
    "doi",
    "texas_doi",
    "texas_holdem",
    "tecc",
)

SupportPolicyName: TypeAlias = Literal["independent-uniform", "disjoint-innovations"]
