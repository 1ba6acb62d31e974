"""Counter-based random streams.

Every draw in the package comes from a Philox generator whose key is derived
from ``(seed, purpose, *indices)``. A datapoint's perturbations therefore do
not depend on batch layout, partitioning or evaluation order.
"""

from enum import IntEnum

import numpy as np


class Purpose(IntEnum):
    EVAL_PERTURB = 1
    TRAIN_PERTURB = 2
    TRAIN_SHUFFLE = 3
    PGD_START = 4
    PGD_TRAIN_START = 5
    SNAPSHOT = 6
    INIT = 7
    DATA = 8
    POINTWISE = 9


def branch(seed: int, purpose: int, *indices: int) -> np.random.Generator:
    """Independent generator for the stream addressed by ``(seed, purpose, *indices)``."""
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(purpose), *map(int, indices)))
    key = ss.generate_state(2, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def point_streams(seed: int, purpose: int, indices, *prefix: int):
    """One generator per datapoint index, addressed by ``(seed, purpose, *prefix, index)``."""
    return [branch(seed, purpose, *prefix, int(i)) for i in indices]
