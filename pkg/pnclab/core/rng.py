"""Seeded random streams.

Every channel instance and every Monte Carlo trial draws from its own
numpy Generator, derived from the experiment seed and a path of integers
(grid index, strategy index, trial index, ...). The same path always yields
the same stream, so results do not depend on worker count or completion order.
"""

from typing import Sequence

import numpy as np


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """Return the Generator for `(seed, *path)`."""
    entropy: Sequence[int] = [int(seed), *[int(p) for p in path]]
    if any(e < 0 for e in entropy):
        raise ValueError(f"seed path must be non-negative: {entropy}")
    return np.random.default_rng(np.random.SeedSequence(entropy))


def trial_rng(seed: int, trial_index: int, *prefix: int) -> np.random.Generator:
    """Split function (seed, trial index) -> stream used by the Monte Carlo loops."""
    return derive_rng(seed, *prefix, trial_index)
