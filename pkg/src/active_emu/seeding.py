"""Deterministic derivation of child seeds from a run seed.

Every stochastic component (hyperparameter search, acquisition optimizer,
samplers) receives a seed derived from the run seed plus a fixed integer
path, so repeated runs are reproducible bit for bit.
"""

from __future__ import annotations

import numpy as np


def derive_seed(*path: int) -> int:
    """Map an integer path to a stable 63-bit seed."""
    state = np.random.SeedSequence([int(p) & 0xFFFFFFFF for p in path]).generate_state(1, dtype=np.uint64)
    return int(state[0] >> 1)
