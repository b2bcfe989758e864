"""Reproducible counter-based random streams for trajectory sampling.

Each trial draws from its own Philox-4x64 stream keyed by
(seed, trial index), so parallel and serial runs produce bitwise
identical trajectories.  Uniforms come from the raw 64-bit output via a
fixed 53-bit shift; the construction is pinned by RNG_VERSION and must
not change within a version.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Philox

RNG_VERSION = "philox4x64:shift53:v1"

_INV_2_53 = float(2.0**-53)


def trial_uniforms(seed: int, trial: int, count: int) -> np.ndarray:
    """The first ``count`` uniforms in [0, 1) of the (seed, trial) stream."""
    bg = Philox(key=np.array([seed, trial], dtype=np.uint64))
    raw = bg.random_raw(count)
    return (raw >> np.uint64(11)).astype(np.float64) * _INV_2_53


def block_uniforms(seed: int, first_trial: int, trials: int, count: int) -> np.ndarray:
    """Uniform block of shape (trials, count); row i is trial first_trial + i."""
    out = np.empty((trials, count), dtype=np.float64)
    for i in range(trials):
        out[i] = trial_uniforms(seed, first_trial + i, count)
    return out
