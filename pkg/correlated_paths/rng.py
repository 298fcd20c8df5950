"""Counter-based random streams.

Every random draw in the package comes from :func:`substream`. The generator is numpy's
Philox-4x64 keyed by ``SeedSequence(seed)``; the three upper counter words hold the stream
indices (for example cell, stream and trial) and the lowest word is the running counter.
Two calls with the same seed and indices therefore yield the same numbers on every
platform, whichever worker makes them.
"""

import functools

import numpy as np

from correlated_paths.exceptions import DomainError

MAX_INDICES = 3


@functools.lru_cache(maxsize=128)
def _philox_key(seed):
    """Derive the 128-bit Philox key for a master seed."""
    return np.random.SeedSequence(seed).generate_state(2, dtype=np.uint64)


def substream(seed, *indices):
    """Return the generator for ``(seed, *indices)``.

    Missing trailing indices are zero, so ``substream(s, 4)`` and ``substream(s, 4, 0)`` are the
    same stream.

    Args:
        seed (int): Master seed, non-negative.
        *indices (int): Up to three non-negative stream indices.

    Returns:
        numpy.random.Generator: A fresh generator positioned at the start of the stream.
    """
    if seed < 0:
        raise DomainError(f"Seed must be non-negative, got {seed}")
    if len(indices) > MAX_INDICES:
        raise DomainError(f"At most {MAX_INDICES} stream indices are supported, got {len(indices)}")
    if any(index < 0 for index in indices):
        raise DomainError(f"Stream indices must be non-negative, got {indices}")
    counter = [0, *indices] + [0] * (MAX_INDICES - len(indices))
    bit_generator = np.random.Philox(counter=np.array(counter, dtype=np.uint64), key=_philox_key(int(seed)))
    return np.random.Generator(bit_generator)


# First stream index: names the consumer. Consumers never share a stream.
STREAM_SIMULATION = 1
STREAM_PRIOR = 2
STREAM_PANEL = 3
STREAM_BOOTSTRAP = 4
STREAM_CALIBRATION = 5
STREAM_BAYES_RISK = 6


def trial_index(stream, trial):
    """Pack a (stream, trial) pair into one counter word."""
    if not (0 <= stream < 2**32 and 0 <= trial < 2**32):
        raise DomainError(f"Stream {stream} and trial {trial} must both lie in [0, 2**32)")
    return (stream << 32) | trial
