"""Counter-based pseudo-random primitives.

Every draw is a pure function of (seed, counter), so sample i of a stream
can be regenerated without replaying samples 0..i-1 and block generation
is trivially parallel. The mixer is SplitMix64 (Vigna's finalizer over the
Weyl sequence seed + (i+1)*GOLDEN), fixed here so that regression values
stay reproducible across platforms and reimplementations.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_SEED_STEP = 0xD2B74407B1CE6E93


def mix64(x: int) -> int:
    """SplitMix64 finalizer on a 64-bit word."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * _MIX1) & MASK64
    x = ((x ^ (x >> 27)) * _MIX2) & MASK64
    return x ^ (x >> 31)


def raw64(seed: int, counter: int) -> int:
    """The counter-th 64-bit word of the stream keyed by seed."""
    return mix64((seed + (counter + 1) * GOLDEN) & MASK64)


def uniform01(seed: int, counter: int) -> float:
    """Deterministic uniform double in the open interval (0, 1)."""
    return ((raw64(seed, counter) >> 11) + 0.5) * 2.0**-53


def derive_seed(base_seed: int, index: int) -> int:
    """Per-trial seed from (base_seed, trial index); documented mixing
    function so parallel schedules reproduce serial runs."""
    return mix64((base_seed + (index + 1) * _SEED_STEP) & MASK64)


def raw64_block(seed: int, start: int, count: int) -> np.ndarray:
    """Vectorized raw64 for counters start..start+count-1 (uint64 array)."""
    c = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    x = np.uint64(seed & MASK64) + c * np.uint64(GOLDEN)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(_MIX1)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(_MIX2)
    return x ^ (x >> np.uint64(31))


def uniform01_block(seed: int, start: int, count: int) -> np.ndarray:
    """Vectorized uniform01; bit-identical to the scalar path."""
    bits = raw64_block(seed, start, count) >> np.uint64(11)
    return (bits.astype(np.float64) + 0.5) * 2.0**-53
