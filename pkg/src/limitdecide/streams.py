"""Seeded i.i.d. sample streams and deterministic bit sources.

Real-valued streams are counter-based: sample i is a pure function of
(spec, seed, i), so identical (spec, seed) pairs give bit-identical
sequences no matter how the stream is consumed. Normal variates use the
inverse-CDF transform (scipy.special.ndtri) on one uniform per sample;
this keeps sample i aligned with counter i for every distribution.

Target means are carried as exact rationals. Irrational targets are
represented by dyadic approximations whose absolute error is at most
2**-128 (far below any threshold reachable at desk-scale horizons);
``dyadic_sqrt`` builds these. The float64 used by the sampler is the
nearest double to that rational.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.special import ndtri

from . import rng

MEAN_ERROR_CAP = Fraction(1, 2**128)

DISTRIBUTIONS = ("normal", "uniform", "shifted-bernoulli", "discrete-pmf")


class StreamError(ValueError):
    """Invalid stream specification."""


class SourceExhausted(Exception):
    """A finite bit source was read past its last bit."""


def dyadic_sqrt(n: int, bits: int = 128) -> Fraction:
    """Dyadic approximation of sqrt(n) with absolute error <= 2**-bits."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    # floor(sqrt(n * 4**bits)) / 2**bits undershoots by < 2**-bits
    return Fraction(math.isqrt(n << (2 * bits)), 1 << bits)


def parse_mean(text: str) -> Fraction:
    """Mean syntax for config files: decimal, 'p/q', or 'sqrt:N'."""
    text = text.strip()
    if text.startswith("sqrt:"):
        return dyadic_sqrt(int(text[5:]))
    if "/" in text:
        num, den = text.split("/", 1)
        return Fraction(int(num), int(den))
    return Fraction(text)


@dataclass(frozen=True)
class StreamSpec:
    """An i.i.d. real source: distribution, exact target mean, variance, seed.

    ``mean`` is exact for the stated parameters; ``mean_error`` bounds the
    distance to the intended (possibly irrational) target and must not
    exceed 2**-128.
    """

    distribution: str
    params: tuple
    mean: Fraction
    variance: float
    seed: int
    mean_error: Fraction = Fraction(0)

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise StreamError(f"unknown distribution {self.distribution!r}")
        if not math.isfinite(self.variance) or self.variance < 0:
            raise StreamError(f"variance must be finite and >= 0, got {self.variance}")
        if not 0 <= self.seed < 2**64:
            raise StreamError("seed must be an unsigned 64-bit integer")
        if self.mean_error > MEAN_ERROR_CAP:
            raise StreamError("approximate mean error bound exceeds 2**-128")

    @staticmethod
    def normal(mean, variance: float, seed: int,
               mean_error: Fraction = Fraction(0)) -> "StreamSpec":
        mean = Fraction(mean)
        return StreamSpec("normal", (float(mean), float(variance)),
                          mean, float(variance), seed, mean_error)

    @staticmethod
    def uniform(low, high, seed: int) -> "StreamSpec":
        low_f, high_f = Fraction(low), Fraction(high)
        if not high_f > low_f:
            raise StreamError(f"uniform needs high > low, got [{low}, {high}]")
        mean = (low_f + high_f) / 2
        var = float((high_f - low_f) ** 2) / 12.0
        return StreamSpec("uniform", (float(low_f), float(high_f)), mean, var, seed)

    @staticmethod
    def shifted_bernoulli(p, shift, seed: int) -> "StreamSpec":
        p_f, shift_f = Fraction(p), Fraction(shift)
        if not 0 <= p_f <= 1:
            raise StreamError(f"p must lie in [0, 1], got {p}")
        mean = shift_f + p_f
        var = float(p_f * (1 - p_f))
        return StreamSpec("shifted-bernoulli", (float(p_f), float(shift_f)),
                          mean, var, seed)

    @staticmethod
    def discrete(values, probs, seed: int) -> "StreamSpec":
        if len(values) != len(probs) or not values:
            raise StreamError("discrete-pmf needs matching nonempty values/probs")
        probs_f = [Fraction(p) for p in probs]
        if any(p < 0 for p in probs_f) or sum(probs_f) != 1:
            raise StreamError("discrete-pmf probs must be nonnegative and sum to 1")
        values_f = [Fraction(v) for v in values]
        mean = sum(p * v for p, v in zip(probs_f, values_f))
        var = float(sum(p * (v - mean) ** 2 for p, v in zip(probs_f, values_f)))
        return StreamSpec("discrete-pmf",
                          (tuple(float(v) for v in values_f),
                           tuple(float(p) for p in probs_f)),
                          mean, var, seed)

    def sample_block(self, start: int, count: int) -> np.ndarray:
        """Samples at stream positions start..start+count-1."""
        u = rng.uniform01_block(self.seed, start, count)
        if self.distribution == "normal":
            mu, var = self.params
            return mu + math.sqrt(var) * ndtri(u)
        if self.distribution == "uniform":
            low, high = self.params
            return low + (high - low) * u
        if self.distribution == "shifted-bernoulli":
            p, shift = self.params
            return shift + (u < p).astype(np.float64)
        values, probs = self.params
        edges = np.cumsum(probs)
        idx = np.searchsorted(edges, u, side="right")
        idx = np.minimum(idx, len(values) - 1)  # guard float edge rounding
        return np.asarray(values)[idx]


_BLOCK = 4096


class StreamState:
    """Single-owner cursor over a StreamSpec's sample sequence."""

    def __init__(self, spec: StreamSpec, position: int = 0):
        self.spec = spec
        self.position = position
        self._buf = np.empty(0)
        self._buf_start = 0

    def next(self) -> float:
        i = self.position - self._buf_start
        if not 0 <= i < len(self._buf):
            self._buf_start = self.position
            self._buf = self.spec.sample_block(self.position, _BLOCK)
            i = 0
        self.position += 1
        return float(self._buf[i])

    def take(self, count: int) -> np.ndarray:
        out = self.spec.sample_block(self.position, count)
        self.position += count
        return out


def next_sample(state: StreamState) -> tuple[float, StreamState]:
    """Draw one sample and return the advanced state."""
    return state.next(), state


# ---------------------------------------------------------------------------
# Bit sources
# ---------------------------------------------------------------------------

def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


# Named decidable sets usable both as bit targets and as trivially
# limit-computable test sets.
CHARACTERISTIC_SETS = {
    "evens": lambda n: n % 2 == 0,
    "odds": lambda n: n % 2 == 1,
    "primes": _is_prime,
    "all": lambda n: True,
    "none": lambda n: False,
}


@dataclass(frozen=True)
class BitSource:
    """A deterministic bit sequence: file-backed, decidable, or the limit
    of a stored flip schedule (stand-in for a non-computable target)."""

    kind: str
    descriptor: object
    _bits: bytes | None = field(default=None, repr=False)

    @staticmethod
    def from_file(path: str | Path) -> "BitSource":
        data = Path(path).read_bytes()
        return BitSource("file-stream", str(path), data)

    @staticmethod
    def from_bytes(data: bytes) -> "BitSource":
        return BitSource("file-stream", "<bytes>", bytes(data))

    @staticmethod
    def computable(name: str) -> "BitSource":
        if name not in CHARACTERISTIC_SETS:
            raise KeyError(f"unknown computable set {name!r}")
        return BitSource("computable-set", name)

    @staticmethod
    def limit_process(schedule) -> "BitSource":
        """Bits of the limit of a flip schedule (delta2.FlipSchedule)."""
        return BitSource("limit-process", schedule)

    @property
    def length(self) -> int | None:
        """Number of available bits, or None if unbounded."""
        if self.kind == "file-stream":
            return 8 * len(self._bits)
        return None


def bit_at(source: BitSource, n: int) -> int:
    """Bit n of the source; pure in (source, n)."""
    if n < 0:
        raise ValueError("bit index must be nonnegative")
    if source.kind == "file-stream":
        byte, off = divmod(n, 8)
        if byte >= len(source._bits):
            raise SourceExhausted(f"bit {n} past end of {8 * len(source._bits)}-bit source")
        return (source._bits[byte] >> (7 - off)) & 1
    if source.kind == "computable-set":
        return int(CHARACTERISTIC_SETS[source.descriptor](n))
    if source.kind == "limit-process":
        return int(source.descriptor.limit(n))
    raise ValueError(f"unknown bit source kind {source.kind!r}")


def file_bits(source: BitSource) -> np.ndarray:
    """All bits of a file-stream source, MSB-first per byte."""
    if source.kind != "file-stream":
        raise ValueError("file_bits requires a file-stream source")
    return np.unpackbits(np.frombuffer(source._bits, dtype=np.uint8))
