"""Streaming sample statistics and the iterated-logarithm radius.

OnlineStats is a Welford accumulator; ``variance`` uses the 1/N
convention (not 1/(N-1)) to match the batch definition the decision rule
is stated with. The radius

    delta_N = sqrt((1 + epsilon) * var_hat * log(log(N)) / N)

shrinks to zero and is used as the accept band around the nearest
candidate mean. It is meaningless for log(log(N)) <= 0, so decisions are
gated behind ``n_min`` (>= 16).
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class TooEarly(ValueError):
    """Raised when a decision quantity is requested before n_min samples."""


@dataclass
class OnlineStats:
    """Running count, mean and sum of squared deviations."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def update(self, x: float) -> None:
        if not math.isfinite(x):
            raise ValueError(f"non-finite sample {x!r}")
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    @property
    def variance(self) -> float:
        """Sample variance m2/N; defined for count >= 1."""
        if self.count < 1:
            raise ValueError("variance undefined for empty stats")
        return self.m2 / self.count

    def copy(self) -> "OnlineStats":
        return OnlineStats(self.count, self.mean, self.m2)


def update(stats: OnlineStats, x: float) -> OnlineStats:
    """Functional wrapper: returns a new accumulator including x."""
    out = stats.copy()
    out.update(x)
    return out


def merge(a: OnlineStats, b: OnlineStats) -> OnlineStats:
    """Stats of the concatenated sample (Chan's pairwise combination)."""
    if a.count == 0:
        return b.copy()
    if b.count == 0:
        return a.copy()
    n = a.count + b.count
    delta = b.mean - a.mean
    mean = a.mean + delta * b.count / n
    m2 = a.m2 + b.m2 + delta * delta * a.count * b.count / n
    return OnlineStats(n, mean, m2)


@dataclass(frozen=True)
class LilParams:
    """Decision-rule knobs: variance inflation epsilon and burn-in n_min.

    epsilon > 0 per the rule's statement. Note that the radius carries no
    factor 2 inside the square root, so for epsilon <= 1 the sample mean
    of a nondegenerate stream leaves the band infinitely often; regression
    scenarios therefore run with epsilon > 1. The default stays at 0.1 for
    API compatibility with the plain rule.
    """

    epsilon: float = 0.1
    n_min: int = 16

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.n_min < 16:
            raise ValueError(f"n_min must be >= 16, got {self.n_min}")


def lil_threshold(n: int, var_hat: float, params: LilParams) -> float:
    """Accept radius delta_N at sample count n.

    Strictly decreasing in n for fixed var_hat > 0 (on n >= 16), and zero
    when the variance estimate is zero.
    """
    if n < params.n_min:
        raise TooEarly(f"no decisions before n_min={params.n_min} (got n={n})")
    if var_hat < 0:
        raise ValueError(f"negative variance estimate {var_hat}")
    return math.sqrt((1.0 + params.epsilon) * var_hat * math.log(math.log(n)) / n)
