"""The composed asymptotic decision procedure for stream means.

Each incoming sample updates running statistics; once the burn-in n_min
is past, every step emits two bits:

* d: is the mean within delta_N of its nearest integer candidate?
* e: if so, does the bounded witness race place that candidate in the
  target set? (d = 0 forces e = 0; an undecided race retains the
  previous e, defaulting to 0.)

Neither bit is ever final: the guarantee is only that on streams with
finite variance both are eventually constant and correct with
probability one. ``sequence_decision`` generalizes the integer candidates
to any recursive sequence of approximable reals indexed by naturals; for
sequences whose closure is uncountable the guarantee excludes a measure
zero set of means, which is documented here and not runtime-detected.

Candidates are naturals. A negative rounded mean cannot lie in a set of
naturals, so it short-circuits to e = 0 without racing.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, IO

from .delta2 import Delta2Set, IN_SET, NOT_IN_SET, WitnessRace
from .stats import LilParams, OnlineStats, lil_threshold
from .streams import BitSource, bit_at


class ApproximationError(Exception):
    """A sequence element could not be approximated to the needed error."""


def integer_decision(mean: float, delta: float) -> tuple[int, int]:
    """(d, mu_hat): nearest integer and whether it sits within delta.

    Ties at .5 round half away from zero; under continuous noise they
    occur with probability zero, the rule just fixes determinism.
    """
    if not math.isfinite(mean):
        raise ValueError(f"non-finite mean {mean!r}")
    mu_hat = math.floor(mean + 0.5) if mean >= 0 else math.ceil(mean - 0.5)
    d = 1 if abs(mu_hat - mean) <= delta else 0
    return d, mu_hat


@dataclass(frozen=True)
class TraceRow:
    n: int
    mean: float
    var: float
    delta: float | None = None
    mu_hat: int | None = None
    d: int | None = None
    e: int | None = None

    @property
    def is_decision(self) -> bool:
        return self.d is not None


@dataclass
class DecisionTrace:
    rows: list[TraceRow] = field(default_factory=list)
    error: str | None = None

    @property
    def final_verdict(self) -> int | None:
        for row in reversed(self.rows):
            if row.is_decision:
                return row.e
        return None

    @property
    def last_flip_n(self) -> int:
        last = 0
        prev: int | None = None
        for row in self.rows:
            if not row.is_decision:
                continue
            if prev is not None and row.e != prev:
                last = row.n
            prev = row.e
        return last

    def e_at(self, n: int) -> int | None:
        """e at sample count n (rows are 1-indexed by n)."""
        if 1 <= n <= len(self.rows):
            return self.rows[n - 1].e
        return None

    def to_csv(self, fp: IO[str]) -> None:
        w = csv.writer(fp)
        w.writerow(["N", "mean", "var", "delta", "mu_hat", "d", "e"])
        for r in self.rows:
            w.writerow([r.n, repr(r.mean), repr(r.var),
                        "" if r.delta is None else repr(r.delta),
                        "" if r.mu_hat is None else r.mu_hat,
                        "" if r.d is None else r.d,
                        "" if r.e is None else r.e])

    def to_jsonl(self, fp: IO[str]) -> None:
        for r in self.rows:
            fp.write(json.dumps({"N": r.n, "mean": r.mean, "var": r.var,
                                 "delta": r.delta, "mu_hat": r.mu_hat,
                                 "d": r.d, "e": r.e}) + "\n")


class DeciderState:
    """Per-stream decision state; advance with step() one sample at a time."""

    def __init__(self, dset: Delta2Set, params: LilParams = LilParams()):
        self.dset = dset
        self.params = params
        self.stats = OnlineStats()
        self.last_d: int | None = None
        self.last_e: int | None = None
        self._races: dict[int, WitnessRace] = {}

    def _race_verdict(self, n: int, bound: int) -> str:
        race = self._races.get(n)
        if race is None:
            race = self._races[n] = WitnessRace(self.dset, n)
        return race.advance_to(bound).verdict

    def _membership_bit(self, candidate: int, bound: int) -> int:
        if candidate < 0:
            return 0
        verdict = self._race_verdict(candidate, bound)
        if verdict == IN_SET:
            return 1
        if verdict == NOT_IN_SET:
            return 0
        return self.last_e if self.last_e is not None else 0

    def step(self, x: float) -> TraceRow:
        self.stats.update(x)
        n = self.stats.count
        if n < self.params.n_min:
            return TraceRow(n, self.stats.mean, self.stats.variance)
        delta = lil_threshold(n, self.stats.variance, self.params)
        d, mu_hat = integer_decision(self.stats.mean, delta)
        e = self._membership_bit(mu_hat, n) if d == 1 else 0
        self.last_d, self.last_e = d, e
        return TraceRow(n, self.stats.mean, self.stats.variance, delta, mu_hat, d, e)


def step(state: DeciderState, x: float) -> tuple[DeciderState, TraceRow]:
    """Advance one sample; returns the (mutated) state and its trace row."""
    return state, state.step(x)


# ---------------------------------------------------------------------------
# Recursive sequences of approximable reals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ApproxSequence:
    """s_n queried as exact rationals within a requested error bound.

    approx(n, eps) must return a Fraction q with |q - s_n| <= eps, or
    raise ApproximationError. eps may be zero for exactly representable
    sequences.
    """

    id: str
    approx: Callable[[int, Fraction], Fraction]


def identity_sequence() -> ApproxSequence:
    return ApproxSequence("identity", lambda n, eps: Fraction(n))


def halves_sequence() -> ApproxSequence:
    return ApproxSequence("halves", lambda n, eps: Fraction(n, 2))


def sqrt_sequence() -> ApproxSequence:
    def approx(n: int, eps: Fraction) -> Fraction:
        if eps <= 0:
            r = math.isqrt(n)
            if r * r == n:
                return Fraction(r)
            raise ApproximationError(f"sqrt({n}) is irrational; need eps > 0")
        bits = 8
        while Fraction(1, 1 << bits) > eps:  # enough dyadic bits for eps
            bits += 8
        return Fraction(math.isqrt(n << (2 * bits)), 1 << bits)
    return ApproxSequence("sqrt", approx)


def sequence_decision(state: DeciderState, x: float,
                      sequence: ApproxSequence) -> TraceRow:
    """One step of the sequence-valued variant.

    The nearest-element search replaces rounding: candidates are s_0..s_N
    queried to error delta/4, the winner's index plays the role of the
    rounded mean, and d asks whether its certified distance is within
    delta. With the identity sequence this reduces exactly to step().
    """
    state.stats.update(x)
    n = state.stats.count
    if n < state.params.n_min:
        return TraceRow(n, state.stats.mean, state.stats.variance)
    delta = lil_threshold(n, state.stats.variance, state.params)
    mean_frac = Fraction(state.stats.mean)
    eps = Fraction(delta) / 4
    best_idx: int | None = None
    best_dist: Fraction | None = None
    for idx in range(n + 1):
        q = sequence.approx(idx, eps)
        dist = abs(q - mean_frac)
        if best_dist is None or dist < best_dist:
            best_idx, best_dist = idx, dist
    d = 1 if best_dist <= Fraction(delta) else 0
    e = state._membership_bit(best_idx, n) if d == 1 else 0
    state.last_d, state.last_e = d, e
    return TraceRow(n, state.stats.mean, state.stats.variance, delta, best_idx, d, e)


# ---------------------------------------------------------------------------
# Prefix-matching decider for bit streams
# ---------------------------------------------------------------------------

def prefix_match_decider(target: BitSource | Callable[[int], int],
                         s) -> int:
    """1 iff the finite bit string s is an initial segment of the target.

    The trivially correct asymptotic decider for a decidable target; it
    also serves as a candidate procedure for the tree adversary.
    """
    if isinstance(target, BitSource):
        probe = lambda i: bit_at(target, i)
    else:
        probe = target
    for i, b in enumerate(s):
        if int(b) != int(probe(i)):
            return 0
    return 1
