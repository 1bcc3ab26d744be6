"""Limit-computable integer sets presented as witness races.

A set A of naturals is represented by two total relations phi(m, k, n)
and psi(m, k, n) with

    n in A      iff  there is m with phi(m, k, n) for every k,
    n not in A  iff  there is m with psi(m, k, n) for every k,

exactly one of which holds per n. At a finite budget N the race compares
the least m < N whose relation holds for all k < N on each side; the side
with the smaller witness wins, ties and double-absence are "undecided".
The bounded verdict eventually stabilizes to the true membership.

Three bundled families realize this interface:

* decidable sets in trivial form (the relations ignore m and k),
* flip schedules: an explicit stage-indexed approximation a(n, s) with
  finitely many value changes, encoded via phi(m,k,n) = [a(n, max(m,k)) = 1],
* bounded halting over the counter-machine corpus, phi(m,k,n) =
  "machine n halts within m steps", psi(m,k,n) = "machine n has not
  halted within k steps".

Each bundled set carries a test-only ``truth`` oracle and a
``settle_hint`` giving a budget past which the bounded verdict equals the
truth.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from . import machine as tm
from .streams import CHARACTERISTIC_SETS

IN_SET = "in-set"
NOT_IN_SET = "not-in-set"
UNDECIDED = "undecided"


@dataclass(frozen=True)
class WitnessResult:
    min_m_phi: int | None
    min_m_psi: int | None

    @property
    def verdict(self) -> str:
        p, q = self.min_m_phi, self.min_m_psi
        if p is not None and (q is None or p < q):
            return IN_SET
        if q is not None and (p is None or q < p):
            return NOT_IN_SET
        return UNDECIDED


@dataclass(frozen=True)
class Delta2Set:
    """A witness-race set descriptor plus test-only ground truth."""

    id: str
    phi: Callable[[int, int, int], bool]
    psi: Callable[[int, int, int], bool]
    truth: Callable[[int], bool]
    settle_hint: Callable[[int], int] = lambda n: 1


def eval_relation(dset: Delta2Set, which: str, m: int, k: int, n: int) -> bool:
    if which == "phi":
        return bool(dset.phi(m, k, n))
    if which == "psi":
        return bool(dset.psi(m, k, n))
    raise ValueError(f"relation must be 'phi' or 'psi', got {which!r}")


def _least_bounded_witness(rel: Callable[[int, int, int], bool],
                           n: int, bound: int) -> int | None:
    for m in range(bound):
        for k in range(bound):
            if not rel(m, k, n):
                break
        else:
            return m
    return None


def bounded_witness(dset: Delta2Set, n: int, bound: int) -> WitnessResult:
    """Race both relations with m, k < bound; O(bound^2) evaluations."""
    if bound < 1:
        raise ValueError("witness budget must be >= 1")
    return WitnessResult(_least_bounded_witness(dset.phi, n, bound),
                         _least_bounded_witness(dset.psi, n, bound))


class _SideState:
    """Incremental least-bounded-witness search for one relation.

    A candidate m dies permanently once rel(m, k, n) fails at some k,
    because every larger budget still quantifies over that k. So the
    search keeps only the least not-yet-dead candidate and how far its
    k-prefix has been verified.
    """

    __slots__ = ("rel", "n", "m", "verified")

    def __init__(self, rel, n):
        self.rel = rel
        self.n = n
        self.m = 0
        self.verified = 0  # rel(m, k, n) holds for all k < verified

    def advance(self, bound: int) -> int | None:
        while self.m < bound:
            k = self.verified
            while k < bound and self.rel(self.m, k, self.n):
                k += 1
            if k >= bound:
                self.verified = k
                return self.m
            self.m += 1
            self.verified = 0
        return None


class WitnessRace:
    """Streaming equivalent of bounded_witness for nondecreasing budgets.

    advance_to(N) returns exactly bounded_witness(dset, n, N) but costs
    amortized O(new relation evaluations) as N grows by one, which is what
    makes per-sample decisions over long horizons affordable.
    """

    def __init__(self, dset: Delta2Set, n: int):
        self.dset = dset
        self.n = n
        self._phi = _SideState(dset.phi, n)
        self._psi = _SideState(dset.psi, n)
        self._bound = 0

    def advance_to(self, bound: int) -> WitnessResult:
        if bound < max(self._bound, 1):
            raise ValueError("witness budgets must be nondecreasing and >= 1")
        self._bound = bound
        return WitnessResult(self._phi.advance(bound), self._psi.advance(bound))


# ---------------------------------------------------------------------------
# Bundled families
# ---------------------------------------------------------------------------

def trivial_set(set_id: str, chi: Callable[[int], bool]) -> Delta2Set:
    """A decidable set in witness-race form; settles at any budget."""
    return Delta2Set(
        set_id,
        phi=lambda m, k, n: bool(chi(n)),
        psi=lambda m, k, n: not chi(n),
        truth=lambda n: bool(chi(n)),
        settle_hint=lambda n: 1,
    )


@dataclass(frozen=True)
class FlipSchedule:
    """Stage-indexed 0/1 approximation with explicitly stored value flips.

    flips maps n to a sorted tuple of (stage, value) pairs; value(n, s) is
    the value of the last flip at stage <= s, or ``default`` if none.
    """

    flips: dict[int, tuple[tuple[int, int], ...]]
    default: int = 0

    def value(self, n: int, stage: int) -> int:
        entry = self.flips.get(n)
        if not entry:
            return self.default
        i = bisect_right(entry, (stage, 1))
        return entry[i - 1][1] if i else self.default

    def limit(self, n: int) -> int:
        entry = self.flips.get(n)
        return entry[-1][1] if entry else self.default

    def settle_stage(self, n: int) -> int:
        """Least stage from which value(n, .) equals the limit forever."""
        entry = self.flips.get(n)
        if not entry:
            return 0
        limit = entry[-1][1]
        stage = 0
        value = self.default
        for s, v in entry:
            if v != value:
                if v == limit:
                    stage = s
                value = v
        return stage if value == limit else 0


def flip_schedule_set(set_id: str, schedule: FlipSchedule) -> Delta2Set:
    val = schedule.value
    return Delta2Set(
        set_id,
        phi=lambda m, k, n: val(n, max(m, k)) == 1,
        psi=lambda m, k, n: val(n, max(m, k)) == 0,
        truth=lambda n: schedule.limit(n) == 1,
        settle_hint=lambda n: schedule.settle_stage(n) + 1,
    )


# machine index -> (program, input): programs cycle through the corpus,
# inputs stay small so witness races settle at desk-scale budgets.
_INPUT_CAP = 8


class MachineCorpus:
    def __init__(self, programs: list[tm.ToyMachine]):
        if not programs:
            raise ValueError("empty machine corpus")
        self.programs = programs
        self._halt_steps: dict[int, int | None] = {}

    def machine_for(self, n: int) -> tm.ToyMachine:
        prog = self.programs[n % len(self.programs)]
        return prog.with_input((n // len(self.programs)) % _INPUT_CAP)

    def halt_step(self, n: int) -> int | None:
        if n not in self._halt_steps:
            self._halt_steps[n] = tm.halt_step(self.machine_for(n))
        return self._halt_steps[n]

    def halts_within(self, n: int, steps: int) -> bool:
        h = self.halt_step(n)
        return h is not None and h <= steps


def bounded_halting_set(set_id: str, corpus: MachineCorpus) -> Delta2Set:
    """A = machine indices whose program halts on its input.

    phi searches for a halting step bound; psi certifies ongoing
    non-halting stage by stage. Ground truth comes from certified runs
    (halt or repeated configuration), so relation evaluations reduce to a
    cached step-count comparison.
    """
    hw = corpus.halts_within
    return Delta2Set(
        set_id,
        phi=lambda m, k, n: hw(n, m),
        psi=lambda m, k, n: not hw(n, k),
        truth=lambda n: corpus.halt_step(n) is not None,
        settle_hint=lambda n: (corpus.halt_step(n) or 0) + 1,
    )


_DATA_DIR = Path(__file__).parent / "data"


def bundled_corpus() -> MachineCorpus:
    paths = sorted((_DATA_DIR / "machines").glob("*.cm"))
    return MachineCorpus([tm.load_program(p) for p in paths])


def bundled_flip_schedule() -> FlipSchedule:
    """The stock limit set: value at 5 flips to 1 at stage 10; a few other
    entries flip (some more than once) at stages <= 14."""
    return FlipSchedule({
        5: ((10, 1),),
        4: ((3, 1),),
        7: ((2, 1), (9, 0)),
        12: ((1, 1), (6, 0), (13, 1)),
        9: ((14, 1),),
    })


def builtin_sets() -> dict[str, Delta2Set]:
    sets = {
        "evens": trivial_set("evens", CHARACTERISTIC_SETS["evens"]),
        "odds": trivial_set("odds", CHARACTERISTIC_SETS["odds"]),
        "primes": trivial_set("primes", CHARACTERISTIC_SETS["primes"]),
        "flip-stage10": flip_schedule_set("flip-stage10", bundled_flip_schedule()),
        "halting-corpus": bounded_halting_set("halting-corpus", bundled_corpus()),
    }
    return sets


# ---------------------------------------------------------------------------
# Manifest loading
# ---------------------------------------------------------------------------

class ManifestError(ValueError):
    """Malformed set manifest."""


def load_manifest(path: str | Path) -> dict[str, Delta2Set]:
    """Load extra set descriptors from a JSON manifest.

    Schema: {"sets": [{"id": ..., "kind": "recursive" | "flip-schedule" |
    "bounded-halting", ...params}]}. Flip schedules list their flips as
    explicit [n, stage, value] triples; bounded-halting names program
    files relative to the manifest.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ManifestError(f"{path}: invalid JSON: {e}") from e
    out: dict[str, Delta2Set] = {}
    for entry in doc.get("sets", []):
        kind = entry.get("kind")
        sid = entry.get("id")
        if not sid:
            raise ManifestError(f"{path}: set entry missing 'id'")
        if kind == "recursive":
            name = entry.get("set")
            if name not in CHARACTERISTIC_SETS:
                raise ManifestError(f"{path}: unknown recursive set {name!r}")
            out[sid] = trivial_set(sid, CHARACTERISTIC_SETS[name])
        elif kind == "flip-schedule":
            flips: dict[int, list[tuple[int, int]]] = {}
            for trip in entry.get("flips", []):
                if len(trip) != 3:
                    raise ManifestError(f"{path}: flip triple must be [n, stage, value]")
                n, stage, value = (int(x) for x in trip)
                if value not in (0, 1):
                    raise ManifestError(f"{path}: flip value must be 0 or 1")
                flips.setdefault(n, []).append((stage, value))
            sched = FlipSchedule({n: tuple(sorted(v)) for n, v in flips.items()},
                                 default=int(entry.get("default", 0)))
            out[sid] = flip_schedule_set(sid, sched)
        elif kind == "bounded-halting":
            progs = []
            for rel in entry.get("programs", []):
                p = path.parent / rel
                if not p.exists():
                    raise ManifestError(f"{path}: program file {p} does not exist")
                progs.append(tm.load_program(p))
            out[sid] = bounded_halting_set(sid, MachineCorpus(progs))
        else:
            raise ManifestError(f"{path}: unknown set kind {kind!r}")
    return out


def resolve_set(name: str, manifest: str | Path | None = None) -> Delta2Set:
    sets = builtin_sets()
    if manifest is not None:
        sets.update(load_manifest(manifest))
    if name not in sets:
        raise KeyError(f"unknown set {name!r}; known: {', '.join(sorted(sets))}")
    return sets[name]
