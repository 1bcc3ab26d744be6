"""Finite-depth tree interrogation of candidate prefix deciders.

A candidate procedure F maps finite bit strings to accept/reject. For a
stem t that is *not* a prefix of the intended target, a sound asymptotic
decider must eventually reject everything above t; this module measures
how a concrete F fails or survives that demand at bounded depth:

* survivors: per-level counts of accepted extensions of t,
* find_persistent_branch: a depth-D extension accepted at a given
  fraction of its prefixes,
* flip_count / max_flip_branch: decision changes along prefixes,
* dilemma_certificate: exactly one of extinction evidence, a persistent
  wrong-way branch, or a flip-instability branch.

Searches are exhaustive up to EXACT_DEPTH and deterministic beam/budget
bounded beyond it (counts then become flagged lower bounds). The depth
cap is HARD_DEPTH_CAP.

Procedures expose an incremental protocol (init_state/extend/accepts) so
tree walks pay O(1) per node instead of re-reading whole strings; calling
a procedure on a full string folds the same protocol, keeping the two
paths definitionally consistent.

Bytecode procedures are programs for a small stack machine over the
input string, total by construction: the only loop construct FOR..END
iterates exactly once per input position. Text format, one op per line
(# comments):

    PUSH n | LEN | SUM | IDX | BIT | ADD | SUB | MUL | EQ | LT |
    NOT | AND | OR | FOR | END | RET

LEN/SUM push the input length/popcount; IDX the innermost loop index;
BIT pops an index and pushes that input bit (0 out of range); SUB
saturates at 0; comparisons and logic push 0/1; RET (last op) pops the
verdict, nonzero accepting. Programs are statically checked: matched
FOR/END with net-zero stack effect, no underflow, RET exactly at the end.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable

from .streams import CHARACTERISTIC_SETS

EXACT_DEPTH = 20
HARD_DEPTH_CAP = 28
BEAM_WIDTH = 1 << 16
BRANCH_NODE_BUDGET = 1 << 22

Bits = tuple[int, ...]


def as_bits(s) -> Bits:
    bits = tuple(int(b) for b in s)
    if any(b not in (0, 1) for b in bits):
        raise ValueError(f"not a bit string: {s!r}")
    return bits


def parse_bits(text: str) -> Bits:
    """Bit string from 0/1 text; empty or 'e' for the empty stem."""
    text = text.strip()
    if text in ("", "e"):
        return ()
    if any(c not in "01" for c in text):
        raise ValueError(f"stem must be 0/1 text, got {text!r}")
    return tuple(int(c) for c in text)


def bits_text(bits: Bits) -> str:
    return "".join(str(b) for b in bits)


class CandidateProcedure:
    """Total deterministic decision function on finite bit strings."""

    id = "procedure"

    def init_state(self):
        raise NotImplementedError

    def extend(self, state, bit: int):
        raise NotImplementedError

    def accepts(self, state) -> int:
        raise NotImplementedError

    def state_for(self, bits: Bits):
        state = self.init_state()
        for b in bits:
            state = self.extend(state, b)
        return state

    def __call__(self, s) -> int:
        return self.accepts(self.state_for(as_bits(s)))


class _Constant(CandidateProcedure):
    def __init__(self, value: int):
        self.value = value
        self.id = f"constant-{value}"

    def init_state(self):
        return None

    def extend(self, state, bit):
        return None

    def accepts(self, state):
        return self.value


class _PrefixMatch(CandidateProcedure):
    """Accept while every bit agrees with the target sequence."""

    def __init__(self, target: Callable[[int], int], label: str = "target"):
        self.target = target
        self.id = f"prefix-match({label})"

    def init_state(self):
        return (True, 0)

    def extend(self, state, bit):
        ok, n = state
        return (ok and bit == int(self.target(n)), n + 1)

    def accepts(self, state):
        return 1 if state[0] else 0


class _ParityVote(CandidateProcedure):
    """Accept iff the number of ones seen so far is even."""

    id = "parity-vote"

    def init_state(self):
        return 0

    def extend(self, state, bit):
        return state ^ bit

    def accepts(self, state):
        return 1 - state


class _MajorityWindow(CandidateProcedure):
    """Accept iff ones hold a (tie-counting) majority of the last w bits."""

    def __init__(self, w: int):
        if w < 1:
            raise ValueError("window must be >= 1")
        self.w = w
        self.id = f"majority-window({w})"

    def init_state(self):
        return ()

    def extend(self, state, bit):
        state = state + (bit,)
        return state[-self.w:]

    def accepts(self, state):
        return 1 if 2 * sum(state) >= len(state) else 0


def builtin_procedure(spec: str) -> CandidateProcedure:
    """Parse a procedure spec: builtin name or 'bytecode:<path>'.

    Builtins: constant-1, constant-0, parity-vote, majority-window:<w>,
    prefix-match:<computable-set name>.
    """
    if spec == "constant-1":
        return _Constant(1)
    if spec == "constant-0":
        return _Constant(0)
    if spec == "parity-vote":
        return _ParityVote()
    if spec.startswith("majority-window:"):
        return _MajorityWindow(int(spec.split(":", 1)[1]))
    if spec.startswith("prefix-match:"):
        name = spec.split(":", 1)[1]
        chi = CHARACTERISTIC_SETS[name]
        return _PrefixMatch(lambda n: int(chi(n)), name)
    if spec.startswith("bytecode:"):
        return load_bytecode(spec.split(":", 1)[1])
    raise ValueError(f"unknown procedure spec {spec!r}")


def prefix_match_procedure(target: Callable[[int], int],
                           label: str = "target") -> CandidateProcedure:
    return _PrefixMatch(target, label)


# ---------------------------------------------------------------------------
# Bytecode procedures
# ---------------------------------------------------------------------------

class BytecodeError(ValueError):
    """Malformed or non-total bytecode program."""


_ARITY = {"LEN": (0, 1), "SUM": (0, 1), "IDX": (0, 1), "PUSH": (0, 1),
          "BIT": (1, 1), "NOT": (1, 1),
          "ADD": (2, 1), "SUB": (2, 1), "MUL": (2, 1), "EQ": (2, 1),
          "LT": (2, 1), "AND": (2, 1), "OR": (2, 1)}


def _parse_block(tokens, i, depth, stack_depth):
    """Parse ops until END/end-of-program; verify stack discipline."""
    block = []
    while i < len(tokens):
        op, arg, lineno = tokens[i]
        if op == "END":
            if depth == 0:
                raise BytecodeError(f"line {lineno}: END without FOR")
            return block, i, stack_depth
        if op == "RET":
            if depth != 0 or i != len(tokens) - 1:
                raise BytecodeError(f"line {lineno}: RET must be the last instruction")
            if stack_depth < 1:
                raise BytecodeError(f"line {lineno}: RET on empty stack")
            block.append(("RET", None))
            return block, i + 1, stack_depth - 1
        if op == "FOR":
            body, i, inner_depth = _parse_block(tokens, i + 1, depth + 1, stack_depth)
            if i >= len(tokens) or tokens[i][0] != "END":
                raise BytecodeError(f"line {lineno}: FOR without END")
            if inner_depth != stack_depth:
                raise BytecodeError(
                    f"line {lineno}: FOR body must leave the stack depth unchanged")
            block.append(("FOR", body))
            i += 1
            continue
        if op == "IDX" and depth == 0:
            raise BytecodeError(f"line {lineno}: IDX outside FOR")
        if op not in _ARITY:
            raise BytecodeError(f"line {lineno}: unknown op {op!r}")
        pops, pushes = _ARITY[op]
        if stack_depth < pops:
            raise BytecodeError(f"line {lineno}: stack underflow at {op}")
        stack_depth += pushes - pops
        block.append((op, arg))
        i += 1
    if depth != 0:
        raise BytecodeError("FOR without END")
    return block, i, stack_depth


class BytecodeProcedure(CandidateProcedure):
    def __init__(self, text: str, label: str = "bytecode"):
        tokens = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            op = parts[0].upper()
            arg = None
            if op == "PUSH":
                if len(parts) != 2 or not parts[1].lstrip("-").isdigit():
                    raise BytecodeError(f"line {lineno}: PUSH needs an integer")
                arg = int(parts[1])
                if arg < 0:
                    raise BytecodeError(f"line {lineno}: PUSH takes naturals")
            elif len(parts) != 1:
                raise BytecodeError(f"line {lineno}: {op} takes no operands")
            tokens.append((op, arg, lineno))
        if not tokens or tokens[-1][0] != "RET":
            raise BytecodeError("program must end with RET")
        block, i, depth = _parse_block(tokens, 0, 0, 0)
        if i != len(tokens):
            raise BytecodeError("unbalanced FOR/END")
        self.block = block
        self.id = f"bytecode({label})"

    # tree-search state is just the accumulated string
    def init_state(self):
        return ()

    def extend(self, state, bit):
        return state + (bit,)

    def accepts(self, state):
        return self._run(state)

    def _run(self, s: Bits) -> int:
        stack: list[int] = []

        def exec_block(block, idx):
            for op, arg in block:
                if op == "PUSH":
                    stack.append(arg)
                elif op == "LEN":
                    stack.append(len(s))
                elif op == "SUM":
                    stack.append(sum(s))
                elif op == "IDX":
                    stack.append(idx)
                elif op == "BIT":
                    i = stack.pop()
                    stack.append(s[i] if 0 <= i < len(s) else 0)
                elif op == "ADD":
                    b, a = stack.pop(), stack.pop()
                    stack.append(a + b)
                elif op == "SUB":
                    b, a = stack.pop(), stack.pop()
                    stack.append(max(a - b, 0))
                elif op == "MUL":
                    b, a = stack.pop(), stack.pop()
                    stack.append(a * b)
                elif op == "EQ":
                    b, a = stack.pop(), stack.pop()
                    stack.append(int(a == b))
                elif op == "LT":
                    b, a = stack.pop(), stack.pop()
                    stack.append(int(a < b))
                elif op == "NOT":
                    stack.append(int(stack.pop() == 0))
                elif op == "AND":
                    b, a = stack.pop(), stack.pop()
                    stack.append(int(a != 0 and b != 0))
                elif op == "OR":
                    b, a = stack.pop(), stack.pop()
                    stack.append(int(a != 0 or b != 0))
                elif op == "FOR":
                    for j in range(len(s)):
                        exec_block(arg, j)
                else:  # RET
                    return
        exec_block(self.block, 0)
        return int(stack[-1] != 0)


def load_bytecode(path: str | Path) -> BytecodeProcedure:
    p = Path(path)
    return BytecodeProcedure(p.read_text(), label=p.stem)


# ---------------------------------------------------------------------------
# Reports and searches
# ---------------------------------------------------------------------------

class DepthError(ValueError):
    """Requested depth above the hard cap."""


@dataclass
class AdversaryReport:
    stem: Bits
    depth: int
    survivors_per_level: list[int]
    exact_through: int                    # counts at levels <= this are exact
    extinction_level: int | None = None   # first exact level with zero count
    persistent_branch: Bits | None = None
    persistent_density: float | None = None
    max_flips: tuple[Bits, int] | None = None

    @property
    def counts_exact(self) -> bool:
        return self.exact_through >= self.depth


def _check_depth(stem: Bits, depth: int) -> None:
    if depth > HARD_DEPTH_CAP:
        raise DepthError(f"depth {depth} above cap {HARD_DEPTH_CAP}")
    if depth < len(stem):
        raise DepthError("depth must be at least the stem length")


def survivors(proc: CandidateProcedure, stem, depth: int) -> AdversaryReport:
    """Per-level counts of accepted extensions of the stem (counts only).

    Exact through min(depth, EXACT_DEPTH) by full enumeration; deeper
    levels use a deterministic beam and report lower bounds.
    """
    stem = as_bits(stem)
    _check_depth(stem, depth)
    exact_top = min(depth, EXACT_DEPTH)
    counts = [0] * (depth - len(stem) + 1)

    def walk(state, level):
        counts[level - len(stem)] += proc.accepts(state)
        if level < exact_top:
            walk(proc.extend(state, 0), level + 1)
            walk(proc.extend(state, 1), level + 1)

    root = proc.state_for(stem)
    walk(root, len(stem))

    if depth > exact_top:
        # deterministic beam: survivors first, lexicographic within class;
        # memory stays bounded by keeping at most BEAM_WIDTH of each while
        # walking the cutoff level in lexicographic order
        keep: tuple[list, list] = ([], [])

        def collect(prefix, state, level):
            if len(keep[0]) >= BEAM_WIDTH and len(keep[1]) >= BEAM_WIDTH:
                return
            if level == exact_top:
                bucket = keep[1 - proc.accepts(state)]
                if len(bucket) < BEAM_WIDTH:
                    bucket.append((prefix, state))
                return
            collect(prefix + (0,), proc.extend(state, 0), level + 1)
            collect(prefix + (1,), proc.extend(state, 1), level + 1)

        collect((), root, len(stem))
        frontier = (keep[0] + keep[1])[:BEAM_WIDTH]
        for level in range(exact_top + 1, depth + 1):
            nxt = []
            acc = 0
            for prefix, state in frontier:
                for b in (0, 1):
                    st = proc.extend(state, b)
                    acc += proc.accepts(st)
                    nxt.append((prefix + (b,), st))
            counts[level - len(stem)] = acc
            nxt.sort(key=lambda ps: (1 - proc.accepts(ps[1]), ps[0]))
            frontier = nxt[:BEAM_WIDTH]
            del nxt

    report = AdversaryReport(stem, depth, counts, exact_top)
    for i, c in enumerate(counts[: exact_top - len(stem) + 1]):
        if c == 0:
            report.extinction_level = len(stem) + i
            break
    return report


def _as_rho(rho) -> Fraction:
    """Density thresholds as exact rationals; floats are read as the
    decimal the caller wrote (0.9 means 9/10), not their dyadic value."""
    frac = Fraction(rho).limit_denominator(10**6) if isinstance(rho, float) \
        else Fraction(rho)
    if not 0 < frac <= 1:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    return frac


def find_persistent_branch(proc: CandidateProcedure, stem, depth: int,
                           rho) -> Bits | None:
    """A depth-``depth`` extension accepted at >= rho of its prefix levels.

    Depth-first, accepting child first, pruned by the best still
    achievable acceptance count; exhaustive (absence is proof) for
    depth <= EXACT_DEPTH, budget-bounded above that.
    """
    stem = as_bits(stem)
    _check_depth(stem, depth)
    levels = depth - len(stem) + 1
    # exact rational target: acc >= target iff acc/levels >= rho
    target = math.ceil(_as_rho(rho) * levels)
    budget = [BRANCH_NODE_BUDGET if depth > EXACT_DEPTH else None]

    def dfs(prefix, state, level, acc) -> Bits | None:
        acc += proc.accepts(state)
        if level == depth:
            return stem + prefix if acc >= target else None
        if acc + (depth - level) < target:
            return None
        if budget[0] is not None:
            if budget[0] <= 0:
                return None
            budget[0] -= 1
        children = [(proc.extend(state, b), b) for b in (0, 1)]
        children.sort(key=lambda cb: (1 - proc.accepts(cb[0]), cb[1]))
        for st, b in children:
            hit = dfs(prefix + (b,), st, level + 1, acc)
            if hit is not None:
                return hit
        return None

    return dfs((), proc.state_for(stem), len(stem), 0)


def acceptance_density(proc: CandidateProcedure, stem, branch) -> float:
    """Fraction of prefix levels |stem|..|branch| the procedure accepts."""
    stem, branch = as_bits(stem), as_bits(branch)
    state = proc.state_for(stem)
    acc = proc.accepts(state)
    for b in branch[len(stem):]:
        state = proc.extend(state, b)
        acc += proc.accepts(state)
    return acc / (len(branch) - len(stem) + 1)


def flip_count(proc: CandidateProcedure, s) -> int:
    """Decision changes along the prefixes of s (lengths 0..|s|)."""
    bits = as_bits(s)
    state = proc.init_state()
    prev = proc.accepts(state)
    flips = 0
    for b in bits:
        state = proc.extend(state, b)
        cur = proc.accepts(state)
        flips += cur != prev
        prev = cur
    return flips


def max_flip_branch(proc: CandidateProcedure, stem, depth: int) -> tuple[Bits, int]:
    """The depth-``depth`` extension of stem maximizing prefix flips.

    Flips are counted along all prefixes from the empty string; ties go
    to the lexicographically smallest branch. Exhaustive, so depth is
    capped at EXACT_DEPTH.
    """
    stem = as_bits(stem)
    if depth > EXACT_DEPTH:
        raise DepthError(f"exhaustive flip search capped at {EXACT_DEPTH}")
    _check_depth(stem, depth)

    state = proc.init_state()
    prev = proc.accepts(state)
    stem_flips = 0
    for b in stem:
        state = proc.extend(state, b)
        cur = proc.accepts(state)
        stem_flips += cur != prev
        prev = cur

    best: list = [None, -1]

    def dfs(prefix, st, level, prev_bit, flips):
        if level == depth:
            if flips > best[1]:
                best[0], best[1] = stem + prefix, flips
            return
        for b in (0, 1):
            nst = proc.extend(st, b)
            cur = proc.accepts(nst)
            dfs(prefix + (b,), nst, level + 1, cur, flips + (cur != prev_bit))

    dfs((), state, len(stem), prev, stem_flips)
    return best[0], best[1]


# ---------------------------------------------------------------------------
# The dilemma certificate
# ---------------------------------------------------------------------------

EXTINCTION = "extinction"
PERSISTENT = "persistent-branch"
UNSTABLE = "flip-instability"
INCONCLUSIVE = "inconclusive"


@dataclass
class Certificate:
    kind: str
    stem: Bits
    depth: int
    rho: float
    extinction_level: int | None = None
    branch: Bits | None = None
    density: float | None = None
    flips: int | None = None
    survivors_per_level: list[int] | None = None

    def to_json(self) -> str:
        doc = {
            "kind": self.kind,
            "stem": bits_text(self.stem),
            "depth": self.depth,
            "rho": self.rho,
            "extinction_level": self.extinction_level,
            "branch": None if self.branch is None else bits_text(self.branch),
            "density": self.density,
            "flips": self.flips,
            "survivors_per_level": self.survivors_per_level,
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def dilemma_certificate(proc: CandidateProcedure, target: Callable[[int], int],
                        stem, depth: int, rho=0.9) -> Certificate:
    """Exactly one verdict about F above an off-target stem.

    (a) extinction: no accepted extensions from some level through depth
        (F eventually rejects everything over the false stem), else
    (b) a branch with acceptance density >= rho (F persistently accepts
        a false oracle), else
    (c) a branch with >= depth/4 decision flips (F never settles), else
        an explicit inconclusive result.

    Exhaustive, hence a decided trichotomy, for depth <= EXACT_DEPTH.
    """
    stem = as_bits(stem)
    for i, b in enumerate(stem):
        if int(target(i)) != b:
            break
    else:
        raise ValueError("stem must NOT be a prefix of the target")

    report = survivors(proc, stem, depth)
    cert = Certificate(INCONCLUSIVE, stem, depth, float(_as_rho(rho)),
                       survivors_per_level=report.survivors_per_level)
    if report.counts_exact:
        counts = report.survivors_per_level
        level = depth + 1
        for i in range(len(counts) - 1, -1, -1):
            if counts[i] != 0:
                break
            level = len(stem) + i
        if level <= depth:
            cert.kind = EXTINCTION
            cert.extinction_level = level
            return cert

    branch = find_persistent_branch(proc, stem, depth, rho)
    if branch is not None:
        cert.kind = PERSISTENT
        cert.branch = branch
        cert.density = acceptance_density(proc, stem, branch)
        return cert

    if depth <= EXACT_DEPTH:
        branch, flips = max_flip_branch(proc, stem, depth)
        if flips >= depth / 4:
            cert.kind = UNSTABLE
            cert.branch = branch
            cert.flips = flips
            return cert

    return cert
