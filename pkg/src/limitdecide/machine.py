"""A tiny counter-machine interpreter.

Instruction set (one per line, ``#`` comments, ``name:`` label prefixes):

    INC r        increment register r
    DJZ r label  if register r is zero jump to label, else decrement it
    HALT         stop

Registers hold unbounded naturals and start at zero except register 0,
which receives the program input. Executing one instruction is one step;
running past the last instruction halts. The step relation is
deterministic, so halts_within(p, s) is monotone in s.

Halting ground truth for bundled programs is certified by state-repeat
detection: a repeated (pc, registers) configuration proves divergence.
This only terminates for programs whose reachable state space is finite,
which every bundled program is designed to have.
"""

from __future__ import annotations

from dataclasses import dataclass


class MachineParseError(ValueError):
    """Malformed counter-machine program text."""


class UncertifiedMachine(Exception):
    """Budget exhausted with neither a halt nor a repeated state."""


@dataclass(frozen=True)
class Instruction:
    op: str             # "INC" | "DJZ" | "HALT"
    reg: int = 0
    target: int = 0     # resolved jump destination for DJZ


@dataclass(frozen=True)
class ToyMachine:
    """A program plus the natural number loaded into register 0."""

    program: tuple[Instruction, ...]
    input: int = 0
    name: str = ""

    def with_input(self, value: int) -> "ToyMachine":
        return ToyMachine(self.program, value, self.name)


def parse_program(text: str, name: str = "") -> ToyMachine:
    labels: dict[str, int] = {}
    raw: list[tuple[str, str, str]] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        while ":" in line:
            label, line = line.split(":", 1)
            label = label.strip()
            if not label or " " in label:
                raise MachineParseError(f"line {lineno}: bad label {label!r}")
            if label in labels:
                raise MachineParseError(f"line {lineno}: duplicate label {label!r}")
            labels[label] = len(raw)
            line = line.strip()
        if not line:
            continue
        parts = line.split()
        raw.append((parts[0].upper(), parts[1] if len(parts) > 1 else "",
                    parts[2] if len(parts) > 2 else ""))
        if len(parts) > 3:
            raise MachineParseError(f"line {lineno}: trailing tokens in {line!r}")

    instrs: list[Instruction] = []
    for op, a, b in raw:
        if op == "HALT":
            if a or b:
                raise MachineParseError("HALT takes no operands")
            instrs.append(Instruction("HALT"))
        elif op == "INC":
            if not a.isdigit() or b:
                raise MachineParseError(f"INC needs a register, got {a!r} {b!r}")
            instrs.append(Instruction("INC", int(a)))
        elif op == "DJZ":
            if not a.isdigit() or b not in labels:
                raise MachineParseError(f"DJZ needs a register and a known label, got {a!r} {b!r}")
            instrs.append(Instruction("DJZ", int(a), labels[b]))
        else:
            raise MachineParseError(f"unknown instruction {op!r}")
    return ToyMachine(tuple(instrs), 0, name)


def load_program(path) -> ToyMachine:
    from pathlib import Path
    p = Path(path)
    return parse_program(p.read_text(), name=p.stem)


def _initial_state(machine: ToyMachine) -> tuple[int, tuple[int, ...]]:
    nregs = 1 + max((i.reg for i in machine.program), default=0)
    regs = [0] * max(nregs, 1)
    regs[0] = machine.input
    return 0, tuple(regs)


def _step(program: tuple[Instruction, ...], pc: int,
          regs: tuple[int, ...]) -> tuple[int, tuple[int, ...]] | None:
    """One step; None once halted (pc out of range or HALT executed)."""
    if pc < 0 or pc >= len(program):
        return None
    ins = program[pc]
    if ins.op == "HALT":
        return -1, regs          # halted after this step
    if ins.op == "INC":
        lst = list(regs)
        lst[ins.reg] += 1
        return pc + 1, tuple(lst)
    if regs[ins.reg] == 0:
        return ins.target, regs
    lst = list(regs)
    lst[ins.reg] -= 1
    return pc + 1, tuple(lst)


def halts_within(machine: ToyMachine, steps: int) -> bool:
    """True iff the machine halts in at most ``steps`` executed instructions.

    Monotone in ``steps``. A repeated configuration short-circuits to
    False (sound: the run is periodic from there on).
    """
    if steps < 0:
        raise ValueError("step budget must be >= 0")
    pc, regs = _initial_state(machine)
    seen = {(pc, regs)}
    for _ in range(steps):
        nxt = _step(machine.program, pc, regs)
        if nxt is None or nxt[0] == -1:
            return True
        pc, regs = nxt
        if pc >= len(machine.program):
            return True
        if (pc, regs) in seen:
            return False
        seen.add((pc, regs))
    return False


def halt_step(machine: ToyMachine, budget: int = 1_000_000) -> int | None:
    """Exact halting step count, or None for a certified non-halter.

    Raises UncertifiedMachine if the budget runs out before either a halt
    or a repeated configuration; bundled programs never do.
    """
    pc, regs = _initial_state(machine)
    seen = {(pc, regs)}
    for step in range(1, budget + 1):
        nxt = _step(machine.program, pc, regs)
        if nxt is None or nxt[0] == -1:
            return step if nxt is not None else step - 1
        pc, regs = nxt
        if pc >= len(machine.program):
            return step
        if (pc, regs) in seen:
            return None
        seen.add((pc, regs))
    raise UncertifiedMachine(
        f"{machine.name or 'machine'}: no halt or state repeat within {budget} steps")
