from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from limitdecide.machine import (MachineParseError, halt_step, halts_within,
                                 load_program, parse_program)

MACHINE_DIR = Path(__file__).parent.parent / "src" / "limitdecide" / "data" / "machines"
CORPUS = {p.stem: load_program(p) for p in sorted(MACHINE_DIR.glob("*.cm"))}


def test_immediate_halt_program():
    m = parse_program("HALT")
    assert not halts_within(m, 0)
    assert halts_within(m, 1)
    assert halt_step(m) == 1


def test_three_instruction_loop_never_halts():
    m = parse_program("""
        INC 0
        loop: DJZ 1 loop
        HALT
    """)
    assert len(m.program) == 3
    for s in (0, 1, 10, 1000, 10**6):
        assert not halts_within(m, s)
    assert halt_step(m) is None


def test_busy_program_pinned_halt_step():
    # interpreter is its own oracle; value recorded from a certified run
    p3 = CORPUS["p3_busy"]
    assert halt_step(p3.with_input(10)) == 457
    assert halts_within(p3.with_input(10), 457)
    assert not halts_within(p3.with_input(10), 456)


def test_corpus_ground_truths():
    expected = {
        "p0_halt": [1, 1, 1],
        "p1_spin": [None, None, None],
        "p2_countdown": [2, 4, 6],
        "p4_evenhalt": [2, None, 5],
    }
    for name, halts in expected.items():
        got = [halt_step(CORPUS[name].with_input(i)) for i in range(3)]
        assert got == halts, name


@given(st.sampled_from(sorted(CORPUS)), st.integers(min_value=0, max_value=7),
       st.integers(min_value=0, max_value=600), st.integers(min_value=0, max_value=600))
@settings(max_examples=120)
def test_monotone_halting(name, inp, s1, s2):
    lo, hi = min(s1, s2), max(s1, s2)
    m = CORPUS[name].with_input(inp)
    if halts_within(m, lo):
        assert halts_within(m, hi)


@given(st.sampled_from(sorted(CORPUS)), st.integers(min_value=0, max_value=7),
       st.integers(min_value=0, max_value=600))
@settings(max_examples=120)
def test_halts_within_agrees_with_certified_step(name, inp, s):
    m = CORPUS[name].with_input(inp)
    h = halt_step(m)
    assert halts_within(m, s) == (h is not None and h <= s)


def test_label_and_comment_parsing():
    m = parse_program("""
        # leading comment
        start: DJZ 0 end   # trailing comment
        INC 1
        DJZ 3 start
        end: HALT
    """)
    assert [i.op for i in m.program] == ["DJZ", "INC", "DJZ", "HALT"]
    assert halt_step(m) == 2  # input 0 jumps straight to the halt


@pytest.mark.parametrize("text", [
    "JMP 0",                # unknown op
    "INC",                  # missing register
    "DJZ 0 nowhere",        # unknown label
    "HALT 3",               # operand on HALT
    "x: x: HALT",           # duplicate label
    "INC 0 extra tokens",   # trailing tokens
])
def test_parse_errors(text):
    with pytest.raises(MachineParseError):
        parse_program(text)


def test_run_off_end_halts():
    m = parse_program("INC 0\nINC 1")
    assert halt_step(m) == 2
    assert halts_within(m, 2) and not halts_within(m, 1)
