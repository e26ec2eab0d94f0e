from itertools import product

import pytest

from features.crasp import CraspProgram, ExtTok, MatchConjunct, MatchSpec, SigmaTok, accepts_batch, uses_match
from features.crasp_lowering import (
    lift_tokens,
    lower_match_to_finite,
    lowering_report,
    match_branches,
    value_symbol,
)
from features.crasp_programs import ProgramBuilder, fragment_programs, shift_match_program, unique_copy_program
from features.errors import AlphabetTooLarge, CraspError

VALUES = (1, 2)


def all_inputs(program: CraspProgram, max_len: int):
    alphabet = [SigmaTok(s) for s in program.sigma] + [ExtTok(v) for v in VALUES]
    return [list(w) for n in range(1, max_len + 1) for w in product(alphabet, repeat=n)]


@pytest.mark.parametrize('name, program', fragment_programs())
def test_lowering_preserves_acceptance(name, program):
    lowered = lower_match_to_finite(program, VALUES)
    assert not uses_match(lowered)
    assert set(program.sigma) <= set(lowered.sigma)
    inputs = all_inputs(program, 3)
    original = accepts_batch(program, inputs)
    finite = accepts_batch(lowered, [lift_tokens(w, VALUES) for w in inputs])
    assert list(original) == list(finite)


def test_branches_follow_the_shift():
    spec = MatchSpec((MatchConjunct(0, 0, 1),))
    branches = match_branches(spec, [1, 2, 3])
    assert [(b.current, b.past) for b in branches] == [
        ((('#1', 0),), (('#2', 0),)),
        ((('#2', 0),), (('#3', 0),)),
    ]


def test_branches_reject_inconsistent_offsets():
    # both conjuncts read c[j] but ask for different values
    spec = MatchSpec((MatchConjunct(0, 0, 0), MatchConjunct(0, 1, 0)))
    branches = match_branches(spec, [1, 2])
    assert {b.current for b in branches} == {(('#1', 0), ('#1', 1)), (('#2', 0), ('#2', 1))}


def test_integer_values_mean_zero_to_max():
    lowered = lower_match_to_finite(shift_match_program(1), 3)
    assert [s for s in lowered.sigma if s.startswith('#')] == [value_symbol(v) for v in range(4)]


def test_branch_budget():
    with pytest.raises(AlphabetTooLarge):
        lower_match_to_finite(unique_copy_program(), range(10), budget=5)
    report = lowering_report(unique_copy_program(), range(10), budget=5)
    assert report['match_lines'] == 3
    assert not report['within_budget']


def test_value_symbols_must_be_fresh():
    b = ProgramBuilder(['#1'])
    program = b.build(b.ge_const(b.match([(0, 0, 0)]), 1))
    with pytest.raises(CraspError):
        lower_match_to_finite(program, VALUES)


def test_lift_tokens():
    assert lift_tokens([SigmaTok('a'), ExtTok(2)], VALUES) == [SigmaTok('a'), SigmaTok('#2')]
    with pytest.raises(CraspError):
        lift_tokens([ExtTok(7)], VALUES)


def test_match_free_program_is_unchanged_in_behaviour():
    b = ProgramBuilder(['a', 'b'])
    program = b.build(b.leq(b.count(b.q('a')), b.count(b.q('b'))))
    lowered = lower_match_to_finite(program, VALUES)
    assert lowered.ops == program.ops
