import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from features.crasp import ExtTok, SigmaTok, accepts, evaluate, typecheck
from features.crasp_programs import (
    ProgramBuilder,
    random_input,
    random_program,
    shift_input,
    shift_match_program,
    unique_copy_program,
)


def ext(*values):
    return [ExtTok(v) for v in values]


class TestUniqueCopy:
    @pytest.mark.parametrize('values', [(1, 1), (1, 2, 1, 2), (5, 3, 9, 5, 3, 9), (0, 7, 0, 7)])
    def test_accepts_copies(self, values):
        assert accepts(unique_copy_program(), ext(*values))

    @pytest.mark.parametrize('values', [
        (5,),
        (1, 2),
        (1, 2, 1),
        (1, 1, 1),
        (1, 2, 2, 1),
        (1, 2, 3, 1, 3, 2),
        (1, 1, 2, 2),
    ])
    def test_rejects_everything_else(self, values):
        assert not accepts(unique_copy_program(), ext(*values))

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.integers(0, 50), min_size=1, max_size=8, unique=True))
    def test_any_distinct_sequence(self, u):
        program = unique_copy_program()
        assert accepts(program, ext(*u, *u))
        if len(u) >= 2:
            assert not accepts(program, ext(*u, *reversed(u)))


class TestShiftMatch:
    def test_plus_one(self):
        program = shift_match_program(1)
        assert accepts(program, ext(3, 4))
        assert accepts(program, ext(9, 3, 0, 4))
        assert not accepts(program, ext(4, 3))
        assert not accepts(program, ext(3, 3))
        assert not accepts(program, ext(3))

    def test_minus_one(self):
        program = shift_match_program(-1)
        assert accepts(program, ext(4, 3))
        assert not accepts(program, ext(3, 4))


class TestBuilder:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 3000))
    def test_constants(self, k):
        b = ProgramBuilder(['a'])
        constant = b.const(k)
        program = b.build(b.ge_const(constant, 0))
        assert evaluate(program, [SigmaTok('a'), SigmaTok('a')]).row(constant) == [k, k]

    def test_identical_lines_are_shared(self):
        b = ProgramBuilder(['a'])
        assert b.q('a') == b.q('a')
        assert len(b.ops) == 1
        loose = ProgramBuilder(['a'], dedupe=False)
        assert loose.q('a') != loose.q('a')

    def test_step_labels(self):
        b = ProgramBuilder()
        with b.step('Outer'):
            first = b.q('x')
            with b.step('Inner'):
                second = b.q('y')
            third = b.and_(first, second)
        fourth = b.not_(third)
        assert [b.provenance[i] for i in (first, second, third, fourth)] == ['Outer', 'Inner', 'Outer', 'Not']
        assert b.sigma == ['x', 'y']

    def test_token_at(self):
        b = ProgramBuilder(['a', 'b'])
        back_two = b.token_at('a', 2)
        program = b.build(back_two)
        tokens = [SigmaTok(s) for s in 'abba']
        assert evaluate(program, tokens).row(back_two) == [False, False, True, False]

    def test_boolean_helpers(self):
        b = ProgramBuilder(['a', 'b'])
        is_a, is_b = b.q('a'), b.q('b')
        either = b.or_(is_a, is_b)
        neither = b.not_(either)
        program = b.build(b.or_all([neither, b.and_all([])]))
        table = evaluate(program, [SigmaTok('a'), ExtTok(0), SigmaTok('b')])
        assert table.row(either) == [True, False, True]
        assert table.row(neither) == [False, True, False]

    def test_build_appends_output_line(self):
        b = ProgramBuilder(['a'])
        first = b.q('a')
        b.count(first)
        program = b.build(first)
        assert len(program) == 4
        assert accepts(program, [SigmaTok('a')])


@pytest.mark.parametrize('seed', range(25))
def test_random_programs_are_well_sorted(seed):
    rng = np.random.default_rng(seed)
    program = random_program(rng, n_ops=int(rng.integers(4, 20)))
    typecheck(program)
    w = random_input(rng, program.sigma, 10)
    assert accepts(program, w) == accepts(program, shift_input(w, 5))


def test_shift_input_keeps_symbols():
    tokens = [SigmaTok('a'), ExtTok(0), ExtTok(4)]
    assert shift_input(tokens, 3) == [SigmaTok('a'), ExtTok(3), ExtTok(7)]
