import pytest

from features.builtin_domains import Board, flipflop_instance
from features.crasp_programs import ProgramBuilder, shift_match_program, unique_copy_program
from features.theory_checks import (
    CASE_KINDS,
    CompiledSweep,
    LangCheckReport,
    check_compiled_variant,
    check_flipflop,
    check_lowering,
    check_parity_reduction,
    check_toggle_identity,
    check_translation,
    flipflop_member,
    lowering_suite,
    sample_case,
)
from features.strips import Incomplete, simulate


def test_report_merge_keeps_first_counterexample():
    first = LangCheckReport('x', 3, agree=2, disagree=1, counterexample={'n': 1})
    second = LangCheckReport('x', 5, agree=4, disagree=1, counterexample={'n': 2})
    merged = first.merge(second)
    assert (merged.checked, merged.max_len, merged.counterexample) == (8, 5, {'n': 1})
    assert not merged.passed
    assert merged.to_dict()['disagree'] == 2


class TestFlipFlop:
    @pytest.mark.parametrize('word, member', [('b', True), ('abee', True), ('ba', False), ('', False), ('e', False)])
    def test_membership(self, word, member):
        assert flipflop_member(word) == member

    def test_every_word_up_to_five(self):
        report = check_flipflop(5)
        assert report.passed
        assert report.checked == 3 + 9 + 27 + 81 + 243

    def test_parallel_matches_serial(self):
        assert check_flipflop(4, jobs=2).to_dict() == check_flipflop(4).to_dict()

    def test_empty_word_rejected_by_plan_and_language(self):
        # check_flipflop counts lengths 1..max_len only
        trace, verdict = simulate(flipflop_instance(), ())
        assert isinstance(verdict, Incomplete)
        assert len(trace) == 1
        assert not flipflop_member('')

    @pytest.mark.parametrize('max_len', [0, 15])
    def test_length_limits(self, max_len):
        with pytest.raises(ValueError):
            check_flipflop(max_len)


class TestLightsOut:
    def test_exhaustive_parity(self):
        report = check_parity_reduction(Board(2, 2), max_len=3)
        assert report.passed
        assert report.details['mode'] == 'exhaustive'
        # 16 initial states, every press sequence of length 0..3 over four cells
        assert report.checked == 16 * (1 + 4 + 16 + 64)

    def test_random_parity(self):
        report = check_parity_reduction(Board(3, 3), max_len=30, samples=120, seed=4)
        assert report.passed
        assert report.checked == 120

    def test_exhaustive_limits(self):
        with pytest.raises(ValueError):
            check_parity_reduction(Board(5, 5), max_len=2)

    def test_toggle(self):
        report = check_toggle_identity(Board(3, 3), samples=50, seed=1)
        assert report.passed
        assert report.checked == 100


class TestCompiled:
    def test_cases_cover_every_kind(self):
        sweep = CompiledSweep('colors-wf', fixed=False, lengths=(11, 20))
        kinds = {sample_case(sweep.config(), index, sweep.lengths).kind for index in range(120)}
        assert kinds <= set(CASE_KINDS)
        assert {'valid', 'incomplete', 'empty_plan'} <= kinds

    @pytest.mark.parametrize('variant', ['colors-wf', 'grippers-wf', 'grippers-df'])
    def test_variable_universe(self, variant):
        report = check_compiled_variant(CompiledSweep(variant, fixed=False, seed=2, lengths=(11, 20)), trials=40)
        assert report.passed, report.counterexample
        assert report.checked == 40
        assert report.details['universe'] == 'variable'

    def test_fixed_universe(self):
        sweep = CompiledSweep('colors-wf', fixed=True, seed=3, lengths=(11, 16))
        report = check_compiled_variant(sweep, trials=30)
        assert report.passed, report.counterexample
        assert report.details['universe'] == 'fixed'

    def test_fixed_lights_out(self):
        sweep = CompiledSweep('lightsout-wf', fixed=True, seed=1, lengths=(11, 14), board=Board(2, 2))
        report = check_compiled_variant(sweep, trials=30)
        assert report.passed, report.counterexample


class TestLowering:
    @pytest.mark.parametrize('program', [unique_copy_program(), shift_match_program(1)])
    def test_programs(self, program):
        report = check_lowering(program, values=(1, 2), max_len=4)
        assert report.passed, report.counterexample
        assert report.checked == 2 + 4 + 8 + 16

    def test_suite(self):
        reports = lowering_suite(values=(1, 2), max_len=3)
        assert all(report.passed for report in reports)
        assert len({report.name for report in reports}) == len(reports)

    def test_filtered_match(self):
        b = ProgramBuilder(['a'])
        program = b.build(b.ge_const(b.match([(0, 0, 0)], filter=b.q('a')), 1))
        report = check_lowering(program, values=(1,), max_len=3)
        assert report.passed
        assert report.details['alphabet'] == 2


def test_translation_invariance():
    report = check_translation(samples=60, deltas=(1, 17), seed=2, max_input=12)
    assert report.passed, report.counterexample
    assert report.checked == 120


@pytest.mark.slow
def test_lights_out_full_scale():
    board = Board(5, 5)
    parity = check_parity_reduction(board, max_len=200, samples=10000, seed=0, jobs=4)
    assert parity.passed, parity.counterexample
    assert parity.checked == 10000
    toggle = check_toggle_identity(board, samples=1000, seed=0)
    assert toggle.passed, toggle.counterexample
    assert toggle.checked == 2000


@pytest.mark.slow
def test_flipflop_full_range():
    assert check_flipflop(12, jobs=2).passed
