import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from features.builtin_domains import (
    VARIANTS,
    Board,
    actions,
    board_of,
    builtin_domains,
    worked_examples,
    flipflop_instance,
    flipflop_plan,
    get_variant,
    lights_out_conditional,
    lights_out_well_formed,
    template_of,
)
from features.crasp_compile import Mode
from features.errors import DomainError
from features.strips import GroundAction, applicable, classify_domain, succ, verdict_of


@pytest.mark.parametrize('record', worked_examples(), ids=lambda r: r.name)
def test_worked_examples(record):
    for variant, status in record.expected.items():
        assert verdict_of(record.instance(variant), record.plan).status == status, variant


class TestRegistry:
    def test_variants(self):
        assert set(VARIANTS) == {'grippers-wf', 'grippers-df', 'colors-wf', 'colors-strips',
                                 'lightsout-ce', 'lightsout-wf'}
        for name, variant in VARIANTS.items():
            assert VARIANTS[variant.sibling].sibling == name
            assert variant.domain(Board(2, 2)).name == name

    def test_compile_modes(self):
        assert get_variant('grippers-df').compile_mode is Mode.DELETE_FREE
        assert get_variant('lightsout-wf').compile_mode is Mode.WELL_FORMED
        assert get_variant('colors-strips').compile_mode is None
        assert get_variant('lightsout-ce').compile_mode is None

    def test_unknown_variant(self):
        with pytest.raises(DomainError):
            get_variant('blocks')

    def test_builtin_domains(self):
        domains = builtin_domains(Board(2, 2))
        assert {'grippers-ce', 'flipflop'} <= set(domains)
        assert classify_domain(domains['lightsout-ce']).label == 'conditional_effects'
        assert classify_domain(domains['lightsout-wf']).label == 'well_formed'


class TestBoard:
    def test_neighborhood(self):
        board = Board()
        assert board.neighborhood((0, 0)) == [(0, 0), (0, 1), (1, 0)]
        assert board.neighborhood((2, 2)) == [(2, 2), (1, 2), (2, 1), (2, 3), (3, 2)]

    def test_labels(self):
        assert Board().light((3, 4)) == 'L34'
        assert Board(11, 2).light((10, 1)) == 'L10_1'
        assert Board(11, 2).cell_of('L10_1') == (10, 1)
        with pytest.raises(DomainError):
            Board(2, 2).cell_of('L5')

    def test_board_of(self):
        board = Board(2, 3)
        assert board_of(board.light(cell) for cell in board.cells()) == board
        with pytest.raises(DomainError):
            board_of(['L00', 'L11'])
        with pytest.raises(DomainError):
            Board(0, 3)

    def test_template_of(self):
        template = lights_out_well_formed(Board(3, 2))
        assert template_of(template.instance([(1, 1)])) is template
        with pytest.raises(DomainError):
            template_of(flipflop_instance())


class TestLightsOut:
    def test_schema_counts(self):
        board = Board(2, 2)
        assert len(lights_out_conditional(board).domain.schemas) == 4
        # every 2x2 neighborhood has three cells
        assert len(lights_out_well_formed(board).domain.schemas) == 4 * 8

    def test_press_names(self):
        template = lights_out_well_formed(Board(2, 2))
        state = template.state([(0, 1)])
        action = template.press((0, 0), state)
        assert action == GroundAction('press-00-2')
        assert template.pressed_cell(action) == (0, 0)
        assert template.press_bits(action) == 2
        with pytest.raises(DomainError):
            template.press((0, 0))
        assert lights_out_conditional(Board(2, 2)).press((1, 0)) == GroundAction('press-10')

    def test_press_bits_follow_neighborhood_order(self):
        # self first, then neighbors row-major: (0, 0), (0, 1), (1, 0)
        template = lights_out_well_formed(Board())
        assert template.press((0, 0), template.state([(1, 0)])) == GroundAction('press-00-4')
        assert template.press((0, 0), template.state([(0, 0), (1, 0)])) == GroundAction('press-00-5')
        assert template.press_bits(template.press((0, 0), template.state([]))) == 0

    @settings(max_examples=80, deadline=None)
    @given(st.sets(st.tuples(st.integers(0, 1), st.integers(0, 2))), st.tuples(st.integers(0, 1), st.integers(0, 2)))
    def test_variants_agree(self, lit, cell):
        board = Board(2, 3)
        conditional, well_formed = lights_out_conditional(board), lights_out_well_formed(board)
        state = conditional.state(lit)
        press = well_formed.press(cell, state)
        assert applicable(well_formed.domain, state, press)
        after = succ(conditional.domain, state, conditional.press(cell))
        assert after == succ(well_formed.domain, state, press)
        toggled = {other for other in board.neighborhood(cell)}
        assert set(conditional.lit_cells(after)) == set(lit) ^ toggled


class TestFlipFlop:
    @pytest.mark.parametrize('word, status', [
        ('b', 'valid'), ('ab', 'valid'), ('bee', 'valid'), ('ba', 'incomplete'), ('', 'incomplete'),
        ('beae', 'incomplete'), ('aeb', 'valid'),
    ])
    def test_words(self, word, status):
        assert verdict_of(flipflop_instance(), flipflop_plan(word)).status == status

    def test_bad_letter(self):
        with pytest.raises(DomainError):
            flipflop_plan('abc')


def test_actions_helper():
    assert actions('move(a,b)', ' charge() ') == (GroundAction('move', ('a', 'b')), GroundAction('charge'))
    with pytest.raises(DomainError):
        actions('move a b')
