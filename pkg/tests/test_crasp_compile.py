import pytest

from features.builtin_domains import (
    Board,
    colors,
    colors_example_instance,
    colors_example_plans,
    conditional_grippers_instance,
    worked_examples,
    get_variant,
    grippers_example_instance,
    grippers_example_plans,
    heavy_grippers,
    lights_out_well_formed,
)
from features.crasp import SigmaTok, accepts, parse_crasp, serialize_crasp, uses_match
from features.crasp_compile import (
    OUTPUT_LABEL,
    EncodingLayout,
    Mode,
    build_fixed,
    build_variable,
    compile_variable,
    decode,
    encode,
    encoded_length,
    explain,
    object_values,
    objects_only_through_matches,
)
from features.datagen import crasp_layout, object_token_values
from features.errors import CraspError, NotSupported, ObjectCollision, ParseError, UnknownObject
from features.formats import parse_domain
from features.gf2 import solution_presses
from features.strips import GroundAction, is_valid, succ, verdict_of


def valid(instance, plan):
    return is_valid(verdict_of(instance, plan))


class TestEncoding:
    def test_layout(self):
        instance = grippers_example_instance()
        plan = grippers_example_plans()['pi']
        tokens = encode(instance, plan, values=object_token_values(instance.objects))
        assert tokens[0] == SigmaTok('$')
        assert tokens[-1] == SigmaTok('@')
        assert tokens.count(SigmaTok('@')) == 3
        assert len(tokens) == encoded_length(instance, plan)

    def test_decode_inverts_encode(self):
        instance = grippers_example_instance()
        plan = grippers_example_plans()['pi1_prime']
        values = object_token_values(instance.objects)
        for layout in (EncodingLayout(), EncodingLayout(objects_as='sigma')):
            tokens = encode(instance, plan, layout, values)
            assert decode(tokens, instance.domain, instance.objects, layout, values) == (instance.init, plan,
                                                                                           instance.goal)

    def test_default_values_follow_declaration_order(self):
        assert object_values(('x', 'y'), EncodingLayout()) == {'x': 1, 'y': 2}
        assert object_values(('x', 'y'), EncodingLayout(base=0)) == {'x': 0, 'y': 1}

    def test_value_collisions(self):
        with pytest.raises(ObjectCollision):
            object_values(('x', 'y'), EncodingLayout(), {'x': 3, 'y': 3})
        with pytest.raises(UnknownObject):
            object_values(('x', 'y'), EncodingLayout(), {'x': 3})

    def test_negative_goals_need_the_layout(self):
        template = lights_out_well_formed(Board(2, 2))
        with pytest.raises(NotSupported):
            encode(template.instance([(0, 0)]), (), EncodingLayout(objects_as='sigma'))
        tokens = encode(template.instance([(0, 0)]), (), template.layout)
        assert SigmaTok('not') in tokens

    def test_decode_rejects_trailing_tokens(self):
        instance = colors_example_instance()
        tokens = encode(instance, ()) + [SigmaTok('@')]
        with pytest.raises(ParseError):
            decode(tokens, instance.domain, instance.objects)

    def test_layout_symbols_must_differ(self):
        with pytest.raises(ValueError):
            EncodingLayout(start='@')


def test_mode_parse():
    assert Mode.parse('delete-free') is Mode.DELETE_FREE
    assert Mode.parse('WF') is Mode.WELL_FORMED
    with pytest.raises(ValueError):
        Mode.parse('strips')


@pytest.mark.parametrize('variant', ['grippers-wf', 'grippers-df', 'colors-wf'])
def test_variable_verifier_on_worked_examples(variant):
    program = compile_variable(get_variant(variant).domain(), get_variant(variant).compile_mode)
    assert objects_only_through_matches(program)
    checked = 0
    for record in worked_examples():
        if variant not in record.expected:
            continue
        instance = record.instance(variant)
        tokens = encode(instance, record.plan, values=object_token_values(instance.objects))
        assert accepts(program, tokens) == (record.expected[variant] == 'valid'), record.name
        checked += 1
    assert checked >= 3


def test_variable_verifier_ignores_object_names():
    program = compile_variable(colors('well_formed'), Mode.WELL_FORMED)
    instance = colors_example_instance()
    for name, plan in colors_example_plans().items():
        renamed = {obj: 1000 + 7 * k for k, obj in enumerate(reversed(instance.objects))}
        assert accepts(program, encode(instance, plan, values=renamed)) == valid(instance, plan), name


def test_fixed_verifier_on_colors():
    instance = colors_example_instance()
    values = object_token_values(instance.objects)
    program, report = build_fixed(colors('well_formed'), instance.objects, 'wf', values=values)
    assert not uses_match(program)
    assert not objects_only_through_matches(program)
    assert report.universe == 'fixed'
    assert report.sizes['ground_actions'] == 32
    layout = EncodingLayout(objects_as='sigma')
    for record in worked_examples():
        if 'colors-wf' not in record.expected:
            continue
        target = record.instance('colors-wf')
        tokens = encode(target, record.plan, layout, values)
        assert accepts(program, tokens) == (record.expected['colors-wf'] == 'valid'), record.name


def test_fixed_verifier_on_lights_out():
    board = Board(2, 2)
    template = lights_out_well_formed(board)
    program, _ = build_fixed(template.domain, template.objects, 'wf', template.layout)
    lit = [(0, 0)]
    instance = template.instance(lit)

    plan, state = [], instance.init
    for cell in solution_presses(board, lit):
        plan.append(template.press(cell, state))
        state = succ(template.domain, state, plan[-1])
    plan = tuple(plan)
    bits = template.press_bits(template.press((1, 1), instance.init))
    wrong_bits = GroundAction(f"press-11-{(bits + 1) % 8}")
    candidates = [plan, plan[:-1], (), (wrong_bits,) + plan]
    assert valid(instance, plan)

    layout = crasp_layout(get_variant('lightsout-wf'))
    for candidate in candidates:
        assert accepts(program, encode(instance, candidate, layout)) == valid(instance, candidate), candidate


SHARED_NAME_DOMAIN = """
(domain shared
  (predicates (at ?x) (move ?x))
  (action move
    (parameters ?x)
    (pre (at ?x))
    (effect (not (at ?x)))))
"""


class TestSupport:
    def test_conditional_effects(self):
        with pytest.raises(NotSupported):
            build_variable(heavy_grippers('conditional'), 'wf')
        with pytest.raises(NotSupported):
            build_fixed(conditional_grippers_instance().domain, ('B1', 'RA', 'G1'), 'df')

    def test_mode_must_fit_the_domain(self):
        with pytest.raises(NotSupported):
            build_variable(heavy_grippers('well_formed'), 'df')
        with pytest.raises(NotSupported):
            build_variable(colors('strips'), 'wf')

    def test_constants_need_a_fixed_universe(self):
        with pytest.raises(NotSupported):
            build_variable(lights_out_well_formed(Board(2, 2)).domain, 'wf')

    def test_predicate_and_schema_names_disjoint(self):
        domain = parse_domain(SHARED_NAME_DOMAIN)
        with pytest.raises(CraspError, match='move'):
            build_variable(domain, 'wf')
        with pytest.raises(CraspError, match='move'):
            build_fixed(domain, ('a', 'b'), 'wf')


class TestReport:
    def test_provenance(self):
        program, report = build_variable(colors('well_formed'), 'wf')
        assert report.lines == len(program) == len(report.provenance)
        assert explain(program, report, len(program)) == OUTPUT_LABEL
        assert report.sizes['match_lines'] > 0
        assert report.to_dict()['mode'] == 'wf'
        assert set(report.sections()) >= {'CountSep', 'AllActionsValid', 'AllGoalsMet'}
        with pytest.raises(ValueError):
            explain(program, report, 0)

    def test_serialized_program_reads_back(self):
        program, report = build_variable(heavy_grippers('delete_free'), 'df')
        text = serialize_crasp(program, report.provenance)
        assert parse_crasp(text) == program
