import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from features.builtin_domains import (
    colors,
    colors_example_instance,
    colors_example_plans,
    conditional_grippers_instance,
    conditional_grippers_plan,
    grippers_example_instance,
    grippers_example_plans,
    heavy_grippers,
)
from features.errors import (
    ActionNotApplicable,
    ArityMismatch,
    ConflictingEffects,
    DomainError,
    PlanNotExecutable,
    UnknownObject,
    UnknownSchema,
)
from features.strips import (
    ActionSchema,
    ConditionalEffect,
    Domain,
    GroundAction,
    Incomplete,
    Instance,
    NonExecutable,
    PredicateDef,
    Proposition,
    Valid,
    applicable,
    applicable_actions,
    audit_well_formed_trace,
    classify_domain,
    ground_all,
    ground_propositions,
    holds,
    neg,
    pos,
    simulate,
    succ,
)

P = (PredicateDef('p', 1),)


def toy(*schemas):
    return Domain('toy', P, schemas)


def p(x):
    return Proposition('p', (x,))


class TestSemantics:
    def test_delete_then_add_within_one_effect_set(self):
        swap = ActionSchema('swap', ('?x', '?y'), frozenset(), (ConditionalEffect(frozenset(), {pos('p', '?x'), neg('p', '?y')}),))
        domain = toy(swap)
        assert succ(domain, frozenset([p('a')]), GroundAction('swap', ('a', 'a'))) == {p('a')}
        assert succ(domain, frozenset([p('b')]), GroundAction('swap', ('a', 'b'))) == {p('a')}

    def test_conflicting_conditional_effects(self):
        clash = ActionSchema('clash', ('?x', '?y'), frozenset(), (
            ConditionalEffect(frozenset(), {pos('p', '?x')}),
            ConditionalEffect(frozenset(), {neg('p', '?y')}),
        ))
        with pytest.raises(ConflictingEffects):
            succ(toy(clash), frozenset(), GroundAction('clash', ('a', 'a')))

    def test_conditions_read_the_pre_state(self):
        flip = ActionSchema('flip', ('?x',), frozenset(), (
            ConditionalEffect({pos('p', '?x')}, {neg('p', '?x')}),
            ConditionalEffect({neg('p', '?x')}, {pos('p', '?x')}),
        ))
        domain = toy(flip)
        action = GroundAction('flip', ('a',))
        assert succ(domain, frozenset([p('a')]), action) == frozenset()
        assert succ(domain, frozenset(), action) == {p('a')}

    def test_inapplicable_successor_raises_unless_forced(self):
        need = ActionSchema('need', ('?x',), {pos('p', '?x')}, (ConditionalEffect(frozenset(), {neg('p', '?x')}),))
        domain = toy(need)
        with pytest.raises(ActionNotApplicable):
            succ(domain, frozenset(), GroundAction('need', ('a',)))
        assert succ(domain, frozenset(), GroundAction('need', ('a',)), force=True) == frozenset()

    def test_holds_with_negative_literals(self):
        state = frozenset([p('a')])
        assert holds(state, [pos('p', 'a'), neg('p', 'b')])
        assert not holds(state, [neg('p', 'a')])
        assert holds(state, [])


class TestConstruction:
    def test_unbound_variable(self):
        with pytest.raises(DomainError):
            ActionSchema('bad', ('?x',), {pos('p', '?y')})

    def test_parameters_must_be_variables(self):
        with pytest.raises(DomainError):
            ActionSchema('bad', ('x',))

    def test_inconsistent_effect_set(self):
        with pytest.raises(DomainError):
            ConditionalEffect(frozenset(), {pos('p', '?x'), neg('p', '?x')})

    def test_unknown_predicate_in_schema(self):
        with pytest.raises(DomainError):
            toy(ActionSchema('bad', ('?x',), {pos('q', '?x')}))

    def test_duplicate_schema(self):
        schema = ActionSchema('a')
        with pytest.raises(DomainError):
            toy(schema, schema)

    def test_goal_must_be_ground_and_known(self):
        domain = toy()
        with pytest.raises(DomainError):
            Instance(domain, ('a',), frozenset(), {pos('p', '?x')})
        with pytest.raises(DomainError):
            Instance(domain, ('a',), frozenset(), {pos('p', 'b')})
        with pytest.raises(DomainError):
            Instance(domain, ('a', 'a'), frozenset(), frozenset())


class TestSimulate:
    def test_grippers_example(self):
        instance = grippers_example_instance()
        plans = grippers_example_plans()

        trace, verdict = simulate(instance, plans['pi'])
        assert isinstance(verdict, Valid)
        assert len(trace) == len(plans['pi']) + 1
        assert trace[0] == instance.init

        trace, verdict = simulate(instance, plans['pi2_prime'])
        assert isinstance(verdict, NonExecutable)
        assert verdict.step == 8
        assert verdict.action == plans['pi2_prime'][-1]
        assert len(trace) == 8

        _, verdict = simulate(instance, plans['pi1_prime'])
        assert isinstance(verdict, Incomplete)
        assert verdict.to_dict()['status'] == 'incomplete'

    def test_conditional_pick(self):
        instance = conditional_grippers_instance()
        plan = conditional_grippers_plan()
        assert isinstance(simulate(instance, plan)[1], Valid)

        # without the two recharging moves the heavy pick fails
        _, verdict = simulate(instance, plan[:4] + plan[6:])
        assert isinstance(verdict, NonExecutable)
        assert verdict.step == 5
        assert verdict.literal == pos('charged')

    def test_empty_plan(self):
        instance = colors_example_instance()
        _, verdict = simulate(instance, ())
        assert isinstance(verdict, Incomplete)
        assert list(verdict.unsatisfied) == sorted(instance.goal)
        assert isinstance(simulate(instance.with_goal(()), ())[1], Valid)

    def test_reference_errors(self):
        instance = colors_example_instance()
        with pytest.raises(UnknownSchema):
            simulate(instance, (GroundAction('paint', ('object_3', 'object_5')),))
        with pytest.raises(UnknownObject):
            simulate(instance, (GroundAction('add', ('object_3', 'object_99')),))
        with pytest.raises(ArityMismatch):
            simulate(instance, (GroundAction('add', ('object_3',)),))


class TestClassification:
    @pytest.mark.parametrize('domain, label', [
        (heavy_grippers('well_formed'), 'well_formed'),
        (heavy_grippers('delete_free'), 'delete_free'),
        (heavy_grippers('conditional'), 'conditional_effects'),
        (colors('well_formed'), 'well_formed'),
        (colors('strips'), 'strips'),
    ])
    def test_labels(self, domain, label):
        assert classify_domain(domain).label == label

    def test_audit_on_well_formed_plan(self):
        assert audit_well_formed_trace(grippers_example_instance(), grippers_example_plans()['pi']) == []

    def test_audit_flags_idle_effects(self):
        instance = colors_example_instance('strips')
        violations = audit_well_formed_trace(instance, colors_example_plans()['pi2'])
        steps = {(v.step, v.kind) for v in violations}
        assert (1, 'already_satisfied') in steps
        assert (3, 'already_satisfied') in steps

    def test_audit_needs_executable_plan(self):
        with pytest.raises(PlanNotExecutable):
            audit_well_formed_trace(grippers_example_instance(), grippers_example_plans()['pi2_prime'])


SMALL_OBJECTS = ('o1', 'o2', 'o3')
GRIPPER_PROPS = ground_propositions(heavy_grippers('well_formed'), SMALL_OBJECTS)


@settings(max_examples=60, deadline=None)
@given(st.sets(st.sampled_from(GRIPPER_PROPS), max_size=12))
def test_lazy_grounding_matches_full_grounding(props):
    domain = heavy_grippers('well_formed')
    state = frozenset(props)
    expected = sorted(a for a in ground_all(domain, SMALL_OBJECTS) if applicable(domain, state, a))
    assert applicable_actions(domain, state, SMALL_OBJECTS) == expected


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_delete_free_states_only_grow(seed):
    rng = np.random.default_rng(seed)
    instance = grippers_example_instance('delete_free')
    state = instance.init
    for _ in range(15):
        options = applicable_actions(instance.domain, state, instance.objects)
        if not options:
            break
        following = succ(instance.domain, state, options[int(rng.integers(len(options)))])
        assert state <= following
        state = following
