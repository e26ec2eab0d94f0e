"""
STRIPS core - grounding, satisfaction, successor states, plan simulation and
domain classification for STRIPS planning with conditional effects.

Predicates, schemas and objects are referred to by name; a schema variable is
any term starting with '?', every other term is an object name.
"""

from __future__ import annotations

import itertools
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from features.errors import (
    ActionNotApplicable,
    ArityMismatch,
    ConflictingEffects,
    DomainError,
    PlanNotExecutable,
    UnknownObject,
    UnknownSchema,
)


def is_variable(term: str) -> bool:
    return term.startswith('?')


@dataclass(frozen=True, order=True)
class PredicateDef:
    name: str
    arity: int

    def __post_init__(self):
        if self.arity < 0:
            raise DomainError(f"predicate {self.name} has negative arity")


@dataclass(frozen=True, order=True)
class Proposition:
    predicate: str
    args: Tuple[str, ...] = ()

    def __str__(self):
        return f"{self.predicate}({','.join(self.args)})"


@dataclass(frozen=True, order=True)
class Literal:
    predicate: str
    args: Tuple[str, ...] = ()
    positive: bool = True

    @property
    def is_ground(self) -> bool:
        return not any(is_variable(term) for term in self.args)

    @property
    def proposition(self) -> Proposition:
        return Proposition(self.predicate, self.args)

    def negate(self) -> Literal:
        return Literal(self.predicate, self.args, not self.positive)

    def substitute(self, binding: Mapping[str, str]) -> Literal:
        return Literal(self.predicate, tuple(binding.get(t, t) for t in self.args), self.positive)

    def variables(self) -> Tuple[str, ...]:
        return tuple(t for t in self.args if is_variable(t))

    def __str__(self):
        text = f"{self.predicate}({','.join(self.args)})"
        return text if self.positive else f"not {text}"


def pos(predicate: str, *args: str) -> Literal:
    """Positive literal"""
    return Literal(predicate, tuple(args), True)


def neg(predicate: str, *args: str) -> Literal:
    """Negative literal"""
    return Literal(predicate, tuple(args), False)


def literal_of(proposition: Proposition, positive: bool = True) -> Literal:
    return Literal(proposition.predicate, proposition.args, positive)


def _check_consistent(literals: Iterable[Literal], where: str):
    literals = frozenset(literals)
    for lit in literals:
        if lit.positive and lit.negate() in literals:
            raise DomainError(f"{where}: {lit} and its negation in one set")


@dataclass(frozen=True)
class ConditionalEffect:
    """Cond |> Eff; an unconditional effect has an empty condition"""
    condition: FrozenSet[Literal] = frozenset()
    effect: FrozenSet[Literal] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, 'condition', frozenset(self.condition))
        object.__setattr__(self, 'effect', frozenset(self.effect))
        _check_consistent(self.effect, "effect set")


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: Tuple[str, ...] = ()
    pre: FrozenSet[Literal] = frozenset()
    effects: Tuple[ConditionalEffect, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'params', tuple(self.params))
        object.__setattr__(self, 'pre', frozenset(self.pre))
        # No effects at all is the STRIPS action with an empty effect set
        object.__setattr__(self, 'effects', tuple(self.effects) or (ConditionalEffect(),))

        for param in self.params:
            if not is_variable(param):
                raise DomainError(f"schema {self.name}: parameter {param} must start with '?'")
        if len(set(self.params)) != len(self.params):
            raise DomainError(f"schema {self.name}: repeated parameter")
        bound = set(self.params)
        for lit in self.literals():
            for var in lit.variables():
                if var not in bound:
                    raise DomainError(f"schema {self.name}: unbound variable {var} in {lit}")

    @property
    def arity(self) -> int:
        return len(self.params)

    @property
    def is_strips(self) -> bool:
        return len(self.effects) == 1 and not self.effects[0].condition

    def literals(self) -> Iterator[Literal]:
        yield from self.pre
        for ce in self.effects:
            yield from ce.condition
            yield from ce.effect


@dataclass(frozen=True)
class Domain:
    name: str
    predicates: Tuple[PredicateDef, ...] = ()
    schemas: Tuple[ActionSchema, ...] = ()
    _predicate_index: Dict[str, PredicateDef] = field(init=False, repr=False, compare=False, hash=False)
    _schema_index: Dict[str, ActionSchema] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, 'predicates', tuple(self.predicates))
        object.__setattr__(self, 'schemas', tuple(self.schemas))

        predicate_index = {p.name: p for p in self.predicates}
        if len(predicate_index) != len(self.predicates):
            raise DomainError(f"domain {self.name}: duplicate predicate name")
        schema_index = {s.name: s for s in self.schemas}
        if len(schema_index) != len(self.schemas):
            raise DomainError(f"domain {self.name}: duplicate schema name")
        object.__setattr__(self, '_predicate_index', predicate_index)
        object.__setattr__(self, '_schema_index', schema_index)

        for schema in self.schemas:
            for lit in schema.literals():
                self.check_literal(lit, f"schema {schema.name}")

    def check_literal(self, lit: Literal, where: str = ''):
        predicate = self._predicate_index.get(lit.predicate)
        if predicate is None:
            raise DomainError(f"{where}: unknown predicate {lit.predicate}")
        if len(lit.args) != predicate.arity:
            raise DomainError(
                f"{where}: predicate {lit.predicate} takes {predicate.arity} arguments, got {len(lit.args)}")

    def predicate(self, name: str) -> PredicateDef:
        try:
            return self._predicate_index[name]
        except KeyError:
            raise DomainError(f"unknown predicate {name}") from None

    def schema(self, name: str) -> ActionSchema:
        try:
            return self._schema_index[name]
        except KeyError:
            raise UnknownSchema(f"unknown action schema {name}") from None

    def has_predicate(self, name: str) -> bool:
        return name in self._predicate_index

    def has_schema(self, name: str) -> bool:
        return name in self._schema_index


State = FrozenSet[Proposition]


@dataclass(frozen=True, order=True)
class GroundAction:
    schema: str
    args: Tuple[str, ...] = ()

    def __str__(self):
        return f"{self.schema}({','.join(self.args)})"


Plan = Tuple[GroundAction, ...]


@dataclass(frozen=True)
class Instance:
    domain: Domain
    objects: Tuple[str, ...]
    init: FrozenSet[Proposition]
    goal: FrozenSet[Literal]
    name: str = 'instance'
    _object_set: FrozenSet[str] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, 'objects', tuple(self.objects))
        object.__setattr__(self, 'init', frozenset(self.init))
        object.__setattr__(self, 'goal', frozenset(self.goal))
        object.__setattr__(self, '_object_set', frozenset(self.objects))

        if len(self._object_set) != len(self.objects):
            raise DomainError(f"instance {self.name}: duplicate object")
        for prop in self.init:
            self.domain.check_literal(literal_of(prop), f"instance {self.name} init")
            self._check_objects(prop.args, f"init {prop}")
        for lit in self.goal:
            self.domain.check_literal(lit, f"instance {self.name} goal")
            if not lit.is_ground:
                raise DomainError(f"instance {self.name}: goal literal {lit} is not ground")
            self._check_objects(lit.args, f"goal {lit}")
        _check_consistent(self.goal, f"instance {self.name} goal")

    def _check_objects(self, args, where):
        for arg in args:
            if arg not in self._object_set:
                raise DomainError(f"instance {self.name}: {where} mentions unknown object {arg}")

    def has_object(self, name: str) -> bool:
        return name in self._object_set

    def with_goal(self, goal: Iterable[Literal]) -> Instance:
        return replace(self, goal=frozenset(goal))

    def with_init(self, init: Iterable[Proposition]) -> Instance:
        return replace(self, init=frozenset(init))


# Verdicts

@dataclass(frozen=True)
class Valid:
    status = 'valid'

    def to_dict(self):
        return {'status': self.status}

    def __str__(self):
        return 'valid'


@dataclass(frozen=True)
class NonExecutable:
    step: int
    literal: Literal
    action: GroundAction
    status = 'non_executable'

    def to_dict(self):
        return {'status': self.status, 'step': self.step, 'action': str(self.action), 'literal': str(self.literal)}

    def __str__(self):
        return f"non-executable at step {self.step}: {self.action} needs {self.literal}"


@dataclass(frozen=True)
class Incomplete:
    unsatisfied: Tuple[Literal, ...]
    status = 'incomplete'

    def to_dict(self):
        return {'status': self.status, 'unsat_goals': [str(lit) for lit in self.unsatisfied]}

    def __str__(self):
        return f"incomplete: {', '.join(str(lit) for lit in self.unsatisfied)} not reached"


Verdict = Union[Valid, NonExecutable, Incomplete]


def is_valid(verdict: Verdict) -> bool:
    return isinstance(verdict, Valid)


# Grounding

@dataclass(frozen=True)
class GroundEffect:
    condition_pos: FrozenSet[Proposition]
    condition_neg: FrozenSet[Proposition]
    literals: Tuple[Literal, ...]
    add: FrozenSet[Proposition]
    delete: FrozenSet[Proposition]

    def triggers(self, state: State) -> bool:
        return self.condition_pos <= state and self.condition_neg.isdisjoint(state)


@dataclass(frozen=True)
class GroundOperator:
    action: GroundAction
    pre: Tuple[Literal, ...]
    pre_pos: FrozenSet[Proposition]
    pre_neg: FrozenSet[Proposition]
    effects: Tuple[GroundEffect, ...]

    def is_applicable(self, state: State) -> bool:
        return self.pre_pos <= state and self.pre_neg.isdisjoint(state)

    def first_violation(self, state: State) -> Optional[Literal]:
        if self.is_applicable(state):
            return None
        for lit in self.pre:
            if (lit.proposition in state) != lit.positive:
                return lit
        return None

    def triggered(self, state: State) -> List[GroundEffect]:
        return [eff for eff in self.effects if eff.triggers(state)]

    def apply(self, state: State) -> State:
        triggered = self.triggered(state)
        if len(triggered) == 1:
            return (state - triggered[0].delete) | triggered[0].add

        adds = frozenset().union(*(eff.add for eff in triggered))
        deletes = frozenset().union(*(eff.delete for eff in triggered))
        if adds & deletes:
            # Within one effect set deletes-before-adds is fine, across sets it is a conflict
            for i, first in enumerate(triggered):
                for j, second in enumerate(triggered):
                    clash = first.add & second.delete
                    if i != j and clash:
                        p = min(clash)
                        raise ConflictingEffects(f"{self.action}: triggered effects assert both {p} and not {p}")
        return (state - deletes) | adds


def _split(literals: Iterable[Literal]) -> Tuple[FrozenSet[Proposition], FrozenSet[Proposition]]:
    literals = list(literals)
    return (frozenset(l.proposition for l in literals if l.positive),
            frozenset(l.proposition for l in literals if not l.positive))


@lru_cache(maxsize=1 << 16)
def instantiate(schema: ActionSchema, args: Tuple[str, ...]) -> GroundOperator:
    """Substitute objects for the schema parameters"""
    if len(args) != schema.arity:
        raise ArityMismatch(f"{schema.name} takes {schema.arity} arguments, got {len(args)}")
    binding = dict(zip(schema.params, args))
    pre = tuple(sorted(lit.substitute(binding) for lit in schema.pre))
    pre_pos, pre_neg = _split(pre)

    effects = []
    for ce in schema.effects:
        condition_pos, condition_neg = _split(lit.substitute(binding) for lit in ce.condition)
        literals = tuple(sorted(lit.substitute(binding) for lit in ce.effect))
        add, delete = _split(literals)
        effects.append(GroundEffect(condition_pos, condition_neg, literals, add, delete))
    return GroundOperator(GroundAction(schema.name, tuple(args)), pre, pre_pos, pre_neg, tuple(effects))


def ground_operator(domain: Domain, action: GroundAction) -> GroundOperator:
    return instantiate(domain.schema(action.schema), tuple(action.args))


def ground_schema(schema: ActionSchema, objects: Sequence[str]) -> List[GroundAction]:
    """All |objects|^|params| groundings, lexicographic over object indices"""
    return [GroundAction(schema.name, combo) for combo in itertools.product(objects, repeat=schema.arity)]


def ground_all(domain: Domain, objects: Sequence[str]) -> List[GroundAction]:
    return [action for schema in domain.schemas for action in ground_schema(schema, objects)]


def ground_propositions(domain: Domain, objects: Sequence[str]) -> List[Proposition]:
    return [Proposition(p.name, combo)
            for p in domain.predicates
            for combo in itertools.product(objects, repeat=p.arity)]


def _join_order(literals: Sequence[Literal], facts_by_predicate) -> List[Literal]:
    """Smallest relation first, then always the literal with most variables already bound"""
    remaining = sorted(literals, key=lambda lit: (len(facts_by_predicate.get(lit.predicate, ())), lit))
    order: List[Literal] = []
    bound: set = set()
    while remaining:
        best = max(remaining, key=lambda lit: sum(v in bound for v in lit.variables()) - len(set(lit.variables())))
        remaining.remove(best)
        order.append(best)
        bound.update(best.variables())
    return order


def _bindings(literals, binding, facts_by_predicate, state):
    if not literals:
        yield binding
        return
    lit, rest = literals[0], literals[1:]
    if all(not is_variable(term) or term in binding for term in lit.args):
        if Proposition(lit.predicate, tuple(binding.get(term, term) for term in lit.args)) in state:
            yield from _bindings(rest, binding, facts_by_predicate, state)
        return
    for args in facts_by_predicate.get(lit.predicate, ()):
        extended = dict(binding)
        for term, value in zip(lit.args, args):
            if is_variable(term):
                if extended.setdefault(term, value) != value:
                    break
            elif term != value:
                break
        else:
            yield from _bindings(rest, extended, facts_by_predicate, state)


def applicable_actions(domain: Domain, state: State, objects: Sequence[str],
                       schemas: Optional[Iterable[str]] = None) -> List[GroundAction]:
    """Lazy grounding: only the actions applicable in state, sorted

    Variables bound by positive preconditions are joined against the facts in
    state; the remaining ones range over all objects.
    """
    facts_by_predicate = defaultdict(list)
    for prop in state:
        facts_by_predicate[prop.predicate].append(prop.args)

    chosen = domain.schemas if schemas is None else [domain.schema(name) for name in schemas]
    result = []
    for schema in chosen:
        positives = _join_order([lit for lit in schema.pre if lit.positive], facts_by_predicate)
        for binding in _bindings(positives, {}, facts_by_predicate, state):
            free = [v for v in schema.params if v not in binding]
            for combo in itertools.product(objects, repeat=len(free)):
                full = {**binding, **dict(zip(free, combo))} if free else binding
                args = tuple(full[v] for v in schema.params)
                if instantiate(schema, args).is_applicable(state):
                    result.append(GroundAction(schema.name, args))
    return sorted(result)


# Semantics

def holds(state: State, literals: Iterable[Literal]) -> bool:
    """S |= L: positive literals in S, negative ones absent"""
    for lit in literals:
        if (lit.proposition in state) != lit.positive:
            return False
    return True


def applicable(domain: Domain, state: State, action: GroundAction) -> bool:
    return ground_operator(domain, action).is_applicable(state)


def succ(domain: Domain, state: State, action: GroundAction, force: bool = False) -> State:
    """Successor state; conditions are evaluated against the pre-state only"""
    operator = ground_operator(domain, action)
    if not force and not operator.is_applicable(state):
        raise ActionNotApplicable(f"{action} is not applicable: needs {operator.first_violation(state)}")
    return operator.apply(state)


def check_action(instance: Instance, action: GroundAction):
    schema = instance.domain.schema(action.schema)
    if len(action.args) != schema.arity:
        raise ArityMismatch(f"{action}: {schema.name} takes {schema.arity} arguments")
    for arg in action.args:
        if not instance.has_object(arg):
            raise UnknownObject(f"{action}: unknown object {arg}")


def simulate(instance: Instance, plan: Sequence[GroundAction]) -> Tuple[Tuple[State, ...], Verdict]:
    """Run plan from the initial state; the trace stops at the first inapplicable action"""
    domain = instance.domain
    state = instance.init
    trace = [state]
    for step, action in enumerate(plan, start=1):
        check_action(instance, action)
        operator = ground_operator(domain, action)
        violated = operator.first_violation(state)
        if violated is not None:
            return tuple(trace), NonExecutable(step, violated, action)
        state = operator.apply(state)
        trace.append(state)

    unsatisfied = tuple(sorted(lit for lit in instance.goal if (lit.proposition in state) != lit.positive))
    if unsatisfied:
        return tuple(trace), Incomplete(unsatisfied)
    return tuple(trace), Valid()


def verdict_of(instance: Instance, plan: Sequence[GroundAction]) -> Verdict:
    return simulate(instance, plan)[1]


# Classification

@dataclass(frozen=True)
class DomainClass:
    strips: bool
    delete_free: bool
    well_formed_syntax: bool

    @property
    def conditional_effects(self) -> bool:
        return not self.strips

    @property
    def label(self) -> str:
        if self.delete_free:
            return 'delete_free'
        if self.well_formed_syntax:
            return 'well_formed'
        if self.strips:
            return 'strips'
        return 'conditional_effects'

    def to_dict(self):
        return {
            'conditional_effects': self.conditional_effects,
            'strips': self.strips,
            'delete_free': self.delete_free,
            'well_formed_syntax': self.well_formed_syntax,
            'label': self.label,
        }


def classify_domain(domain: Domain) -> DomainClass:
    strips = all(schema.is_strips for schema in domain.schemas)
    delete_free = strips and all(
        lit.positive for schema in domain.schemas for lit in schema.effects[0].effect)
    # Every effect literal's complement is a precondition: the effect always flips its proposition
    well_formed = strips and all(
        lit.negate() in schema.pre for schema in domain.schemas for lit in schema.effects[0].effect)
    return DomainClass(strips=strips, delete_free=delete_free, well_formed_syntax=well_formed)


@dataclass(frozen=True, order=True)
class WellFormedViolation:
    step: int
    literal: Literal
    action: GroundAction
    kind: str  # already_satisfied | duplicate

    def to_dict(self):
        return {'step': self.step, 'action': str(self.action), 'literal': str(self.literal), 'kind': self.kind}


def audit_well_formed_trace(instance: Instance, plan: Sequence[GroundAction]) -> List[WellFormedViolation]:
    """Steps where an effect literal did not change its proposition"""
    trace, verdict = simulate(instance, plan)
    if isinstance(verdict, NonExecutable):
        raise PlanNotExecutable(verdict)

    violations = []
    for step, (state, action) in enumerate(zip(trace, plan), start=1):
        operator = ground_operator(instance.domain, action)
        counts = Counter()
        for effect in operator.triggered(state):
            for lit in effect.literals:
                counts[lit.proposition] += 1
                if (lit.proposition in state) == lit.positive:
                    violations.append(WellFormedViolation(step, lit, action, 'already_satisfied'))
        for prop, count in sorted(counts.items()):
            if count > 1:
                violations.append(WellFormedViolation(step, literal_of(prop), action, 'duplicate'))
    return sorted(violations)
