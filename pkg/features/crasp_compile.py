"""
Plan verification compilers - token encoding of (I, plan, G) records and the
construction of C-RASP (fixed object universe) and C*-RASP (any universe)
programs that accept exactly the valid records
"""

from __future__ import annotations

import enum
import re
import time
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

from features.crasp import CraspProgram, ExtTok, MatchCount, SigmaTok, Token
from features.crasp_programs import ProgramBuilder
from features.errors import CraspError, NotSupported, ObjectCollision, ParseError, UnknownObject
from features.strips import (
    Domain,
    GroundAction,
    Instance,
    Literal,
    Plan,
    Proposition,
    check_action,
    classify_domain,
    ground_all,
    ground_operator,
    ground_propositions,
    is_variable,
)
from utils.logger import get_logger

OUTPUT_LABEL = "Φ_valid = AllActionsValid ∧ AllGoalsMet"


class Mode(enum.Enum):
    DELETE_FREE = 'df'
    WELL_FORMED = 'wf'

    @classmethod
    def parse(cls, value) -> Mode:
        if isinstance(value, cls):
            return value
        aliases = {'df': cls.DELETE_FREE, 'delete_free': cls.DELETE_FREE,
                   'wf': cls.WELL_FORMED, 'well_formed': cls.WELL_FORMED}
        try:
            return aliases[str(value).lower().replace('-', '_')]
        except KeyError:
            raise ValueError(f"unknown compilation mode {value!r} (use wf or df)") from None


# Encoding

@dataclass(frozen=True)
class EncodingLayout:
    """Token layout $ I @ plan @ G @ with objects as extended tokens or #v symbols"""
    start: str = '$'
    sep: str = '@'
    negation: str = 'not'
    base: int = 1
    negative_goals: bool = False
    objects_as: str = 'ext'

    def __post_init__(self):
        if self.objects_as not in ('ext', 'sigma'):
            raise ValueError(f"objects_as must be 'ext' or 'sigma', got {self.objects_as!r}")
        if self.base < 0:
            raise ValueError("object values start at a non-negative base")
        if len({self.start, self.sep, self.negation}) != 3:
            raise ValueError("start, separator and negation symbols must differ")

    @staticmethod
    def value_symbol(value: int) -> str:
        return f"#{value}"


def object_values(objects: Sequence[str], layout: EncodingLayout,
                  values: Optional[Mapping[str, int]] = None) -> Dict[str, int]:
    """Object to extended-token value; declaration order offset by the layout base"""
    if values is None:
        return {obj: layout.base + i for i, obj in enumerate(objects)}
    mapping = {}
    for obj in objects:
        if obj not in values:
            raise UnknownObject(f"no token value for object {obj}")
        mapping[obj] = int(values[obj])
    seen: Dict[int, str] = {}
    for obj, value in mapping.items():
        if value < 0:
            raise ObjectCollision(f"object {obj} has negative value {value}")
        if value in seen:
            raise ObjectCollision(f"objects {seen[value]} and {obj} share value #{value}")
        seen[value] = obj
    return mapping


def layout_sigma(domain: Domain, layout: EncodingLayout,
                 objects: Optional[Sequence[str]] = None,
                 values: Optional[Mapping[str, int]] = None) -> Tuple[str, ...]:
    """Sigma of the token layout; value symbols only when objects are lifted"""
    sigma = [layout.start, layout.sep]
    if layout.negative_goals:
        sigma.append(layout.negation)
    sigma += [p.name for p in domain.predicates]
    sigma += [s.name for s in domain.schemas if s.name not in sigma]
    if layout.objects_as == 'sigma' and objects is not None:
        sigma += [layout.value_symbol(v) for v in object_values(objects, layout, values).values()]
    return tuple(dict.fromkeys(sigma))


def _object_token(layout: EncodingLayout, value: int) -> Token:
    if layout.objects_as == 'sigma':
        return SigmaTok(layout.value_symbol(value))
    return ExtTok(value)


def encode(instance: Instance, plan: Sequence[GroundAction], layout: Optional[EncodingLayout] = None,
           values: Optional[Mapping[str, int]] = None) -> List[Token]:
    """$ init @ plan @ goal @ with sorted init and goal sections"""
    layout = layout or EncodingLayout()
    mapping = object_values(instance.objects, layout, values)

    def item(head: str, args) -> List[Token]:
        return [SigmaTok(head)] + [_object_token(layout, mapping[a]) for a in args]

    tokens: List[Token] = [SigmaTok(layout.start)]
    for prop in sorted(instance.init):
        tokens += item(prop.predicate, prop.args)
    tokens.append(SigmaTok(layout.sep))
    for action in plan:
        check_action(instance, action)
        tokens += item(action.schema, action.args)
    tokens.append(SigmaTok(layout.sep))
    for lit in sorted(instance.goal):
        if not lit.positive:
            if not layout.negative_goals:
                raise NotSupported(f"negative goal {lit} needs a layout with negative goals")
            tokens.append(SigmaTok(layout.negation))
        tokens += item(lit.predicate, lit.args)
    tokens.append(SigmaTok(layout.sep))
    return tokens


def encoded_length(instance: Instance, plan: Sequence[GroundAction]) -> int:
    domain = instance.domain
    size = 4
    size += sum(1 + len(p.args) for p in instance.init)
    size += sum(1 + domain.schema(a.schema).arity for a in plan)
    size += sum(1 + len(g.args) + (0 if g.positive else 1) for g in instance.goal)
    return size


def decode(tokens: Sequence[Token], domain: Domain, objects: Sequence[str],
           layout: Optional[EncodingLayout] = None, values: Optional[Mapping[str, int]] = None,
           ) -> Tuple[FrozenSet[Proposition], Plan, FrozenSet[Literal]]:
    """Inverse of encode: (init, plan, goal)"""
    layout = layout or EncodingLayout()
    by_value = {v: obj for obj, v in object_values(objects, layout, values).items()}
    position = 0

    def take() -> Token:
        nonlocal position
        if position >= len(tokens):
            raise ParseError("encoding ends early", expected=f"'{layout.sep}'")
        token = tokens[position]
        position += 1
        return token

    def is_symbol(token: Token, symbol: str) -> bool:
        return isinstance(token, SigmaTok) and token.symbol == symbol

    def at_sep() -> bool:
        return position < len(tokens) and is_symbol(tokens[position], layout.sep)

    def read_object() -> str:
        token = take()
        value = None
        if isinstance(token, ExtTok) and layout.objects_as == 'ext':
            value = token.value
        elif isinstance(token, SigmaTok) and layout.objects_as == 'sigma':
            found = re.fullmatch(r'#(\d+)', token.symbol)
            value = int(found.group(1)) if found else None
        if value is None or value not in by_value:
            raise ParseError(f"token {token} at position {position} is not an object")
        return by_value[value]

    def read_item(arity_of) -> Tuple[str, Tuple[str, ...]]:
        head = take()
        if not isinstance(head, SigmaTok):
            raise ParseError(f"token {head} at position {position} is not a symbol")
        arity = arity_of(head.symbol)
        return head.symbol, tuple(read_object() for _ in range(arity))

    def predicate_arity(name: str) -> int:
        if not domain.has_predicate(name):
            raise ParseError(f"unknown predicate {name} at position {position}")
        return domain.predicate(name).arity

    def schema_arity(name: str) -> int:
        if not domain.has_schema(name):
            raise ParseError(f"unknown action {name} at position {position}")
        return domain.schema(name).arity

    if not tokens or not is_symbol(take(), layout.start):
        raise ParseError("encoding must start with the start symbol", expected=f"'{layout.start}'")

    init = set()
    while not at_sep():
        init.add(Proposition(*read_item(predicate_arity)))
    take()

    plan = []
    while not at_sep():
        plan.append(GroundAction(*read_item(schema_arity)))
    take()

    goal = set()
    while not at_sep():
        positive = True
        if layout.negative_goals and position < len(tokens) and is_symbol(tokens[position], layout.negation):
            take()
            positive = False
        predicate, args = read_item(predicate_arity)
        goal.add(Literal(predicate, args, positive))
    take()
    if position != len(tokens):
        raise ParseError(f"unexpected tokens after the goal section at position {position + 1}")
    return frozenset(init), tuple(plan), frozenset(goal)


# Compilation

@dataclass(frozen=True)
class CompilationReport:
    """Where every program line came from"""
    universe: str                       # fixed | variable
    mode: Mode
    lines: int
    provenance: Tuple[str, ...]
    sizes: Dict[str, int] = field(default_factory=dict)

    def sections(self) -> Dict[str, int]:
        """Line count per construction step"""
        counts: Dict[str, int] = defaultdict(int)
        for label in self.provenance:
            counts[re.split(r'[ \[(_]', label, maxsplit=1)[0] or label] += 1
        return dict(counts)

    def to_dict(self):
        return {
            'universe': self.universe,
            'mode': self.mode.value,
            'lines': self.lines,
            'sizes': dict(self.sizes),
            'sections': self.sections(),
            'provenance': list(self.provenance),
        }


@dataclass(frozen=True)
class _Sections:
    in_init: int
    in_plan: int
    in_goal: int
    end: int


def _check_supported(domain: Domain, mode: Mode, layout: EncodingLayout, variable: bool):
    # predicate and schema names share the sigma alphabet
    shared = sorted({p.name for p in domain.predicates} & {s.name for s in domain.schemas})
    if shared:
        raise CraspError(f"{domain.name}: {shared[0]!r} names both a predicate and an action schema")
    kind = classify_domain(domain)
    if not kind.strips:
        raise NotSupported(f"{domain.name}: verification with conditional effects cannot be compiled")
    if mode is Mode.DELETE_FREE and not kind.delete_free:
        raise NotSupported(f"{domain.name}: delete-free compilation needs a domain without delete effects")
    if mode is Mode.WELL_FORMED and not kind.well_formed_syntax:
        raise NotSupported(
            f"{domain.name}: well-formed compilation needs every effect to flip a precondition (general STRIPS)")

    names = [p.name for p in domain.predicates] + [s.name for s in domain.schemas]
    for name in names:
        if name in (layout.start, layout.sep, layout.negation) or name.startswith('#'):
            raise NotSupported(f"{domain.name}: name {name!r} clashes with a layout symbol")

    if variable:
        for schema in domain.schemas:
            for lit in schema.literals():
                constants = [a for a in lit.args if not is_variable(a)]
                if constants:
                    raise NotSupported(
                        f"{domain.name}: {schema.name} mentions constant {constants[0]}, "
                        "which the any-universe compiler cannot address")
            effect_keys = [(lit.predicate, lit.positive) for lit in schema.effects[0].effect]
            if len(effect_keys) != len(set(effect_keys)):
                raise NotSupported(
                    f"{domain.name}: {schema.name} has two same-sign effects on one predicate")


def _sections(b: ProgramBuilder, layout: EncodingLayout) -> _Sections:
    with b.step('CountSep'):
        count_sep = b.count(b.q(layout.sep))
    with b.step('InInit'):
        in_init = b.eq_const(count_sep, 0)
    with b.step('InPlan'):
        in_plan = b.eq_const(count_sep, 1)
    with b.step('InGoal'):
        in_goal = b.eq_const(count_sep, 2)
    with b.step('End'):
        end = b.eq_const(count_sep, 3)
    return _Sections(in_init, in_plan, in_goal, end)


def _goal_marker(b: ProgramBuilder, layout: EncodingLayout, head: int, arity: int, positive: bool) -> int:
    """head is the lookback test for the predicate symbol; add the sign test"""
    if not layout.negative_goals:
        return head if positive else b.false()
    negated = b.token_at(layout.negation, arity + 1)
    return b.and_(head, negated if not positive else b.not_(negated))


def _finish(b: ProgramBuilder, invalid: List[int], unsatisfied: List[int], sections: _Sections) -> CraspProgram:
    with b.step('AllActionsValid'):
        all_valid = b.eq_const(b.count(b.or_all(invalid)), 0)
    with b.step('AllGoalsMet'):
        goals_met = b.and_(sections.end, b.eq_const(b.count(b.or_all(unsatisfied)), 0))
    with b.step(OUTPUT_LABEL):
        output = b.and_(all_valid, goals_met)
        return b.build(output)


def build_fixed(domain: Domain, objects: Sequence[str], mode, layout: Optional[EncodingLayout] = None,
                values: Optional[Mapping[str, int]] = None) -> Tuple[CraspProgram, CompilationReport]:
    """Match-free verifier for one object universe; objects are read as #v symbols"""
    started = time.perf_counter()
    mode = Mode.parse(mode)
    layout = replace(layout or EncodingLayout(), objects_as='sigma')
    _check_supported(domain, mode, layout, variable=False)
    mapping = object_values(objects, layout, values)
    symbol_of = {obj: layout.value_symbol(v) for obj, v in mapping.items()}

    b = ProgramBuilder(layout_sigma(domain, layout, objects, values))
    sections = _sections(b, layout)

    def ends_here(head: str, args: Sequence[str]) -> List[int]:
        # head at i - n, argument m at i - n + m
        n = len(args)
        return [b.token_at(head, n)] + [b.token_at(symbol_of[obj], n - m) for m, obj in enumerate(args, start=1)]

    operators = [ground_operator(domain, action) for action in ground_all(domain, objects)]
    propositions = ground_propositions(domain, objects)

    occurs: Dict[GroundAction, int] = {}
    made_true: Dict[Proposition, List[int]] = defaultdict(list)
    made_false: Dict[Proposition, List[int]] = defaultdict(list)
    for operator in operators:
        with b.step(f"Occurs[{operator.action}]"):
            occurs[operator.action] = b.and_all(ends_here(operator.action.schema, operator.action.args) +
                                                [sections.in_plan])
            so_far = b.count(occurs[operator.action])
        effect = operator.effects[0]
        for prop in effect.add:
            made_true[prop].append(so_far)
        for prop in effect.delete:
            made_false[prop].append(so_far)

    holds: Dict[Proposition, int] = {}
    for prop in propositions:
        with b.step(f"Holds[{prop}]"):
            init_seen = b.ge_const(b.count(b.and_all(ends_here(prop.predicate, prop.args) + [sections.in_init])), 1)
            if not made_true[prop] and not made_false[prop]:
                holds[prop] = init_seen
            elif mode is Mode.WELL_FORMED:
                value = b.minus(b.plus(b.indicator(init_seen), b.total(made_true[prop])),
                                b.total(made_false[prop]))
                holds[prop] = b.eq_const(value, 1)
            else:
                holds[prop] = b.or_(init_seen, b.ge_const(b.total(made_true[prop]), 1))

    # Preconditions read the state one position back, before the action's own effects
    invalid = []
    for operator in operators:
        if not operator.pre:
            continue
        with b.step(f"Invalid[{operator.action}]"):
            checks = []
            for lit in operator.pre:
                before = b.ge_const(b.count(holds[lit.proposition], 1), 1)
                checks.append(before if lit.positive else b.not_(before))
            invalid.append(b.and_(occurs[operator.action], b.not_(b.and_all(checks))))

    unsatisfied = []
    for prop in propositions:
        for positive in ((True, False) if layout.negative_goals else (True,)):
            literal = Literal(prop.predicate, prop.args, positive)
            with b.step(f"GoalUnsat[{literal}]"):
                parts = ends_here(prop.predicate, prop.args)
                marker = _goal_marker(b, layout, b.and_all(parts + [sections.in_goal]), len(prop.args), positive)
                satisfied = holds[prop] if positive else b.not_(holds[prop])
                unsatisfied.append(b.and_(marker, b.not_(satisfied)))

    program = _finish(b, invalid, unsatisfied, sections)
    report = CompilationReport('fixed', mode, len(program), tuple(b.provenance[:len(program)]), {
        'objects': len(objects),
        'ground_actions': len(operators),
        'ground_propositions': len(propositions),
    })
    get_logger().log_performance(f"compile_fixed {domain.name}/{mode.value}", time.perf_counter() - started,
                                 f"{len(program)} lines")
    return program, report


def compile_fixed(domain: Domain, objects: Sequence[str], mode, layout: Optional[EncodingLayout] = None,
                  values: Optional[Mapping[str, int]] = None) -> CraspProgram:
    return build_fixed(domain, objects, mode, layout, values)[0]


def build_variable(domain: Domain, mode, layout: Optional[EncodingLayout] = None,
                   ) -> Tuple[CraspProgram, CompilationReport]:
    """Verifier for any object universe; objects are only compared through matches"""
    started = time.perf_counter()
    mode = Mode.parse(mode)
    layout = replace(layout or EncodingLayout(), objects_as='ext')
    _check_supported(domain, mode, layout, variable=True)

    b = ProgramBuilder(layout_sigma(domain, layout))
    sections = _sections(b, layout)

    current: Dict[str, int] = {}
    for schema in domain.schemas:
        with b.step(f"Curr_{schema.name}"):
            current[schema.name] = b.and_(b.token_at(schema.name, schema.arity), sections.in_plan)
    in_init: Dict[str, int] = {}
    for predicate in domain.predicates:
        with b.step(f"CurrInit_{predicate.name}"):
            in_init[predicate.name] = b.and_(b.token_at(predicate.name, predicate.arity), sections.in_init)

    def satisfied(owner: str, predicate: str, gammas: Sequence[int], positive: bool) -> int:
        """Truth test for predicate with argument t read gammas[t] positions back from i"""
        arity = len(gammas)
        with b.step(f"V_init for ({owner}, p={predicate})"):
            if arity == 0:
                initial = b.count(in_init[predicate])
            else:
                initial = b.match([(arity - 1 - t, gamma, 0) for t, gamma in enumerate(gammas)],
                                  filter=in_init[predicate])
            initial = b.indicator(b.ge_const(initial, 1))

        adds, deletes = [], []
        for schema in domain.schemas:
            for lit in sorted(schema.effects[0].effect):
                if lit.predicate != predicate or (mode is Mode.DELETE_FREE and not lit.positive):
                    continue
                kind = 'V_add' if lit.positive else 'V_del'
                with b.step(f"{kind} for ({owner}, β={schema.name}, p={predicate})"):
                    if arity == 0:
                        hits = b.minus(b.count(current[schema.name]), b.indicator(current[schema.name]))
                    else:
                        deltas = [schema.arity - 1 - schema.params.index(arg) for arg in lit.args]
                        hits = b.match(list(zip(deltas, gammas, [0] * arity)),
                                       filter=current[schema.name], strict=True)
                (adds if lit.positive else deletes).append(hits)

        sign = '' if positive else 'not '
        with b.step(f"Sat for ({owner}, {sign}{predicate})"):
            if mode is Mode.WELL_FORMED:
                value = b.minus(b.plus(initial, b.total(adds)), b.total(deletes))
                return b.eq_const(value, 1 if positive else 0)
            value = b.plus(initial, b.total(adds))
            return b.ge_const(value, 1) if positive else b.eq_const(value, 0)

    invalid = []
    for schema in domain.schemas:
        if not schema.pre:
            continue
        owner = f"α={schema.name}"
        checks = []
        for lit in sorted(schema.pre):
            gammas = [schema.arity - 1 - schema.params.index(arg) for arg in lit.args]
            checks.append(satisfied(owner, lit.predicate, gammas, lit.positive))
        with b.step(f"Invalid_{schema.name}"):
            invalid.append(b.and_(current[schema.name], b.not_(b.and_all(checks))))

    unsatisfied = []
    for predicate in domain.predicates:
        gammas = [predicate.arity - 1 - t for t in range(predicate.arity)]
        for positive in ((True, False) if layout.negative_goals else (True,)):
            ok = satisfied('goal', predicate.name, gammas, positive)
            with b.step(f"GoalUnsat_{predicate.name}" + ('' if positive else '_neg')):
                head = b.and_(b.token_at(predicate.name, predicate.arity), sections.in_goal)
                marker = _goal_marker(b, layout, head, predicate.arity, positive)
                unsatisfied.append(b.and_(marker, b.not_(ok)))

    program = _finish(b, invalid, unsatisfied, sections)
    report = CompilationReport('variable', mode, len(program), tuple(b.provenance[:len(program)]), {
        'predicates': len(domain.predicates),
        'schemas': len(domain.schemas),
        'match_lines': sum(isinstance(op, MatchCount) for op in program.ops),
    })
    get_logger().log_performance(f"compile_variable {domain.name}/{mode.value}", time.perf_counter() - started,
                                 f"{len(program)} lines")
    return program, report


def compile_variable(domain: Domain, mode, layout: Optional[EncodingLayout] = None) -> CraspProgram:
    return build_variable(domain, mode, layout)[0]


def explain(program: CraspProgram, report: CompilationReport, line: int) -> str:
    """Construction step behind a 1-based program line"""
    if report.lines != len(program):
        raise ValueError("report does not belong to this program")
    if not 1 <= line <= len(program):
        raise ValueError(f"line {line} is outside 1..{len(program)}")
    return report.provenance[line - 1]


def objects_only_through_matches(program: CraspProgram) -> bool:
    """True when no line reads an object token except through a match"""
    return not any(symbol.startswith('#') for symbol in program.sigma)
