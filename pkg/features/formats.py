"""
Planning file formats - reader and canonical writer for .pdom, .pinst and .pplan

All three are S-expressions. Grammar in docs/formats.md.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

from features.errors import DomainError, ParseError, SourceSpan, UnknownObjectReference, UnknownPredicate
from features.strips import (
    ActionSchema,
    ConditionalEffect,
    Domain,
    GroundAction,
    Instance,
    Literal,
    Plan,
    PredicateDef,
    Proposition,
    is_variable,
)
from utils.file_io import read_text


@dataclass(frozen=True)
class Atom:
    text: str
    span: SourceSpan


@dataclass(frozen=True)
class SList:
    items: Tuple[Union['Atom', 'SList'], ...]
    span: SourceSpan

    def head(self) -> Optional[str]:
        if self.items and isinstance(self.items[0], Atom):
            return self.items[0].text
        return None


Node = Union[Atom, SList]

_TOKEN = re.compile(r'(?P<space>\s+)|(?P<comment>;[^\n]*)|(?P<open>\()|(?P<close>\))|(?P<atom>[^\s();]+)')
_IDENTIFIER = re.compile(r'^[A-Za-z_][A-Za-z0-9_\-]*$')


def read_sexprs(text: str) -> List[Node]:
    """Read every top-level S-expression in text"""
    stack: List[Tuple[List[Node], SourceSpan]] = []
    top: List[Node] = []
    line, column, offset = 1, 1, 0

    for match in _TOKEN.finditer(text):
        chunk = match.group()
        size = len(chunk.encode('utf-8'))
        span = SourceSpan(offset, offset + size, line, column)
        kind = match.lastgroup

        if kind == 'open':
            stack.append(([], span))
        elif kind == 'close':
            if not stack:
                raise ParseError("unbalanced ')'", span)
            items, opened = stack.pop()
            node = SList(tuple(items), SourceSpan(opened.start, span.end, opened.line, opened.column))
            (stack[-1][0] if stack else top).append(node)
        elif kind == 'atom':
            (stack[-1][0] if stack else top).append(Atom(chunk, span))

        offset += size
        newlines = chunk.count('\n')
        if newlines:
            line += newlines
            column = len(chunk) - chunk.rfind('\n')
        else:
            column += len(chunk)

    if stack:
        raise ParseError("unclosed '('", stack[-1][1], expected="')'")
    return top


# Shape checks

def _expect_list(node: Node, what: str) -> SList:
    if not isinstance(node, SList):
        raise ParseError(f"expected {what}, got '{node.text}'", node.span, expected='(')
    return node


def _expect_atom(node: Node, what: str) -> Atom:
    if not isinstance(node, Atom):
        raise ParseError(f"expected {what}, got a list", node.span)
    return node


def _expect_form(node: Node, keyword: str) -> SList:
    form = _expect_list(node, f"({keyword} ...)")
    if form.head() != keyword:
        raise ParseError(f"expected ({keyword} ...)", form.span, expected=keyword)
    return form


def _single_form(text: str, keyword: str) -> SList:
    nodes = read_sexprs(text)
    if not nodes:
        raise ParseError(f"empty input, expected ({keyword} ...)", SourceSpan(0, 0, 1, 1), expected=keyword)
    if len(nodes) > 1:
        raise ParseError("trailing content after the first form", nodes[1].span)
    return _expect_form(nodes[0], keyword)


def _name(node: Node, what: str) -> str:
    atom = _expect_atom(node, what)
    if not _IDENTIFIER.match(atom.text.lstrip('?')):
        raise ParseError(f"bad {what} '{atom.text}'", atom.span, expected='identifier')
    return atom.text


def _sections(form: SList, start: int) -> Dict[str, List[SList]]:
    sections: Dict[str, List[SList]] = {}
    for node in form.items[start:]:
        section = _expect_list(node, 'a section')
        keyword = section.head()
        if keyword is None:
            raise ParseError("section without keyword", section.span)
        sections.setdefault(keyword, []).append(section)
    return sections


def _one(sections: Dict[str, List[SList]], keyword: str, owner: SList, required: bool = True) -> Optional[SList]:
    found = sections.get(keyword, [])
    if len(found) > 1:
        raise ParseError(f"duplicate ({keyword} ...) section", found[1].span)
    if not found:
        if required:
            raise ParseError(f"missing ({keyword} ...) section", owner.span, expected=keyword)
        return None
    return found[0]


# Literals

def _literal(node: Node, arities: Dict[str, int], allow_negative: bool = True) -> Literal:
    form = _expect_list(node, 'a literal')
    if form.head() == 'not':
        if not allow_negative:
            raise ParseError("negative literal not allowed here", form.span)
        if len(form.items) != 2:
            raise ParseError("(not ...) takes exactly one atom", form.span)
        return _literal(form.items[1], arities, allow_negative=False).negate()

    if not form.items:
        raise ParseError("empty literal", form.span, expected='predicate name')
    predicate = _name(form.items[0], 'predicate name')
    if predicate not in arities:
        raise UnknownPredicate(f"unknown predicate {predicate}", form.items[0].span)
    args = tuple(_name(item, 'term') for item in form.items[1:])
    if len(args) != arities[predicate]:
        raise ParseError(
            f"predicate {predicate} takes {arities[predicate]} arguments, got {len(args)}", form.span)
    return Literal(predicate, args, True)


def _literal_list(form: SList, arities, start: int = 1) -> List[Literal]:
    return [_literal(node, arities) for node in form.items[start:]]


# Domains

def parse_domain(text: str) -> Domain:
    form = _single_form(text, 'domain')
    if len(form.items) < 2:
        raise ParseError("domain needs a name", form.span, expected='name')
    name = _name(form.items[1], 'domain name')
    sections = _sections(form, 2)

    unknown = set(sections) - {'predicates', 'action'}
    if unknown:
        bad = sections[sorted(unknown)[0]][0]
        raise ParseError(f"unknown domain section ({bad.head()} ...)", bad.span, expected='predicates or action')

    predicates: List[PredicateDef] = []
    predicates_form = _one(sections, 'predicates', form, required=False)
    if predicates_form is not None:
        for node in predicates_form.items[1:]:
            decl = _expect_list(node, 'a predicate declaration')
            if not decl.items:
                raise ParseError("empty predicate declaration", decl.span)
            predicate_name = _name(decl.items[0], 'predicate name')
            for item in decl.items[1:]:
                if not is_variable(_name(item, 'variable')):
                    raise ParseError("predicate arguments must be variables", item.span, expected='?var')
            predicates.append(PredicateDef(predicate_name, len(decl.items) - 1))
    arities = {p.name: p.arity for p in predicates}
    if len(arities) != len(predicates):
        raise ParseError("duplicate predicate name", predicates_form.span)

    schemas = [_parse_action(action, arities) for action in sections.get('action', [])]
    try:
        return Domain(name, tuple(predicates), tuple(schemas))
    except DomainError as e:
        raise ParseError(str(e), form.span) from e


def _parse_action(form: SList, arities) -> ActionSchema:
    if len(form.items) < 2:
        raise ParseError("action needs a name", form.span, expected='name')
    name = _name(form.items[1], 'action name')
    params: Tuple[str, ...] = ()
    pre: List[Literal] = []
    effects: List[ConditionalEffect] = []
    seen = set()

    for node in form.items[2:]:
        part = _expect_list(node, 'an action part')
        keyword = part.head()
        if keyword in ('parameters', 'pre') and keyword in seen:
            raise ParseError(f"duplicate ({keyword} ...)", part.span)
        seen.add(keyword)
        if keyword == 'parameters':
            params = tuple(_name(item, 'parameter') for item in part.items[1:])
            for item, param in zip(part.items[1:], params):
                if not is_variable(param):
                    raise ParseError(f"parameter {param} must start with '?'", item.span, expected='?var')
        elif keyword == 'pre':
            pre = _literal_list(part, arities)
        elif keyword == 'effect':
            effects.append(ConditionalEffect(frozenset(), frozenset(_literal_list(part, arities))))
        elif keyword == 'when':
            if len(part.items) != 3:
                raise ParseError("(when (condition ...) (effect ...)) takes two lists", part.span)
            condition = _expect_list(part.items[1], 'a condition list')
            effect = _expect_list(part.items[2], 'an effect list')
            effects.append(ConditionalEffect(frozenset(_literal_list(condition, arities, 0)),
                                             frozenset(_literal_list(effect, arities, 0))))
        else:
            raise ParseError(f"unknown action part ({keyword} ...)", part.span,
                             expected='parameters, pre, effect or when')

    try:
        return ActionSchema(name, params, frozenset(pre), tuple(effects))
    except DomainError as e:
        raise ParseError(str(e), form.span) from e


# Instances

def parse_instance(text: str, domain: Domain) -> Instance:
    form = _single_form(text, 'instance')
    if len(form.items) < 2:
        raise ParseError("instance needs a name", form.span, expected='name')
    name = _name(form.items[1], 'instance name')
    sections = _sections(form, 2)
    unknown = set(sections) - {'domain', 'objects', 'init', 'goal'}
    if unknown:
        bad = sections[sorted(unknown)[0]][0]
        raise ParseError(f"unknown instance section ({bad.head()} ...)", bad.span)

    arities = {p.name: p.arity for p in domain.predicates}
    objects_form = _one(sections, 'objects', form)
    objects = [_name(item, 'object name') for item in objects_form.items[1:]]
    if len(set(objects)) != len(objects):
        raise ParseError("duplicate object", objects_form.span)
    known = set(objects)

    def checked(lit: Literal, node: SList) -> Literal:
        for arg in lit.args:
            if arg not in known:
                raise UnknownObjectReference(f"unknown object {arg}", node.span)
        return lit

    init = []
    init_form = _one(sections, 'init', form, required=False)
    if init_form is not None:
        for node in init_form.items[1:]:
            lit = checked(_literal(node, arities, allow_negative=False), node)
            init.append(lit.proposition)

    goal = []
    goal_form = _one(sections, 'goal', form, required=False)
    if goal_form is not None:
        for node in goal_form.items[1:]:
            goal.append(checked(_literal(node, arities), node))

    try:
        return Instance(domain, tuple(objects), frozenset(init), frozenset(goal), name)
    except DomainError as e:
        raise ParseError(str(e), form.span) from e


# Plans

def parse_plan(text: str, domain: Optional[Domain] = None) -> Plan:
    form = _single_form(text, 'plan')
    actions = []
    for node in form.items[1:]:
        step = _expect_list(node, 'an action')
        if not step.items:
            raise ParseError("empty action", step.span, expected='schema name')
        schema_name = _name(step.items[0], 'schema name')
        args = tuple(_name(item, 'object name') for item in step.items[1:])
        if domain is not None:
            if not domain.has_schema(schema_name):
                raise ParseError(f"unknown action schema {schema_name}", step.items[0].span)
            arity = domain.schema(schema_name).arity
            if len(args) != arity:
                raise ParseError(f"action {schema_name} takes {arity} arguments, got {len(args)}", step.span)
        actions.append(GroundAction(schema_name, args))
    return tuple(actions)


# Writers

def _atom_text(predicate: str, args: Sequence[str]) -> str:
    return '(' + ' '.join((predicate,) + tuple(args)) + ')'


def format_literal(lit: Literal) -> str:
    text = _atom_text(lit.predicate, lit.args)
    return text if lit.positive else f"(not {text})"


def format_proposition(prop: Proposition) -> str:
    return _atom_text(prop.predicate, prop.args)


def format_action(action: GroundAction) -> str:
    return _atom_text(action.schema, action.args)


def _literals_text(literals) -> str:
    return ' '.join(format_literal(lit) for lit in sorted(literals))


def serialize_domain(domain: Domain) -> str:
    lines = [f"(domain {domain.name}"]
    lines.append("  (predicates")
    for predicate in domain.predicates:
        variables = [f"?x{i}" for i in range(1, predicate.arity + 1)]
        lines.append(f"    {_atom_text(predicate.name, variables)}")
    lines[-1] += ")"

    for schema in domain.schemas:
        lines.append(f"  (action {schema.name}")
        lines.append(f"    {_atom_text('parameters', schema.params)}")
        lines.append(f"    {_atom_text('pre', [_literals_text(schema.pre)] if schema.pre else [])}")
        if schema.is_strips:
            effect = schema.effects[0].effect
            lines.append(f"    {_atom_text('effect', [_literals_text(effect)] if effect else [])}")
        else:
            for ce in schema.effects:
                lines.append(f"    (when ({_literals_text(ce.condition)}) ({_literals_text(ce.effect)}))")
        lines[-1] += ")"
    lines[-1] += ")"
    return '\n'.join(lines) + '\n'


def serialize_instance(instance: Instance) -> str:
    lines = [f"(instance {instance.name}",
             f"  (domain {instance.domain.name})",
             f"  {_atom_text('objects', instance.objects)}",
             "  (init"]
    lines += [f"    {format_proposition(prop)}" for prop in sorted(instance.init)]
    lines[-1] += ")"
    lines.append("  (goal")
    lines += [f"    {format_literal(lit)}" for lit in sorted(instance.goal)]
    lines[-1] += "))"
    return '\n'.join(lines) + '\n'


def serialize_plan(plan: Sequence[GroundAction]) -> str:
    if not plan:
        return "(plan)\n"
    lines = ["(plan"] + [f"  {format_action(action)}" for action in plan]
    lines[-1] += ")"
    return '\n'.join(lines) + '\n'


# Files

def _with_source(path, parse, *args):
    try:
        return parse(read_text(path), *args)
    except ParseError as e:
        e.source = str(path)
        raise


def load_domain(path) -> Domain:
    return _with_source(path, parse_domain)


def load_instance(path, domain: Domain) -> Instance:
    return _with_source(path, parse_instance, domain)


def load_plan(path, domain: Optional[Domain] = None) -> Plan:
    return _with_source(path, parse_plan, domain)
