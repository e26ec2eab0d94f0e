"""
Finite-alphabet lowering - rewrites every match line of a C*-RASP program
into match-free lines over an alphabet with one "#v" symbol per value
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import product
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from features.crasp import (
    CraspProgram,
    ExtTok,
    Initial,
    MatchCount,
    MatchSpec,
    SigmaTok,
    Token,
    typecheck,
)
from features.crasp_programs import ProgramBuilder
from features.errors import AlphabetTooLarge, CraspError


def value_symbol(value: int) -> str:
    return f"#{value}"


@dataclass(frozen=True)
class MatchBranch:
    """One value assignment: the current side reads `current`, the past side `past`"""
    current: Tuple[Tuple[str, int], ...]   # (symbol, gamma)
    past: Tuple[Tuple[str, int], ...]      # (symbol, delta)


def match_branches(spec: MatchSpec, values: Sequence[int]) -> List[MatchBranch]:
    """Every consistent assignment of values to the offsets a match reads"""
    value_set = set(values)
    gammas = sorted({c.gamma for c in spec.conjuncts})
    branches = []
    for assignment in product(sorted(value_set), repeat=len(gammas)):
        at_gamma = dict(zip(gammas, assignment))
        at_delta: Dict[int, int] = {}
        consistent = True
        for conjunct in spec.conjuncts:
            wanted = at_gamma[conjunct.gamma] + conjunct.tau
            if wanted not in value_set or at_delta.setdefault(conjunct.delta, wanted) != wanted:
                consistent = False
                break
        if consistent:
            branches.append(MatchBranch(
                tuple((value_symbol(at_gamma[g]), g) for g in gammas),
                tuple((value_symbol(v), d) for d, v in sorted(at_delta.items())),
            ))
    return branches


def _value_list(values) -> List[int]:
    if isinstance(values, int):
        return list(range(values + 1))
    return sorted(set(values))


def lower_match_to_finite(program: CraspProgram, values, budget: int = 20000) -> CraspProgram:
    """
    Equivalent match-free program over sigma plus "#v" for each v in values.

    values is either the largest value (meaning 0..values) or an explicit set.
    The result accepts lift_tokens(w) exactly when the input program accepts w,
    for every w whose extended tokens lie in values.
    """
    value_list = _value_list(values)
    new_symbols = [value_symbol(v) for v in value_list]
    collisions = set(program.sigma) & set(new_symbols)
    if collisions:
        raise CraspError(f"sigma already contains value symbols: {sorted(collisions)}")

    matches = [op.spec for op in program.ops if isinstance(op, MatchCount)]
    total = sum(len(match_branches(spec, value_list)) for spec in matches)
    if total > budget:
        raise AlphabetTooLarge(f"lowering needs {total} branches, budget is {budget}")

    b = ProgramBuilder(list(program.sigma) + new_symbols)
    remap: Dict[int, int] = {}
    for index, op in enumerate(program.ops):
        with b.step(f"line {index + 1}"):
            if isinstance(op, MatchCount):
                remap[index] = _lower_match(b, op.spec, remap, value_list)
            else:
                remap[index] = b.add(_renumbered(op, remap))
    lowered = b.build(remap[program.output])
    typecheck(lowered)
    return lowered


def _renumbered(op, remap: Dict[int, int]):
    if isinstance(op, Initial) or not op.operands():
        return op
    fields = {}
    for name in ('arg', 'left', 'right', 'test', 'then', 'orelse'):
        if hasattr(op, name):
            fields[name] = remap[getattr(op, name)]
    return replace(op, **fields)


def _lower_match(b: ProgramBuilder, spec: MatchSpec, remap: Dict[int, int], values: List[int]) -> int:
    # Sum over branches of: if current side reads the branch then count(past side) else 0
    match_filter = None if spec.filter is None else remap[spec.filter]
    terms = []
    for branch in match_branches(spec, values):
        current = b.and_all([b.token_at(symbol, gamma) for symbol, gamma in branch.current])
        past_parts = [b.token_at(symbol, delta) for symbol, delta in branch.past]
        if match_filter is not None:
            past_parts.append(match_filter)
        past = b.and_all(past_parts)
        hits = b.count(past)
        if spec.strict:
            hits = b.minus(hits, b.indicator(past))
        terms.append(b.cond(current, hits, b.zero()))
    return b.total(terms)


def lift_tokens(tokens: Iterable[Token], values) -> List[Token]:
    """Replace each extended token #v by the sigma symbol "#v" """
    allowed = set(_value_list(values))
    lifted: List[Token] = []
    for token in tokens:
        if isinstance(token, ExtTok):
            if token.value not in allowed:
                raise CraspError(f"extended token {token} is outside the lowering alphabet")
            lifted.append(SigmaTok(value_symbol(token.value)))
        else:
            lifted.append(token)
    return lifted


def lowering_report(program: CraspProgram, values, budget: Optional[int] = None) -> Dict[str, object]:
    value_list = _value_list(values)
    branches = [len(match_branches(op.spec, value_list)) for op in program.ops if isinstance(op, MatchCount)]
    report = {'match_lines': len(branches), 'branches': sum(branches), 'values': len(value_list)}
    if budget is not None:
        report['within_budget'] = sum(branches) <= budget
    return report
