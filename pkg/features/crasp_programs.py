"""
C*-RASP program construction - a line emitter with provenance labels, plus
reusable programs: the unique-copy check, tau-shift matching, the fragment
family exercised by the lowering checks, and seeded random programs.
"""

from __future__ import annotations

from contextlib import contextmanager
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from features.crasp import (
    Add,
    And,
    Cond,
    ConstOne,
    ConstTrue,
    Count,
    CraspOp,
    CraspProgram,
    ExtTok,
    Initial,
    Leq,
    MatchConjunct,
    MatchCount,
    MatchSpec,
    Not,
    Offset,
    SigmaTok,
    Sort,
    Sub,
    Token,
    Top,
    typecheck,
)


class ProgramBuilder:
    """Emits operations in order; identical operations are shared"""

    def __init__(self, sigma: Iterable[str] = (), dedupe: bool = True):
        self.sigma: List[str] = list(sigma)
        self._sigma_set = set(self.sigma)
        self.ops: List[CraspOp] = []
        self.provenance: List[str] = []
        self.dedupe = dedupe
        self._index: Dict[CraspOp, int] = {}
        self._label = ''

    @contextmanager
    def step(self, label: str):
        """Label every line emitted inside the block"""
        previous = self._label
        self._label = label
        try:
            yield
        finally:
            self._label = previous

    def add(self, op: CraspOp) -> int:
        if self.dedupe and op in self._index:
            return self._index[op]
        self.ops.append(op)
        self.provenance.append(self._label or type(op).__name__)
        index = len(self.ops) - 1
        self._index.setdefault(op, index)
        return index

    def sort_of(self, index: int):
        return self.ops[index].sort

    def symbol(self, symbol: str):
        if symbol not in self._sigma_set:
            self._sigma_set.add(symbol)
            self.sigma.append(symbol)

    # Booleans

    def q(self, symbol: str) -> int:
        self.symbol(symbol)
        return self.add(Initial(symbol))

    def true(self) -> int:
        return self.add(ConstTrue())

    def false(self) -> int:
        return self.not_(self.true())

    def not_(self, b: int) -> int:
        return self.add(Not(b))

    def and_(self, a: int, b: int) -> int:
        return self.add(And(a, b))

    def and_all(self, items: Sequence[int]) -> int:
        items = list(items)
        if not items:
            return self.true()
        result = items[0]
        for item in items[1:]:
            result = self.and_(result, item)
        return result

    def or_(self, a: int, b: int) -> int:
        return self.not_(self.and_(self.not_(a), self.not_(b)))

    def or_all(self, items: Sequence[int]) -> int:
        items = list(items)
        if not items:
            return self.false()
        result = items[0]
        for item in items[1:]:
            result = self.or_(result, item)
        return result

    def leq(self, a: int, b: int) -> int:
        return self.add(Leq(a, b))

    def geq(self, a: int, b: int) -> int:
        return self.add(Leq(b, a))

    # Counts

    def one(self) -> int:
        return self.add(ConstOne())

    def zero(self) -> int:
        one = self.one()
        return self.add(Sub(one, one))

    def const(self, k: int) -> int:
        """Constant k >= 0 built from 1 by doubling"""
        if k == 0:
            return self.zero()
        power, result = self.one(), None
        while k:
            if k & 1:
                result = power if result is None else self.plus(result, power)
            k >>= 1
            if k:
                power = self.plus(power, power)
        return result

    def count(self, b: int, offset: Optional[int] = None) -> int:
        return self.add(Count(b, Top() if offset is None else Offset(offset)))

    def match(self, conjuncts: Sequence[Tuple[int, int, int]], filter: Optional[int] = None,
              strict: bool = False) -> int:
        spec = MatchSpec(tuple(MatchConjunct(d, g, t) for d, g, t in conjuncts), filter, strict)
        return self.add(MatchCount(spec))

    def cond(self, test: int, then: int, orelse: int) -> int:
        return self.add(Cond(test, then, orelse))

    def plus(self, a: int, b: int) -> int:
        return self.add(Add(a, b))

    def minus(self, a: int, b: int) -> int:
        return self.add(Sub(a, b))

    def total(self, items: Sequence[int]) -> int:
        items = list(items)
        if not items:
            return self.zero()
        result = items[0]
        for item in items[1:]:
            result = self.plus(result, item)
        return result

    def indicator(self, b: int) -> int:
        return self.cond(b, self.one(), self.zero())

    def eq_const(self, c: int, k: int) -> int:
        """c == k as (c <= k) and (k <= c)"""
        constant = self.const(k)
        return self.and_(self.leq(c, constant), self.leq(constant, c))

    def ge_const(self, c: int, k: int) -> int:
        return self.leq(self.const(k), c)

    def eq(self, a: int, b: int) -> int:
        return self.and_(self.leq(a, b), self.leq(b, a))

    def token_at(self, symbol: str, back: int) -> int:
        """The token back positions before i is symbol"""
        if back == 0:
            return self.q(symbol)
        return self.ge_const(self.count(self.q(symbol), back), 1)

    # Output

    def build(self, output: int, bandwidth: Optional[int] = None) -> CraspProgram:
        """Program whose last line is output"""
        if output != len(self.ops) - 1:
            self.ops.append(And(output, self.true()))
            self.provenance.append(self._label or self.provenance[output])
        program = CraspProgram(tuple(self.sigma), tuple(self.ops), bandwidth)
        typecheck(program)
        return program


def unique_copy_program() -> CraspProgram:
    """Accepts u u for a non-empty sequence u of distinct extended tokens"""
    b = ProgramBuilder()
    is_first = b.eq_const(b.count(b.true()), 1)
    seen = b.match([(0, 0, 0)])
    repeat = b.ge_const(seen, 2)
    too_many = b.ge_const(seen, 3)
    repeats = b.count(repeat)
    fresh = b.count(b.not_(repeat))
    in_second_half = b.ge_const(repeats, 1)
    first_repeat = b.and_(repeat, b.eq_const(repeats, 1))

    # The copy starts with the first token and then follows successor pairs of the original
    starts_right = b.ge_const(b.match([(0, 0, 0)], filter=is_first), 1)
    # OnlyOneMatch-style check: the pair (c[i-1], c[i]) occurs once in the original and once at i
    follows = b.eq_const(b.match([(1, 1, 0), (0, 0, 0)]), 2)

    bad = b.or_all([
        b.and_(b.not_(repeat), in_second_half),
        too_many,
        b.and_(first_repeat, b.not_(starts_right)),
        b.and_(b.and_(repeat, b.not_(first_repeat)), b.not_(follows)),
    ])
    no_bad = b.eq_const(b.count(bad), 0)
    balanced = b.and_(b.eq(repeats, fresh), b.ge_const(repeats, 1))
    return b.build(b.and_(no_bad, balanced))


def shift_match_program(tau: int) -> CraspProgram:
    """Accepts inputs whose last token equals an earlier token plus tau"""
    b = ProgramBuilder()
    hits = b.match([(0, 0, -tau)], strict=True)
    return b.build(b.ge_const(hits, 1))


def _value_program(target: int) -> CraspProgram:
    b = ProgramBuilder(['a', 'b'])
    marked_a, marked_b = b.token_at('a', 1), b.token_at('b', 1)
    first_a = b.and_(marked_a, b.eq_const(b.count(b.q('a')), 1))
    initial = b.indicator(b.ge_const(b.match([(0, 0, 0)], filter=first_a), 1))
    adds = b.match([(0, 0, 0)], filter=marked_a, strict=True)
    deletes = b.match([(0, 0, 0)], filter=marked_b, strict=True)
    value = b.minus(b.plus(initial, adds), deletes)
    return b.build(b.eq_const(value, target))


def fragment_programs() -> List[Tuple[str, CraspProgram]]:
    """Small programs covering every construct the plan verifiers emit"""
    programs: List[Tuple[str, CraspProgram]] = []

    # Plain matches over the offset/shift grid
    for delta, gamma in ((0, 0), (1, 0), (0, 1), (1, 1), (2, 1)):
        for tau in (-1, 0, 1):
            b = ProgramBuilder(['a'])
            programs.append((f"match d={delta} g={gamma} t={tau}",
                             b.build(b.ge_const(b.match([(delta, gamma, tau)]), 2))))

    # Filtered strict match behind a symbol lookback (counter shape)
    for strict in (False, True):
        b = ProgramBuilder(['a', 'b'])
        after_a = b.token_at('a', 1)
        hits = b.match([(0, 0, 0)], filter=after_a, strict=strict)
        programs.append((f"filtered match strict={strict}", b.build(b.and_(b.token_at('b', 1), b.ge_const(hits, 1)))))

    # Binary argument map: two conjuncts with different anchors
    b = ProgramBuilder(['a'])
    current = b.token_at('a', 2)
    past = b.token_at('a', 1)
    hits = b.match([(1, 1, 0), (0, 0, 0)], filter=past, strict=True)
    programs.append(("binary argument map", b.build(b.and_(current, b.ge_const(hits, 1)))))

    # Well-formed truth value: indicator + adds - deletes
    programs.append(("well-formed value == 1", _value_program(1)))
    programs.append(("well-formed value == 0", _value_program(0)))

    # Delete-free truth value: initial or some add
    b = ProgramBuilder(['a'])
    adds = b.match([(0, 0, 0)], filter=b.token_at('a', 1), strict=True)
    programs.append(("delete-free value >= 1", b.build(b.ge_const(adds, 1))))

    # Goal sweep: every marked position satisfied, checked at the end
    b = ProgramBuilder(['a', 'b'])
    goal_mark = b.token_at('b', 1)
    satisfied = b.ge_const(b.match([(0, 0, 0)], filter=b.token_at('a', 1)), 1)
    unsatisfied = b.and_(goal_mark, b.not_(satisfied))
    programs.append(("goal sweep", b.build(b.and_(b.q('b'), b.eq_const(b.count(unsatisfied), 0)))))

    programs.append(("unique copy", unique_copy_program()))
    programs.append(("shift +1", shift_match_program(1)))
    programs.append(("shift -1", shift_match_program(-1)))

    # Match-free program: lowering is the identity
    b = ProgramBuilder(['a', 'b'])
    programs.append(("match-free", b.build(b.leq(b.count(b.q('a')), b.count(b.q('b'))))))
    return programs


def random_program(rng: np.random.Generator, sigma: Sequence[str] = ('a', 'b'), n_ops: int = 12,
                   max_offset: int = 2, max_tau: int = 2, max_conjuncts: int = 2) -> CraspProgram:
    """Random well-sorted program ending in a boolean line"""
    b = ProgramBuilder(sigma, dedupe=False)
    bools = [b.q(symbol) for symbol in sigma] + [b.true()]
    counts = [b.one()]

    while len(b.ops) < n_ops:
        kind = rng.integers(0, 9)
        if kind == 0:
            bools.append(b.not_(int(rng.choice(bools))))
        elif kind == 1:
            bools.append(b.and_(int(rng.choice(bools)), int(rng.choice(bools))))
        elif kind == 2:
            bools.append(b.leq(int(rng.choice(counts)), int(rng.choice(counts))))
        elif kind == 3:
            offset = None if rng.random() < 0.5 else int(rng.integers(0, max_offset + 1))
            counts.append(b.count(int(rng.choice(bools)), offset))
        elif kind in (4, 5):
            k = int(rng.integers(1, max_conjuncts + 1))
            conjuncts = [(int(rng.integers(0, max_offset + 1)), int(rng.integers(0, max_offset + 1)),
                          int(rng.integers(-max_tau, max_tau + 1))) for _ in range(k)]
            match_filter = int(rng.choice(bools)) if rng.random() < 0.5 else None
            counts.append(b.match(conjuncts, match_filter, bool(rng.random() < 0.5)))
        elif kind == 6:
            counts.append(b.cond(int(rng.choice(bools)), int(rng.choice(counts)), int(rng.choice(counts))))
        elif kind == 7:
            counts.append(b.plus(int(rng.choice(counts)), int(rng.choice(counts))))
        else:
            counts.append(b.minus(int(rng.choice(counts)), int(rng.choice(counts))))

    if b.sort_of(len(b.ops) - 1) is not Sort.BOOL:
        b.leq(int(rng.choice(counts)), len(b.ops) - 1)
    return b.build(len(b.ops) - 1)


def random_input(rng: np.random.Generator, sigma: Sequence[str], length: int, max_value: int = 4,
                 p_sigma: float = 0.3) -> List[Token]:
    tokens: List[Token] = []
    for _ in range(length):
        if sigma and rng.random() < p_sigma:
            tokens.append(SigmaTok(str(rng.choice(list(sigma)))))
        else:
            tokens.append(ExtTok(int(rng.integers(0, max_value + 1))))
    return tokens


def shift_input(tokens: Sequence[Token], delta: int) -> List[Token]:
    return [ExtTok(t.value + delta) if isinstance(t, ExtTok) else t for t in tokens]
