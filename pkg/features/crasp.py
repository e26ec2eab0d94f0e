"""
C*-RASP - straight-line counting programs over a split alphabet

A program is a list of operations, each producing one value per input
position: booleans (Initial, Not, And, ConstTrue, Leq) or counts (Count,
MatchCount, Cond, Add, Sub, ConstOne). Operands are indices of earlier
operations. Input tokens are either symbols of the finite alphabet sigma or
extended tokens carrying a non-negative integer.

Evaluation is vectorised with numpy over a batch of right-padded inputs; every
operation only looks at positions j <= i, so padding never changes the value
at a real position.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import ClassVar, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from features.errors import (
    BandwidthExceeded,
    EmptyInput,
    EmptyMatch,
    EmptyProgram,
    ForwardReference,
    IntegerOverflow,
    NonBooleanOutput,
    ParseError,
    SortError,
    SourceSpan,
    UnknownSigmaSymbol,
)


# Tokens

@dataclass(frozen=True, order=True)
class SigmaTok:
    symbol: str

    def __str__(self):
        return format_symbol(self.symbol)


@dataclass(frozen=True, order=True)
class ExtTok:
    value: int

    def __post_init__(self):
        if self.value < 0:
            raise ValueError(f"extended token value must be non-negative, got {self.value}")

    def __str__(self):
        return f"#{self.value}"


Token = Union[SigmaTok, ExtTok]

_BARE_SYMBOL = re.compile(r'^[^\s"#]+$')
_INPUT_TOKEN = re.compile(r'\s+|"(?:[^"\\]|\\.)*"|#-?\d+|[^\s"]+')


def _quoted(symbol: str) -> str:
    return '"' + symbol.replace('\\', '\\\\').replace('"', '\\"') + '"'


def format_symbol(symbol: str) -> str:
    return symbol if _BARE_SYMBOL.match(symbol) else _quoted(symbol)


def _unquote(text: str) -> str:
    return re.sub(r'\\(.)', r'\1', text[1:-1])


def parse_tokens(text: str) -> List[Token]:
    """Whitespace separated tokens: #<int> is extended, anything else a sigma symbol"""
    tokens: List[Token] = []
    position = 0
    for match in _INPUT_TOKEN.finditer(text):
        if match.start() != position:
            break
        position = match.end()
        chunk = match.group()
        if chunk.isspace():
            continue
        if chunk.startswith('"'):
            tokens.append(SigmaTok(_unquote(chunk)))
        elif chunk.startswith('#'):
            value = int(chunk[1:])
            if value < 0:
                raise ParseError(f"negative extended token {chunk}", _span_at(text, match.start(), match.end()))
            tokens.append(ExtTok(value))
        else:
            tokens.append(SigmaTok(chunk))
    if position != len(text):
        raise ParseError("unterminated quoted symbol", _span_at(text, position, len(text)))
    return tokens


def format_tokens(tokens: Iterable[Token]) -> str:
    return ' '.join(str(token) for token in tokens)


def _span_at(text: str, start: int, end: int) -> SourceSpan:
    line = text.count('\n', 0, start) + 1
    column = start - (text.rfind('\n', 0, start) + 1) + 1
    return SourceSpan(len(text[:start].encode('utf-8')), len(text[:end].encode('utf-8')), line, column)


# Operations

class Sort(enum.Enum):
    BOOL = 'bool'
    COUNT = 'count'


@dataclass(frozen=True)
class Top:
    """j <= i"""


@dataclass(frozen=True)
class Offset:
    """i = j + delta"""
    delta: int


LocalRel = Union[Top, Offset]


@dataclass(frozen=True)
class MatchConjunct:
    """c[j - delta] = c[i - gamma] + tau"""
    delta: int
    gamma: int
    tau: int


@dataclass(frozen=True)
class MatchSpec:
    conjuncts: Tuple[MatchConjunct, ...]
    filter: Optional[int] = None
    strict: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'conjuncts', tuple(self.conjuncts))


@dataclass(frozen=True)
class Initial:
    symbol: str
    sort: ClassVar[Sort] = Sort.BOOL

    def operands(self):
        return ()


@dataclass(frozen=True)
class Not:
    arg: int
    sort: ClassVar[Sort] = Sort.BOOL

    def operands(self):
        return ((self.arg, Sort.BOOL),)


@dataclass(frozen=True)
class And:
    left: int
    right: int
    sort: ClassVar[Sort] = Sort.BOOL

    def operands(self):
        return ((self.left, Sort.BOOL), (self.right, Sort.BOOL))


@dataclass(frozen=True)
class ConstTrue:
    sort: ClassVar[Sort] = Sort.BOOL

    def operands(self):
        return ()


@dataclass(frozen=True)
class Leq:
    left: int
    right: int
    sort: ClassVar[Sort] = Sort.BOOL

    def operands(self):
        return ((self.left, Sort.COUNT), (self.right, Sort.COUNT))


@dataclass(frozen=True)
class Count:
    arg: int
    rel: LocalRel = field(default_factory=Top)
    sort: ClassVar[Sort] = Sort.COUNT

    def operands(self):
        return ((self.arg, Sort.BOOL),)


@dataclass(frozen=True)
class MatchCount:
    spec: MatchSpec
    sort: ClassVar[Sort] = Sort.COUNT

    def operands(self):
        if self.spec.filter is None:
            return ()
        return ((self.spec.filter, Sort.BOOL),)


@dataclass(frozen=True)
class Cond:
    test: int
    then: int
    orelse: int
    sort: ClassVar[Sort] = Sort.COUNT

    def operands(self):
        return ((self.test, Sort.BOOL), (self.then, Sort.COUNT), (self.orelse, Sort.COUNT))


@dataclass(frozen=True)
class Add:
    left: int
    right: int
    sort: ClassVar[Sort] = Sort.COUNT

    def operands(self):
        return ((self.left, Sort.COUNT), (self.right, Sort.COUNT))


@dataclass(frozen=True)
class Sub:
    left: int
    right: int
    sort: ClassVar[Sort] = Sort.COUNT

    def operands(self):
        return ((self.left, Sort.COUNT), (self.right, Sort.COUNT))


@dataclass(frozen=True)
class ConstOne:
    sort: ClassVar[Sort] = Sort.COUNT

    def operands(self):
        return ()


CraspOp = Union[Initial, Not, And, ConstTrue, Leq, Count, MatchCount, Cond, Add, Sub, ConstOne]


def op_offsets(op: CraspOp) -> List[int]:
    if isinstance(op, Count) and isinstance(op.rel, Offset):
        return [op.rel.delta]
    if isinstance(op, MatchCount):
        return [d for c in op.spec.conjuncts for d in (c.delta, c.gamma)]
    return []


@dataclass(frozen=True)
class CraspProgram:
    sigma: Tuple[str, ...]
    ops: Tuple[CraspOp, ...]
    bandwidth: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, 'sigma', tuple(self.sigma))
        object.__setattr__(self, 'ops', tuple(self.ops))
        if self.bandwidth is None:
            object.__setattr__(self, 'bandwidth', max((d for op in self.ops for d in op_offsets(op)), default=0))

    @property
    def output(self) -> int:
        return len(self.ops) - 1

    def __len__(self):
        return len(self.ops)


def uses_match(program: CraspProgram) -> bool:
    return any(isinstance(op, MatchCount) for op in program.ops)


def is_match_offset_free(program: CraspProgram) -> bool:
    """No positional lookback: every Offset and match offset is zero"""
    return all(d == 0 for op in program.ops for d in op_offsets(op))


def program_summary(program: CraspProgram) -> Dict[str, object]:
    kinds: Dict[str, int] = {}
    for op in program.ops:
        kinds[type(op).__name__] = kinds.get(type(op).__name__, 0) + 1
    return {
        'lines': len(program.ops),
        'sigma_size': len(program.sigma),
        'bandwidth': program.bandwidth,
        'op_counts': dict(sorted(kinds.items())),
        'uses_match': uses_match(program),
        'match_offset_free': is_match_offset_free(program),
    }


# Type checking

def typecheck(program: CraspProgram) -> None:
    """Raise a TypeCheckError subclass unless the program is well sorted"""
    if not program.ops:
        raise EmptyProgram("program has no operations")
    sigma = set(program.sigma)
    for index, op in enumerate(program.ops):
        line = index + 1
        for operand, wanted in op.operands():
            if not 0 <= operand < index:
                raise ForwardReference(f"operand {operand + 1} is not an earlier line", line)
            actual = program.ops[operand].sort
            if actual is not wanted:
                raise SortError(
                    f"{type(op).__name__} needs a {wanted.value} operand, line {operand + 1} is {actual.value}", line)
        if isinstance(op, Initial) and op.symbol not in sigma:
            raise UnknownSigmaSymbol(f"symbol {op.symbol!r} is not in sigma", line)
        if isinstance(op, MatchCount) and not op.spec.conjuncts:
            raise EmptyMatch("match needs at least one conjunct", line)
        for offset in op_offsets(op):
            if offset < 0:
                raise BandwidthExceeded(f"negative offset {offset}", line)
            if offset > program.bandwidth:
                raise BandwidthExceeded(f"offset {offset} exceeds bandwidth {program.bandwidth}", line)
    if program.ops[-1].sort is not Sort.BOOL:
        raise NonBooleanOutput("the last line must be boolean", len(program.ops))


# Evaluation

_PAD = -2
_EXT = -1
_LIMIT = 1 << 62


def _encode(program: CraspProgram, inputs: Sequence[Sequence[Token]]):
    index = {symbol: i for i, symbol in enumerate(program.sigma)}
    width = max((len(w) for w in inputs), default=0)
    symbols = np.full((len(inputs), width), _PAD, dtype=np.int32)
    values = np.zeros((len(inputs), width), dtype=np.int64)
    for row, w in enumerate(inputs):
        for col, token in enumerate(w):
            if isinstance(token, ExtTok):
                symbols[row, col] = _EXT
                values[row, col] = token.value
            else:
                try:
                    symbols[row, col] = index[token.symbol]
                except KeyError:
                    raise UnknownSigmaSymbol(f"input symbol {token.symbol!r} is not in sigma") from None
    return symbols, values, symbols == _EXT


def _shift(array: np.ndarray, delta: int, fill) -> np.ndarray:
    """Value at position i - delta, fill where that is before the start"""
    if delta == 0:
        return array
    shifted = np.full_like(array, fill)
    if delta < array.shape[1]:
        shifted[:, delta:] = array[:, :-delta]
    return shifted


def _checked(array: np.ndarray) -> np.ndarray:
    if array.size and np.abs(array).max() >= _LIMIT:
        raise IntegerOverflow("count value exceeds the 64-bit safety limit")
    return array


def _match_count(spec: MatchSpec, filter_values, values, is_ext) -> np.ndarray:
    batch, width = values.shape
    conjuncts = spec.conjuncts
    past_ok = np.ones((batch, width), dtype=bool) if filter_values is None else filter_values.copy()
    current_ok = np.ones((batch, width), dtype=bool)
    past_keys = np.empty((batch, width, len(conjuncts)), dtype=np.int64)
    current_keys = np.empty((batch, width, len(conjuncts)), dtype=np.int64)

    for k, conjunct in enumerate(conjuncts):
        past_ok &= _shift(is_ext, conjunct.delta, False)
        past_keys[:, :, k] = _shift(values, conjunct.delta, 0) - conjunct.tau
        current_ok &= _shift(is_ext, conjunct.gamma, False)
        current_keys[:, :, k] = _shift(values, conjunct.gamma, 0)

    result = np.zeros((batch, width), dtype=np.int64)
    past_rows, past_pos = np.nonzero(past_ok)
    query_rows, query_pos = np.nonzero(current_ok)
    if not len(past_rows) or not len(query_rows):
        return result

    # Unify (row, key tuple) of candidates and queries into dense ids
    keys = np.concatenate([
        np.column_stack([past_rows, past_keys[past_rows, past_pos]]),
        np.column_stack([query_rows, current_keys[query_rows, query_pos]]),
    ])
    _, ids = np.unique(keys, axis=0, return_inverse=True)
    ids = ids.reshape(-1).astype(np.int64)
    past_ids, query_ids = ids[:len(past_rows)], ids[len(past_rows):]

    stride = width + 1
    codes = np.sort(past_ids * stride + past_pos)
    upper = query_ids * stride + query_pos - (1 if spec.strict else 0)
    lower = query_ids * stride
    result[query_rows, query_pos] = np.searchsorted(codes, upper, side='right') - np.searchsorted(codes, lower, side='left')
    return result


def _last_uses(program: CraspProgram) -> List[int]:
    last = list(range(len(program.ops)))
    for index, op in enumerate(program.ops):
        for operand, _ in op.operands():
            last[operand] = index
    return last


def _run(program: CraspProgram, inputs: Sequence[Sequence[Token]], keep_all: bool):
    symbols, values, is_ext = _encode(program, inputs)
    shape = symbols.shape
    sigma_index = {symbol: i for i, symbol in enumerate(program.sigma)}
    last_use = _last_uses(program)
    results: List[Optional[np.ndarray]] = [None] * len(program.ops)

    for index, op in enumerate(program.ops):
        if isinstance(op, Initial):
            value = symbols == sigma_index.get(op.symbol, _PAD - 1)
        elif isinstance(op, Not):
            value = ~results[op.arg]
        elif isinstance(op, And):
            value = results[op.left] & results[op.right]
        elif isinstance(op, ConstTrue):
            value = np.ones(shape, dtype=bool)
        elif isinstance(op, Leq):
            value = results[op.left] <= results[op.right]
        elif isinstance(op, Count):
            if isinstance(op.rel, Offset):
                value = _shift(results[op.arg], op.rel.delta, False).astype(np.int64)
            else:
                value = np.cumsum(results[op.arg], axis=1, dtype=np.int64)
        elif isinstance(op, MatchCount):
            filter_values = None if op.spec.filter is None else results[op.spec.filter]
            value = _match_count(op.spec, filter_values, values, is_ext)
        elif isinstance(op, Cond):
            value = np.where(results[op.test], results[op.then], results[op.orelse])
        elif isinstance(op, Add):
            value = _checked(results[op.left] + results[op.right])
        elif isinstance(op, Sub):
            value = _checked(results[op.left] - results[op.right])
        elif isinstance(op, ConstOne):
            value = np.ones(shape, dtype=np.int64)
        else:
            raise TypeError(f"unknown operation {op!r}")
        results[index] = value

        if not keep_all:
            for operand, _ in op.operands():
                if last_use[operand] == index and operand != program.output:
                    results[operand] = None
    return results


@dataclass
class EvalTable:
    """Values of every operation at every position of one input"""
    program: CraspProgram
    values: List[np.ndarray]

    @property
    def length(self) -> int:
        return len(self.values[0]) if self.values else 0

    def value(self, op: int, position: int):
        """Value of operation op (0-based) at 1-based position"""
        item = self.values[op][position - 1]
        return bool(item) if self.program.ops[op].sort is Sort.BOOL else int(item)

    def row(self, op: int) -> list:
        return [self.value(op, i) for i in range(1, self.length + 1)]

    @property
    def accepted(self) -> bool:
        return bool(self.values[self.program.output][-1])

    def to_tsv(self) -> str:
        lines = []
        for op in range(len(self.values)):
            lines.append('\t'.join(str(int(v)) for v in self.values[op]))
        return '\n'.join(lines) + '\n'


def evaluate(program: CraspProgram, w: Sequence[Token]) -> EvalTable:
    if not w:
        return EvalTable(program, [np.zeros(0, dtype=bool) for _ in program.ops])
    results = _run(program, [w], keep_all=True)
    return EvalTable(program, [r[0] for r in results])


def accepts(program: CraspProgram, w: Sequence[Token]) -> bool:
    """Value of the output line at the last position"""
    if not w:
        raise EmptyInput("cannot run a program on the empty input")
    results = _run(program, [w], keep_all=False)
    return bool(results[program.output][0, len(w) - 1])


def accepts_batch(program: CraspProgram, inputs: Sequence[Sequence[Token]], batch_size: int = 256) -> np.ndarray:
    """accepts() for many inputs; inputs of similar length batch best"""
    verdicts = np.zeros(len(inputs), dtype=bool)
    if any(len(w) == 0 for w in inputs):
        raise EmptyInput("cannot run a program on the empty input")
    order = sorted(range(len(inputs)), key=lambda i: len(inputs[i]))
    for start in range(0, len(order), batch_size):
        chunk = order[start:start + batch_size]
        output = _run(program, [inputs[i] for i in chunk], keep_all=False)[program.output]
        for row, i in enumerate(chunk):
            verdicts[i] = output[row, len(inputs[i]) - 1]
    return verdicts


# Text format

_CRASP_TOKEN = re.compile(
    r'(?P<newline>\n)|(?P<space>[ \t\r]+)|(?P<comment>\#[^\n]*)'
    r'|(?P<string>"(?:[^"\\\n]|\\.)*")|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<int>\d+)'
    r'|(?P<punct>:=|<=|<|=|\+|-|\(|\)|\[|\]|,|;|\||:)'
)

_KEYWORDS = {'not', 'and', 'true', 'count', 'match', 'if', 'then', 'else', 'sigma', 'bandwidth', 'i', 'j', 'c'}


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    span: SourceSpan


def _lex(text: str) -> List[_Tok]:
    tokens = []
    position, line, column, offset = 0, 1, 1, 0
    while position < len(text):
        match = _CRASP_TOKEN.match(text, position)
        if match is None:
            span = SourceSpan(offset, offset + 1, line, column)
            raise ParseError(f"unexpected character {text[position]!r}", span)
        chunk = match.group()
        size = len(chunk.encode('utf-8'))
        span = SourceSpan(offset, offset + size, line, column)
        kind = match.lastgroup
        if kind not in ('space', 'comment'):
            tokens.append(_Tok(kind, chunk, span))
        position = match.end()
        offset += size
        if kind == 'newline':
            line, column = line + 1, 1
        else:
            column += len(chunk)
    return tokens


def _statements(tokens: List[_Tok]) -> List[List[_Tok]]:
    statements, current, depth = [], [], 0
    for tok in tokens:
        if tok.text == '(':
            depth += 1
        elif tok.text == ')':
            depth -= 1
        if tok.kind == 'newline' or (tok.text == ';' and depth == 0):
            if current:
                statements.append(current)
            current, depth = [], 0
            continue
        current.append(tok)
    if current:
        statements.append(current)
    return statements


class _Cursor:
    def __init__(self, tokens: List[_Tok]):
        self.tokens = tokens
        self.position = 0

    def peek(self, ahead: int = 0) -> Optional[_Tok]:
        index = self.position + ahead
        return self.tokens[index] if index < len(self.tokens) else None

    def take(self) -> _Tok:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1].span
            raise ParseError("unexpected end of line", SourceSpan(last.end, last.end, last.line, last.column))
        self.position += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.take()
        if tok.text != text:
            raise ParseError(f"unexpected {tok.text!r}", tok.span, expected=repr(text))
        return tok

    def accept(self, text: str) -> bool:
        tok = self.peek()
        if tok is not None and tok.text == text:
            self.position += 1
            return True
        return False

    def integer(self) -> int:
        tok = self.take()
        if tok.kind != 'int':
            raise ParseError(f"expected an integer, got {tok.text!r}", tok.span, expected='integer')
        return int(tok.text)

    def done(self):
        tok = self.peek()
        if tok is not None:
            raise ParseError(f"unexpected {tok.text!r} after the expression", tok.span, expected='end of line')


class _ProgramParser:
    def __init__(self):
        self.names: Dict[str, int] = {}
        self.ops: List[CraspOp] = []
        self.sigma: Optional[List[str]] = None
        self.inferred: List[str] = []
        self.bandwidth: Optional[int] = None

    def symbol(self, cursor: _Cursor) -> str:
        tok = cursor.take()
        if tok.kind == 'string':
            return _unquote(tok.text)
        if tok.kind == 'name':
            return tok.text
        raise ParseError(f"expected a sigma symbol, got {tok.text!r}", tok.span, expected='symbol')

    def ref(self, cursor: _Cursor) -> int:
        tok = cursor.take()
        if tok.kind != 'name' or tok.text in _KEYWORDS:
            raise ParseError(f"expected a line name, got {tok.text!r}", tok.span, expected='line name')
        if tok.text not in self.names:
            raise ForwardReference(f"{tok.text} is not defined on an earlier line", len(self.ops) + 1)
        return self.names[tok.text]

    def header(self, cursor: _Cursor, keyword: _Tok):
        cursor.expect(':')
        if keyword.text == 'sigma':
            if self.sigma is not None:
                raise ParseError("duplicate sigma header", keyword.span)
            self.sigma = []
            while cursor.peek() is not None:
                self.sigma.append(self.symbol(cursor))
        else:
            self.bandwidth = cursor.integer()
            cursor.done()

    def statement(self, tokens: List[_Tok]):
        cursor = _Cursor(tokens)
        first = cursor.take()
        if first.text in ('sigma', 'bandwidth') and cursor.peek() is not None and cursor.peek().text == ':':
            self.header(cursor, first)
            return
        if first.kind != 'name' or first.text in _KEYWORDS:
            raise ParseError(f"expected a line name, got {first.text!r}", first.span, expected='NAME :=')
        if first.text in self.names:
            raise ParseError(f"line name {first.text} defined twice", first.span)
        cursor.expect(':=')
        op = self.expression(cursor)
        cursor.done()
        self.names[first.text] = len(self.ops)
        self.ops.append(op)

    def expression(self, cursor: _Cursor) -> CraspOp:
        tok = cursor.peek()
        if tok.kind == 'name' and tok.text.startswith('Q_'):
            cursor.take()
            symbol = tok.text[2:] if len(tok.text) > 2 else self.symbol(cursor)
            if symbol not in self.inferred:
                self.inferred.append(symbol)
            return Initial(symbol)
        if tok.text == 'not':
            cursor.take()
            return Not(self.ref(cursor))
        if tok.text == 'true':
            cursor.take()
            return ConstTrue()
        if tok.kind == 'int':
            cursor.take()
            if tok.text != '1':
                raise ParseError("the only integer constant is 1", tok.span, expected='1')
            return ConstOne()
        if tok.text == 'count':
            return self.count(cursor)
        if tok.text == 'match':
            return self.match(cursor)
        if tok.text == 'if':
            cursor.take()
            test = self.ref(cursor)
            cursor.expect('then')
            then = self.ref(cursor)
            cursor.expect('else')
            return Cond(test, then, self.ref(cursor))

        left = self.ref(cursor)
        operator = cursor.take()
        right = self.ref(cursor)
        if operator.text == 'and':
            return And(left, right)
        if operator.text == '<=':
            return Leq(left, right)
        if operator.text == '+':
            return Add(left, right)
        if operator.text == '-':
            return Sub(left, right)
        raise ParseError(f"unknown operator {operator.text!r}", operator.span, expected='and, <=, + or -')

    def count(self, cursor: _Cursor) -> CraspOp:
        cursor.expect('count')
        cursor.expect('(')
        cursor.expect('j')
        cursor.expect('<=')
        cursor.expect('i')
        cursor.expect(',')
        rel: LocalRel = Top()
        if cursor.peek() is not None and cursor.peek().text == 'i' and cursor.peek(1) is not None \
                and cursor.peek(1).text == '=':
            cursor.take()
            cursor.expect('=')
            cursor.expect('j')
            cursor.expect('+')
            rel = Offset(cursor.integer())
            cursor.expect(',')
        arg = self.ref(cursor)
        cursor.expect(')')
        return Count(arg, rel)

    def match(self, cursor: _Cursor) -> CraspOp:
        cursor.expect('match')
        cursor.expect('(')
        cursor.expect('j')
        strict = cursor.take()
        if strict.text not in ('<', '<='):
            raise ParseError(f"unexpected {strict.text!r}", strict.span, expected="'<' or '<='")
        cursor.expect('i')
        match_filter = self.ref(cursor) if cursor.accept('|') else None
        cursor.expect(';')
        conjuncts = []
        while True:
            cursor.expect('c')
            cursor.expect('[')
            cursor.expect('j')
            delta = cursor.integer() if cursor.accept('-') else 0
            cursor.expect(']')
            cursor.expect('=')
            cursor.expect('c')
            cursor.expect('[')
            cursor.expect('i')
            gamma = cursor.integer() if cursor.accept('-') else 0
            cursor.expect(']')
            tau = 0
            if cursor.accept('+'):
                tau = cursor.integer()
            elif cursor.accept('-'):
                tau = -cursor.integer()
            conjuncts.append(MatchConjunct(delta, gamma, tau))
            if not cursor.accept(','):
                break
        cursor.expect(')')
        return MatchCount(MatchSpec(tuple(conjuncts), match_filter, strict.text == '<'))


def parse_crasp(text: str) -> CraspProgram:
    """Parse and typecheck a .crasp program"""
    parser = _ProgramParser()
    for statement in _statements(_lex(text)):
        parser.statement(statement)
    sigma = parser.sigma if parser.sigma is not None else parser.inferred
    program = CraspProgram(tuple(sigma), tuple(parser.ops), parser.bandwidth)
    typecheck(program)
    return program


def _line_name(program: CraspProgram, index: int) -> str:
    prefix = 'P' if program.ops[index].sort is Sort.BOOL else 'C'
    return f"{prefix}{index + 1}"


def _format_op(program: CraspProgram, op: CraspOp) -> str:
    name = lambda i: _line_name(program, i)  # noqa: E731
    if isinstance(op, Initial):
        bare = re.match(r"^[A-Za-z0-9_]+$", op.symbol) is not None
        return f"Q_{op.symbol}" if bare else f"Q_{_quoted(op.symbol)}"
    if isinstance(op, Not):
        return f"not {name(op.arg)}"
    if isinstance(op, And):
        return f"{name(op.left)} and {name(op.right)}"
    if isinstance(op, ConstTrue):
        return "true"
    if isinstance(op, Leq):
        return f"{name(op.left)} <= {name(op.right)}"
    if isinstance(op, Count):
        if isinstance(op.rel, Offset):
            return f"count(j<=i, i=j+{op.rel.delta}, {name(op.arg)})"
        return f"count(j<=i, {name(op.arg)})"
    if isinstance(op, MatchCount):
        spec = op.spec
        head = "j<i" if spec.strict else "j<=i"
        if spec.filter is not None:
            head += f" | {name(spec.filter)}"
        conjuncts = ', '.join(f"c[j-{c.delta}]=c[i-{c.gamma}]{c.tau:+d}" for c in spec.conjuncts)
        return f"match({head}; {conjuncts})"
    if isinstance(op, Cond):
        return f"if {name(op.test)} then {name(op.then)} else {name(op.orelse)}"
    if isinstance(op, Add):
        return f"{name(op.left)} + {name(op.right)}"
    if isinstance(op, Sub):
        return f"{name(op.left)} - {name(op.right)}"
    if isinstance(op, ConstOne):
        return "1"
    raise TypeError(f"unknown operation {op!r}")


def serialize_crasp(program: CraspProgram, comments: Optional[Sequence[str]] = None) -> str:
    """Canonical text; optional per-line comments (e.g. provenance)"""
    quoted = []
    for symbol in program.sigma:
        bare = re.match(r'^[A-Za-z_][A-Za-z0-9_]*$', symbol) is not None and symbol not in _KEYWORDS
        quoted.append(symbol if bare else _quoted(symbol))
    lines = [f"sigma: {' '.join(quoted)}".rstrip(), f"bandwidth: {program.bandwidth}"]
    for index, op in enumerate(program.ops):
        line = f"{_line_name(program, index)} := {_format_op(program, op)}"
        if comments is not None and comments[index]:
            line += f"  # {comments[index]}"
        lines.append(line)
    return '\n'.join(lines) + '\n'
