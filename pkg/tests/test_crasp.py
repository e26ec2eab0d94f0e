import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from features.crasp import (
    ConstTrue,
    CraspProgram,
    ExtTok,
    MatchCount,
    MatchSpec,
    SigmaTok,
    accepts,
    accepts_batch,
    evaluate,
    format_tokens,
    parse_crasp,
    parse_tokens,
    program_summary,
    serialize_crasp,
    typecheck,
)
from features.crasp_programs import (
    ProgramBuilder,
    fragment_programs,
    random_input,
    random_program,
    shift_match_program,
    unique_copy_program,
)
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
    UnknownSigmaSymbol,
)


def a(symbol='a'):
    return SigmaTok(symbol)


class TestTokens:
    def test_parse_and_format(self):
        tokens = parse_tokens('$ #3 a "x y" #0\n')
        assert tokens == [SigmaTok('$'), ExtTok(3), SigmaTok('a'), SigmaTok('x y'), ExtTok(0)]
        assert format_tokens(tokens) == '$ #3 a "x y" #0'
        assert parse_tokens(format_tokens(tokens)) == tokens

    def test_negative_extended_token(self):
        with pytest.raises(ParseError):
            parse_tokens('#-1')
        with pytest.raises(ValueError):
            ExtTok(-1)

    def test_unterminated_quote(self):
        with pytest.raises(ParseError):
            parse_tokens('a "b')


class TestEvaluation:
    def test_prefix_count(self):
        b = ProgramBuilder(['a', 'b'])
        count = b.count(b.q('a'))
        program = b.build(b.ge_const(count, 2))
        table = evaluate(program, [a(), a('b'), a()])
        assert table.row(count) == [1, 1, 2]
        assert table.accepted
        assert not accepts(program, [a(), a('b')])

    def test_offset_count(self):
        b = ProgramBuilder(['a', 'b'])
        back = b.count(b.q('a'), 1)
        program = b.build(b.ge_const(back, 1))
        assert evaluate(program, [a(), a('b'), a()]).row(back) == [0, 1, 0]

    def test_table_as_tsv(self):
        b = ProgramBuilder(['a'])
        program = b.build(b.q('a'))
        assert evaluate(program, [a(), ExtTok(2)]).to_tsv() == '1\t0\n'

    def test_empty_input(self):
        program = shift_match_program(1)
        with pytest.raises(EmptyInput):
            accepts(program, [])
        with pytest.raises(EmptyInput):
            accepts_batch(program, [[ExtTok(1)], []])
        assert evaluate(program, []).length == 0

    def test_unknown_input_symbol(self):
        with pytest.raises(UnknownSigmaSymbol):
            accepts(shift_match_program(1), [SigmaTok('z')])

    def test_overflow(self):
        b = ProgramBuilder(['a'])
        big = b.const(1 << 62)
        program = b.build(b.leq(big, big))
        with pytest.raises(IntegerOverflow):
            accepts(program, [a()])

    def test_batch_matches_single_runs(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            program = random_program(rng, n_ops=10)
            inputs = [random_input(rng, program.sigma, int(rng.integers(1, 12))) for _ in range(9)]
            batched = accepts_batch(program, inputs, batch_size=4)
            assert list(batched) == [accepts(program, w) for w in inputs]


def reference_match(tokens, delta, gamma, tau, strict):
    """Direct count of j with c[j - delta] = c[i - gamma] + tau"""
    def ext(k):
        return tokens[k - 1].value if k >= 1 and isinstance(tokens[k - 1], ExtTok) else None

    counts = []
    for i in range(1, len(tokens) + 1):
        current = ext(i - gamma)
        if current is None:
            counts.append(0)
            continue
        last = i - 1 if strict else i
        counts.append(sum(1 for j in range(1, last + 1) if ext(j - delta) == current + tau))
    return counts


TOKENS = st.one_of(st.just(SigmaTok('a')), st.integers(min_value=0, max_value=3).map(ExtTok))


@settings(max_examples=150, deadline=None)
@given(st.lists(TOKENS, min_size=1, max_size=12), st.integers(0, 2), st.integers(0, 2),
       st.integers(-2, 2), st.booleans())
def test_match_counts_agree_with_reference(tokens, delta, gamma, tau, strict):
    b = ProgramBuilder(['a'])
    hits = b.match([(delta, gamma, tau)], strict=strict)
    program = b.build(b.ge_const(hits, 1))
    assert evaluate(program, tokens).row(hits) == reference_match(tokens, delta, gamma, tau, strict)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from(['a', 'b']), min_size=1, max_size=15))
def test_count_is_prefix_membership(word):
    b = ProgramBuilder(['a', 'b'])
    count = b.count(b.q('b'))
    program = b.build(b.ge_const(count, 0))
    row = evaluate(program, [SigmaTok(s) for s in word]).row(count)
    assert row == [word[:i + 1].count('b') for i in range(len(word))]


class TestTypecheck:
    def test_empty_program(self):
        with pytest.raises(EmptyProgram):
            parse_crasp('')

    def test_forward_reference(self):
        with pytest.raises(ForwardReference):
            parse_crasp('P1 := not P2')

    def test_sort_error(self):
        with pytest.raises(SortError) as caught:
            parse_crasp('sigma: a\nP1 := Q_a\nC2 := count(j <= i, P1)\nP3 := not C2\n')
        assert caught.value.line == 3

    def test_unknown_sigma_symbol(self):
        with pytest.raises(UnknownSigmaSymbol):
            parse_crasp('sigma: a\nP1 := Q_b\n')

    def test_non_boolean_output(self):
        with pytest.raises(NonBooleanOutput):
            parse_crasp('C1 := 1\n')

    def test_bandwidth(self):
        with pytest.raises(BandwidthExceeded):
            parse_crasp('bandwidth: 0\nP1 := Q_a\nC2 := count(j <= i, i = j + 1, P1)\nP3 := C2 <= C2\n')

    def test_empty_match(self):
        with pytest.raises(EmptyMatch):
            typecheck(CraspProgram((), (MatchCount(MatchSpec(())), ConstTrue())))

    @pytest.mark.parametrize('text', ['P1 := Q_a and', 'P1 := 2', 'P1 = Q_a', 'P1 := Q_a\nP1 := not P1'])
    def test_parse_errors(self, text):
        with pytest.raises(ParseError):
            parse_crasp(text)


class TestTextFormat:
    def test_handwritten_program(self):
        program = parse_crasp(
            "# last token repeats an earlier one\n"
            "sigma: a\n"
            "hits := match(j < i; c[j] = c[i])\n"
            "one := 1\n"
            "out := one <= hits\n"
        )
        assert program.sigma == ('a',)
        assert accepts(program, [ExtTok(4), a(), ExtTok(4)])
        assert not accepts(program, [ExtTok(4), a(), ExtTok(5)])

    def test_inferred_sigma_and_semicolons(self):
        program = parse_crasp('P1 := Q_b; P2 := Q_"x y"; P3 := P1 and P2')
        assert program.sigma == ('b', 'x y')

    @pytest.mark.parametrize('name, program', fragment_programs())
    def test_round_trip(self, name, program):
        assert parse_crasp(serialize_crasp(program)) == program

    def test_comments_survive_parsing(self):
        program = shift_match_program(2)
        text = serialize_crasp(program, ['line %d' % k for k in range(len(program))])
        assert '# line 0' in text
        assert parse_crasp(text) == program


class TestSummary:
    def test_match_free(self):
        b = ProgramBuilder(['a', 'b'])
        program = b.build(b.leq(b.count(b.q('a')), b.count(b.q('b'))))
        summary = program_summary(program)
        assert not summary['uses_match']
        assert summary['op_counts']['Count'] == 2
        assert summary['bandwidth'] == 0

    def test_unique_copy(self):
        summary = program_summary(unique_copy_program())
        assert summary['uses_match']
        assert not summary['match_offset_free']
        assert summary['bandwidth'] == 1
        assert program_summary(shift_match_program(3))['match_offset_free']
