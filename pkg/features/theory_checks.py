"""
Theory checks - brute-force oracles for the language identities behind the
compiled verifiers, the FlipFlop and Lights Out reductions and the lowering
"""

from __future__ import annotations

import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from features.builtin_domains import (
    Board,
    Cell,
    flipflop_instance,
    flipflop_plan,
    get_variant,
    lights_out_conditional,
    lights_out_well_formed,
)
from features.crasp import CraspProgram, ExtTok, SigmaTok, Token, accepts, accepts_batch, evaluate, format_tokens, serialize_crasp
from features.crasp_compile import EncodingLayout, Mode, build_fixed, build_variable, encode
from features.crasp_lowering import lift_tokens, lower_match_to_finite
from features.crasp_programs import fragment_programs, random_input, random_program, shift_input
from features.datagen import (
    GenConfig,
    corrupt_incomplete,
    corrupt_nonexecutable,
    crasp_layout,
    generate,
    max_objects,
    object_token_values,
    record_rng,
)
from features.errors import GenerationError
from features.gf2 import cells_vector, effect_matrix, parity_verdict
from features.strips import Domain, Instance, Plan, holds, is_valid, pos, succ, verdict_of
from utils.logger import get_logger

FLIPFLOP_PATTERN = re.compile(r'[abe]*be*')


@dataclass
class LangCheckReport:
    """Agreement counts of two deciders over a set of inputs"""
    name: str
    max_len: int
    agree: int = 0
    disagree: int = 0
    counterexample: Optional[Dict[str, object]] = None
    details: Dict[str, object] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.disagree == 0

    @property
    def checked(self) -> int:
        return self.agree + self.disagree

    def record(self, same: bool, example: Callable[[], Dict[str, object]]):
        if same:
            self.agree += 1
            return
        self.disagree += 1
        if self.counterexample is None:
            self.counterexample = example()

    def merge(self, other: LangCheckReport) -> LangCheckReport:
        """Counts add up; the earlier report's counterexample wins"""
        return LangCheckReport(
            self.name, max(self.max_len, other.max_len),
            self.agree + other.agree, self.disagree + other.disagree,
            self.counterexample if self.counterexample is not None else other.counterexample,
            {**other.details, **self.details},
        )

    def to_dict(self) -> Dict[str, object]:
        return {
            'name': self.name,
            'passed': self.passed,
            'max_len': self.max_len,
            'checked': self.checked,
            'agree': self.agree,
            'disagree': self.disagree,
            'counterexample': self.counterexample,
            **self.details,
        }


def _run_shards(worker: Callable, shards: Sequence, jobs: int, name: str, max_len: int) -> LangCheckReport:
    """Merge shard reports in shard order, serially or across processes"""
    with get_logger().timed(f"check {name}") as details:
        if jobs > 1 and len(shards) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                reports = list(pool.map(worker, shards))
        else:
            reports = [worker(shard) for shard in shards]
        merged = LangCheckReport(name, max_len)
        for report in reports:
            merged = merged.merge(report)
        details.update(inputs=merged.checked, disagreements=merged.disagree, jobs=jobs)
    return merged


def _sample_chunks(samples: int, size: int = 250) -> List[Tuple[int, int]]:
    return [(start, min(samples, start + size)) for start in range(0, samples, size)]


# FlipFlop

def flipflop_member(word: str) -> bool:
    """The last letter other than e is b"""
    return FLIPFLOP_PATTERN.fullmatch(word) is not None


def _flipflop_shard(shard: Tuple[str, int]) -> LangCheckReport:
    prefix, max_len = shard
    instance = flipflop_instance()
    report = LangCheckReport('flipflop', max_len)
    for n in range(0, max_len - len(prefix) + 1):
        for tail in product('abe', repeat=n):
            word = prefix + ''.join(tail)
            planned = is_valid(verdict_of(instance, flipflop_plan(word)))
            member = flipflop_member(word)
            report.record(planned == member, lambda: {'word': word, 'plan_valid': planned, 'regex': member})
    return report


def check_flipflop(max_len: int = 10, jobs: int = 1) -> LangCheckReport:
    """Every word over {a, b, e} of length 1..max_len: plan validity against the regular expression"""
    if not 1 <= max_len <= 14:
        raise ValueError(f"max_len must lie in 1..14, got {max_len}")
    shards = [(letter, 1) for letter in 'abe']
    if max_len >= 2:
        shards += [(''.join(pair), max_len) for pair in product('abe', repeat=2)]
    return _run_shards(_flipflop_shard, shards, jobs, 'flipflop', max_len)


# Lights Out parity

def _lit_subsets(board: Board, limit: int) -> List[List[Cell]]:
    cells = board.cells()
    subsets = []
    for mask in range(min(limit, 2 ** board.size)):
        subsets.append([cell for k, cell in enumerate(cells) if mask >> k & 1])
    return subsets


def _plan_text(plan: Plan) -> List[str]:
    return [str(action) for action in plan]


def _parity_exhaustive_shard(shard: Tuple[Board, int, int, int]) -> LangCheckReport:
    board, first, max_len, max_inits = shard
    template = lights_out_conditional(board)
    domain = template.domain
    presses = [template.press(cell) for cell in board.cells()]
    inits = [template.state(lit) for lit in _lit_subsets(board, max_inits)]
    report = LangCheckReport('parity', max_len)

    def visit(plan: Plan, states: List):
        for init, state in zip(inits, states):
            simulated = holds(state, template.goal)
            algebraic = parity_verdict(template, init, plan)
            report.record(simulated == algebraic, lambda: {
                'lit': template.lit_cells(init), 'plan': _plan_text(plan),
                'simulated': simulated, 'parity': algebraic})
        if len(plan) == max_len:
            return
        for action in presses:
            visit(plan + (action,), [succ(domain, state, action) for state in states])

    if first < 0:
        # empty plan only
        for init in inits:
            simulated = holds(init, template.goal)
            algebraic = parity_verdict(template, init, ())
            report.record(simulated == algebraic, lambda: {
                'lit': template.lit_cells(init), 'plan': [], 'simulated': simulated, 'parity': algebraic})
        return report
    action = presses[first]
    visit((action,), [succ(domain, init, action) for init in inits])
    return report


def _parity_random_shard(shard: Tuple[Board, int, int, int, int]) -> LangCheckReport:
    board, seed, start, stop, max_len = shard
    template = lights_out_conditional(board)
    cells = board.cells()
    matrix = effect_matrix(board)
    report = LangCheckReport('parity', max_len)
    for index in range(start, stop):
        rng = record_rng(seed, 'parity', index)
        pressed = [cells[int(i)] for i in rng.integers(0, len(cells), size=int(rng.integers(0, max_len + 1)))]
        plan = tuple(template.press(cell) for cell in pressed)
        if rng.random() < 0.5:
            # the initial state this plan switches off
            target = matrix.astype(np.int64) @ cells_vector(board, pressed) % 2
            lit = [cell for cell in cells if target[board.index(cell)]]
        else:
            lit = [cell for cell in cells if rng.random() < 0.5]
        instance = template.instance(lit)
        simulated = is_valid(verdict_of(instance, plan))
        algebraic = parity_verdict(template, instance.init, plan)
        report.record(simulated == algebraic, lambda: {
            'sample': index, 'lit': lit, 'plan': _plan_text(plan), 'simulated': simulated, 'parity': algebraic})
    return report


def check_parity_reduction(board: Board = Board(), max_len: Optional[int] = None, samples: Optional[int] = None,
                           seed: int = 0, jobs: int = 1, max_inits: int = 16,
                           exhaustive_max_cells: int = 9, exhaustive_max_len: int = 6) -> LangCheckReport:
    """Simulation of the conditional-effects Lights Out against the GF(2) homomorphism

    Without samples every press sequence up to max_len is tried from the first
    max_inits initial states; with samples, random plans up to max_len.
    """
    if samples is None:
        max_len = exhaustive_max_len if max_len is None else max_len
        if board.size > exhaustive_max_cells or max_len > exhaustive_max_len:
            raise ValueError(f"exhaustive parity check is limited to {exhaustive_max_cells} cells "
                             f"and length {exhaustive_max_len}; pass samples for larger runs")
        shards = [(board, -1, max_len, max_inits)]
        if max_len >= 1:
            shards += [(board, k, max_len, max_inits) for k in range(board.size)]
        report = _run_shards(_parity_exhaustive_shard, shards, jobs, 'parity', max_len)
        report.details.update({'board': f"{board.rows}x{board.cols}", 'mode': 'exhaustive',
                               'inits': min(max_inits, 2 ** board.size)})
        return report

    max_len = 200 if max_len is None else max_len
    shards = [(board, seed, start, stop, max_len) for start, stop in _sample_chunks(samples)]
    report = _run_shards(_parity_random_shard, shards, jobs, 'parity', max_len)
    report.details.update({'board': f"{board.rows}x{board.cols}", 'mode': 'random', 'seed': seed})
    return report


def check_toggle_identity(board: Board = Board(), samples: int = 1000, seed: int = 0) -> LangCheckReport:
    """Pressing the same cell twice restores the state, in both Lights Out variants"""
    report = LangCheckReport('toggle', 2)
    cells = board.cells()
    for variant in (lights_out_conditional(board), lights_out_well_formed(board)):
        for index in range(samples):
            rng = record_rng(seed, f"toggle/{variant.domain.name}", index)
            state = variant.state([cell for cell in cells if rng.random() < 0.5])
            cell = cells[int(rng.integers(len(cells)))]
            once = succ(variant.domain, state, variant.press(cell, state))
            twice = succ(variant.domain, once, variant.press(cell, once))
            report.record(twice == state, lambda: {
                'domain': variant.domain.name, 'lit': variant.lit_cells(state), 'cell': list(cell)})
    report.details.update({'board': f"{board.rows}x{board.cols}", 'seed': seed})
    return report


# Compiled verifiers

CASE_KINDS = ('valid', 'incomplete', 'non_executable', 'empty_plan', 'goal_in_init', 'empty_goal', 'duplicated_init')
CASE_WEIGHTS = (0.34, 0.2, 0.2, 0.08, 0.06, 0.06, 0.06)


@dataclass(frozen=True)
class SweepCase:
    instance: Instance
    plan: Plan
    kind: str

    def expected(self) -> bool:
        return is_valid(verdict_of(self.instance, self.plan))


def sample_case(config: GenConfig, index: int, lengths: Tuple[int, int]) -> SweepCase:
    """Generated record, possibly corrupted or degenerate; reproducible from (seed, index)"""
    rng = record_rng(config.seed, f"compiled/{config.variant}", index)
    kind = CASE_KINDS[int(rng.choice(len(CASE_KINDS), p=CASE_WEIGHTS))]
    instance, plan = generate(replace(config, n_actions=int(rng.integers(lengths[0], lengths[1] + 1))), rng)
    try:
        if kind == 'incomplete':
            return SweepCase(instance, corrupt_incomplete(instance, plan, rng, config), kind)
        if kind == 'non_executable':
            return SweepCase(instance, corrupt_nonexecutable(instance, plan, rng), kind)
    except GenerationError:
        return SweepCase(instance, plan, 'valid')
    if kind == 'empty_plan':
        return SweepCase(instance, (), kind)
    if kind == 'goal_in_init':
        facts = sorted(instance.init)
        chosen = [facts[int(i)] for i in rng.choice(len(facts), size=min(3, len(facts)), replace=False)]
        return SweepCase(instance.with_goal(pos(p.predicate, *p.args) for p in chosen), (), kind)
    if kind == 'empty_goal':
        return SweepCase(instance.with_goal(()), plan, kind)
    return SweepCase(instance, plan, kind)


def encode_case(case: SweepCase, layout: EncodingLayout, values: Optional[Dict[str, int]]) -> List[Token]:
    tokens = encode(case.instance, case.plan, layout, values)
    if case.kind == 'duplicated_init' and case.instance.init:
        arity = len(min(case.instance.init).args)
        tokens = tokens[:1] + tokens[1:2 + arity] + tokens[1:]
    return tokens


def check_compiled(program: CraspProgram, domain: Domain, mode, cases: Sequence[SweepCase],
                   encoder: Callable[[SweepCase], List[Token]], batch_size: int = 256,
                   first_index: int = 0) -> LangCheckReport:
    """Program acceptance against simulation on every case"""
    mode = Mode.parse(mode)
    report = LangCheckReport(f"compiled {domain.name}/{mode.value}", 0)
    if not cases:
        return report
    for case in cases:
        if case.instance.domain.name != domain.name:
            raise ValueError(f"case over {case.instance.domain.name} given to a {domain.name} verifier")
    inputs = [encoder(case) for case in cases]
    accepted = accepts_batch(program, inputs, batch_size)
    report.max_len = max(len(case.plan) for case in cases)
    for k, case in enumerate(cases):
        expected = case.expected()
        report.record(bool(accepted[k]) == expected, lambda: {
            'case': first_index + k,
            'kind': case.kind,
            'expected': expected,
            'accepted': bool(accepted[k]),
            'verdict': verdict_of(case.instance, case.plan).to_dict(),
            'tokens': format_tokens(inputs[k]),
            'table': evaluate(program, inputs[k]).to_tsv(),
        })
    return report


@dataclass(frozen=True)
class CompiledSweep:
    """How to compile one variant and encode its records"""
    variant: str
    fixed: bool
    seed: int = 0
    lengths: Tuple[int, int] = (11, 60)
    board: Board = Board()
    object_pool: Optional[int] = None

    def config(self) -> GenConfig:
        family = get_variant(self.variant).family
        pool = self.object_pool if self.object_pool is not None else max_objects(family, self.lengths[1])
        return GenConfig(self.variant, seed=self.seed, object_pool=pool, id_lengths=self.lengths, board=self.board)

    def layout(self) -> EncodingLayout:
        layout = crasp_layout(get_variant(self.variant))
        return replace(layout, objects_as='sigma' if self.fixed else 'ext')

    def universe(self) -> Tuple[Tuple[str, ...], Optional[Dict[str, int]]]:
        variant = get_variant(self.variant)
        if variant.family == 'lightsout':
            return variant.template(self.board).objects, None
        objects = tuple(f"object_{i}" for i in range(self.config().pool_size() + 1))
        return objects, object_token_values(objects)

    def compile(self):
        variant = get_variant(self.variant)
        domain = variant.domain(self.board)
        mode = variant.compile_mode or Mode.WELL_FORMED
        if self.fixed:
            objects, values = self.universe()
            return build_fixed(domain, objects, mode, self.layout(), values)
        return build_variable(domain, mode, self.layout())

    def encoder(self) -> Callable[[SweepCase], List[Token]]:
        layout = self.layout()
        if self.fixed:
            values = self.universe()[1]
            return lambda case: encode_case(case, layout, values)
        return lambda case: encode_case(case, layout, object_token_values(case.instance.objects))


def _compiled_shard(shard: Tuple[CompiledSweep, int, int, int]) -> LangCheckReport:
    sweep, start, stop, batch_size = shard
    program, report = sweep.compile()
    config = sweep.config()
    cases = [sample_case(config, index, sweep.lengths) for index in range(start, stop)]
    variant = get_variant(sweep.variant)
    return check_compiled(program, variant.domain(sweep.board), report.mode, cases, sweep.encoder(),
                          batch_size, first_index=start)


def check_compiled_variant(sweep: CompiledSweep, trials: int = 2000, jobs: int = 1,
                           batch_size: int = 256) -> LangCheckReport:
    """Compile sweep.variant and compare it with simulation on trials sampled records"""
    program, compiled = sweep.compile()
    # one shard per worker; each compiles its own copy
    shards = [(sweep, start, stop, batch_size) for start, stop in _sample_chunks(trials, -(-trials // max(1, jobs)))]
    name = f"compiled {sweep.variant}/{'fixed' if sweep.fixed else 'variable'}"
    report = _run_shards(_compiled_shard, shards, jobs, name, sweep.lengths[1])
    report.details.update({'variant': sweep.variant, 'universe': compiled.universe, 'mode': compiled.mode.value,
                           'program_lines': len(program), 'seed': sweep.seed,
                           'lengths': list(sweep.lengths)})
    return report


# Lowering

def lowering_alphabet(program: CraspProgram, values: Sequence[int]) -> List[Token]:
    return [SigmaTok(s) for s in program.sigma] + [ExtTok(v) for v in values]


def _lowering_shard(shard: Tuple[CraspProgram, Tuple[int, ...], int, int, int, int]) -> LangCheckReport:
    program, values, first, max_len, budget, batch_size = shard
    lowered = lower_match_to_finite(program, list(values), budget)
    alphabet = lowering_alphabet(program, values)
    report = LangCheckReport('lowering', max_len)
    for n in range(0, max_len):
        words = [[alphabet[first], *tail] for tail in product(alphabet, repeat=n)]
        original = accepts_batch(program, words, batch_size)
        lifted = accepts_batch(lowered, [lift_tokens(w, values) for w in words], batch_size)
        for k, word in enumerate(words):
            report.record(bool(original[k]) == bool(lifted[k]), lambda: {
                'input': format_tokens(word), 'original': bool(original[k]), 'lowered': bool(lifted[k])})
    return report


def check_lowering(program: CraspProgram, values: Sequence[int] = (1, 2, 3), max_len: int = 8, jobs: int = 1,
                   budget: int = 20000, batch_size: int = 256, name: str = 'lowering') -> LangCheckReport:
    """Original and lowered program on every input of length 1..max_len over sigma and values"""
    values = tuple(sorted(set(values)))
    alphabet = lowering_alphabet(program, values)
    shards = [(program, values, first, max_len, budget, batch_size) for first in range(len(alphabet))]
    report = _run_shards(_lowering_shard, shards, jobs, name, max_len)
    report.name = name
    report.details.update({'values': list(values), 'alphabet': len(alphabet)})
    return report


def lowering_suite(values: Sequence[int] = (1, 2, 3), max_len: int = 8, jobs: int = 1,
                   budget: int = 20000, batch_size: int = 256) -> List[LangCheckReport]:
    """check_lowering over the fragment family"""
    return [check_lowering(program, values, max_len, jobs, budget, batch_size, f"lowering {name}")
            for name, program in fragment_programs()]


# Translation invariance

def check_translation(samples: int = 1000, deltas: Sequence[int] = (1, 17, 1000), seed: int = 0,
                      max_input: int = 20) -> LangCheckReport:
    """Shifting every extended token by the same amount never changes acceptance"""
    report = LangCheckReport('translation', max_input)
    for index in range(samples):
        rng = record_rng(seed, 'translation', index)
        program = random_program(rng, n_ops=int(rng.integers(4, 16)))
        w = random_input(rng, program.sigma, int(rng.integers(1, max_input + 1)))
        base = accepts(program, w)
        for delta in deltas:
            shifted = accepts(program, shift_input(w, delta))
            report.record(shifted == base, lambda: {
                'sample': index, 'delta': delta, 'input': format_tokens(w),
                'program': serialize_crasp(program), 'accepted': base, 'shifted': shifted})
    report.details.update({'seed': seed, 'deltas': list(deltas)})
    return report
