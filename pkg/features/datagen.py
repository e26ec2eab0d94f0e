"""
Dataset generation - valid plans for the six benchmark variants, incomplete
and non-executable corruptions, tokenization and JSONL split export
"""

from __future__ import annotations

import hashlib
import math
import re
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from features.builtin_domains import Board, Variant, get_variant, heavy_grippers, template_of
from features.crasp import format_tokens
from features.crasp_compile import EncodingLayout, encode
from features.errors import CorruptionNotApplicable, GenerationError, RetryExhausted
from features.strips import (
    GroundAction,
    Incomplete,
    Instance,
    NonExecutable,
    Plan,
    Proposition,
    State,
    Verdict,
    applicable,
    applicable_actions,
    pos,
    simulate,
    succ,
    verdict_of,
)
from utils.file_io import jsonl_text, write_json, write_text_atomic
from utils.logger import get_logger

SPLITS = ('train', 'val_id', 'val_ood', 'test_id', 'test_ood')

# Records per split at full scale
TABLE_VOLUMES = {
    'colors': {'train': 1_720_000, 'val_id': 12_000, 'val_ood': 13_333, 'test_id': 24_000, 'test_ood': 26_667},
    'grippers': {'train': 360_000, 'val_id': 18_000, 'val_ood': 20_000, 'test_id': 18_000, 'test_ood': 20_000},
    'lightsout': {'train': 180_000, 'val_id': 6_000, 'val_ood': 6_666, 'test_id': 12_000, 'test_ood': 13_334},
}


@dataclass(frozen=True)
class GenConfig:
    """Everything that determines a generated record"""
    variant: str
    n_actions: int = 20
    seed: int = 0
    object_pool: Optional[int] = None       # names object_0 .. object_M; None sizes M for n_actions
    id_lengths: Tuple[int, int] = (11, 100)
    ood_lengths: Tuple[int, int] = (101, 200)
    nonexecutable_share: float = 0.5
    df_mix: float = 0.5
    colors_retry_budget: int = 50
    grippers_max_shrink: int = 4
    max_retries: int = 200
    volume_scale: int = 100
    board: Board = Board()

    def __post_init__(self):
        get_variant(self.variant)
        if self.n_actions < 1:
            raise ValueError(f"plans need at least one action, got {self.n_actions}")
        for name in ('nonexecutable_share', 'df_mix'):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        for low, high in (self.id_lengths, self.ood_lengths):
            if not 1 <= low <= high:
                raise ValueError(f"bad length range {low}..{high}")

    @property
    def family(self) -> str:
        return get_variant(self.variant).family

    def pool_size(self) -> int:
        if self.object_pool is not None:
            return self.object_pool
        return max_objects(self.family, self.n_actions)

    def split_lengths(self, split: str) -> Tuple[int, int]:
        if split not in SPLITS:
            raise ValueError(f"unknown split {split!r}")
        return self.ood_lengths if split.endswith('_ood') else self.id_lengths

    @classmethod
    def from_settings(cls, variant: str, settings: Mapping[str, object], **overrides) -> GenConfig:
        """Config from the configuration keys of ConfigLoader"""
        values = dict(
            seed=settings['seed'],
            id_lengths=(settings['id_min_length'], settings['id_max_length']),
            ood_lengths=(settings['ood_min_length'], settings['ood_max_length']),
            nonexecutable_share=settings['nonexecutable_share'],
            df_mix=settings['df_mix'],
            colors_retry_budget=settings['colors_retry_budget'],
            grippers_max_shrink=settings['grippers_max_shrink'],
            max_retries=settings['generation_max_retries'],
            volume_scale=settings['volume_scale'],
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(variant, **values)

    def to_dict(self) -> Dict[str, object]:
        data = asdict(self)
        data['board'] = [self.board.rows, self.board.cols]
        return data


def record_rng(seed: int, stream: str, index: int) -> np.random.Generator:
    """Independent counter-based stream per (seed, stream name, record index)"""
    salt = int.from_bytes(hashlib.sha256(stream.encode('utf-8')).digest()[:4], 'big')
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, salt, index])))


# Instance sizes

def _share(n: int, percent: int, round_up: bool) -> int:
    return -(-n * percent // 100) if round_up else n * percent // 100


def _sample_share(rng: np.random.Generator, n: int, low: int, high: int, minimum: int = 1) -> int:
    """Integer in [low% of n, high% of n], at least minimum"""
    lo = max(minimum, _share(n, low, True))
    hi = max(lo, _share(n, high, False))
    return int(rng.integers(lo, hi + 1))


def colors_shape(n_actions: int) -> Tuple[int, int]:
    """(bags, colors) with bags x colors close to a quarter of the plan length"""
    pairs = max(1, round(n_actions / 4))
    bags = max(1, math.isqrt(pairs))
    return bags, max(1, round(pairs / bags))


def max_objects(family: str, n_actions: int) -> int:
    if family == 'grippers':
        balls = max(1, _share(n_actions, 85, False))
        return 2 + balls + max(2, _share(balls, 50, False))
    if family == 'colors':
        return sum(colors_shape(n_actions))
    return 0


def _object_names(rng: np.random.Generator, pool: int, count: int) -> List[str]:
    if count > pool + 1:
        raise ValueError(f"need {count} object names but the pool object_0..object_{pool} is smaller")
    return [f"object_{i}" for i in rng.choice(pool + 1, size=count, replace=False)]


# Walks

class _OutOfBudget(Exception):
    pass


def _search(start, length: int, expand: Callable, finished: Callable, budget: int) -> Optional[Plan]:
    """Randomized depth-first search for exactly length steps ending in a finished node"""
    plan: List[GroundAction] = []
    spent = 0

    def extend(node, remaining: int) -> bool:
        nonlocal spent
        if remaining == 0:
            return finished(node)
        spent += 1
        if spent > budget:
            raise _OutOfBudget
        for action, following in expand(node, remaining - 1):
            plan.append(action)
            if extend(following, remaining - 1):
                return True
            plan.pop()
        return False

    try:
        found = extend(start, length)
    except _OutOfBudget:
        return None
    return tuple(plan) if found else None


def _shuffled(rng: np.random.Generator, items: Sequence) -> list:
    return [items[i] for i in rng.permutation(len(items))]


def _check_valid(instance: Instance, plan: Plan):
    verdict = verdict_of(instance, plan)
    if verdict.status != 'valid':
        raise GenerationError(f"{instance.name}: generated plan is {verdict}")


# Heavy Grippers

@dataclass(frozen=True)
class _GrippersWalk:
    state: State        # state under the generated variant
    physical: State     # well-formed reading of the same actions
    pending: frozenset  # balls picked and not dropped since


def _grippers_instance(config: GenConfig, rng: np.random.Generator) -> Instance:
    n_balls = _sample_share(rng, config.n_actions, 60, 85)
    n_heavy = _sample_share(rng, n_balls, 45, 85, minimum=0)
    n_rooms = max(2, _sample_share(rng, n_balls, 20, 50))
    names = _object_names(rng, config.pool_size(), 2 + n_rooms + n_balls)
    grippers, rooms, balls = names[:2], names[2:2 + n_rooms], names[2 + n_rooms:]
    heavy = {balls[i] for i in rng.choice(n_balls, size=n_heavy, replace=False)}

    init = {Proposition('atRobby', (rooms[int(rng.integers(n_rooms))],))}
    for g in grippers:
        init |= {Proposition('gripper', (g,)), Proposition('free', (g,))}
    init |= {Proposition('room', (r,)) for r in rooms}
    for b in balls:
        init.add(Proposition('ball', (b,)))
        if b in heavy:
            init.add(Proposition('heavy', (b,)))
        init.add(Proposition('at', (b, rooms[int(rng.integers(n_rooms))])))
    return Instance(heavy_grippers(get_variant(config.variant).kind), tuple(names), frozenset(init), frozenset(),
                    f"{config.variant}-{config.n_actions}")


def _carried(state: State) -> frozenset:
    return frozenset(p.args[0] for p in state if p.predicate == 'carry')


def _ball_goal(instance: Instance, plan: Plan) -> frozenset:
    """Each ball's last drop room, or where it started"""
    where = {p.args[0]: p.args[1] for p in instance.init if p.predicate == 'at'}
    for action in plan:
        if action.schema == 'drop':
            where[action.args[0]] = action.args[1]
    return frozenset(pos('at', ball, room) for ball, room in where.items())


def gen_grippers(config: GenConfig, rng: np.random.Generator) -> Tuple[Instance, Plan]:
    """Random applicable walk of n_actions steps that ends with every ball in a room"""
    variant = get_variant(config.variant)
    if variant.family != 'grippers':
        raise GenerationError(f"{config.variant} is not a Heavy Grippers variant")
    delete_free = variant.kind == 'delete_free'
    domain, physical_domain = heavy_grippers(variant.kind), heavy_grippers('well_formed')

    for _ in range(config.max_retries):
        instance = _grippers_instance(config, rng)
        objects = instance.objects

        def advance(walk: _GrippersWalk, action: GroundAction) -> _GrippersWalk:
            if not delete_free:
                state = succ(domain, walk.state, action)
                return _GrippersWalk(state, state, _carried(state))
            pending = set(walk.pending)
            if action.schema in ('pick', 'pickHeavy'):
                pending.add(action.args[0])
            elif action.schema == 'drop':
                pending.discard(action.args[0])
            return _GrippersWalk(succ(domain, walk.state, action),
                                 succ(physical_domain, walk.physical, action, force=True), frozenset(pending))

        def viable(walk: _GrippersWalk, remaining: int) -> bool:
            if delete_free:
                return remaining >= len(walk.pending)
            # every carried ball still needs a move to charge and a drop
            charged = Proposition('charged') in walk.physical
            return remaining >= 2 * len(walk.pending) - (1 if charged and walk.pending else 0)

        def expand(walk: _GrippersWalk, remaining: int) -> Iterator[Tuple[GroundAction, _GrippersWalk]]:
            pool = applicable_actions(domain, walk.state, objects)
            if delete_free:
                physical = [a for a in applicable_actions(physical_domain, walk.physical, objects)
                            if applicable(domain, walk.state, a)]
                if rng.random() < config.df_mix:
                    order = _shuffled(rng, pool)
                else:
                    chosen = set(physical)
                    order = _shuffled(rng, physical) + _shuffled(rng, [a for a in pool if a not in chosen])
            else:
                order = _shuffled(rng, pool)
            for action in order:
                following = advance(walk, action)
                if viable(following, remaining):
                    yield action, following

        start = _GrippersWalk(instance.init, instance.init, frozenset())
        plan = _search(start, config.n_actions, expand, lambda walk: not walk.pending, 40 * config.n_actions + 400)
        if plan is None:
            continue
        instance = instance.with_goal(_ball_goal(instance, plan))
        _check_valid(instance, plan)
        return instance, plan
    raise RetryExhausted(f"{config.variant}: no walk of {config.n_actions} actions after {config.max_retries} instances")


# Colors

def gen_colors(config: GenConfig, rng: np.random.Generator) -> Tuple[Instance, Plan]:
    """Random applicable add/remove walk from empty bags; the goal is whatever ends up in the bags"""
    variant = get_variant(config.variant)
    if variant.family != 'colors':
        raise GenerationError(f"{config.variant} is not a Colors variant")
    domain = variant.domain()
    n_bags, n_colors = colors_shape(config.n_actions)

    for _ in range(config.max_retries):
        names = _object_names(rng, config.pool_size(), n_bags + n_colors)
        bags, colors = names[:n_bags], names[n_bags:]
        init = frozenset([Proposition('bag', (b,)) for b in bags] + [Proposition('color', (c,)) for c in colors])
        instance = Instance(domain, tuple(names), init, frozenset(), f"{config.variant}-{config.n_actions}")

        def expand(state: State, remaining: int):
            for action in _shuffled(rng, applicable_actions(domain, state, instance.objects)):
                yield action, succ(domain, state, action)

        def filled(state: State) -> bool:
            return any(p.predicate == 'hasColor' for p in state)

        plan = _search(init, config.n_actions, expand, filled, 4 * config.n_actions + 100)
        if plan is None:
            continue
        trace, _ = simulate(instance, plan)
        goal = frozenset(pos('hasColor', *p.args) for p in trace[-1] if p.predicate == 'hasColor')
        instance = instance.with_goal(goal)
        _check_valid(instance, plan)
        return instance, plan
    raise RetryExhausted(f"{config.variant}: no plan with a non-empty goal after {config.max_retries} tries")


# Lights Out

def gen_lights_out(config: GenConfig, rng: np.random.Generator) -> Tuple[Instance, Plan]:
    """Random presses from the all-off goal; the plan undoes them in reverse order"""
    variant = get_variant(config.variant)
    if variant.family != 'lightsout':
        raise GenerationError(f"{config.variant} is not a Lights Out variant")
    template = variant.template(config.board)
    domain, cells = template.domain, template.board.cells()

    presses = [cells[int(i)] for i in rng.integers(0, len(cells), size=config.n_actions)]
    state = template.state(())
    for cell in presses:
        state = succ(domain, state, template.press(cell, state))
    instance = template.instance(template.lit_cells(state), f"{config.variant}-{config.n_actions}")

    plan = []
    for cell in reversed(presses):
        action = template.press(cell, state)
        plan.append(action)
        state = succ(domain, state, action)
    plan = tuple(plan)
    _check_valid(instance, plan)
    return instance, plan


GENERATORS: Dict[str, Callable[[GenConfig, np.random.Generator], Tuple[Instance, Plan]]] = {
    'grippers': gen_grippers,
    'colors': gen_colors,
    'lightsout': gen_lights_out,
}


def generate(config: GenConfig, rng: np.random.Generator) -> Tuple[Instance, Plan]:
    return GENERATORS[config.family](config, rng)


# Corruption

def corrupt_incomplete(instance: Instance, plan: Plan, rng: np.random.Generator,
                       config: Optional[GenConfig] = None, min_length: int = 1) -> Plan:
    """Executable plan that misses the goal; one goal literal for Grippers and Colors"""
    variant = get_variant(instance.domain.name)
    config = config or GenConfig(variant.name)
    if not plan:
        raise CorruptionNotApplicable("an empty plan has no action to replace")
    if variant.family == 'colors':
        return _colors_incomplete(instance, plan, rng, config.colors_retry_budget)
    if variant.family == 'lightsout':
        return _lights_out_incomplete(instance, plan, rng)
    return _grippers_incomplete(instance, plan, rng, config.grippers_max_shrink, min_length, config.max_retries)


def _misses_one_goal(verdict: Verdict) -> bool:
    return isinstance(verdict, Incomplete) and len(verdict.unsatisfied) == 1


def _colors_incomplete(instance: Instance, plan: Plan, rng: np.random.Generator, budget: int) -> Plan:
    trace, _ = simulate(instance, plan)
    for _ in range(budget):
        k = int(rng.integers(len(plan)))
        options = [a for a in applicable_actions(instance.domain, trace[k], instance.objects) if a != plan[k]]
        if not options:
            continue
        candidate = plan[:k] + (options[int(rng.integers(len(options)))],) + plan[k + 1:]
        if _misses_one_goal(verdict_of(instance, candidate)):
            return candidate
    raise RetryExhausted(f"{instance.name}: no single substitution breaks exactly one goal in {budget} tries")


def _lights_out_incomplete(instance: Instance, plan: Plan, rng: np.random.Generator) -> Plan:
    template = template_of(instance)
    trace, _ = simulate(instance, plan[:-1])
    last = template.pressed_cell(plan[-1])
    others = [cell for cell in template.board.cells() if cell != last]
    if not others:
        raise CorruptionNotApplicable("a one-light board has no other press")
    # on tiny boards two presses can share an effect vector
    for cell in _shuffled(rng, others):
        candidate = plan[:-1] + (template.press(cell, trace[-1]),)
        if isinstance(verdict_of(instance, candidate), Incomplete):
            return candidate
    raise CorruptionNotApplicable(f"{instance.name}: every other press has the same effect")


def _redirections(plan: Plan, m: int, k: int, room: str) -> Iterator[Plan]:
    """Send the robot to room instead of the drop room at step m and drop there"""
    origin, target = plan[m].args
    ball, _, gripper = plan[k].args
    moved = GroundAction('move', (origin, room))
    dropped = GroundAction('drop', (ball, room, gripper))

    suffix, rerouted = [], False
    for action in plan[k + 1:]:
        if not rerouted and action.schema == 'move' and action.args[0] == target:
            action, rerouted = GroundAction('move', (room, action.args[1])), True
        suffix.append(action)
    yield plan[:m] + (moved,) + plan[m + 1:k] + (dropped,) + tuple(suffix)
    yield plan[:m] + (moved, dropped)


def _grippers_incomplete(instance: Instance, plan: Plan, rng: np.random.Generator,
                         max_shrink: int, min_length: int, attempts: int) -> Plan:
    rooms = sorted(p.args[0] for p in instance.init if p.predicate == 'room')
    goal_room = {lit.args[0]: lit.args[1] for lit in instance.goal if lit.predicate == 'at'}
    final_drop = {action.args[0]: k for k, action in enumerate(plan) if action.schema == 'drop'}
    balls = sorted(b for b, k in final_drop.items() if goal_room.get(b) == plan[k].args[1])

    tried = 0
    for ball in _shuffled(rng, balls):
        k = final_drop[ball]
        target = plan[k].args[1]
        arrivals = [m for m in range(k) if plan[m].schema == 'move' and plan[m].args[1] == target]
        if not arrivals:
            continue
        m = arrivals[-1]
        for room in _shuffled(rng, rooms):
            if room in plan[m].args:
                continue
            tried += 1
            if tried > attempts:
                raise RetryExhausted(f"{instance.name}: no redirected drop within {attempts} tries")
            for candidate in _redirections(plan, m, k, room):
                if len(candidate) < max(min_length, len(plan) - max_shrink):
                    continue
                verdict = verdict_of(instance, candidate)
                if _misses_one_goal(verdict) and verdict.unsatisfied[0] == pos('at', ball, target):
                    return candidate
    raise RetryExhausted(f"{instance.name}: no ball's final drop can be redirected")


def _typed(instance: Instance, predicate: str) -> List[str]:
    return sorted(p.args[0] for p in instance.init if p.predicate == predicate)


def _replacement_pool(variant: Variant, instance: Instance) -> List[Tuple[str, List[List[str]]]]:
    """(schema, candidates per argument) for type-correct replacement actions"""
    if variant.family == 'grippers':
        rooms, balls, grippers = _typed(instance, 'room'), _typed(instance, 'ball'), _typed(instance, 'gripper')
        return [('move', [rooms, rooms]), ('drop', [balls, rooms, grippers])]
    if variant.family == 'colors':
        colors, bags = _typed(instance, 'color'), _typed(instance, 'bag')
        return [('add', [colors, bags]), ('remove', [colors, bags])]
    return [(schema.name, []) for schema in instance.domain.schemas]


def corrupt_nonexecutable(instance: Instance, plan: Plan, rng: np.random.Generator, attempts: int = 1000) -> Plan:
    """Replace the last action by a type-correct one whose preconditions fail; never a pick"""
    variant = get_variant(instance.domain.name)
    if variant.name in ('colors-strips', 'lightsout-ce'):
        raise CorruptionNotApplicable(f"{variant.name}: all actions are always applicable")
    if not plan:
        raise CorruptionNotApplicable("an empty plan has no action to replace")

    trace, verdict = simulate(instance, plan[:-1])
    if isinstance(verdict, NonExecutable):
        raise GenerationError(f"{instance.name}: plan prefix is already non-executable")
    state = trace[-1]
    pool = _replacement_pool(variant, instance)
    weights = np.array([math.prod(len(c) for c in candidates) for _, candidates in pool], dtype=float)
    if weights.sum() == 0:
        raise CorruptionNotApplicable(f"{instance.name}: no type-correct replacement actions")
    weights /= weights.sum()

    for _ in range(attempts):
        schema, candidates = pool[int(rng.choice(len(pool), p=weights))]
        action = GroundAction(schema, tuple(c[int(rng.integers(len(c)))] for c in candidates))
        if not applicable(instance.domain, state, action):
            return plan[:-1] + (action,)
    raise RetryExhausted(f"{instance.name}: every sampled replacement was applicable")


# Records

@dataclass(frozen=True)
class DatasetRecord:
    id: str
    variant: str
    instance: Instance
    plan: Plan
    corruption: str = 'none'    # none | incomplete | non_executable

    @property
    def label(self) -> str:
        return 'correct' if self.corruption == 'none' else 'incorrect'

    @property
    def n_actions(self) -> int:
        return len(self.plan)

    def verdict(self) -> Verdict:
        return verdict_of(self.instance, self.plan)

    def label_matches(self) -> bool:
        """Label and corruption kind agree with simulation"""
        status = self.verdict().status
        return status == {'none': 'valid'}.get(self.corruption, self.corruption)

    def to_row(self) -> Dict[str, object]:
        return {
            'id': self.id,
            'variant': self.variant,
            'n_actions': self.n_actions,
            'label': self.label,
            'corruption': self.corruption,
            'objects': list(self.instance.objects),
            'init': [str(p) for p in sorted(self.instance.init)],
            'plan': [str(a) for a in self.plan],
            'goal': [str(lit) for lit in sorted(self.instance.goal)],
            'tokens_train': tokenize(self, 'train'),
            'tokens_crasp': tokenize(self, 'crasp'),
        }


def crasp_layout(variant: Variant) -> EncodingLayout:
    if variant.family == 'lightsout':
        return EncodingLayout(negative_goals=True, objects_as='sigma')
    return EncodingLayout()


def object_token_values(objects: Sequence[str]) -> Optional[Dict[str, int]]:
    """object_i reads as extended token #i; None when names do not follow that pattern"""
    values = {}
    for obj in objects:
        found = re.fullmatch(r'object_(\d+)', obj)
        if not found:
            return None
        values[obj] = int(found.group(1))
    return values


def _train_tokens(record: DatasetRecord) -> List[str]:
    variant = get_variant(record.variant)
    instance = record.instance
    tokens = ['<init>']
    if variant.family == 'lightsout':
        template = template_of(instance)
        for r, c in template.lit_cells(instance.init):
            tokens += ['<on>', f"<{r}>", f"<{c}>"]
    elif variant.family != 'colors':
        # Colors instances all start with empty bags
        for prop in sorted(instance.init):
            tokens += [f"<{prop.predicate}>"] + [f"<{a}>" for a in prop.args]

    tokens.append('<plan>')
    for action in record.plan:
        if variant.family == 'lightsout':
            r, c = template.pressed_cell(action)
            bits = template.press_bits(action)
            tokens += ['<press>', f"<{r}>", f"<{c}>"] + ([] if bits is None else [f"<{bits}>"])
        else:
            tokens += [f"<{action.schema}>"] + [f"<{a}>" for a in action.args]

    tokens.append('<goal>')
    if variant.family != 'lightsout':
        # Lights Out always asks for every light off
        for lit in sorted(instance.goal):
            tokens += ([] if lit.positive else ['<not>']) + [f"<{lit.predicate}>"] + [f"<{a}>" for a in lit.args]
    tokens += ['<verdict>', f"<{record.label}>"]
    return tokens


def tokenize(record: DatasetRecord, scheme: str = 'train') -> str:
    """train: <init> I <plan> pi <goal> G <verdict> V; crasp: $ I @ pi @ G @"""
    if scheme == 'train':
        return ' '.join(_train_tokens(record))
    if scheme == 'crasp':
        layout = crasp_layout(get_variant(record.variant))
        values = object_token_values(record.instance.objects) if layout.objects_as == 'ext' else None
        return format_tokens(encode(record.instance, record.plan, layout, values))
    raise ValueError(f"unknown tokenization scheme {scheme!r} (use train or crasp)")


def generate_pair(config: GenConfig, split: str, index: int) -> Tuple[DatasetRecord, DatasetRecord]:
    """Valid record and its corrupted twin for one instance"""
    rng = record_rng(config.seed, f"{config.variant}/{split}", index)
    low, high = config.split_lengths(split)
    base = f"{config.variant}-{split}-{index:06d}"

    for _ in range(config.max_retries):
        sized = replace(config, n_actions=int(rng.integers(low, high + 1)))
        instance, plan = generate(sized, rng)
        kind = 'incomplete'
        if config.family == 'grippers' and rng.random() < config.nonexecutable_share:
            kind = 'non_executable'
        try:
            if kind == 'incomplete':
                broken = corrupt_incomplete(instance, plan, rng, config, min_length=low)
            else:
                broken = corrupt_nonexecutable(instance, plan, rng)
        except GenerationError as e:
            get_logger().debug(f"{base}: resampling after {e}")
            continue
        pair = (DatasetRecord(f"{base}-correct", config.variant, instance, plan),
                DatasetRecord(f"{base}-incorrect", config.variant, instance, broken, kind))
        for record in pair:
            if not record.label_matches():
                raise GenerationError(f"{record.id}: label {record.label} disagrees with {record.verdict()}")
        return pair
    raise RetryExhausted(f"{base}: no corruptible plan after {config.max_retries} instances")


def _pair_rows(job: Tuple[GenConfig, str, int]) -> List[Dict[str, object]]:
    return [record.to_row() for record in generate_pair(*job)]


def split_size(config: GenConfig, split: str, count: Optional[int] = None) -> int:
    """Records in a split, always even"""
    size = count if count is not None else TABLE_VOLUMES[config.family][split] // config.volume_scale
    return max(0, size - size % 2)


def generate_split(config: GenConfig, split: str, count: Optional[int] = None,
                   jobs: int = 1) -> List[Dict[str, object]]:
    """JSONL rows of one split in record order, whatever the number of workers"""
    pairs = [(config, split, index) for index in range(split_size(config, split, count) // 2)]
    if jobs > 1 and len(pairs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_pair_rows, pairs, chunksize=max(1, len(pairs) // (4 * jobs))))
    else:
        chunks = [_pair_rows(job) for job in pairs]
    return [row for chunk in chunks for row in chunk]


def export_jsonl(records: Iterable, path) -> str:
    """Write records (DatasetRecord or rows) one per line; returns the SHA-256 of the file"""
    rows = [r.to_row() if isinstance(r, DatasetRecord) else r for r in records]
    text = jsonl_text(rows)
    write_text_atomic(path, text)
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def build_splits(config: GenConfig, out_dir, count: Optional[int] = None, jobs: int = 1,
                 flags: Optional[Mapping[str, object]] = None,
                 splits: Sequence[str] = SPLITS) -> Dict[str, object]:
    """Write {variant}.{split}.jsonl for every split plus manifest.json"""
    out_dir = Path(out_dir)
    if config.object_pool is None and config.family != 'lightsout':
        config = replace(config, object_pool=max_objects(config.family, config.ood_lengths[1]))

    files, all_rows = {}, []
    with get_logger().timed(f"gen {config.variant}") as details:
        for split in splits:
            rows = generate_split(config, split, count, jobs)
            name = f"{config.variant}.{split}.jsonl"
            files[name] = {'records': len(rows), 'sha256': export_jsonl(rows, out_dir / name)}
            all_rows += rows
        details.update(records=len(all_rows), jobs=jobs, output=out_dir)

    manifest = {
        'variant': config.variant,
        'flags': dict(flags or {}),
        'config': config.to_dict(),
        'files': files,
        'stats': stats(all_rows),
    }
    write_json(out_dir / 'manifest.json', manifest)
    return manifest


# Stats

def _bucket(n: int, width: int = 10) -> str:
    low = (n - 1) // width * width + 1
    return f"{low}-{low + width - 1}"


def stats(rows: Iterable[Mapping[str, object]]) -> Dict[str, object]:
    """Length buckets, label balance, corruption mix and object counts of JSONL rows"""
    rows = list(rows)
    buckets, labels, corruptions = Counter(), Counter(), Counter()
    object_counts = []
    pairs: Dict[str, Dict[str, Mapping]] = defaultdict(dict)
    for row in rows:
        buckets[_bucket(row['n_actions'])] += 1
        labels[row['label']] += 1
        corruptions[row['corruption']] += 1
        object_counts.append(len(row['objects']))
        base, _, label = str(row['id']).rpartition('-')
        pairs[base][label] = row

    deltas = Counter()
    for pair in pairs.values():
        if 'correct' not in pair or 'incorrect' not in pair:
            continue
        broken = pair['incorrect']
        if broken['corruption'] == 'incomplete' and str(broken['variant']).startswith('grippers'):
            deltas[broken['n_actions'] - pair['correct']['n_actions']] += 1

    return {
        'records': len(rows),
        'buckets': dict(sorted(buckets.items(), key=lambda item: int(item[0].split('-')[0]))),
        'labels': dict(sorted(labels.items())),
        'label_balance': labels['correct'] / len(rows) if rows else 0.0,
        'corruptions': dict(sorted(corruptions.items())),
        'objects': {'min': min(object_counts), 'max': max(object_counts)} if object_counts else {},
        'grippers_incomplete_length_delta': {str(d): c for d, c in sorted(deltas.items())},
    }
