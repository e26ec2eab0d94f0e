"""
Built-in domains - Heavy Grippers, Colors, Lights Out and FlipFlop constructors,
the worked example records and the registry of dataset variants
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

from features.crasp_compile import EncodingLayout, Mode
from features.errors import DomainError
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
    State,
    neg,
    pos,
)

GRIPPERS_PREDICATES = (
    PredicateDef('room', 1), PredicateDef('ball', 1), PredicateDef('gripper', 1),
    PredicateDef('free', 1), PredicateDef('heavy', 1), PredicateDef('charged', 0),
    PredicateDef('atRobby', 1), PredicateDef('at', 2), PredicateDef('carry', 2),
)

COLORS_PREDICATES = (PredicateDef('bag', 1), PredicateDef('color', 1), PredicateDef('hasColor', 2))


def _schema(name: str, params: str, pre: Iterable[Literal], effect: Iterable[Literal]) -> ActionSchema:
    return ActionSchema(name, tuple(params.split()), frozenset(pre), (ConditionalEffect(frozenset(), frozenset(effect)),))


# Heavy Grippers

@lru_cache(maxsize=None)
def heavy_grippers(variant: str = 'well_formed') -> Domain:
    """Heavy Grippers: well_formed, delete_free or conditional (pick with heavy/light branches)"""
    typed = [pos('ball', '?b'), pos('room', '?r'), pos('gripper', '?g'), pos('atRobby', '?r')]

    if variant == 'well_formed':
        schemas = (
            _schema('move', '?r1 ?r2',
                    [pos('room', '?r1'), pos('room', '?r2'), pos('atRobby', '?r1'), neg('atRobby', '?r2'), neg('charged')],
                    [pos('charged'), pos('atRobby', '?r2'), neg('atRobby', '?r1')]),
            _schema('pick', '?b ?r ?g',
                    typed + [neg('heavy', '?b'), pos('free', '?g'), pos('at', '?b', '?r'), neg('carry', '?b', '?g')],
                    [pos('carry', '?b', '?g'), neg('free', '?g'), neg('at', '?b', '?r')]),
            _schema('pickHeavy', '?b ?r ?g',
                    typed + [pos('heavy', '?b'), pos('free', '?g'), pos('charged'), pos('at', '?b', '?r'),
                             neg('carry', '?b', '?g')],
                    [pos('carry', '?b', '?g'), neg('free', '?g'), neg('at', '?b', '?r'), neg('charged')]),
            _schema('drop', '?b ?r ?g',
                    typed + [pos('carry', '?b', '?g'), pos('charged'), neg('at', '?b', '?r'), neg('free', '?g')],
                    [pos('at', '?b', '?r'), pos('free', '?g'), neg('carry', '?b', '?g'), neg('charged')]),
        )
        return Domain('grippers-wf', GRIPPERS_PREDICATES, schemas)

    if variant == 'delete_free':
        schemas = (
            _schema('move', '?r1 ?r2', [pos('room', '?r1'), pos('room', '?r2'), pos('atRobby', '?r1')],
                    [pos('charged'), pos('atRobby', '?r2')]),
            _schema('pick', '?b ?r ?g', typed + [pos('at', '?b', '?r'), pos('free', '?g'), neg('heavy', '?b')],
                    [pos('carry', '?b', '?g')]),
            _schema('pickHeavy', '?b ?r ?g',
                    typed + [pos('at', '?b', '?r'), pos('free', '?g'), pos('charged'), pos('heavy', '?b')],
                    [pos('carry', '?b', '?g')]),
            _schema('drop', '?b ?r ?g', typed + [pos('carry', '?b', '?g')],
                    [pos('at', '?b', '?r'), pos('free', '?g')]),
        )
        return Domain('grippers-df', GRIPPERS_PREDICATES, schemas)

    if variant == 'conditional':
        picked = [pos('carry', '?b', '?g'), neg('free', '?g'), neg('at', '?b', '?r')]
        pick = ActionSchema(
            'pick', ('?b', '?r', '?g'),
            frozenset(typed + [pos('at', '?b', '?r'), pos('free', '?g'), pos('charged')]),
            (ConditionalEffect(frozenset([neg('heavy', '?b')]), frozenset(picked)),
             ConditionalEffect(frozenset([pos('heavy', '?b')]), frozenset(picked + [neg('charged')]))),
        )
        schemas = (
            _schema('move', '?r1 ?r2', [pos('room', '?r1'), pos('room', '?r2'), pos('atRobby', '?r1')],
                    [pos('charged'), pos('atRobby', '?r2'), neg('atRobby', '?r1')]),
            pick,
            _schema('drop', '?b ?r ?g', typed + [pos('carry', '?b', '?g')],
                    [pos('at', '?b', '?r'), pos('free', '?g'), neg('carry', '?b', '?g'), neg('charged')]),
        )
        return Domain('grippers-ce', GRIPPERS_PREDICATES, schemas)

    raise DomainError(f"unknown Heavy Grippers variant {variant!r}")


# Colors

@lru_cache(maxsize=None)
def colors(variant: str = 'well_formed') -> Domain:
    """Colors: well_formed guards add/remove by absence/presence, strips does not"""
    typed = [pos('bag', '?b'), pos('color', '?c')]
    if variant == 'well_formed':
        add_pre, remove_pre, name = typed + [neg('hasColor', '?b', '?c')], typed + [pos('hasColor', '?b', '?c')], 'colors-wf'
    elif variant == 'strips':
        add_pre, remove_pre, name = typed, typed, 'colors-strips'
    else:
        raise DomainError(f"unknown Colors variant {variant!r}")
    schemas = (
        _schema('add', '?c ?b', add_pre, [pos('hasColor', '?b', '?c')]),
        _schema('remove', '?c ?b', remove_pre, [neg('hasColor', '?b', '?c')]),
    )
    return Domain(name, COLORS_PREDICATES, schemas)


# Lights Out

Cell = Tuple[int, int]


@dataclass(frozen=True)
class Board:
    """rows x cols grid; N[v] is v followed by its 4-neighbours in row-major order"""
    rows: int = 5
    cols: int = 5

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise DomainError(f"board must have positive dimensions, got {self.rows}x{self.cols}")

    @property
    def size(self) -> int:
        return self.rows * self.cols

    def cells(self) -> List[Cell]:
        return [(r, c) for r in range(self.rows) for c in range(self.cols)]

    def index(self, cell: Cell) -> int:
        return cell[0] * self.cols + cell[1]

    def neighborhood(self, cell: Cell) -> List[Cell]:
        r, c = cell
        around = [(r - 1, c), (r, c - 1), (r, c + 1), (r + 1, c)]
        return [cell] + [(i, j) for i, j in around if 0 <= i < self.rows and 0 <= j < self.cols]

    def label(self, cell: Cell) -> str:
        r, c = cell
        return f"{r}_{c}" if max(self.rows, self.cols) > 10 else f"{r}{c}"

    def light(self, cell: Cell) -> str:
        return f"L{self.label(cell)}"

    def cell_of(self, light: str) -> Cell:
        found = re.fullmatch(r'L(\d+)_(\d+)' if max(self.rows, self.cols) > 10 else r'L(\d)(\d)', light)
        if not found:
            raise DomainError(f"{light} is not a light of a {self.rows}x{self.cols} board")
        return int(found.group(1)), int(found.group(2))


@dataclass(frozen=True)
class InstanceTemplate:
    """Domain plus the fixed objects and goal every instance of it shares"""
    domain: Domain
    board: Board
    well_formed: bool
    objects: Tuple[str, ...]
    goal: FrozenSet[Literal]
    layout: EncodingLayout = field(default_factory=lambda: EncodingLayout(negative_goals=True))

    def state(self, lit: Iterable[Cell]) -> State:
        lit = set(lit)
        return frozenset(Proposition('on' if cell in lit else 'out', (self.board.light(cell),))
                         for cell in self.board.cells())

    def lit_cells(self, state: State) -> List[Cell]:
        return sorted(self.board.cell_of(p.args[0]) for p in state if p.predicate == 'on')

    def instance(self, lit: Iterable[Cell] = (), name: str = 'lightsout') -> Instance:
        return Instance(self.domain, self.objects, self.state(lit), self.goal, name)

    def press(self, cell: Cell, state: Optional[State] = None) -> GroundAction:
        """Press action for cell; the well-formed variant picks the schema matching state"""
        label = self.board.label(cell)
        if not self.well_formed:
            return GroundAction(f"press-{label}")
        if state is None:
            raise DomainError("the well-formed press depends on the current state")
        k = 0
        for t, other in enumerate(self.board.neighborhood(cell)):
            if Proposition('on', (self.board.light(other),)) in state:
                k |= 1 << t
        return GroundAction(f"press-{label}-{k}")

    def pressed_cell(self, action: GroundAction) -> Cell:
        found = re.fullmatch(r'press-(\d+(?:_\d+)?)(?:-\d+)?', action.schema)
        if not found:
            raise DomainError(f"{action} is not a press action")
        return self.board.cell_of(f"L{found.group(1)}")

    def press_bits(self, action: GroundAction) -> Optional[int]:
        found = re.fullmatch(r'press-\d+(?:_\d+)?-(\d+)', action.schema)
        return int(found.group(1)) if found else None


def board_of(lights: Iterable[str]) -> Board:
    """The board whose lights, in row-major order, are exactly lights"""
    lights = tuple(lights)
    cells = []
    for light in lights:
        found = re.fullmatch(r'L(\d+)_(\d+)', light) or re.fullmatch(r'L(\d)(\d)', light)
        if not found:
            raise DomainError(f"{light} is not a light name")
        cells.append((int(found.group(1)), int(found.group(2))))
    if not cells:
        raise DomainError("a board needs at least one light")
    board = Board(max(r for r, _ in cells) + 1, max(c for _, c in cells) + 1)
    if tuple(board.light(cell) for cell in board.cells()) != lights:
        raise DomainError(f"lights do not form a {board.rows}x{board.cols} board in row-major order")
    return board


def template_of(instance: Instance) -> InstanceTemplate:
    """Lights Out template an instance was built from"""
    board = board_of(instance.objects)
    if instance.domain.name == 'lightsout-ce':
        return lights_out_conditional(board)
    if instance.domain.name == 'lightsout-wf':
        return lights_out_well_formed(board)
    raise DomainError(f"{instance.domain.name} is not a Lights Out domain")


LIGHTS_PREDICATES = (PredicateDef('on', 1), PredicateDef('out', 1))


def _toggle_on(light: str) -> List[Literal]:
    return [pos('on', light), neg('out', light)]


def _toggle_off(light: str) -> List[Literal]:
    return [pos('out', light), neg('on', light)]


def _all_off(board: Board) -> FrozenSet[Literal]:
    return frozenset(neg('on', board.light(cell)) for cell in board.cells())


@lru_cache(maxsize=None)
def lights_out_conditional(board: Board = Board()) -> InstanceTemplate:
    """One nullary press per cell toggling N[v] through two conditional effects per light"""
    schemas = []
    for cell in board.cells():
        effects = []
        for other in board.neighborhood(cell):
            light = board.light(other)
            effects.append(ConditionalEffect(frozenset([pos('out', light)]), frozenset(_toggle_on(light))))
            effects.append(ConditionalEffect(frozenset([pos('on', light)]), frozenset(_toggle_off(light))))
        schemas.append(ActionSchema(f"press-{board.label(cell)}", (), frozenset(), tuple(effects)))
    domain = Domain('lightsout-ce', LIGHTS_PREDICATES, tuple(schemas))
    return InstanceTemplate(domain, board, False, tuple(board.light(c) for c in board.cells()), _all_off(board))


@lru_cache(maxsize=None)
def lights_out_well_formed(board: Board = Board()) -> InstanceTemplate:
    """2^|N[v]| nullary presses per cell, one per on/off combination of N[v]

    In press-rc-k, bit t of k is set when the t-th light of N[v] must be on,
    lights ordered self first, then the neighbors row-major. With only L10 lit,
    pressing (0, 0) is press-00-4. This bitmask numbering is planlab's own and
    does not reproduce schema indices listed elsewhere.
    """
    schemas = []
    for cell in board.cells():
        lights = [board.light(other) for other in board.neighborhood(cell)]
        for k in range(1 << len(lights)):
            pre, effect = [], []
            for t, light in enumerate(lights):
                if k >> t & 1:
                    pre += [pos('on', light), neg('out', light)]
                    effect += _toggle_off(light)
                else:
                    pre += [pos('out', light), neg('on', light)]
                    effect += _toggle_on(light)
            schemas.append(_schema(f"press-{board.label(cell)}-{k}", '', pre, effect))
    domain = Domain('lightsout-wf', LIGHTS_PREDICATES, tuple(schemas))
    return InstanceTemplate(domain, board, True, tuple(board.light(c) for c in board.cells()), _all_off(board))


# FlipFlop

@lru_cache(maxsize=None)
def flipflop_domain() -> Domain:
    schemas = (
        _schema('a_a', '?x', [], [neg('active', '?x')]),
        _schema('a_b', '?x', [], [pos('active', '?x')]),
        _schema('a_e', '?x', [], []),
    )
    return Domain('flipflop', (PredicateDef('active', 1),), schemas)


def flipflop_instance() -> Instance:
    """Single object k, nothing active, goal active(k)"""
    return Instance(flipflop_domain(), ('k',), frozenset(), frozenset([pos('active', 'k')]), 'flipflop')


def flipflop_plan(word: str) -> Plan:
    """a, b, e letters to a_a(k), a_b(k), a_e(k)"""
    try:
        return tuple(GroundAction({'a': 'a_a', 'b': 'a_b', 'e': 'a_e'}[letter], ('k',)) for letter in word)
    except KeyError as e:
        raise DomainError(f"FlipFlop words use the letters a, b and e, got {e.args[0]!r}") from None


# Worked examples

def actions(*texts: str) -> Plan:
    """Plan from 'name(a,b)' strings"""
    plan = []
    for text in texts:
        found = re.fullmatch(r'\s*([^\s(]+)\s*\(([^)]*)\)\s*', text)
        if not found:
            raise DomainError(f"cannot read action {text!r}")
        args = tuple(a.strip() for a in found.group(2).split(',') if a.strip())
        plan.append(GroundAction(found.group(1), args))
    return tuple(plan)


def _props(*texts: str) -> FrozenSet[Proposition]:
    return frozenset(Proposition(a.schema, a.args) for a in actions(*texts))


GRIPPERS_FIGURE_OBJECTS = ('object_237', 'object_223', 'object_100', 'object_154', 'object_280',
                           'object_113', 'object_94', 'object_7', 'object_76')


def grippers_example_instance(variant: str = 'well_formed') -> Instance:
    """Nine-object example: two grippers, four rooms, one heavy ball"""
    init = _props(
        'atRobby(object_280)', 'gripper(object_237)', 'gripper(object_223)', 'free(object_237)', 'free(object_223)',
        'room(object_100)', 'room(object_154)', 'room(object_280)', 'room(object_113)',
        'ball(object_94)', 'ball(object_7)', 'ball(object_76)', 'heavy(object_94)',
        'at(object_94,object_100)', 'at(object_7,object_154)', 'at(object_76,object_280)')
    goal = frozenset([pos('at', 'object_94', 'object_280'), pos('at', 'object_7', 'object_154'),
                      pos('at', 'object_76', 'object_154')])
    return Instance(heavy_grippers(variant), GRIPPERS_FIGURE_OBJECTS, init, goal, 'grippers-example')


def grippers_example_plans() -> Dict[str, Plan]:
    valid = actions('pick(object_76,object_280,object_223)', 'move(object_280,object_100)',
                    'pickHeavy(object_94,object_100,object_237)', 'move(object_100,object_154)',
                    'drop(object_76,object_154,object_223)', 'move(object_154,object_280)',
                    'drop(object_94,object_280,object_237)', 'move(object_280,object_113)')
    incomplete = valid[:5] + actions('move(object_154,object_113)', 'drop(object_94,object_113,object_237)')
    non_executable = valid[:7] + actions('drop(object_76,object_280,object_223)')
    return {'pi': valid, 'pi1_prime': incomplete, 'pi2_prime': non_executable}


COLORS_FIGURE_OBJECTS = ('object_5', 'object_6', 'object_3', 'object_8')


def colors_example_instance(variant: str = 'well_formed') -> Instance:
    """Two bags, two colors; the strips record keeps only the goal its valid plan reaches"""
    init = _props('bag(object_5)', 'bag(object_6)', 'color(object_3)', 'color(object_8)')
    if variant == 'well_formed':
        goal = frozenset([pos('hasColor', 'object_5', 'object_3'), pos('hasColor', 'object_6', 'object_8')])
    else:
        goal = frozenset([pos('hasColor', 'object_6', 'object_8')])
    return Instance(colors(variant), COLORS_FIGURE_OBJECTS, init, goal, f"colors-example-{variant}")


def colors_example_plans() -> Dict[str, Plan]:
    pi1 = actions('add(object_3,object_5)', 'add(object_8,object_5)', 'remove(object_3,object_5)',
                  'add(object_8,object_6)', 'add(object_3,object_5)', 'remove(object_8,object_5)')
    pi2 = actions('remove(object_3,object_5)', 'add(object_8,object_5)', 'add(object_8,object_5)',
                  'add(object_8,object_6)', 'remove(object_8,object_5)', 'remove(object_3,object_6)')
    return {
        'pi1': pi1,
        'pi1_prime': pi1[:4] + actions('add(object_3,object_6)') + pi1[5:],
        'pi2': pi2,
        'pi2_prime': pi2[:3] + actions('remove(object_8,object_5)') + pi2[4:],
    }


def conditional_grippers_instance() -> Instance:
    """Reconstructed two-room example for the conditional-effects pick"""
    init = _props('room(RA)', 'room(RB)', 'ball(B1)', 'ball(B2)', 'gripper(G1)', 'free(G1)', 'heavy(B1)',
                  'atRobby(RA)', 'at(B1,RA)', 'at(B2,RB)')
    goal = frozenset([pos('at', 'B1', 'RB'), pos('at', 'B2', 'RA')])
    return Instance(heavy_grippers('conditional'), ('B1', 'B2', 'RA', 'RB', 'G1'), init, goal, 'grippers-ce-example')


def conditional_grippers_plan() -> Plan:
    return actions('move(RA,RB)', 'pick(B2,RB,G1)', 'move(RB,RA)', 'drop(B2,RA,G1)', 'move(RA,RB)',
                   'move(RB,RA)', 'pick(B1,RA,G1)', 'move(RA,RB)', 'drop(B1,RB,G1)')


def _under(instance: Instance, domain: Domain) -> Instance:
    return Instance(domain, instance.objects, instance.init, instance.goal, f"{instance.name}-as-{domain.name}")


@dataclass(frozen=True)
class WorkedExample:
    """Worked example with its expected status under each sibling variant"""
    name: str
    plan: Plan
    expected: Mapping[str, str]
    instances: Mapping[str, Instance]

    def instance(self, variant: str) -> Instance:
        return self.instances[variant]


def worked_examples() -> List[WorkedExample]:
    grippers = {'grippers-wf': grippers_example_instance('well_formed'),
                'grippers-df': grippers_example_instance('delete_free')}
    g = grippers_example_plans()
    first, second = colors_example_instance('well_formed'), colors_example_instance('strips')
    colors_wf = {'colors-wf': first, 'colors-strips': _under(first, colors('strips'))}
    colors_strips = {'colors-strips': second, 'colors-wf': _under(second, colors('well_formed'))}
    c = colors_example_plans()
    return [
        WorkedExample('grippers-pi', g['pi'], {'grippers-wf': 'valid', 'grippers-df': 'valid'}, grippers),
        WorkedExample('grippers-pi1-prime', g['pi1_prime'], {'grippers-wf': 'incomplete', 'grippers-df': 'incomplete'},
                     grippers),
        WorkedExample('grippers-pi2-prime', g['pi2_prime'], {'grippers-wf': 'non_executable', 'grippers-df': 'valid'},
                     grippers),
        WorkedExample('colors-pi1', c['pi1'], {'colors-wf': 'valid', 'colors-strips': 'valid'}, colors_wf),
        WorkedExample('colors-pi1-prime', c['pi1_prime'], {'colors-wf': 'incomplete', 'colors-strips': 'incomplete'},
                     colors_wf),
        WorkedExample('colors-pi2', c['pi2'], {'colors-strips': 'valid', 'colors-wf': 'non_executable'}, colors_strips),
        WorkedExample('colors-pi2-prime', c['pi2_prime'], {'colors-strips': 'incomplete', 'colors-wf': 'non_executable'},
                     colors_strips),
    ]


# Registry

@dataclass(frozen=True)
class Variant:
    name: str
    family: str       # grippers | colors | lightsout
    kind: str         # well_formed | delete_free | strips | conditional_effects
    sibling: str      # the other variant of the same family

    def domain(self, board: Board = Board()) -> Domain:
        if self.family == 'grippers':
            return heavy_grippers(self.kind)
        if self.family == 'colors':
            return colors(self.kind)
        return self.template(board).domain

    def template(self, board: Board = Board()) -> Optional[InstanceTemplate]:
        if self.family != 'lightsout':
            return None
        return lights_out_well_formed(board) if self.kind == 'well_formed' else lights_out_conditional(board)

    @property
    def compile_mode(self) -> Optional[Mode]:
        return {'well_formed': Mode.WELL_FORMED, 'delete_free': Mode.DELETE_FREE}.get(self.kind)


VARIANTS: Dict[str, Variant] = {v.name: v for v in (
    Variant('grippers-wf', 'grippers', 'well_formed', 'grippers-df'),
    Variant('grippers-df', 'grippers', 'delete_free', 'grippers-wf'),
    Variant('colors-wf', 'colors', 'well_formed', 'colors-strips'),
    Variant('colors-strips', 'colors', 'strips', 'colors-wf'),
    Variant('lightsout-ce', 'lightsout', 'conditional_effects', 'lightsout-wf'),
    Variant('lightsout-wf', 'lightsout', 'well_formed', 'lightsout-ce'),
)}


def get_variant(name: str) -> Variant:
    try:
        return VARIANTS[name]
    except KeyError:
        raise DomainError(f"unknown variant {name!r} (choose from {', '.join(VARIANTS)})") from None


def builtin_domains(board: Board = Board()) -> Dict[str, Domain]:
    """Every built-in domain by name, dataset variants first"""
    domains = {name: variant.domain(board) for name, variant in VARIANTS.items()}
    domains['grippers-ce'] = heavy_grippers('conditional')
    domains['flipflop'] = flipflop_domain()
    return domains
