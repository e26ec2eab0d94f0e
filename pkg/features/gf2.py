"""
GF(2) view of Lights Out - effect vectors, the plan homomorphism and
solvability of board states
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable, List, Optional, Sequence

import numpy as np

from features.builtin_domains import Board, Cell, InstanceTemplate
from features.strips import GroundAction, State


def to_gf2(matrix) -> np.ndarray:
    return np.array(matrix, dtype=np.uint8) % 2


@lru_cache(maxsize=None)
def effect_matrix(board: Board) -> np.ndarray:
    """n x n matrix whose column k is the effect vector u_k (support N[v_k])"""
    matrix = np.zeros((board.size, board.size), dtype=np.uint8)
    for cell in board.cells():
        column = board.index(cell)
        for other in board.neighborhood(cell):
            matrix[board.index(other), column] = 1
    matrix.setflags(write=False)
    return matrix


def effect_vector(board: Board, cell: Cell) -> np.ndarray:
    return effect_matrix(board)[:, board.index(cell)].copy()


def cells_vector(board: Board, cells: Iterable[Cell]) -> np.ndarray:
    vector = np.zeros(board.size, dtype=np.uint8)
    for cell in cells:
        vector[board.index(cell)] ^= 1
    return vector


def state_vector(template: InstanceTemplate, state: State) -> np.ndarray:
    """phi(S): 1 for every lit cell"""
    return cells_vector(template.board, template.lit_cells(state))


def ghom(template: InstanceTemplate, plan: Sequence[GroundAction]) -> np.ndarray:
    """Total effect of a press sequence: XOR of the pressed cells' effect vectors"""
    board = template.board
    presses = np.zeros(board.size, dtype=np.uint8)
    for action in plan:
        presses[board.index(template.pressed_cell(action))] ^= 1
    return (effect_matrix(board).astype(np.int64) @ presses % 2).astype(np.uint8)


def parity_verdict(template: InstanceTemplate, init: State, plan: Sequence[GroundAction]) -> bool:
    """Valid iff the plan's total effect switches off exactly the lit cells

    Agrees with simulation for the conditional-effects variant, where every
    press is applicable.
    """
    return bool(np.array_equal(ghom(template, plan), state_vector(template, init)))


# Row reduction

def gf2_row_reduce(matrix) -> tuple:
    """(reduced matrix, pivot columns) by Gauss-Jordan elimination mod 2"""
    reduced = to_gf2(matrix).copy()
    rows, cols = reduced.shape
    pivots: List[int] = []
    row = 0
    for col in range(cols):
        if row == rows:
            break
        candidates = np.nonzero(reduced[row:, col])[0]
        if candidates.size == 0:
            continue
        pivot = row + int(candidates[0])
        if pivot != row:
            reduced[[row, pivot]] = reduced[[pivot, row]]
        for r in np.nonzero(reduced[:, col])[0]:
            if r != row:
                reduced[r, :] ^= reduced[row, :]
        pivots.append(col)
        row += 1
    return reduced, pivots


def gf2_rank(matrix) -> int:
    return len(gf2_row_reduce(matrix)[1])


def gf2_solve(matrix, target) -> Optional[np.ndarray]:
    """One x with matrix @ x = target (mod 2), or None"""
    matrix = to_gf2(matrix)
    target = to_gf2(target).reshape(-1, 1)
    cols = matrix.shape[1]
    reduced, pivots = gf2_row_reduce(np.concatenate([matrix, target], axis=1))
    if cols in pivots:
        return None
    solution = np.zeros(cols, dtype=np.uint8)
    for row, col in enumerate(pivots):
        solution[col] = reduced[row, cols]
    return solution


def kernel_dimension(board: Board) -> int:
    """Number of independent press sets that change nothing (2 on the 5x5 board)"""
    return board.size - gf2_rank(effect_matrix(board))


def solution_presses(board: Board, lit: Iterable[Cell]) -> Optional[List[Cell]]:
    """Cells to press once each to switch every light off, or None when unsolvable"""
    solution = gf2_solve(effect_matrix(board), cells_vector(board, lit))
    if solution is None:
        return None
    return [cell for cell in board.cells() if solution[board.index(cell)]]


def is_solvable(board: Board, lit: Iterable[Cell]) -> bool:
    return solution_presses(board, lit) is not None
