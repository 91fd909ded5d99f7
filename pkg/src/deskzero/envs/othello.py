"""Othello (Reversi) on configurable even board sizes 4, 6, and 8.

The action space is ``size * size`` cell placements plus one explicit pass
action at index ``size * size``.  Pass is legal exactly when the player to
move has no flipping placement; the game ends when neither player has one
(which covers full boards).

The board is stored as an immutable ``bytes`` buffer, which keeps move
generation in plain Python fast and makes states hashable for free.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import IllegalMove
from .base import Environment, Outcome

EMPTY = 0
# Cell values are 1 + player index; player 0 (black) moves first.

_DIRECTIONS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


@lru_cache(maxsize=None)
def _rays(size: int):
    """rays[cell][dir] = tuple of cell indices walking outward from cell."""
    rays = []
    for r in range(size):
        for c in range(size):
            per_cell = []
            for dr, dc in _DIRECTIONS:
                ray = []
                nr, nc = r + dr, c + dc
                while 0 <= nr < size and 0 <= nc < size:
                    ray.append(nr * size + nc)
                    nr += dr
                    nc += dc
                per_cell.append(tuple(ray))
            rays.append(tuple(per_cell))
    return tuple(rays)


@dataclass(frozen=True)
class OthelloState:
    board: bytes
    to_move: int
    move_count: int


class OthelloEnv(Environment):
    num_players = 2

    def __init__(self, size: int = 6):
        if size not in (4, 6, 8):
            raise ValueError(f"unsupported Othello size {size}")
        self.size = size
        self.env_id = f"othello{size}"
        self.action_space_size = size * size + 1
        self.pass_action = size * size
        self.observation_shape = (3, size, size)
        self.typical_game_length = size * size - 4
        self._rays = _rays(size)

    def initial_state(self) -> OthelloState:
        size = self.size
        board = bytearray(size * size)
        half = size // 2
        board[(half - 1) * size + (half - 1)] = 2  # white
        board[half * size + half] = 2
        board[(half - 1) * size + half] = 1  # black
        board[half * size + (half - 1)] = 1
        return OthelloState(bytes(board), 0, 0)

    def to_move(self, state: OthelloState) -> int:
        return state.to_move

    def _flips(self, board: bytes, cell: int, player: int) -> list[int]:
        """Cells flipped if `player` (0/1) plays `cell`; empty if not a move."""
        if board[cell] != EMPTY:
            return []
        me = player + 1
        opp = 2 - player
        flips: list[int] = []
        for ray in self._rays[cell]:
            run_end = 0
            for i, idx in enumerate(ray):
                v = board[idx]
                if v == opp:
                    continue
                if v == me and i > 0:
                    run_end = i
                break
            if run_end:
                flips.extend(ray[:run_end])
        return flips

    def _has_flipping_move(self, board: bytes, player: int) -> bool:
        for cell in range(self.size * self.size):
            if self._flips(board, cell, player):
                return True
        return False

    def legal_actions(self, state: OthelloState) -> tuple[int, ...]:
        self._require_non_terminal(state)
        board = state.board
        moves = tuple(
            cell
            for cell in range(self.size * self.size)
            if self._flips(board, cell, state.to_move)
        )
        if moves:
            return moves
        return (self.pass_action,)

    def apply(self, state: OthelloState, action: int):
        if not 0 <= action <= self.pass_action or self.terminal_outcome(state).terminal:
            raise IllegalMove(self.env_id, action, self.state_key(state))
        if action == self.pass_action:
            if self._has_flipping_move(state.board, state.to_move):
                raise IllegalMove(self.env_id, action, self.state_key(state))
            nxt = OthelloState(state.board, 1 - state.to_move, state.move_count + 1)
            return nxt, 0.0
        flips = self._flips(state.board, action, state.to_move)
        if not flips:
            raise IllegalMove(self.env_id, action, self.state_key(state))
        board = bytearray(state.board)
        me = state.to_move + 1
        board[action] = me
        for idx in flips:
            board[idx] = me
        nxt = OthelloState(bytes(board), 1 - state.to_move, state.move_count + 1)
        return nxt, 0.0

    def terminal_outcome(self, state: OthelloState) -> Outcome:
        board = state.board
        if self._has_flipping_move(board, 0) or self._has_flipping_move(board, 1):
            return Outcome(terminal=False)
        black = board.count(1)
        white = board.count(2)
        if black > white:
            z = 1.0
        elif white > black:
            z = -1.0
        else:
            z = 0.0
        return Outcome(terminal=True, z=z)

    def observe(self, state: OthelloState) -> np.ndarray:
        board = np.frombuffer(state.board, dtype=np.uint8)
        mine = (board == state.to_move + 1).astype(np.float64)
        theirs = (board == 2 - state.to_move).astype(np.float64)
        n = self.size * self.size
        first_to_move = np.full(n, 1.0 if state.to_move == 0 else 0.0)
        return np.concatenate([mine, theirs, first_to_move])

    def state_key(self, state: OthelloState):
        return (state.board, state.to_move)

    def disc_counts(self, state: OthelloState) -> tuple[int, int]:
        """(first player discs, second player discs)."""
        return state.board.count(1), state.board.count(2)
