"""TicTacToe on a 3x3 board.

Small enough to enumerate exhaustively, which makes it the reference
environment for search and training oracles.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import IllegalMove
from .base import Environment, Outcome

EMPTY = 0
# Cell values are 1 + player index (player 0 moves first).

WIN_LINES = (
    (0, 1, 2), (3, 4, 5), (6, 7, 8),
    (0, 3, 6), (1, 4, 7), (2, 5, 8),
    (0, 4, 8), (2, 4, 6),
)


@dataclass(frozen=True)
class TicTacToeState:
    board: bytes  # 9 cells, values 0 / 1 / 2
    to_move: int  # 0 or 1
    move_count: int


class TicTacToeEnv(Environment):
    env_id = "tictactoe"
    num_players = 2
    action_space_size = 9
    observation_shape = (3, 3, 3)
    typical_game_length = 9

    def initial_state(self) -> TicTacToeState:
        return TicTacToeState(bytes(9), 0, 0)

    def to_move(self, state: TicTacToeState) -> int:
        return state.to_move

    def _winner(self, board: bytes) -> int:
        """0 or 1 for a winning player, -1 if nobody has a line."""
        for a, b, c in WIN_LINES:
            if board[a] != EMPTY and board[a] == board[b] == board[c]:
                return board[a] - 1
        return -1

    def legal_actions(self, state: TicTacToeState) -> tuple[int, ...]:
        self._require_non_terminal(state)
        return tuple(i for i in range(9) if state.board[i] == EMPTY)

    def apply(self, state: TicTacToeState, action: int):
        if (
            not 0 <= action < 9
            or state.board[action] != EMPTY
            or self.terminal_outcome(state).terminal
        ):
            raise IllegalMove(self.env_id, action, self.state_key(state))
        board = bytearray(state.board)
        board[action] = state.to_move + 1
        nxt = TicTacToeState(bytes(board), 1 - state.to_move, state.move_count + 1)
        return nxt, 0.0

    def terminal_outcome(self, state: TicTacToeState) -> Outcome:
        winner = self._winner(state.board)
        if winner >= 0:
            return Outcome(terminal=True, z=1.0 if winner == 0 else -1.0)
        if state.move_count == 9:
            return Outcome(terminal=True, z=0.0)
        return Outcome(terminal=False)

    def observe(self, state: TicTacToeState) -> np.ndarray:
        board = np.frombuffer(state.board, dtype=np.uint8)
        mine = (board == state.to_move + 1).astype(np.float64)
        theirs = (board == 2 - state.to_move).astype(np.float64)
        first_to_move = np.full(9, 1.0 if state.to_move == 0 else 0.0)
        return np.concatenate([mine, theirs, first_to_move])

    def state_key(self, state: TicTacToeState):
        return (state.board, state.to_move)
