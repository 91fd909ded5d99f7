"""GridReward: a deterministic single-player reward-collection task.

The agent starts at the center of a 5x5 grid scattered with reward cells
(values 1, 2, and 5, two of each by default) and has 40 moves to collect
as much as it can.  Stepping onto a reward cell collects and clears it.
Transitions are exact functions of (state, action), so optimal play can be
computed by dynamic programming, which makes the task a compact stand-in
for reward-dense single-player training.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import IllegalMove
from .base import Environment, Outcome

# Action indices: up, right, down, left.
MOVES = ((-1, 0), (0, 1), (1, 0), (0, -1))
REWARD_VALUES = (1.0, 1.0, 2.0, 2.0, 5.0, 5.0)


@dataclass(frozen=True)
class GridState:
    position: int        # agent cell, row * size + col
    remaining: int       # bitmask over the layout's reward cells
    steps: int
    collected: float


class GridRewardEnv(Environment):
    num_players = 1

    def __init__(self, size: int = 5, max_steps: int = 40, layout_seed: int = 0):
        self.size = size
        self.max_steps = max_steps
        self.layout_seed = layout_seed
        self.env_id = "gridreward" if layout_seed == 0 else f"gridreward:{layout_seed}"
        self.action_space_size = 4
        self.observation_shape = (3, size, size)
        self.typical_game_length = max_steps
        self.start = (size // 2) * size + (size // 2)
        rng = np.random.default_rng(layout_seed)
        cells = [c for c in range(size * size) if c != self.start]
        picked = rng.choice(len(cells), size=len(REWARD_VALUES), replace=False)
        layout = sorted(
            (cells[int(i)], value) for i, value in zip(picked, REWARD_VALUES)
        )
        self.reward_cells = tuple(cell for cell, _ in layout)
        self.reward_values = tuple(value for _, value in layout)
        self._cell_to_bit = {cell: bit for bit, cell in enumerate(self.reward_cells)}
        self.max_value = max(self.reward_values)

    def initial_state(self) -> GridState:
        return GridState(self.start, (1 << len(self.reward_cells)) - 1, 0, 0.0)

    def to_move(self, state: GridState) -> int:
        return 0

    def legal_actions(self, state: GridState) -> tuple[int, ...]:
        self._require_non_terminal(state)
        row, col = divmod(state.position, self.size)
        return tuple(
            a
            for a, (dr, dc) in enumerate(MOVES)
            if 0 <= row + dr < self.size and 0 <= col + dc < self.size
        )

    def apply(self, state: GridState, action: int):
        if not 0 <= action < 4 or state.steps >= self.max_steps:
            raise IllegalMove(self.env_id, action, self.state_key(state))
        row, col = divmod(state.position, self.size)
        dr, dc = MOVES[action]
        nr, nc = row + dr, col + dc
        if not (0 <= nr < self.size and 0 <= nc < self.size):
            raise IllegalMove(self.env_id, action, self.state_key(state))
        pos = nr * self.size + nc
        remaining = state.remaining
        reward = 0.0
        bit = self._cell_to_bit.get(pos)
        if bit is not None and remaining >> bit & 1:
            reward = self.reward_values[bit]
            remaining &= ~(1 << bit)
        nxt = GridState(pos, remaining, state.steps + 1, state.collected + reward)
        return nxt, reward

    def terminal_outcome(self, state: GridState) -> Outcome:
        if state.steps >= self.max_steps:
            return Outcome(terminal=True, episode_return=state.collected)
        return Outcome(terminal=False)

    def observe(self, state: GridState) -> np.ndarray:
        n = self.size * self.size
        agent = np.zeros(n)
        agent[state.position] = 1.0
        cells = np.zeros(n)
        for bit, cell in enumerate(self.reward_cells):
            if state.remaining >> bit & 1:
                cells[cell] = self.reward_values[bit] / self.max_value
        progress = np.full(n, state.steps / self.max_steps)
        return np.concatenate([agent, cells, progress])

    def state_key(self, state: GridState):
        return (state.position, state.remaining, state.steps)

    def optimal_return(self) -> float:
        """Best achievable episode return, by exact dynamic programming."""
        n_masks = 1 << len(self.reward_cells)
        size = self.size
        # best[pos][mask] = max additional reward with `steps_left` moves.
        best = np.zeros((size * size, n_masks))
        for _ in range(self.max_steps):
            nxt = np.full_like(best, -np.inf)
            for pos in range(size * size):
                row, col = divmod(pos, size)
                for dr, dc in MOVES:
                    nr, nc = row + dr, col + dc
                    if not (0 <= nr < size and 0 <= nc < size):
                        continue
                    npos = nr * size + nc
                    bit = self._cell_to_bit.get(npos)
                    for mask in range(n_masks):
                        if bit is not None and mask >> bit & 1:
                            gain = self.reward_values[bit] + best[npos][mask & ~(1 << bit)]
                        else:
                            gain = best[npos][mask]
                        if gain > nxt[pos][mask]:
                            nxt[pos][mask] = gain
            best = nxt
        return float(best[self.start][(1 << len(self.reward_cells)) - 1])
