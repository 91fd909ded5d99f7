"""Environment abstraction shared by every game in the package.

States are immutable value objects: all operations are pure functions of
their inputs, so one state can be shared freely across concurrent game
instances and search trees.

Conventions used throughout:

- Actions are plain integers in ``[0, action_space_size)``.  Board games
  index cells as ``row * size + col``; Othello adds one pass action at
  index ``size * size``.
- For two-player games the terminal outcome ``z`` is always expressed
  from the *first* player's perspective (+1 first player wins, -1 loses,
  0 draw).  Per-player value targets are re-signed downstream.
- Observations are flat float arrays of ``plane_count * height * width``
  entries, each in [0, 1], with a constant shape per environment.
"""
from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from ..errors import ContractViolation


@dataclass(frozen=True)
class Outcome:
    """Terminal status of a state.

    ``z`` is defined only for terminal two-player states; ``episode_return``
    only for terminal single-player states.
    """

    terminal: bool
    z: float | None = None
    episode_return: float | None = None


class Environment(abc.ABC):
    """Rules of one game: transitions, legality, termination, encoding."""

    env_id: str
    num_players: int
    action_space_size: int
    observation_shape: tuple[int, int, int]  # (planes, height, width)
    typical_game_length: int

    @property
    def is_two_player(self) -> bool:
        return self.num_players == 2

    @property
    def observation_size(self) -> int:
        planes, h, w = self.observation_shape
        return planes * h * w

    @abc.abstractmethod
    def initial_state(self):
        """Starting position."""

    @abc.abstractmethod
    def to_move(self, state) -> int:
        """Player to move: 0 or 1 (always 0 for single-player games)."""

    @abc.abstractmethod
    def legal_actions(self, state) -> tuple[int, ...]:
        """Sorted legal actions.  Raises ContractViolation on terminal states."""

    @abc.abstractmethod
    def apply(self, state, action: int):
        """Apply a legal action, returning ``(next_state, reward)``.

        Two-player games always emit reward 0 (outcomes are reported via
        ``terminal_outcome``).  Raises IllegalMove for illegal actions.
        """

    @abc.abstractmethod
    def terminal_outcome(self, state) -> Outcome:
        """Terminal flag plus z (two-player) or episode return (single)."""

    @abc.abstractmethod
    def observe(self, state) -> np.ndarray:
        """Deterministic flat float64 encoding of the state."""

    @abc.abstractmethod
    def state_key(self, state) -> Hashable:
        """Hashable identity of a state, used for memoization and errors."""

    def _require_non_terminal(self, state) -> None:
        if self.terminal_outcome(state).terminal:
            raise ContractViolation(
                f"{self.env_id}: operation requires a non-terminal state"
            )


def replay_moves(env: Environment, moves: Sequence[int]):
    """Apply a move sequence from the initial state.

    Returns ``(states, rewards)`` where ``states`` has one more entry than
    ``moves``.  Used by round-trip checks and record-file reconstruction.
    """
    states = [env.initial_state()]
    rewards = []
    for move in moves:
        nxt, reward = env.apply(states[-1], move)
        states.append(nxt)
        rewards.append(reward)
    return states, rewards
