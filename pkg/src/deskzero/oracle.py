"""Exact minimax solver for small two-player environments.

Used as an independent reference in tests and evaluation: as a perfect
opponent, and as a perfect leaf evaluator that search quality can be
measured against.  Values are memoized over the environment's state keys,
so only environments with small reachable state spaces (TicTacToe,
Othello 4x4) are practical.
"""
from __future__ import annotations

import numpy as np

from .envs.base import Environment
from .search.evaluation import EvalResponse

# Logit margin separating optimal from suboptimal moves in the oracle's
# policy head; large enough that softmax mass on suboptimal moves is ~1e-7.
SUBOPTIMAL_LOGIT = -16.0


class MinimaxOracle:
    def __init__(self, env: Environment):
        if not env.is_two_player:
            raise ValueError("minimax oracle requires a two-player environment")
        self.env = env
        self._memo: dict = {}

    def value(self, state) -> float:
        """Game-theoretic value from the perspective of the player to move."""
        key = self.env.state_key(state)
        cached = self._memo.get(key)
        if cached is not None:
            return cached[0]
        return self._solve(state, key)[0]

    def best_actions(self, state) -> tuple[int, ...]:
        """All optimal actions for the player to move."""
        key = self.env.state_key(state)
        cached = self._memo.get(key)
        if cached is None:
            cached = self._solve(state, key)
        return cached[1]

    def _solve(self, state, key):
        outcome = self.env.terminal_outcome(state)
        if outcome.terminal:
            sign = 1.0 if self.env.to_move(state) == 0 else -1.0
            result = (outcome.z * sign, ())
            self._memo[key] = result
            return result
        best = -2.0
        best_actions: list[int] = []
        for action in self.env.legal_actions(state):
            child, _ = self.env.apply(state, action)
            child_key = self.env.state_key(child)
            cached = self._memo.get(child_key)
            child_value = cached[0] if cached is not None else self._solve(child, child_key)[0]
            value = -child_value
            if value > best + 1e-12:
                best = value
                best_actions = [action]
            elif abs(value - best) <= 1e-12:
                best_actions.append(action)
        result = (best, tuple(best_actions))
        self._memo[key] = result
        return result


class OracleEvaluator:
    """Perfect evaluator: exact values, policy concentrated on optimal moves."""

    def __init__(self, env: Environment):
        self.oracle = MinimaxOracle(env)
        self.env = env

    def evaluate_batch(self, requests) -> list[EvalResponse]:
        responses = []
        for request in requests:
            if request.kind != "initial":
                raise ValueError("oracle evaluator only supports real-state requests")
            state = request.state
            logits = np.full(self.env.action_space_size, SUBOPTIMAL_LOGIT)
            best = self.oracle.best_actions(state)
            for action in best:
                logits[action] = 0.0
            responses.append(
                EvalResponse(policy_logits=logits, value=self.oracle.value(state))
            )
        return responses
