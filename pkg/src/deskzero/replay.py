"""Trajectory storage with prioritized sampling and unroll-target assembly.

A trajectory stores one finished episode: per step the observation, the
action played, the search policy target, the search root value, the
environment reward, and the player to move.  Two-player games carry their
outcome z (first player's perspective) separately and re-sign it per
position when building value targets; single-player games bootstrap
n-step returns off stored root values.

The buffer is a FIFO ring bounded in games (two-player mode) or frames
(single-player mode).  Single-player sampling is proportional to
priority^alpha with importance weights (1 / (M * P))^beta normalized by
the maximum weight over the buffer; two-player sampling is uniform over
the stored window and weights are 1.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .envs import GameRecord, replay_moves
from .envs.base import Environment, Outcome
from .errors import ContractViolation

PRIORITY_EPSILON = 1e-6
POLICY_SUM_TOL = 1e-6


@dataclass
class Trajectory:
    env_id: str
    observations: list[np.ndarray]
    actions: list[int]
    policies: list[np.ndarray]
    root_values: list[float]
    rewards: list[float]
    players: list[int]
    outcome: Outcome
    priorities: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def result(self) -> float:
        if self.outcome.z is not None:
            return self.outcome.z
        return self.outcome.episode_return

    def validate(self, two_player: bool) -> None:
        n = len(self.actions)
        if n == 0:
            raise ContractViolation("empty trajectory")
        lengths = {
            len(self.observations), len(self.policies), len(self.root_values),
            len(self.rewards), len(self.players), n,
        }
        if lengths != {n}:
            raise ContractViolation("trajectory per-step lists disagree in length")
        if not self.outcome.terminal:
            raise ContractViolation("trajectory must end in a terminal outcome")
        for dist in self.policies:
            if abs(float(np.sum(dist)) - 1.0) > POLICY_SUM_TOL or float(np.min(dist)) < 0:
                raise ContractViolation("policy target is not a distribution")
        if two_player and any(r != 0.0 for r in self.rewards[:-1]):
            raise ContractViolation("two-player rewards must be 0 before the final move")


def trajectory_to_record(trajectory: Trajectory) -> GameRecord:
    return GameRecord(
        env_id=trajectory.env_id,
        result=float(trajectory.result),
        moves=list(trajectory.actions),
        policies=[[float(p) for p in dist] for dist in trajectory.policies],
        root_values=[float(v) for v in trajectory.root_values],
        rewards=[float(r) for r in trajectory.rewards],
    )


def trajectory_from_record(env: Environment, record: GameRecord) -> Trajectory:
    """Rebuild a trajectory by replaying the moves through the environment."""
    if record.env_id != env.env_id:
        raise ContractViolation(
            f"record is for {record.env_id!r}, environment is {env.env_id!r}"
        )
    states, rewards = replay_moves(env, record.moves)
    outcome = env.terminal_outcome(states[-1])
    if not outcome.terminal:
        raise ContractViolation("record does not reach a terminal state")
    return Trajectory(
        env_id=record.env_id,
        observations=[env.observe(s) for s in states[:-1]],
        actions=list(record.moves),
        policies=[np.asarray(p, dtype=np.float64) for p in record.policies],
        root_values=list(record.root_values),
        rewards=list(record.rewards),
        players=[env.to_move(s) for s in states[:-1]],
        outcome=outcome,
    )


def n_step_return(trajectory: Trajectory, t: int, n_steps: int, discount: float) -> float:
    """Value target for position t.

    Single-player: sum_{j<n} discount^j * u_{t+j} + discount^n * v_{t+n},
    truncated at episode end with a zero bootstrap past terminal.
    Two-player: the terminal outcome re-signed to the player at t.
    """
    length = len(trajectory)
    if not 0 <= t < length:
        raise ContractViolation(f"position {t} outside trajectory of length {length}")
    if trajectory.outcome.z is not None:
        z = trajectory.outcome.z
        return z if trajectory.players[t] == 0 else -z
    value = 0.0
    for j in range(n_steps):
        if t + j >= length:
            return value
        value += (discount ** j) * trajectory.rewards[t + j]
    if t + n_steps < length:
        value += (discount ** n_steps) * trajectory.root_values[t + n_steps]
    return value


@dataclass
class TrainingTarget:
    observation: np.ndarray
    actions: np.ndarray        # (K,) actions applied successively from t
    policies: np.ndarray       # (K+1, A)
    values: np.ndarray         # (K+1,)
    rewards: np.ndarray        # (K,)
    weight: float = 1.0
    absorbing: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))


def make_unroll_targets(trajectory: Trajectory, t: int, k_steps: int, n_steps: int,
                        discount: float, rng: np.random.Generator,
                        action_space_size: int) -> TrainingTarget:
    """Assemble policy/value/reward targets for a K-step unroll from t.

    Positions past the end of the episode are absorbing: uniform policy,
    zero value and reward, and a uniformly random placeholder action
    (flagged in ``absorbing``) so the dynamics input stays well-formed.
    """
    length = len(trajectory)
    if not 0 <= t < length:
        raise ContractViolation(f"position {t} outside trajectory of length {length}")
    uniform = np.full(action_space_size, 1.0 / action_space_size)
    actions = np.zeros(k_steps, dtype=np.int64)
    policies = np.zeros((k_steps + 1, action_space_size))
    values = np.zeros(k_steps + 1)
    rewards = np.zeros(k_steps)
    absorbing = np.zeros(k_steps + 1, dtype=bool)
    for k in range(k_steps + 1):
        pos = t + k
        if pos < length:
            policies[k] = trajectory.policies[pos]
            values[k] = n_step_return(trajectory, pos, n_steps, discount)
        else:
            policies[k] = uniform
            values[k] = 0.0
            absorbing[k] = True
    for k in range(k_steps):
        pos = t + k
        if pos < length:
            actions[k] = trajectory.actions[pos]
            rewards[k] = trajectory.rewards[pos]
        else:
            actions[k] = int(rng.integers(action_space_size))
            rewards[k] = 0.0
    return TrainingTarget(
        observation=trajectory.observations[t],
        actions=actions,
        policies=policies,
        values=values,
        rewards=rewards,
        absorbing=absorbing,
    )


class ReplayBuffer:
    """FIFO ring of trajectories with proportional prioritized sampling."""

    def __init__(self, capacity: int, *, unit: str = "games", two_player: bool = True,
                 n_steps: int = 5, discount: float = 0.997, prioritized: bool = False,
                 action_space_size: int | None = None):
        if unit not in ("games", "frames"):
            raise ValueError(f"unknown capacity unit {unit!r}")
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.unit = unit
        self.two_player = two_player
        self.n_steps = n_steps
        self.discount = discount
        self.prioritized = prioritized
        self.action_space_size = action_space_size
        self.trajectories: deque[Trajectory] = deque()
        self.total_frames = 0
        self.games_pushed = 0

    def __len__(self) -> int:
        return len(self.trajectories)

    @property
    def num_positions(self) -> int:
        return self.total_frames

    def push(self, trajectory: Trajectory) -> None:
        trajectory.validate(self.two_player)
        priorities = np.empty(len(trajectory))
        for t in range(len(trajectory)):
            target = n_step_return(trajectory, t, self.n_steps, self.discount)
            priorities[t] = abs(trajectory.root_values[t] - target) + PRIORITY_EPSILON
        trajectory.priorities = priorities
        self.trajectories.append(trajectory)
        self.total_frames += len(trajectory)
        self.games_pushed += 1
        if self.unit == "games":
            while len(self.trajectories) > self.capacity:
                self.total_frames -= len(self.trajectories.popleft())
        else:
            while self.total_frames > self.capacity and len(self.trajectories) > 1:
                self.total_frames -= len(self.trajectories.popleft())

    def priority_total(self, alpha: float) -> float:
        return float(
            sum((traj.priorities ** alpha).sum() for traj in self.trajectories)
        )

    def _flat(self, alpha: float):
        """(trajectory index, position, priority^alpha) arrays over the buffer."""
        sizes = [len(t) for t in self.trajectories]
        traj_idx = np.repeat(np.arange(len(sizes)), sizes)
        pos_idx = np.concatenate([np.arange(s) for s in sizes]) if sizes else np.zeros(0, int)
        if self.prioritized:
            weights = np.concatenate(
                [traj.priorities ** alpha for traj in self.trajectories]
            ) if sizes else np.zeros(0)
        else:
            weights = np.ones(int(traj_idx.size))
        return traj_idx, pos_idx, weights

    def sample_positions(self, batch_size: int, alpha: float, beta: float,
                         rng: np.random.Generator):
        """Draw positions; returns (list of (trajectory, t), weights array).

        Prioritized mode: P(i) proportional to priority^alpha; importance
        weights (1 / (M * P(i)))^beta normalized by the largest weight over
        the whole buffer.  Uniform mode: alpha/beta ignored, weights 1.
        """
        if not self.trajectories:
            raise ContractViolation("cannot sample from an empty buffer")
        traj_idx, pos_idx, mass = self._flat(alpha if self.prioritized else 0.0)
        total = mass.sum()
        if self.prioritized:
            probs = mass / total
            chosen = rng.choice(mass.size, size=batch_size, p=probs)
            m = mass.size
            weights = (1.0 / (m * probs[chosen])) ** beta
            max_weight = (1.0 / (m * probs.min())) ** beta
            weights = weights / max_weight
        else:
            chosen = rng.integers(mass.size, size=batch_size)
            weights = np.ones(batch_size)
        trajs = list(self.trajectories)
        picks = [(trajs[int(traj_idx[i])], int(pos_idx[i])) for i in chosen]
        return picks, weights

    def sample_batch(self, batch_size: int, alpha: float, beta: float,
                     rng: np.random.Generator, k_steps: int) -> list[TrainingTarget]:
        if self.action_space_size is None:
            raise ValueError("buffer needs action_space_size to build targets")
        picks, weights = self.sample_positions(batch_size, alpha, beta, rng)
        targets = []
        for (trajectory, t), weight in zip(picks, weights):
            target = make_unroll_targets(
                trajectory, t, k_steps, self.n_steps, self.discount, rng,
                self.action_space_size,
            )
            target.weight = float(weight)
            targets.append(target)
        return targets

    def recent_returns(self, window: int = 100) -> list[float]:
        """Episode results of the most recent `window` stored games."""
        recent = list(self.trajectories)[-window:]
        return [float(t.result) for t in recent]
