"""Evaluation harness: head-to-head matches, Elo curves, average returns.

Match play is deterministic per seed: colors alternate (agent A moves
first in ceil(games/2) of the games), every game gets its own rng derived
from the match seed, and agents pick actions with fixed-budget searches,
no exploration noise.  A 400-point Elo gap corresponds to 10:1 odds; the
rating of a score rate s against a baseline is

    rating = baseline - 400 * log10(1 / s - 1)

with draws counting half.  Perfect scores saturate to +-1000 around the
baseline and are flagged rather than reported as infinite.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .envs import make_environment, read_records
from .envs.base import Environment
from .errors import ConfigError
from .players import Agent, agent_from_checkpoint
from .search.evaluation import RoutingEvaluator, drive

ELO_CAP = 1000.0
Z_95 = 1.959963984540054  # two-sided 95% normal quantile


@dataclass
class MatchResult:
    agent_a: str
    agent_b: str
    games: int
    wins: int
    draws: int
    losses: int
    game_results: list[float] = field(default_factory=list)  # +1 A wins, -1 B wins
    move_lists: list[list[int]] = field(default_factory=list)
    seeds: list[int] = field(default_factory=list)
    first_player: list[str] = field(default_factory=list)

    @property
    def score_rate(self) -> float:
        return (self.wins + 0.5 * self.draws) / self.games

    def wins_as_first(self, who: str) -> int:
        """Games won by `who` ("a" or "b") among those it moved first in."""
        count = 0
        for i, first in enumerate(self.first_player):
            if first != who:
                continue
            if (who == "a" and self.game_results[i] > 0) or (
                who == "b" and self.game_results[i] < 0
            ):
                count += 1
        return count


def _match_game(env: Environment, first: Agent, second: Agent,
                rng: np.random.Generator):
    """Generator playing one evaluation game; returns (z, moves).

    z is from the first mover's perspective.
    """
    state = env.initial_state()
    moves: list[int] = []
    agents = (first, second)
    while not env.terminal_outcome(state).terminal:
        agent = agents[env.to_move(state)]
        action = yield from agent.decide(env, state, rng)
        moves.append(action)
        state, _ = env.apply(state, action)
    return env.terminal_outcome(state).z, moves


def play_match(env: Environment, agent_a: Agent, agent_b: Agent, games: int,
               rng: np.random.Generator) -> MatchResult:
    """Play a color-alternating match; result is from agent A's perspective."""
    seeds = [int(rng.integers(2 ** 63)) for _ in range(games)]
    order = [("a" if g % 2 == 0 else "b") for g in range(games)]
    generators = []
    for g in range(games):
        first, second = (agent_a, agent_b) if order[g] == "a" else (agent_b, agent_a)
        generators.append(_match_game(env, first, second, np.random.default_rng(seeds[g])))
    routes = {}
    for agent in (agent_a, agent_b):
        if agent.evaluator is not None:
            routes[getattr(agent, "tag", id(agent))] = agent.evaluator
    evaluator = RoutingEvaluator(routes) if routes else RoutingEvaluator({})
    outcomes = drive(generators, evaluator)
    result = MatchResult(agent_a.name, agent_b.name, games, 0, 0, 0)
    for g, (z, moves) in enumerate(outcomes):
        a_score = z if order[g] == "a" else -z
        if a_score > 0:
            result.wins += 1
        elif a_score < 0:
            result.losses += 1
        else:
            result.draws += 1
        result.game_results.append(a_score)
        result.move_lists.append(moves)
        result.seeds.append(seeds[g])
        result.first_player.append(order[g])
    return result


@dataclass
class EloPoint:
    step: int
    rating: float
    half_width: float
    saturated: bool = False


def _elo_curve(score: float, baseline: float) -> float:
    return baseline - 400.0 * math.log10(1.0 / score - 1.0)


def elo_from_score(score_rate: float, baseline_rating: float = 0.0,
                   games: int | None = None, step: int = 0) -> EloPoint:
    """Elo rating (and 95% half-width when `games` is given) for a score rate.

    Draws are assumed to have contributed 0.5 each to ``score_rate``.
    Score rates of exactly 0 or 1 saturate to baseline -+ 1000, flagged.
    """
    if not 0.0 <= score_rate <= 1.0:
        raise ValueError("score rate must lie in [0, 1]")
    if score_rate in (0.0, 1.0):
        rating = baseline_rating + (ELO_CAP if score_rate == 1.0 else -ELO_CAP)
        return EloPoint(step, rating, float("nan"), saturated=True)
    rating = _elo_curve(score_rate, baseline_rating)
    half_width = 0.0
    if games:
        margin = Z_95 * math.sqrt(score_rate * (1.0 - score_rate) / games)
        eps = 1e-9
        hi = _elo_curve(min(score_rate + margin, 1.0 - eps), baseline_rating)
        lo = _elo_curve(max(score_rate - margin, eps), baseline_rating)
        half_width = (hi - lo) / 2.0
    return EloPoint(step, rating, half_width)


_CKPT_RE = re.compile(r"iter_(\d+)\.ckpt$")


def list_checkpoints(run_dir) -> list[tuple[int, Path]]:
    directory = Path(run_dir) / "checkpoints"
    if not directory.is_dir():
        raise ConfigError(f"{run_dir}: no checkpoints directory")
    found = []
    for path in directory.iterdir():
        match = _CKPT_RE.search(path.name)
        if match:
            found.append((int(match.group(1)), path))
    return sorted(found)


def evaluate_curve(run_dir, baseline_ckpt, every_k: int, games: int,
                   env: Environment | None = None, eval_simulations: int = 64,
                   seed: int = 0, baseline_rating: float = 0.0,
                   skip_initial: bool = False) -> list[EloPoint]:
    """Rate every k-th checkpoint of a run against a fixed baseline."""
    checkpoints = list_checkpoints(run_dir)
    if not checkpoints:
        raise ConfigError(f"{run_dir}: no checkpoints found")
    if env is None:
        from .model import load_checkpoint

        meta, _, _, _ = load_checkpoint(checkpoints[0][1])
        env = make_environment(meta["env_id"])
    baseline = agent_from_checkpoint(
        baseline_ckpt, env, n_simulations=eval_simulations, name="baseline"
    )
    points = []
    for position, (iteration, path) in enumerate(checkpoints):
        if position % every_k != 0 and (iteration, path) != checkpoints[-1]:
            continue
        if skip_initial and iteration == 0:
            continue
        if not path.exists():
            print(f"missing checkpoint {path}, skipping", flush=True)
            continue
        agent = agent_from_checkpoint(path, env, n_simulations=eval_simulations)
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(iteration,))
        )
        match = play_match(env, agent, baseline, games, rng)
        points.append(
            elo_from_score(match.score_rate, baseline_rating, games, step=iteration)
        )
    return points


def elo_points_csv(points: list[EloPoint]) -> str:
    lines = ["step,rating,ci_half_width,saturated"]
    for point in points:
        lines.append(
            f"{point.step},{repr(float(point.rating))},"
            f"{repr(float(point.half_width))},{int(point.saturated)}"
        )
    return "\n".join(lines) + "\n"


@dataclass
class ReturnPoint:
    iteration: int
    mean_return: float
    episodes: int
    partial: bool


def average_return(run_dir, window: int = 100,
                   env: Environment | None = None) -> list[ReturnPoint]:
    """Trailing-window mean episode return per iteration of a run's records."""
    records_dir = Path(run_dir) / "records"
    if not records_dir.is_dir():
        raise ConfigError(f"{run_dir}: no records directory")
    files = sorted(records_dir.glob("iter_*.txt"))
    if not files:
        raise ConfigError(f"{run_dir}: no record files")
    returns: list[float] = []
    points = []
    for path in files:
        iteration = int(re.search(r"iter_(\d+)", path.name).group(1))
        for record in read_records(path):
            returns.append(record.result)
        recent = returns[-window:]
        points.append(
            ReturnPoint(
                iteration=iteration,
                mean_return=float(np.mean(recent)) if recent else float("nan"),
                episodes=len(recent),
                partial=len(recent) < window,
            )
        )
    return points


def returns_csv(points: list[ReturnPoint]) -> str:
    lines = ["iteration,mean_return,episodes,partial"]
    for point in points:
        lines.append(
            f"{point.iteration},{repr(float(point.mean_return))},"
            f"{point.episodes},{int(point.partial)}"
        )
    return "\n".join(lines) + "\n"


def match_csv(result: MatchResult) -> str:
    lines = ["agent_a,agent_b,games,wins,draws,losses,score_rate"]
    lines.append(
        f"{result.agent_a},{result.agent_b},{result.games},"
        f"{result.wins},{result.draws},{result.losses},{repr(result.score_rate)}"
    )
    return "\n".join(lines) + "\n"
