"""Self-play game generation with a shared batched evaluator.

Each game runs as a generator that yields leaf-evaluation requests from
its per-move searches; a driver advances many games in lockstep so the
evaluator sees coalesced batches (at most one request per live game per
flush).  Every game owns an rng derived from (seed, iteration, game index),
so results do not depend on how games are grouped into parallel waves, and
a remote worker generating the same indices reproduces the same games.
"""
from __future__ import annotations

import numpy as np

from ..envs.base import Environment
from ..gumbel import default_sampled_actions, gumbel_search_gen
from ..players import GUMBEL_ALGORITHMS, search_config_for
from ..replay import Trajectory
from ..search import SearchConfig, drive, search_gen
from .config import TrainConfig


def game_rng(seed: int, iteration: int, index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(iteration, index))
    )


def select_move(result, move_number: int, temperature_moves: int,
                rng: np.random.Generator, gumbel: bool) -> int:
    """Environment action from a finished search.

    Gumbel planners choose their survivor deterministically.  Otherwise,
    sample proportionally to root visit counts for the opening
    `temperature_moves` moves, then play the most-visited action.
    """
    if gumbel:
        return result.selected_action
    if move_number < temperature_moves:
        visits = result.visit_counts.astype(np.float64)
        total = visits.sum()
        if total > 0:
            return int(rng.choice(visits.size, p=visits / total))
    return result.selected_action


def play_game(env: Environment, algorithm: str, n_simulations: int,
              cfg: SearchConfig, train_cfg: TrainConfig,
              rng: np.random.Generator):
    """Generator playing one full game; returns a Trajectory."""
    gumbel = algorithm in GUMBEL_ALGORITHMS
    temperature_moves = int(np.ceil(
        train_cfg.temperature_moves_fraction * env.typical_game_length
    ))
    state = env.initial_state()
    observations, actions, policies, root_values, rewards, players = [], [], [], [], [], []
    move_number = 0
    while not env.terminal_outcome(state).terminal:
        if gumbel:
            m = train_cfg.gumbel_m or default_sampled_actions(
                n_simulations, len(env.legal_actions(state))
            )
            result = yield from gumbel_search_gen(
                env, state, n_simulations, m, rng, cfg
            )
            policy_target = result.improved_policy
        else:
            result = yield from search_gen(env, state, n_simulations, cfg, rng=rng)
            policy_target = result.visit_distribution
            if policy_target.sum() == 0:  # n=1 search: fall back to priors
                policy_target = np.zeros(env.action_space_size)
                legal = env.legal_actions(state)
                policy_target[list(legal)] = 1.0 / len(legal)
        action = select_move(result, move_number, temperature_moves, rng, gumbel)
        observations.append(env.observe(state))
        actions.append(action)
        policies.append(policy_target)
        root_values.append(result.root_value)
        players.append(env.to_move(state))
        state, reward = env.apply(state, action)
        rewards.append(reward)
        move_number += 1
    return Trajectory(
        env_id=env.env_id,
        observations=observations,
        actions=actions,
        policies=policies,
        root_values=root_values,
        rewards=rewards,
        players=players,
        outcome=env.terminal_outcome(state),
    )


def self_play_batch(env: Environment, evaluator, algorithm: str, game_count: int,
                    n_simulations: int, train_cfg: TrainConfig, seed: int,
                    iteration: int, *, start_index: int = 0,
                    parallel_games: int | None = None) -> list[Trajectory]:
    """Play `game_count` games (indices start_index..), batching evaluations.

    Games are processed in waves of `parallel_games`; within a wave, leaf
    evaluations from all live games are coalesced per driver flush.
    """
    parallel = parallel_games or train_cfg.parallel_games
    cfg = search_config_for(
        env, algorithm,
        c_puct=train_cfg.c_puct,
        estimated_q_mode=train_cfg.estimated_q_mode,
        discount=train_cfg.discount,
        root_noise=train_cfg.root_noise and not train_cfg.is_gumbel,
        noise_alpha=train_cfg.noise_alpha,
        noise_fraction=train_cfg.noise_fraction,
        c_visit=train_cfg.c_visit,
        c_scale=train_cfg.c_scale,
    )
    trajectories: list[Trajectory] = []
    for wave_start in range(0, game_count, parallel):
        wave = range(wave_start, min(wave_start + parallel, game_count))
        generators = [
            play_game(
                env, algorithm, n_simulations, cfg, train_cfg,
                game_rng(seed, iteration, start_index + index),
            )
            for index in wave
        ]
        trajectories.extend(drive(generators, evaluator))
    return trajectories
