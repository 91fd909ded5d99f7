"""Evaluators and playable agents built from models, oracles, or chance.

``NetworkEvaluator`` answers batched leaf-evaluation requests from
searches.  Agents expose ``decide(env, state, rng)`` as a generator that
yields evaluation requests (tagged with the agent's route, so two agents
with different networks can share one match driver) and returns the chosen
action.  Match play and evaluation use deterministic selection: no root
noise, no sampling temperature.
"""
from __future__ import annotations

import numpy as np

from .envs.base import Environment
from .errors import ConfigError
from .gumbel import default_sampled_actions, gumbel_search_gen
from .model import (
    AlphaZeroModel,
    MuZeroModel,
    build_model,
    load_checkpoint,
    model_from_meta,
    require_layout,
)
from .oracle import MinimaxOracle
from .search import EvalRequest, EvalResponse, SearchConfig, search_gen

GUMBEL_ALGORITHMS = ("gumbel_alphazero", "gumbel_muzero")
ALGORITHMS = ("alphazero", "muzero") + GUMBEL_ALGORITHMS


def family_of(algorithm: str) -> str:
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algorithm!r}")
    return "muzero" if algorithm.endswith("muzero") else "alphazero"


def model_for_env(env: Environment, algorithm: str, width: int = 64,
                  hidden_dim: int = 64):
    return build_model(
        family_of(algorithm),
        obs_dim=env.observation_size,
        action_count=env.action_space_size,
        width=width,
        hidden_dim=hidden_dim,
        value_tanh=env.is_two_player,
    )


def search_config_for(env: Environment, algorithm: str, *, c_puct: float = 1.25,
                      estimated_q_mode: str = "auto", discount: float = 0.997,
                      root_noise: bool = False, noise_alpha: float = 0.3,
                      noise_fraction: float = 0.25, c_visit: float = 50.0,
                      c_scale: float = 1.0) -> SearchConfig:
    if estimated_q_mode == "auto":
        estimated_q_mode = "board" if env.is_two_player else "atari"
    return SearchConfig(
        c_puct=c_puct,
        estimated_q_mode=estimated_q_mode,
        discount=1.0 if env.is_two_player else discount,
        two_player=env.is_two_player,
        planning="model" if family_of(algorithm) == "muzero" else "env",
        normalize_q=not env.is_two_player,
        root_noise=root_noise,
        noise_alpha=noise_alpha,
        noise_fraction=noise_fraction,
        c_visit=c_visit,
        c_scale=c_scale,
    )


class NetworkEvaluator:
    """Answers search requests with batched forward passes of one model."""

    def __init__(self, model, params, env: Environment):
        self.model = model
        self.params = params
        self.env = env
        self.is_model_based = isinstance(model, MuZeroModel)

    def evaluate_batch(self, requests) -> list[EvalResponse]:
        out: list[EvalResponse | None] = [None] * len(requests)
        initial = [i for i, r in enumerate(requests) if r.kind == "initial"]
        recurrent = [i for i, r in enumerate(requests) if r.kind == "recurrent"]
        if len(initial) + len(recurrent) != len(requests):
            raise ValueError("unknown request kind in batch")
        if initial:
            obs = np.stack([requests[i].observation for i in initial])
            if self.is_model_based:
                hidden = self.model.forward_representation_batch(self.params, obs)
                logits, value = self.model.forward_prediction_batch(self.params, hidden)
                for row, i in enumerate(initial):
                    out[i] = EvalResponse(
                        policy_logits=logits[row], value=float(value[row]),
                        hidden=hidden[row],
                    )
            else:
                logits, value = self.model.forward_prediction_batch(self.params, obs)
                for row, i in enumerate(initial):
                    out[i] = EvalResponse(policy_logits=logits[row], value=float(value[row]))
        if recurrent:
            if not self.is_model_based:
                raise ValueError("recurrent requests need a model-based evaluator")
            hidden = np.stack([requests[i].hidden for i in recurrent])
            actions = np.array([requests[i].action for i in recurrent], dtype=np.int64)
            nxt, reward = self.model.forward_dynamics_batch(self.params, hidden, actions)
            logits, value = self.model.forward_prediction_batch(self.params, nxt)
            for row, i in enumerate(recurrent):
                out[i] = EvalResponse(
                    policy_logits=logits[row], value=float(value[row]),
                    reward=float(reward[row]), hidden=nxt[row],
                )
        return out  # type: ignore[return-value]


class Agent:
    """Base agent: `decide` is a generator returning the chosen action."""

    name = "agent"
    evaluator = None  # agents that search carry their own evaluator

    def decide(self, env: Environment, state, rng: np.random.Generator):
        raise NotImplementedError
        yield  # pragma: no cover


class RandomAgent(Agent):
    name = "random"

    def decide(self, env, state, rng):
        legal = env.legal_actions(state)
        return legal[int(rng.integers(len(legal)))]
        yield  # pragma: no cover


class OracleAgent(Agent):
    """Plays uniformly among game-theoretically optimal moves."""

    name = "oracle"

    def __init__(self, env: Environment):
        self.oracle = MinimaxOracle(env)

    def decide(self, env, state, rng):
        best = self.oracle.best_actions(state)
        return best[int(rng.integers(len(best)))]
        yield  # pragma: no cover


class EpsilonOracleAgent(Agent):
    """Oracle that plays a uniform random legal move with probability eps."""

    name = "eps-oracle"

    def __init__(self, env: Environment, epsilon: float):
        self.oracle = MinimaxOracle(env)
        self.epsilon = epsilon

    def decide(self, env, state, rng):
        if rng.random() < self.epsilon:
            legal = env.legal_actions(state)
            return legal[int(rng.integers(len(legal)))]
        best = self.oracle.best_actions(state)
        return best[int(rng.integers(len(best)))]
        yield  # pragma: no cover


class SearchAgent(Agent):
    """Plays the move chosen by a fixed-budget search over a model."""

    def __init__(self, env: Environment, model, params, algorithm: str,
                 n_simulations: int, *, gumbel_m: int = 0, name: str | None = None,
                 search_cfg: SearchConfig | None = None, tag=None):
        self.env = env
        self.model = model
        self.params = params
        self.algorithm = algorithm
        self.n_simulations = n_simulations
        self.gumbel_m = gumbel_m
        self.cfg = search_cfg or search_config_for(env, algorithm)
        self.evaluator = NetworkEvaluator(model, params, env)
        self.name = name or f"{algorithm}@{n_simulations}"
        self.tag = tag if tag is not None else id(self)

    def decide(self, env, state, rng):
        if self.algorithm in GUMBEL_ALGORITHMS:
            m = self.gumbel_m or default_sampled_actions(
                self.n_simulations, len(env.legal_actions(state))
            )
            gen = gumbel_search_gen(env, state, self.n_simulations, m, rng, self.cfg)
        else:
            gen = search_gen(env, state, self.n_simulations, self.cfg, rng=None)
        result = yield from _retag(gen, self.tag)
        return result.selected_action


def _retag(gen, tag):
    """Forward a search generator, stamping its requests with a route tag."""
    response = None
    while True:
        try:
            request = gen.send(response)
        except StopIteration as stop:
            return stop.value
        request.tag = tag
        response = yield request


def agent_from_checkpoint(path, env: Environment, algorithm: str | None = None,
                          n_simulations: int = 64, gumbel_m: int = 0,
                          name: str | None = None) -> SearchAgent:
    meta, params, _, _ = load_checkpoint(path)
    algorithm = algorithm or meta.get("algorithm")
    if algorithm is None:
        raise ConfigError(f"{path}: checkpoint does not name its algorithm")
    if meta.get("env_id") not in (None, env.env_id):
        raise ConfigError(
            f"{path}: checkpoint is for {meta.get('env_id')!r}, not {env.env_id!r}"
        )
    model = model_from_meta(meta)
    require_layout(model.layout, params.layout, str(path))
    return SearchAgent(
        env, model, params, algorithm, n_simulations, gumbel_m=gumbel_m, name=name,
    )


def make_agent(spec: str, env: Environment, n_simulations: int = 64) -> Agent:
    """Parse an agent spec: ``random``, ``oracle``, or a checkpoint path."""
    if spec == "random":
        return RandomAgent()
    if spec == "oracle":
        return OracleAgent(env)
    return agent_from_checkpoint(spec, env, n_simulations=n_simulations)
