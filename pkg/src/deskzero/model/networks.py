"""Small fully-connected networks with hand-written backward passes.

Two model families share the same building blocks:

- The prediction network maps an input (observation or hidden state)
  through a two-layer ReLU trunk to a policy-logits head and a value head
  (tanh-squashed for two-player games, linear for unbounded returns).
- The model-based family adds a representation network (observation ->
  hidden state) and a dynamics network (hidden state + one-hot action ->
  next hidden state and reward).

Gradients are computed analytically per layer (affine, ReLU, tanh) and
verified against central finite differences in the test suite, so no
autodiff dependency is needed.  Policy/value/reward heads initialize to
zero, giving uniform priors and zero values at step zero; all other layers
use He-uniform initialization.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .parameters import ParameterLayout, Parameters


@dataclass
class NetworkOutput:
    policy_logits: np.ndarray
    value: float
    reward: float | None = None


def _as_batch(x: np.ndarray, dim: int, what: str) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != dim:
        raise ValueError(f"{what}: expected inner dimension {dim}, got shape {x.shape}")
    return x, single


class FeedForward:
    """Affine stack; ReLU between layers, optional ReLU after the last."""

    def __init__(self, prefix: str, widths: list[int], final_relu: bool = False):
        self.prefix = prefix
        self.widths = list(widths)
        self.final_relu = final_relu
        self.n_layers = len(widths) - 1

    def param_specs(self):
        specs = []
        for i in range(self.n_layers):
            specs.append((f"{self.prefix}.W{i}", (self.widths[i + 1], self.widths[i])))
            specs.append((f"{self.prefix}.b{i}", (self.widths[i + 1],)))
        return specs

    def init(self, params: Parameters, rng: np.random.Generator, zero_last: bool = False):
        for i in range(self.n_layers):
            w = params.view(f"{self.prefix}.W{i}")
            if zero_last and i == self.n_layers - 1:
                w[:] = 0.0
            else:
                limit = np.sqrt(6.0 / self.widths[i])
                w[:] = rng.uniform(-limit, limit, size=w.shape)
            params.view(f"{self.prefix}.b{i}")[:] = 0.0

    def _relu_at(self, i: int) -> bool:
        return i < self.n_layers - 1 or self.final_relu

    def forward(self, params: Parameters, x: np.ndarray):
        """Returns (output, tape); x is (B, widths[0])."""
        tape = []
        for i in range(self.n_layers):
            w = params.view(f"{self.prefix}.W{i}")
            b = params.view(f"{self.prefix}.b{i}")
            z = x @ w.T + b
            tape.append((x, z))
            x = np.maximum(z, 0.0) if self._relu_at(i) else z
        return x, tape

    def backward(self, params: Parameters, tape, dy: np.ndarray, grad: np.ndarray) -> np.ndarray:
        """Accumulates parameter gradients into `grad`; returns d(input)."""
        layout = params.layout
        for i in reversed(range(self.n_layers)):
            x, z = tape[i]
            dz = dy * (z > 0.0) if self._relu_at(i) else dy
            layout.view(grad, f"{self.prefix}.W{i}")[:] += dz.T @ x
            layout.view(grad, f"{self.prefix}.b{i}")[:] += dz.sum(axis=0)
            dy = dz @ params.view(f"{self.prefix}.W{i}")
        return dy


class PredictionNet:
    """Trunk + policy head + value head."""

    def __init__(self, prefix: str, in_dim: int, action_count: int,
                 width: int, value_tanh: bool):
        self.in_dim = in_dim
        self.action_count = action_count
        self.value_tanh = value_tanh
        self.trunk = FeedForward(f"{prefix}.trunk", [in_dim, width, width], final_relu=True)
        self.policy = FeedForward(f"{prefix}.policy", [width, action_count])
        self.value = FeedForward(f"{prefix}.value", [width, 1])

    def param_specs(self):
        return self.trunk.param_specs() + self.policy.param_specs() + self.value.param_specs()

    def init(self, params, rng):
        self.trunk.init(params, rng)
        self.policy.init(params, rng, zero_last=True)
        self.value.init(params, rng, zero_last=True)

    def forward(self, params: Parameters, x: np.ndarray):
        h, trunk_tape = self.trunk.forward(params, x)
        logits, policy_tape = self.policy.forward(params, h)
        raw, value_tape = self.value.forward(params, h)
        raw = raw[:, 0]
        value = np.tanh(raw) if self.value_tanh else raw
        tape = (trunk_tape, policy_tape, value_tape, value)
        return logits, value, tape

    def backward(self, params, tape, dlogits, dvalue, grad) -> np.ndarray:
        trunk_tape, policy_tape, value_tape, value = tape
        draw = dvalue * (1.0 - value ** 2) if self.value_tanh else dvalue
        dh = self.policy.backward(params, policy_tape, dlogits, grad)
        dh = dh + self.value.backward(params, value_tape, draw[:, None], grad)
        return self.trunk.backward(params, trunk_tape, dh, grad)


class RepresentationNet:
    """Observation -> hidden state."""

    def __init__(self, prefix: str, obs_dim: int, width: int, hidden_dim: int):
        self.obs_dim = obs_dim
        self.hidden_dim = hidden_dim
        self.net = FeedForward(prefix, [obs_dim, width, width, hidden_dim])

    def param_specs(self):
        return self.net.param_specs()

    def init(self, params, rng):
        self.net.init(params, rng)

    def forward(self, params, obs):
        return self.net.forward(params, obs)

    def backward(self, params, tape, dhidden, grad):
        return self.net.backward(params, tape, dhidden, grad)


class DynamicsNet:
    """(hidden state, one-hot action) -> (next hidden state, reward)."""

    def __init__(self, prefix: str, hidden_dim: int, action_count: int, width: int):
        self.hidden_dim = hidden_dim
        self.action_count = action_count
        self.trunk = FeedForward(
            f"{prefix}.trunk", [hidden_dim + action_count, width, width], final_relu=True
        )
        self.hidden_head = FeedForward(f"{prefix}.hidden", [width, hidden_dim])
        self.reward_head = FeedForward(f"{prefix}.reward", [width, 1])

    def param_specs(self):
        return (
            self.trunk.param_specs()
            + self.hidden_head.param_specs()
            + self.reward_head.param_specs()
        )

    def init(self, params, rng):
        self.trunk.init(params, rng)
        self.hidden_head.init(params, rng)
        self.reward_head.init(params, rng, zero_last=True)

    def forward(self, params, hidden: np.ndarray, actions: np.ndarray):
        """hidden (B, d); actions (B,) integer -> (next_hidden, reward, tape)."""
        one_hot = np.zeros((hidden.shape[0], self.action_count))
        one_hot[np.arange(hidden.shape[0]), actions] = 1.0
        x = np.concatenate([hidden, one_hot], axis=1)
        features, trunk_tape = self.trunk.forward(params, x)
        nxt, hidden_tape = self.hidden_head.forward(params, features)
        reward, reward_tape = self.reward_head.forward(params, features)
        return nxt, reward[:, 0], (trunk_tape, hidden_tape, reward_tape)

    def backward(self, params, tape, dnext, dreward, grad) -> np.ndarray:
        """Returns gradient w.r.t. the *hidden* input slice."""
        trunk_tape, hidden_tape, reward_tape = tape
        dfeat = self.hidden_head.backward(params, hidden_tape, dnext, grad)
        dfeat = dfeat + self.reward_head.backward(params, reward_tape, dreward[:, None], grad)
        dx = self.trunk.backward(params, trunk_tape, dfeat, grad)
        return dx[:, : self.hidden_dim]


class AlphaZeroModel:
    """Two-headed prediction network over raw observations."""

    family = "alphazero"

    def __init__(self, obs_dim: int, action_count: int, width: int = 64,
                 value_tanh: bool = True):
        self.obs_dim = obs_dim
        self.action_count = action_count
        self.width = width
        self.value_tanh = value_tanh
        self.prediction = PredictionNet("pred", obs_dim, action_count, width, value_tanh)
        self.layout = ParameterLayout(self.prediction.param_specs())

    def init_parameters(self, rng: np.random.Generator) -> Parameters:
        params = Parameters(self.layout)
        self.prediction.init(params, rng)
        return params

    def forward_prediction_batch(self, params, obs: np.ndarray):
        obs, _ = _as_batch(obs, self.obs_dim, "observation")
        logits, value, _ = self.prediction.forward(params, obs)
        return logits, value

    def forward_prediction(self, params, obs: np.ndarray) -> NetworkOutput:
        obs, _ = _as_batch(obs, self.obs_dim, "observation")
        logits, value = self.forward_prediction_batch(params, obs)
        return NetworkOutput(policy_logits=logits[0], value=float(value[0]))

    def meta(self) -> dict:
        return {
            "family": self.family,
            "obs_dim": self.obs_dim,
            "action_count": self.action_count,
            "width": self.width,
            "value_tanh": self.value_tanh,
        }


class MuZeroModel:
    """Representation + dynamics + prediction triple over a learned state."""

    family = "muzero"

    def __init__(self, obs_dim: int, action_count: int, width: int = 64,
                 hidden_dim: int = 64, value_tanh: bool = True):
        self.obs_dim = obs_dim
        self.action_count = action_count
        self.width = width
        self.hidden_dim = hidden_dim
        self.value_tanh = value_tanh
        self.representation = RepresentationNet("repr", obs_dim, width, hidden_dim)
        self.dynamics = DynamicsNet("dyn", hidden_dim, action_count, width)
        self.prediction = PredictionNet("pred", hidden_dim, action_count, width, value_tanh)
        self.layout = ParameterLayout(
            self.representation.param_specs()
            + self.dynamics.param_specs()
            + self.prediction.param_specs()
        )

    def init_parameters(self, rng: np.random.Generator) -> Parameters:
        params = Parameters(self.layout)
        self.representation.init(params, rng)
        self.dynamics.init(params, rng)
        self.prediction.init(params, rng)
        return params

    def forward_representation_batch(self, params, obs: np.ndarray) -> np.ndarray:
        obs, _ = _as_batch(obs, self.obs_dim, "observation")
        hidden, _ = self.representation.forward(params, obs)
        return hidden

    def forward_representation(self, params, obs: np.ndarray) -> np.ndarray:
        obs, _ = _as_batch(obs, self.obs_dim, "observation")
        return self.forward_representation_batch(params, obs)[0]

    def forward_dynamics_batch(self, params, hidden: np.ndarray, actions: np.ndarray):
        hidden, _ = _as_batch(hidden, self.hidden_dim, "hidden state")
        actions = np.asarray(actions, dtype=np.int64).reshape(hidden.shape[0])
        if np.any((actions < 0) | (actions >= self.action_count)):
            raise ValueError("action index out of range")
        nxt, reward, _ = self.dynamics.forward(params, hidden, actions)
        return nxt, reward

    def forward_dynamics(self, params, hidden: np.ndarray, action: int):
        hidden, _ = _as_batch(hidden, self.hidden_dim, "hidden state")
        nxt, reward = self.forward_dynamics_batch(params, hidden, np.array([action]))
        return nxt[0], float(reward[0])

    def forward_prediction_batch(self, params, hidden: np.ndarray):
        hidden, _ = _as_batch(hidden, self.hidden_dim, "hidden state")
        logits, value, _ = self.prediction.forward(params, hidden)
        return logits, value

    def forward_prediction(self, params, hidden: np.ndarray) -> NetworkOutput:
        logits, value = self.forward_prediction_batch(params, hidden)
        return NetworkOutput(policy_logits=logits[0], value=float(value[0]))

    def meta(self) -> dict:
        return {
            "family": self.family,
            "obs_dim": self.obs_dim,
            "action_count": self.action_count,
            "width": self.width,
            "hidden_dim": self.hidden_dim,
            "value_tanh": self.value_tanh,
        }


def build_model(family: str, obs_dim: int, action_count: int, width: int = 64,
                hidden_dim: int = 64, value_tanh: bool = True):
    if family == "alphazero":
        return AlphaZeroModel(obs_dim, action_count, width, value_tanh)
    if family == "muzero":
        return MuZeroModel(obs_dim, action_count, width, hidden_dim, value_tanh)
    raise ValueError(f"unknown model family {family!r}")


def model_from_meta(meta: dict):
    family = meta["family"]
    return build_model(
        family,
        obs_dim=meta["obs_dim"],
        action_count=meta["action_count"],
        width=meta["width"],
        hidden_dim=meta.get("hidden_dim", 64),
        value_tanh=meta["value_tanh"],
    )
