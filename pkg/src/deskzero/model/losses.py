"""Loss functions for both model families, and their analytic gradients.

Single-position loss:   (z - v)^2  -  pi . log p  +  c * ||theta||^2
Unrolled K-step loss adds a squared reward error per dynamics step and
sums the policy/value terms over the K+1 predictions.

Training uses decoupled weight decay inside the SGD update rather than
differentiating the L2 term, so the gradient helpers accept c separately:
pass c > 0 to differentiate the full expression (gradient checks do),
pass c = 0 and set weight_decay on the optimizer for training runs.  The
reported LossBreakdown always carries the c * ||theta||^2 term for logging.

Batched gradients are importance-weighted means: each sample contributes
weight_i / batch_size of its per-sample gradient.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ContractViolation
from .networks import AlphaZeroModel, MuZeroModel, NetworkOutput
from .parameters import Parameters, zero_gradient

POLICY_SUM_TOL = 1e-6


@dataclass
class LossBreakdown:
    policy_loss: float
    value_loss: float
    reward_loss: float
    l2_term: float

    @property
    def total(self) -> float:
        return self.policy_loss + self.value_loss + self.reward_loss + self.l2_term


def log_softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logits - logits.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    return np.exp(log_softmax(logits, axis=axis))


def _check_distribution(target_policy: np.ndarray) -> np.ndarray:
    target_policy = np.asarray(target_policy, dtype=np.float64)
    if abs(target_policy.sum() - 1.0) > POLICY_SUM_TOL or target_policy.min() < 0:
        raise ContractViolation("policy target must be a distribution summing to 1")
    return target_policy


def _l2(c: float, params: Parameters) -> float:
    return float(c * params.theta @ params.theta) if c else 0.0


def loss_alphazero(output: NetworkOutput, target_policy, z: float, c: float,
                   params: Parameters) -> LossBreakdown:
    target_policy = _check_distribution(target_policy)
    log_p = log_softmax(np.asarray(output.policy_logits, dtype=np.float64))
    policy = float(-(target_policy @ log_p))
    value = float((z - output.value) ** 2)
    return LossBreakdown(policy, value, 0.0, _l2(c, params))


def loss_muzero(outputs: Sequence[NetworkOutput], target_policies, target_values,
                target_rewards, c: float, params: Parameters) -> LossBreakdown:
    k_steps = len(outputs) - 1
    if len(target_policies) != k_steps + 1 or len(target_values) != k_steps + 1:
        raise ContractViolation("need K+1 policy and value targets")
    if len(target_rewards) != k_steps:
        raise ContractViolation("need K reward targets (none at step 0)")
    policy = value = reward = 0.0
    for k, output in enumerate(outputs):
        target = _check_distribution(target_policies[k])
        log_p = log_softmax(np.asarray(output.policy_logits, dtype=np.float64))
        policy += float(-(target @ log_p))
        value += float((target_values[k] - output.value) ** 2)
        if k >= 1:
            if output.reward is None:
                raise ContractViolation(f"unroll step {k} is missing a reward estimate")
            reward += float((target_rewards[k - 1] - output.reward) ** 2)
    return LossBreakdown(policy, value, reward, _l2(c, params))


def _prep_batch(weights, batch_size: int) -> np.ndarray:
    if weights is None:
        weights = np.ones(batch_size)
    weights = np.asarray(weights, dtype=np.float64)
    return weights / batch_size


def alphazero_loss_and_grad(model: AlphaZeroModel, params: Parameters,
                            obs: np.ndarray, target_policy: np.ndarray,
                            z: np.ndarray, c: float,
                            weights: np.ndarray | None = None):
    """Weighted-mean loss over a batch and its gradient w.r.t. theta.

    obs (B, D); target_policy (B, A) rows summing to 1; z (B,).
    """
    obs = np.atleast_2d(np.asarray(obs, dtype=np.float64))
    target_policy = np.atleast_2d(np.asarray(target_policy, dtype=np.float64))
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    batch = obs.shape[0]
    scale = _prep_batch(weights, batch)

    logits, value, tape = model.prediction.forward(params, obs)
    log_p = log_softmax(logits)
    p = np.exp(log_p)
    policy_terms = -(target_policy * log_p).sum(axis=1)
    value_terms = (z - value) ** 2

    grad = zero_gradient(params.layout)
    dlogits = (p - target_policy) * scale[:, None]
    dvalue = 2.0 * (value - z) * scale
    model.prediction.backward(params, tape, dlogits, dvalue, grad)
    if c:
        grad += 2.0 * c * params.theta

    breakdown = LossBreakdown(
        float(policy_terms @ scale),
        float(value_terms @ scale),
        0.0,
        _l2(c, params),
    )
    return breakdown, grad


def muzero_loss_and_grad(model: MuZeroModel, params: Parameters,
                         obs: np.ndarray, actions: np.ndarray,
                         target_policy: np.ndarray, target_value: np.ndarray,
                         target_reward: np.ndarray, c: float,
                         weights: np.ndarray | None = None):
    """K-step unrolled loss and gradient.

    obs (B, D); actions (B, K) applied successively from the observed
    position; target_policy (B, K+1, A); target_value (B, K+1);
    target_reward (B, K).  Gradients flow through the dynamics chain back
    into the representation network.
    """
    obs = np.atleast_2d(np.asarray(obs, dtype=np.float64))
    actions = np.asarray(actions, dtype=np.int64)
    if actions.ndim == 1:
        actions = actions[None, :]
    batch, k_steps = actions.shape
    target_policy = np.asarray(target_policy, dtype=np.float64).reshape(
        batch, k_steps + 1, model.action_count
    )
    target_value = np.asarray(target_value, dtype=np.float64).reshape(batch, k_steps + 1)
    target_reward = np.asarray(target_reward, dtype=np.float64).reshape(batch, k_steps)
    scale = _prep_batch(weights, batch)

    hidden, repr_tape = model.representation.forward(params, obs)
    pred_tapes = []
    dyn_tapes = []
    logits_by_step = []
    value_by_step = []
    reward_by_step = []
    hiddens = [hidden]
    for k in range(k_steps + 1):
        logits, value, tape = model.prediction.forward(params, hiddens[k])
        pred_tapes.append(tape)
        logits_by_step.append(logits)
        value_by_step.append(value)
        if k < k_steps:
            nxt, reward, dyn_tape = model.dynamics.forward(params, hiddens[k], actions[:, k])
            dyn_tapes.append(dyn_tape)
            reward_by_step.append(reward)
            hiddens.append(nxt)

    policy_sum = np.zeros(batch)
    value_sum = np.zeros(batch)
    reward_sum = np.zeros(batch)
    grad = zero_gradient(params.layout)
    dhidden = np.zeros_like(hiddens[-1])
    for k in range(k_steps, -1, -1):
        log_p = log_softmax(logits_by_step[k])
        policy_sum += -(target_policy[:, k, :] * log_p).sum(axis=1)
        value_sum += (target_value[:, k] - value_by_step[k]) ** 2
        dlogits = (np.exp(log_p) - target_policy[:, k, :]) * scale[:, None]
        dvalue = 2.0 * (value_by_step[k] - target_value[:, k]) * scale
        dhidden = dhidden + model.prediction.backward(
            params, pred_tapes[k], dlogits, dvalue, grad
        )
        if k >= 1:
            reward_sum += (target_reward[:, k - 1] - reward_by_step[k - 1]) ** 2
            dreward = 2.0 * (reward_by_step[k - 1] - target_reward[:, k - 1]) * scale
            dhidden = model.dynamics.backward(params, dyn_tapes[k - 1], dhidden, dreward, grad)
    model.representation.backward(params, repr_tape, dhidden, grad)
    if c:
        grad += 2.0 * c * params.theta

    breakdown = LossBreakdown(
        float(policy_sum @ scale),
        float(value_sum @ scale),
        float(reward_sum @ scale),
        _l2(c, params),
    )
    return breakdown, grad
