"""PUCT Monte Carlo tree search over environment-backed or model-backed planning.

``search_gen`` is the resumable core: it yields ``EvalRequest`` objects and
is resumed with ``EvalResponse`` objects (see ``evaluation.drive``), which
lets many searches share one batched evaluator.  ``run_search`` is the
single-search convenience wrapper.

Planning modes:

- ``env``: descends real game states, calling ``env.apply`` per edge and
  reading terminal outcomes from the environment.
- ``model``: calls the evaluator's representation once at the root and its
  dynamics per edge; the environment is only consulted for the root
  observation and root legality, never for transitions.

Accounting: the root evaluation/expansion counts as the first simulation,
so after ``n_simulations`` the root's visit count is exactly n and its
children hold n - 1 visits in total.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..envs.base import Environment
from ..errors import ContractViolation
from .evaluation import EvalRequest, Evaluator, drive
from .tree import (
    SearchConfig,
    SearchNode,
    SearchTree,
    add_root_noise,
    backpropagate,
    expand,
    mark_terminal,
    select_child,
)


@dataclass
class SearchResult:
    visit_counts: np.ndarray      # root child visits over the full action space
    root_value: float
    selected_action: int
    child_q: np.ndarray           # per-action mean value; NaN where unvisited
    completed_q: np.ndarray | None = None   # Gumbel planners only
    improved_policy: np.ndarray | None = None

    @property
    def visit_distribution(self) -> np.ndarray:
        total = self.visit_counts.sum()
        if total == 0:
            return np.zeros_like(self.visit_counts, dtype=np.float64)
        return self.visit_counts / total


def _root_setup(env: Environment, root_state, cfg: SearchConfig, rng):
    """Shared root preparation: evaluate, expand, optionally add noise.

    Generator; returns the populated tree.
    """
    if env.terminal_outcome(root_state).terminal:
        raise ContractViolation("search requires a non-terminal root state")
    legal = env.legal_actions(root_state)
    response = yield EvalRequest(
        "initial", observation=env.observe(root_state), state=root_state
    )
    tree = SearchTree(cfg)
    root = SearchNode(env.to_move(root_state), state=root_state, hidden=response.hidden)
    tree.add_node(root)
    expand(root, response.policy_logits, legal)
    root.net_value = float(response.value)
    root.visit_count = 1
    root.value_total = float(response.value)
    if not cfg.two_player:
        tree.update_range(root.net_value)
    if cfg.root_noise and rng is not None:
        add_root_noise(root, rng, cfg.noise_alpha, cfg.noise_fraction)
    return tree


def simulate(env: Environment, tree: SearchTree, cfg: SearchConfig,
             select=None, force_root_slot: int | None = None):
    """One selection/expansion/backpropagation pass.  Generator.

    ``select`` overrides the child-selection rule below the root (used by
    Gumbel planners); ``force_root_slot`` pins the root's chosen edge.
    """
    choose = select or (lambda node: select_child(node, cfg, tree))
    node_id = 0
    path: list[tuple[int, int]] = []
    while True:
        node = tree.nodes[node_id]
        if node.terminal:
            leaf_id, value = node_id, node.net_value
            break
        if force_root_slot is not None and node_id == 0:
            slot = force_root_slot
        else:
            slot = choose(node)
        path.append((node_id, slot))
        child_id = int(node.child_ids[slot])
        if child_id >= 0:
            node_id = child_id
            continue
        action = int(node.actions[slot])
        if cfg.planning == "env":
            child_state, reward = env.apply(node.state, action)
            node.edge_rewards[slot] = reward
            child_player = env.to_move(child_state)
            child = SearchNode(child_player, state=child_state)
            child_id = tree.add_node(child)
            node.child_ids[slot] = child_id
            outcome = env.terminal_outcome(child_state)
            if outcome.terminal:
                if cfg.two_player:
                    value = outcome.z * (1.0 if child_player == 0 else -1.0)
                else:
                    value = 0.0  # no future return past a terminal state
                mark_terminal(child, value)
            else:
                response = yield EvalRequest(
                    "initial", observation=env.observe(child_state), state=child_state
                )
                expand(child, response.policy_logits, env.legal_actions(child_state))
                child.net_value = float(response.value)
                value = child.net_value
        else:
            response = yield EvalRequest("recurrent", hidden=node.hidden, action=action)
            node.edge_rewards[slot] = float(response.reward)
            child_player = (1 - node.player) if cfg.two_player else 0
            child = SearchNode(child_player, hidden=response.hidden)
            child_id = tree.add_node(child)
            node.child_ids[slot] = child_id
            legal = response.legal_actions
            if legal is not None and len(legal) == 0:
                value = float(response.value)
                mark_terminal(child, value)
            else:
                if legal is None:
                    legal = range(len(response.policy_logits))
                expand(child, response.policy_logits, legal)
                child.net_value = float(response.value)
                value = child.net_value
        leaf_id = child_id
        break
    backpropagate(tree, path, leaf_id, value, cfg)


def _result_from_tree(tree: SearchTree, action_space_size: int) -> SearchResult:
    root = tree.root
    visit_counts = np.zeros(action_space_size, dtype=np.int64)
    child_q = np.full(action_space_size, np.nan)
    visit_counts[root.actions] = root.edge_visits
    visited = root.edge_visits > 0
    q = root.child_q()
    child_q[root.actions[visited]] = q[visited]
    # Deterministic selection: most visits, ties by prior then action index.
    score = root.edge_visits.astype(np.float64)
    best = np.flatnonzero(score == score.max())
    if best.size > 1:
        sub = best[root.priors[best] == root.priors[best].max()]
        best = sub[np.argsort(root.actions[sub])[:1]]
    selected = int(root.actions[int(best[0])])
    return SearchResult(
        visit_counts=visit_counts,
        root_value=root.value(),
        selected_action=selected,
        child_q=child_q,
    )


def search_gen(env: Environment, root_state, n_simulations: int, cfg: SearchConfig,
               rng: np.random.Generator | None = None):
    """Full PUCT search as a generator; returns a SearchResult."""
    if n_simulations < 1:
        raise ContractViolation("n_simulations must be >= 1")
    tree = yield from _root_setup(env, root_state, cfg, rng)
    for _ in range(n_simulations - 1):  # root evaluation was simulation #1
        yield from simulate(env, tree, cfg)
    return _result_from_tree(tree, env.action_space_size)


def run_search(env: Environment, root_state, evaluator: Evaluator, n_simulations: int,
               cfg: SearchConfig, rng: np.random.Generator | None = None) -> SearchResult:
    return drive([search_gen(env, root_state, n_simulations, cfg, rng)], evaluator)[0]
