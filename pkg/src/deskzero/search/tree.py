"""Search tree storage and the node-level operations shared by all planners.

Per-child statistics live on the parent node as parallel arrays: visit
counts N, value sums W, priors P, edge rewards, and child node ids into the
tree's arena.  A node's own visit count equals 1 (its evaluation) plus the
sum of its children's visit counts.

Value conventions:

- Two-player mode: every Q(s,a) is stored from the perspective of the
  player to move at s; backpropagation re-signs the leaf value per node.
- Single-player mode: backpropagation accumulates ``value = r + discount *
  value`` up the path, and selection normalizes Q by the min/max value
  range observed in the tree so far.

Unvisited children enter the selection formula with an estimated Q derived
from their visited siblings: the "board" estimate adds one virtual losing
visit, ``sum(visited Q) / (count + 1)``; the "atari" estimate uses the
plain mean of visited Q, defaulting to 1 (the normalized maximum) when
nothing has been visited, which biases search toward exploration.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractViolation

ESTIMATED_Q_MODES = ("board", "atari", "off")


@dataclass
class SearchConfig:
    c_puct: float = 1.25
    estimated_q_mode: str = "board"
    discount: float = 1.0
    two_player: bool = True
    planning: str = "env"  # "env": real transitions; "model": learned dynamics
    normalize_q: bool = False  # min-max normalize Q in selection (single-player)
    root_noise: bool = False
    noise_alpha: float = 0.3
    noise_fraction: float = 0.25
    # Gumbel score transform constants.
    c_visit: float = 50.0
    c_scale: float = 1.0

    def __post_init__(self):
        if self.estimated_q_mode not in ESTIMATED_Q_MODES:
            raise ValueError(f"unknown estimated_q_mode {self.estimated_q_mode!r}")
        if self.planning not in ("env", "model"):
            raise ValueError(f"unknown planning mode {self.planning!r}")


class SearchNode:
    __slots__ = (
        "player", "state", "hidden", "net_value", "expanded", "terminal",
        "visit_count", "value_total",
        "actions", "priors", "logits", "edge_visits", "edge_values",
        "edge_rewards", "child_ids",
    )

    def __init__(self, player: int, state=None, hidden=None):
        self.player = player
        self.state = state
        self.hidden = hidden
        self.net_value = 0.0
        self.expanded = False
        self.terminal = False
        self.visit_count = 0
        self.value_total = 0.0
        self.actions: np.ndarray | None = None
        self.priors: np.ndarray | None = None
        self.logits: np.ndarray | None = None
        self.edge_visits: np.ndarray | None = None
        self.edge_values: np.ndarray | None = None
        self.edge_rewards: np.ndarray | None = None
        self.child_ids: np.ndarray | None = None

    @property
    def num_children(self) -> int:
        return 0 if self.actions is None else len(self.actions)

    def child_q(self) -> np.ndarray:
        """Mean value per child edge; zero where unvisited."""
        visits = np.maximum(self.edge_visits, 1)
        return np.where(self.edge_visits > 0, self.edge_values / visits, 0.0)

    def value(self) -> float:
        return self.value_total / self.visit_count if self.visit_count else 0.0


class SearchTree:
    """Arena of nodes plus tree-wide value range for Q normalization."""

    def __init__(self, cfg: SearchConfig):
        self.cfg = cfg
        self.nodes: list[SearchNode] = []
        self.min_value = np.inf
        self.max_value = -np.inf

    def add_node(self, node: SearchNode) -> int:
        self.nodes.append(node)
        return len(self.nodes) - 1

    @property
    def root(self) -> SearchNode:
        return self.nodes[0]

    def update_range(self, value: float) -> None:
        if value < self.min_value:
            self.min_value = value
        if value > self.max_value:
            self.max_value = value

    def normalize(self, q: np.ndarray) -> np.ndarray:
        """Min-max rescale into [0, 1]; identity until a range exists."""
        if self.max_value > self.min_value:
            return (q - self.min_value) / (self.max_value - self.min_value)
        return q


def expand(node: SearchNode, policy_logits: np.ndarray, legal_actions) -> None:
    """Create child edges for the legal actions with N = W = 0.

    Priors are the softmax of the logits renormalized over the legal set,
    so illegal-action mass is redistributed proportionally.
    """
    if node.expanded:
        raise ContractViolation("node is already expanded")
    actions = np.asarray(sorted(legal_actions), dtype=np.int64)
    if actions.size == 0:
        raise ContractViolation("cannot expand a node with no legal actions")
    logits = np.asarray(policy_logits, dtype=np.float64)[actions]
    shifted = logits - logits.max()
    priors = np.exp(shifted)
    priors /= priors.sum()
    node.actions = actions
    node.priors = priors
    node.logits = logits
    node.edge_visits = np.zeros(actions.size, dtype=np.int64)
    node.edge_values = np.zeros(actions.size)
    node.edge_rewards = np.zeros(actions.size)
    node.child_ids = np.full(actions.size, -1, dtype=np.int64)
    node.expanded = True


def mark_terminal(node: SearchNode, value: float) -> None:
    """Expanded-but-childless marker: descents stop here and back up `value`."""
    node.expanded = True
    node.terminal = True
    node.net_value = value


def add_root_noise(node: SearchNode, rng: np.random.Generator, alpha: float, fraction: float) -> None:
    noise = rng.dirichlet(np.full(node.num_children, alpha))
    node.priors = (1.0 - fraction) * node.priors + fraction * noise


def estimate_unvisited_q(q_values: np.ndarray, visited: np.ndarray, mode: str) -> float:
    """Estimated Q assigned to unvisited children, from visited siblings.

    board: sum(Q over visited) / (visited count + 1)  (one virtual loss)
    atari: mean(Q over visited), or 1 when nothing is visited
    off:   0
    """
    if mode == "off":
        return 0.0
    n_sigma = int(np.count_nonzero(visited))
    q_sigma = float(q_values[visited].sum())
    if mode == "board":
        return q_sigma / (n_sigma + 1)
    if mode == "atari":
        return q_sigma / n_sigma if n_sigma > 0 else 1.0
    raise ValueError(f"unknown estimated-Q mode {mode!r}")


def estimated_q(node: SearchNode, mode: str) -> float:
    """Estimated Q for this node's unvisited children (raw value scale)."""
    if not node.expanded or node.terminal:
        raise ContractViolation("estimated_q requires an expanded node with children")
    return estimate_unvisited_q(node.child_q(), node.edge_visits > 0, mode)


def _best_slot(score: np.ndarray, priors: np.ndarray, actions: np.ndarray) -> int:
    """Argmax with ties broken by higher prior, then lower action index."""
    best = np.flatnonzero(score == score.max())
    if best.size > 1:
        sub = best[priors[best] == priors[best].max()]
        best = sub[np.argsort(actions[sub])[:1]]
    return int(best[0])


def select_child(node: SearchNode, cfg: SearchConfig, tree: SearchTree | None = None) -> int:
    """PUCT selection; returns the chosen child slot index.

    score(a) = Q(s,a) + c_puct * P(s,a) * sqrt(sum_b N(s,b)) / (1 + N(s,a))

    Unvisited children take the estimated Q of their siblings.  With Q
    normalization enabled (single-player mode), visited Q values are mapped
    into [0, 1] by the tree's observed range first and the estimate is
    computed on that scale, so the atari no-visit default of 1 means "the
    best value seen anywhere in the tree".
    """
    if not node.expanded or node.terminal:
        raise ContractViolation("select_child requires an expanded node")
    visits = node.edge_visits
    visited = visits > 0
    q = node.child_q()
    if cfg.normalize_q and tree is not None:
        q = np.where(visited, tree.normalize(q), 0.0)
    q_hat = estimate_unvisited_q(q, visited, cfg.estimated_q_mode)
    q = np.where(visited, q, q_hat)
    exploration = cfg.c_puct * node.priors * np.sqrt(visits.sum()) / (1.0 + visits)
    return _best_slot(q + exploration, node.priors, node.actions)


def backpropagate(tree: SearchTree, path, leaf_id: int, leaf_value: float, cfg: SearchConfig) -> None:
    """Update statistics along ``path`` (root-to-leaf edge list).

    ``leaf_value`` is from the perspective of the leaf node's player
    (two-player) or the raw expected return at the leaf (single-player).
    """
    leaf = tree.nodes[leaf_id]
    leaf.visit_count += 1
    leaf.value_total += leaf_value
    if cfg.two_player:
        leaf_player = leaf.player
        for node_id, slot in reversed(path):
            node = tree.nodes[node_id]
            edge_value = leaf_value if node.player == leaf_player else -leaf_value
            node.edge_visits[slot] += 1
            node.edge_values[slot] += edge_value
            node.visit_count += 1
            node.value_total += edge_value
    else:
        value = leaf_value
        tree.update_range(value)
        for node_id, slot in reversed(path):
            node = tree.nodes[node_id]
            value = node.edge_rewards[slot] + cfg.discount * value
            node.edge_visits[slot] += 1
            node.edge_values[slot] += value
            node.visit_count += 1
            node.value_total += value
            tree.update_range(node.edge_values[slot] / node.edge_visits[slot])
