"""Gumbel root planning: Top-k sampling, sequential halving, Q-derived targets.

Instead of visit-count exploration at the root, these planners sample m
candidate actions without replacement by perturbing policy logits with
Gumbel noise, then spend the simulation budget on a sequential-halving
schedule over the candidates.  Candidates are ranked by

    G(a) + logits(a) + sigma(q(a)),

where sigma is a monotonically increasing transform of the searched Q
value, and the bottom half is discarded after each phase; the final
survivor is the action played in the environment.  The policy training
target is derived from completed Q values (searched Q for visited
children, the root value estimate for the rest) rather than from visit
counts, which stays meaningful even at a budget of two simulations.

The same Gumbel variates are drawn once per move and reused across all
phases so the ranking criterion is coherent throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .envs.base import Environment
from .errors import ContractViolation
from .search.evaluation import Evaluator, drive
from .search.mcts import SearchResult, _root_setup, simulate
from .search.tree import SearchConfig, SearchNode, SearchTree


@dataclass
class GumbelSample:
    """Top-k sampling result: slot indices ranked by G + logits, descending."""

    slots: list[int]
    gumbels: np.ndarray  # one variate per input logit, reused for later scoring
    clamped: bool = False


@dataclass
class HalvingPhase:
    size: int      # surviving actions entering this phase
    visits: int    # simulations per surviving action
    extra: int = 0  # leftover budget; +1 visit for the first `extra` survivors


@dataclass
class GumbelRootPlan:
    n_simulations: int
    m: int                    # candidate count actually used
    phases: list[HalvingPhase] = field(default_factory=list)
    clamped: bool = False     # m was reduced from the requested value

    @property
    def planned_visits(self) -> int:
        return sum(p.size * p.visits + p.extra for p in self.phases)


def sample_gumbel(rng: np.random.Generator, size: int) -> np.ndarray:
    """Standard Gumbel variates via -log(-log(U)), U uniform in (0, 1)."""
    u = rng.random(size)
    tiny = np.finfo(np.float64).tiny
    return -np.log(-np.log(np.clip(u, tiny, 1.0 - 1e-16)))


def sample_gumbel_top_k(logits: np.ndarray, k: int,
                        rng: np.random.Generator | None,
                        noise: np.ndarray | None = None) -> GumbelSample:
    """k distinct indices maximizing G + logits, with the drawn G returned.

    ``noise`` overrides the Gumbel draw (tests force G = 0 to make the
    sample degenerate to the top logits).  k larger than the number of
    candidates is clamped, and the clamp is recorded on the result.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if noise is None:
        if rng is None:
            raise ValueError("sample_gumbel_top_k needs an rng or explicit noise")
        noise = sample_gumbel(rng, logits.size)
    else:
        noise = np.asarray(noise, dtype=np.float64)
        if noise.shape != logits.shape:
            raise ValueError("noise shape must match logits")
    clamped = k > logits.size
    k = min(k, logits.size)
    scores = noise + logits
    order = np.argsort(-scores, kind="stable")
    return GumbelSample(slots=[int(i) for i in order[:k]], gumbels=noise, clamped=clamped)


def sequential_halving_plan(n_simulations: int, m: int) -> GumbelRootPlan:
    """Split a budget of n simulations over m sampled actions.

    n == m is the pure top-k case: one phase, one visit per action.  For
    n > m the candidate count is rounded down to a power of two (and halved
    further while the minimal halving schedule m + m/2 + ... + 2 cannot fit
    in n); each of the log2(m) phases then gives every survivor
    floor(n / (phases * survivors)) visits, at least 1, with any leftover
    budget spent in the final phase.
    """
    if m < 1:
        raise ContractViolation("m must be >= 1")
    if n_simulations < m:
        raise ContractViolation(
            f"budget n={n_simulations} is below m={m}; reduce the sampled action count"
        )
    if n_simulations == m:
        return GumbelRootPlan(n_simulations, m, [HalvingPhase(size=m, visits=1)])
    m_pow = 1 << int(np.log2(m))
    clamped = m_pow != m
    while m_pow > 2 and 2 * m_pow - 2 > n_simulations:
        m_pow //= 2
        clamped = True
    if m_pow == 1:
        return GumbelRootPlan(
            n_simulations, 1, [HalvingPhase(size=1, visits=n_simulations)], clamped
        )
    n_phases = int(np.log2(m_pow))
    phases = []
    size = m_pow
    for _ in range(n_phases):
        visits = max(1, n_simulations // (n_phases * size))
        phases.append(HalvingPhase(size=size, visits=visits))
        size //= 2
    leftover = n_simulations - sum(p.size * p.visits for p in phases)
    if leftover:
        last = phases[-1]
        last.visits += leftover // last.size
        last.extra = leftover % last.size
    plan = GumbelRootPlan(n_simulations, m_pow, phases, clamped)
    assert plan.planned_visits == n_simulations
    return plan


def sigma(q, max_child_visits: int, cfg: SearchConfig):
    """Monotone Q transform used in ranking: (c_visit + maxN) * c_scale * q.

    Accepts scalars or arrays (applied elementwise).
    """
    scaled = (cfg.c_visit + max_child_visits) * cfg.c_scale * q
    return float(scaled) if np.isscalar(q) else scaled


@dataclass
class CompletedQ:
    """Per-action value vector over a node's children.

    Visited children carry their searched Q; the rest fall back to the
    node's value estimate.  ``searched`` records the source per slot.
    """

    values: np.ndarray
    searched: np.ndarray


def completed_q(node: SearchNode, fallback_value: float,
                tree: SearchTree | None = None, normalize: bool = False) -> CompletedQ:
    visited = node.edge_visits > 0
    q = node.child_q()
    if normalize and tree is not None:
        q = tree.normalize(q)
        fallback_value = float(tree.normalize(np.array([fallback_value]))[0])
    values = np.where(visited, q, fallback_value)
    return CompletedQ(values=values, searched=visited.copy())


def improved_policy_target(node: SearchNode, completed: CompletedQ,
                           cfg: SearchConfig, action_space_size: int) -> np.ndarray:
    """Distribution over the full action space: softmax(logits + sigma(Q)).

    Defined over the node's legal children; illegal actions get zero mass.
    """
    max_visits = int(node.edge_visits.max()) if node.num_children else 0
    scores = node.logits + sigma(completed.values, max_visits, cfg)
    shifted = np.exp(scores - scores.max())
    probs = shifted / shifted.sum()
    target = np.zeros(action_space_size)
    target[node.actions] = probs
    return target


def _nonroot_select(node: SearchNode, cfg: SearchConfig, tree: SearchTree) -> int:
    """Deterministic in-tree selection below the root.

    Follows the improved policy pi' built from that node's completed Q,
    choosing argmax of pi'(a) - N(a) / (1 + sum_b N(b)), which steers visit
    proportions toward pi' without any sampling.
    """
    completed = completed_q(node, node.net_value, tree, normalize=cfg.normalize_q)
    max_visits = int(node.edge_visits.max())
    scores = node.logits + sigma(completed.values, max_visits, cfg)
    shifted = np.exp(scores - scores.max())
    pi = shifted / shifted.sum()
    adjusted = pi - node.edge_visits / (1.0 + node.edge_visits.sum())
    best = np.flatnonzero(adjusted == adjusted.max())
    if best.size > 1:
        best = best[np.argsort(node.actions[best])[:1]]
    return int(best[0])


def gumbel_search_gen(env: Environment, root_state, n_simulations: int, m: int,
                      rng: np.random.Generator | None, cfg: SearchConfig):
    """Gumbel root planning as a generator; returns a SearchResult.

    The budget n counts root-child visits; the root's own evaluation (which
    supplies the logits for sampling) is not charged against it.
    """
    if n_simulations < 1:
        raise ContractViolation("n_simulations must be >= 1")
    tree = yield from _root_setup(env, root_state, cfg, rng=None)  # no Dirichlet noise
    root = tree.root
    plan = sequential_halving_plan(n_simulations, min(m, root.num_children, n_simulations))
    sample = sample_gumbel_top_k(root.logits, plan.m, rng)
    gumbels = sample.gumbels
    survivors = list(sample.slots)

    def in_tree(node: SearchNode) -> int:
        return _nonroot_select(node, cfg, tree)

    def rank_survivors(slots: list[int]) -> list[int]:
        comp = completed_q(root, root.net_value, tree, normalize=cfg.normalize_q)
        scores = gumbels + root.logits + sigma(
            comp.values, int(root.edge_visits.max()), cfg
        )
        # Ties: prefer higher G + logits, then lower action index.
        return sorted(
            slots,
            key=lambda s: (-scores[s], -(gumbels[s] + root.logits[s]), int(root.actions[s])),
        )

    for i, phase in enumerate(plan.phases):
        for rank, slot in enumerate(survivors):
            visits = phase.visits + (1 if rank < phase.extra else 0)
            for _ in range(visits):
                yield from simulate(env, tree, cfg, select=in_tree, force_root_slot=slot)
        survivors = rank_survivors(survivors)
        keep = 1 if i == len(plan.phases) - 1 else phase.size // 2
        survivors = survivors[:keep]
    selected_slot = survivors[0]

    comp = completed_q(root, root.net_value, tree, normalize=cfg.normalize_q)
    target = improved_policy_target(root, comp, cfg, env.action_space_size)
    visit_counts = np.zeros(env.action_space_size, dtype=np.int64)
    visit_counts[root.actions] = root.edge_visits
    child_q_full = np.full(env.action_space_size, np.nan)
    visited = root.edge_visits > 0
    child_q_full[root.actions[visited]] = root.child_q()[visited]
    completed_full = np.full(env.action_space_size, np.nan)
    completed_full[root.actions] = comp.values
    return SearchResult(
        visit_counts=visit_counts,
        root_value=root.value(),
        selected_action=int(root.actions[selected_slot]),
        child_q=child_q_full,
        completed_q=completed_full,
        improved_policy=target,
    )


def gumbel_search(env: Environment, root_state, evaluator: Evaluator,
                  n_simulations: int, m: int, rng: np.random.Generator | None,
                  cfg: SearchConfig) -> SearchResult:
    return drive([gumbel_search_gen(env, root_state, n_simulations, m, rng, cfg)], evaluator)[0]


def default_sampled_actions(n_simulations: int, legal_count: int, cap: int = 16) -> int:
    """Default m: min(legal, n) at tiny budgets, else the largest power of
    two at most min(legal, cap)."""
    if n_simulations <= 4:
        return max(1, min(legal_count, n_simulations))
    m = min(legal_count, cap)
    return 1 << int(np.log2(m)) if m >= 1 else 1
