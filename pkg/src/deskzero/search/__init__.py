"""Monte Carlo tree search: storage, PUCT selection, batched evaluation."""
from .evaluation import (
    CountingEvaluator,
    EvalRequest,
    EvalResponse,
    Evaluator,
    RoutingEvaluator,
    drive,
)
from .mcts import SearchResult, run_search, search_gen, simulate
from .tree import (
    SearchConfig,
    SearchNode,
    SearchTree,
    backpropagate,
    estimate_unvisited_q,
    estimated_q,
    expand,
    select_child,
)

__all__ = [
    "CountingEvaluator",
    "EvalRequest",
    "EvalResponse",
    "Evaluator",
    "RoutingEvaluator",
    "SearchConfig",
    "SearchNode",
    "SearchResult",
    "SearchTree",
    "backpropagate",
    "drive",
    "estimate_unvisited_q",
    "estimated_q",
    "expand",
    "run_search",
    "search_gen",
    "select_child",
    "simulate",
]
