"""Leaf-evaluation contract between searches and networks.

Searches are written as generators that yield ``EvalRequest`` objects and
are resumed with ``EvalResponse`` objects.  A driver owns the evaluator
and advances any number of searches in lockstep, coalescing one pending
request per live search into a single batched evaluator call.  This is the
only synchronization point between concurrent game instances.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Protocol, Sequence

import numpy as np


@dataclass
class EvalRequest:
    """One position to evaluate.

    ``initial`` requests carry a real environment state plus its observation
    (root evaluation, and every node of environment-backed planning).
    ``recurrent`` requests carry a hidden-state handle and an action
    (model-backed planning steps).  ``tag`` routes the request when several
    evaluators share a driver (e.g. two agents in a match).
    """

    kind: str  # "initial" | "recurrent"
    observation: np.ndarray | None = None
    state: Any = None
    hidden: Any = None
    action: int | None = None
    tag: Any = None


@dataclass
class EvalResponse:
    policy_logits: np.ndarray
    value: float
    reward: float = 0.0
    hidden: Any = None
    # Optional legality mask for the evaluated position.  None means the
    # search decides (real legal actions for environment-backed planning,
    # the full action space for model-backed planning).  An empty sequence
    # marks the position terminal.
    legal_actions: Sequence[int] | None = None


class Evaluator(Protocol):
    def evaluate_batch(self, requests: Sequence[EvalRequest]) -> list[EvalResponse]: ...


def drive(generators: Iterable, evaluator: Evaluator) -> list:
    """Run request/response generators to completion against one evaluator.

    Each pass collects at most one pending request per live generator, so
    batch sizes never exceed the number of concurrent searches and every
    request is answered exactly once.  Returns each generator's result, in
    input order.
    """
    gens = list(generators)
    results: list[Any] = [None] * len(gens)
    live = dict(enumerate(gens))
    inbox: dict[int, EvalResponse] = {}
    while live:
        owners: list[int] = []
        batch: list[EvalRequest] = []
        for i in list(live):
            try:
                request = live[i].send(inbox.pop(i, None))
            except StopIteration as stop:
                results[i] = stop.value
                del live[i]
                continue
            owners.append(i)
            batch.append(request)
        if not batch:
            continue
        responses = evaluator.evaluate_batch(batch)
        if len(responses) != len(batch):
            raise RuntimeError(
                f"evaluator answered {len(responses)} of {len(batch)} requests"
            )
        for i, response in zip(owners, responses):
            inbox[i] = response
    return results


@dataclass
class RoutingEvaluator:
    """Splits a batch among tagged evaluators and reassembles the responses."""

    routes: dict

    def evaluate_batch(self, requests: Sequence[EvalRequest]) -> list[EvalResponse]:
        by_tag: dict[Any, list[int]] = {}
        for i, request in enumerate(requests):
            by_tag.setdefault(request.tag, []).append(i)
        out: list[EvalResponse | None] = [None] * len(requests)
        for tag, indices in by_tag.items():
            if tag not in self.routes:
                raise KeyError(f"no evaluator registered for tag {tag!r}")
            responses = self.routes[tag].evaluate_batch([requests[i] for i in indices])
            for i, response in zip(indices, responses):
                out[i] = response
        return out  # type: ignore[return-value]


@dataclass
class CountingEvaluator:
    """Wrapper that records batch sizes and request totals (for tests/metrics)."""

    inner: Any
    batch_sizes: list[int] = field(default_factory=list)
    requests_seen: int = 0
    responses_sent: int = 0

    def evaluate_batch(self, requests: Sequence[EvalRequest]) -> list[EvalResponse]:
        self.batch_sizes.append(len(requests))
        self.requests_seen += len(requests)
        responses = self.inner.evaluate_batch(requests)
        self.responses_sent += len(responses)
        return responses
