"""Simulation budget schedules across training iterations.

``flat_schedule`` assigns the same per-move simulation count to every
iteration.  ``allocate`` spends the same total budget progressively: early
iterations run at the minimum count and late iterations grow toward the
maximum, concentrating search effort where the learned evaluations are
strongest.

The progressive allocation works in three steps:

1. Give every iteration ``n_min`` simulations.
2. Walk target levels ``n_max``, ``n_max // 2``, ``n_max // 4``, ... while
   the level stays above ``n_min``, budget remains, and unassigned
   iterations remain.  Each level claims up to half the remaining budget:
   ``i = min((budget // 2) // (level - n_min), unassigned)`` iterations are
   placed at that level, in front of the previously placed (higher) levels.
3. Any leftover budget is spent one simulation at a time on the latest
   occurrences of the current minimum level, repeating until exhausted,
   which preserves the non-decreasing shape.

The result always sums to the budget exactly and respects the bounds; an
impossible budget raises instead of being silently truncated.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import InfeasibleScheduleError


@dataclass(frozen=True)
class SimulationSchedule:
    counts: tuple[int, ...]
    budget: int
    n_min: int
    n_max: int

    def __len__(self) -> int:
        return len(self.counts)

    def __getitem__(self, i: int) -> int:
        return self.counts[i]


def allocate(iterations: int, budget: int, n_min: int, n_max: int) -> SimulationSchedule:
    """Progressive allocation of ``budget`` simulations over ``iterations``."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if n_min < 1 or n_min > n_max:
        raise ValueError("bounds must satisfy 1 <= n_min <= n_max")
    if budget < iterations * n_min:
        raise InfeasibleScheduleError(
            f"budget {budget} cannot give {iterations} iterations at least {n_min} each"
        )
    if budget > iterations * n_max:
        raise InfeasibleScheduleError(
            f"budget {budget} exceeds {iterations} iterations at the cap {n_max}"
        )

    remaining = budget - iterations * n_min
    levels: list[int] = []
    n = n_max
    while remaining > 0 and n > n_min and iterations - len(levels) > 0:
        # floor(remaining * 0.5 / (n - n_min)), kept in exact integers
        i = min((remaining // 2) // (n - n_min), iterations - len(levels))
        levels = [n] * i + levels
        remaining -= i * (n - n_min)
        n //= 2
    counts = [n_min] * (iterations - len(levels)) + levels

    while remaining > 0:
        minimum = counts[0]  # counts is non-decreasing throughout
        k = _prefix_run_length(counts, minimum)
        i = min(remaining, k)
        for j in range(k - i, k):
            counts[j] += 1
        remaining -= i

    assert sum(counts) == budget
    assert all(n_min <= c <= n_max for c in counts)
    return SimulationSchedule(tuple(counts), budget, n_min, n_max)


def _prefix_run_length(counts: list[int], value: int) -> int:
    lo, hi = 0, len(counts)
    while lo < hi:
        mid = (lo + hi) // 2
        if counts[mid] == value:
            lo = mid + 1
        else:
            hi = mid
    return lo


def flat_schedule(iterations: int, n: int) -> SimulationSchedule:
    """Constant schedule: every iteration gets ``n`` simulations."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    return SimulationSchedule((n,) * iterations, iterations * n, n, n)


def schedule_csv(schedule: SimulationSchedule) -> str:
    lines = ["iteration,count"]
    lines.extend(f"{i + 1},{c}" for i, c in enumerate(schedule.counts))
    return "\n".join(lines) + "\n"
