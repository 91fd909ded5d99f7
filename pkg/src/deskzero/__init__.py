"""deskzero: a desk-scale self-play learning engine.

Four planner/trainer combinations over pluggable environments: PUCT search
with real or learned transition models, and their Gumbel root-planning
variants, plus a training orchestrator, replay buffer, worker protocol,
and an Elo evaluation harness.
"""

__version__ = "0.1.0"
