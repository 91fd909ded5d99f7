"""Game environments and the registry that maps env ids to instances."""
from __future__ import annotations

from ..errors import ConfigError
from .base import Environment, Outcome, replay_moves
from .gridworld import GridRewardEnv, GridState
from .othello import OthelloEnv, OthelloState
from .records import GameRecord, RecordError, format_record, parse_record, read_records, write_records
from .tictactoe import TicTacToeEnv, TicTacToeState

__all__ = [
    "Environment",
    "Outcome",
    "GameRecord",
    "RecordError",
    "GridRewardEnv",
    "GridState",
    "OthelloEnv",
    "OthelloState",
    "TicTacToeEnv",
    "TicTacToeState",
    "format_record",
    "parse_record",
    "read_records",
    "write_records",
    "replay_moves",
    "make_environment",
]


def make_environment(env_id: str) -> Environment:
    """Build an environment from its id (e.g. ``tictactoe``, ``othello6``)."""
    if env_id == "tictactoe":
        return TicTacToeEnv()
    if env_id.startswith("othello"):
        try:
            size = int(env_id[len("othello"):])
        except ValueError:
            raise ConfigError(f"unknown environment {env_id!r}") from None
        if size not in (4, 6, 8):
            raise ConfigError(f"unsupported Othello size {size}")
        return OthelloEnv(size)
    if env_id == "gridreward":
        return GridRewardEnv()
    if env_id.startswith("gridreward:"):
        try:
            seed = int(env_id.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"unknown environment {env_id!r}") from None
        return GridRewardEnv(layout_seed=seed)
    raise ConfigError(f"unknown environment {env_id!r}")
