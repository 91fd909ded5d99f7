"""Training orchestration: config, self-play, optimization, worker protocol."""
from .config import IterationReport, TrainConfig, format_config, parse_config_file
from .orchestrator import (
    RunResult,
    checkpoint_path,
    make_buffer,
    optimize,
    records_path,
    run_training,
)
from .protocol import (
    MESSAGE_KINDS,
    WorkerMessage,
    decode_message,
    encode_message,
    json_message,
    payload_dict,
)
from .selfplay import game_rng, play_game, select_move, self_play_batch
from .server import TrainingServer, Worker, run_server, run_worker

__all__ = [
    "IterationReport",
    "MESSAGE_KINDS",
    "RunResult",
    "TrainConfig",
    "TrainingServer",
    "Worker",
    "WorkerMessage",
    "checkpoint_path",
    "decode_message",
    "encode_message",
    "format_config",
    "game_rng",
    "json_message",
    "make_buffer",
    "optimize",
    "parse_config_file",
    "payload_dict",
    "play_game",
    "records_path",
    "run_server",
    "run_training",
    "run_worker",
    "select_move",
    "self_play_batch",
]
