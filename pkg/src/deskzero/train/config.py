"""Training configuration and its line-based config-file format.

Files hold one ``key = value`` pair per line; blank lines and ``#``
comments are ignored; unknown keys are errors.  Keys mirror the
TrainConfig fields below.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields

from ..errors import ConfigError
from ..schedule import SimulationSchedule, allocate, flat_schedule

ALGORITHMS = ("alphazero", "muzero", "gumbel_alphazero", "gumbel_muzero")
SCHEDULES = ("flat", "progressive")
ESTIMATED_Q_MODES = ("auto", "board", "atari", "off")


@dataclass
class TrainConfig:
    algorithm: str = "alphazero"
    environment: str = "tictactoe"
    run_dir: str = "runs/default"

    iterations: int = 60
    games_per_iteration: int = 200
    optimize_steps: int = 60
    batch_size: int = 64

    # Simulation schedule: flat n per move, or progressive within [min, max]
    # spending `budget` total simulations-per-move across all iterations.
    schedule: str = "flat"
    simulations: int = 16
    budget: int = 0
    min_simulations: int = 2
    max_simulations: int = 64

    learning_rate: float = 0.05
    momentum: float = 0.9
    weight_decay: float = 1e-4

    unroll_steps: int = 5
    bootstrap_steps: int = 5
    discount: float = 0.997

    buffer_capacity: int = 2000   # games (two-player) or frames (single-player)
    priority_alpha: float = 1.0
    priority_beta: float = 0.4

    c_puct: float = 1.25
    estimated_q_mode: str = "auto"
    root_noise: bool = True
    noise_alpha: float = 0.3
    noise_fraction: float = 0.25
    temperature_moves_fraction: float = 0.3

    gumbel_m: int = 0             # 0 = automatic from budget and legal count
    c_visit: float = 50.0
    c_scale: float = 1.0

    net_width: int = 64
    hidden_dim: int = 64

    seed: int = 0
    parallel_games: int = 16
    checkpoint_every: int = 1     # evaluation cadence: which iterations keep checkpoints

    def validate(self) -> "TrainConfig":
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.schedule not in SCHEDULES:
            raise ConfigError(f"unknown schedule {self.schedule!r}")
        if self.estimated_q_mode not in ESTIMATED_Q_MODES:
            raise ConfigError(f"unknown estimated_q_mode {self.estimated_q_mode!r}")
        positive = (
            "iterations", "games_per_iteration", "batch_size",
            "simulations", "buffer_capacity", "parallel_games", "checkpoint_every",
            "net_width", "hidden_dim", "bootstrap_steps",
        )
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.optimize_steps < 0 or self.unroll_steps < 0:
            raise ConfigError("step counts must be >= 0")
        if self.schedule == "progressive" and self.budget < 1:
            raise ConfigError("progressive schedule needs a positive budget")
        if not 0 < self.temperature_moves_fraction <= 1:
            raise ConfigError("temperature_moves_fraction must be in (0, 1]")
        return self

    @property
    def is_gumbel(self) -> bool:
        return self.algorithm.startswith("gumbel")

    def simulation_schedule(self) -> SimulationSchedule:
        if self.schedule == "flat":
            return flat_schedule(self.iterations, self.simulations)
        return allocate(
            self.iterations, self.budget, self.min_simulations, self.max_simulations
        )

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, value in data.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(known[key].type, value, key)
        return cls(**kwargs).validate()


def _coerce(annotation, value, key: str):
    if isinstance(value, str):
        text = value.strip()
        try:
            if annotation == "int":
                return int(text)
            if annotation == "float":
                return float(text)
            if annotation == "bool":
                if text.lower() in ("true", "on", "1", "yes"):
                    return True
                if text.lower() in ("false", "off", "0", "no"):
                    return False
                raise ValueError(text)
            return text
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return value


def parse_config_file(path) -> TrainConfig:
    data: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            key = key.strip()
            if key in data:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            data[key] = value.strip()
    return TrainConfig.from_dict(data)


def format_config(config: TrainConfig) -> str:
    lines = [f"{name} = {value}" for name, value in config.to_dict().items()]
    return "\n".join(lines) + "\n"


@dataclass
class IterationReport:
    iteration: int
    simulations: int
    games: int
    mean_game_length: float
    mean_return: float            # single-player: trailing-100 mean; else NaN
    policy_loss: float
    value_loss: float
    reward_loss: float
    l2_term: float
    total_loss: float
    seconds: float

    CSV_HEADER = (
        "iteration,simulations,games,mean_game_length,mean_return,"
        "policy_loss,value_loss,reward_loss,l2_term,total_loss,seconds"
    )

    def csv_row(self) -> str:
        return ",".join(
            [
                str(self.iteration),
                str(self.simulations),
                str(self.games),
                repr(float(self.mean_game_length)),
                repr(float(self.mean_return)),
                repr(float(self.policy_loss)),
                repr(float(self.value_loss)),
                repr(float(self.reward_loss)),
                repr(float(self.l2_term)),
                repr(float(self.total_loss)),
                repr(float(self.seconds)),
            ]
        )
