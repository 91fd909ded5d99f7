"""The iteration-gated training loop.

Each iteration alternates two exclusive phases: generate this iteration's
self-play games with the parameters snapshotted at the end of the previous
iteration, then run the configured number of optimization steps over
batches sampled from the replay buffer.  Games land in per-iteration
record files, networks in per-iteration checkpoints, and a CSV report row
summarizes every iteration.

Run directory layout::

    <run_dir>/checkpoints/iter_0000.ckpt ...   (0000 = pre-training snapshot)
    <run_dir>/records/iter_0001.txt ...
    <run_dir>/reports.csv
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..envs import make_environment, write_records
from ..errors import ContractViolation
from ..model import (
    alphazero_loss_and_grad,
    muzero_loss_and_grad,
    save_checkpoint,
    sgd_step,
)
from ..players import NetworkEvaluator, family_of, model_for_env
from ..replay import ReplayBuffer, trajectory_to_record
from .config import IterationReport, TrainConfig
from .selfplay import self_play_batch

RETURN_WINDOW = 100


@dataclass
class RunResult:
    run_dir: Path
    reports: list[IterationReport]
    checkpoint_paths: list[Path]
    final_params: object
    record_paths: list[Path]


def checkpoint_path(run_dir, iteration: int) -> Path:
    return Path(run_dir) / "checkpoints" / f"iter_{iteration:04d}.ckpt"


def records_path(run_dir, iteration: int) -> Path:
    return Path(run_dir) / "records" / f"iter_{iteration:04d}.txt"


def optimize_rng(seed: int, iteration: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(iteration, 1 << 20))
    )


def make_buffer(config: TrainConfig, env) -> ReplayBuffer:
    return ReplayBuffer(
        config.buffer_capacity,
        unit="games" if env.is_two_player else "frames",
        two_player=env.is_two_player,
        n_steps=config.bootstrap_steps,
        discount=config.discount,
        prioritized=not env.is_two_player,
        action_space_size=env.action_space_size,
    )


def optimize(model, params, buffer: ReplayBuffer, steps: int, config: TrainConfig,
             rng: np.random.Generator) -> dict:
    """Run SGD steps over sampled batches; returns mean loss components."""
    if steps == 0:
        return {"policy": 0.0, "value": 0.0, "reward": 0.0, "l2": 0.0, "total": 0.0}
    if len(buffer) == 0:
        raise ContractViolation("cannot optimize from an empty buffer")
    family = family_of(config.algorithm)
    sums = np.zeros(5)
    for _ in range(steps):
        if family == "alphazero":
            targets = buffer.sample_batch(
                config.batch_size, config.priority_alpha, config.priority_beta, rng,
                k_steps=0,
            )
            obs = np.stack([t.observation for t in targets])
            pi = np.stack([t.policies[0] for t in targets])
            z = np.array([t.values[0] for t in targets])
            weights = np.array([t.weight for t in targets])
            breakdown, grad = alphazero_loss_and_grad(
                model, params, obs, pi, z, c=0.0, weights=weights
            )
        else:
            targets = buffer.sample_batch(
                config.batch_size, config.priority_alpha, config.priority_beta, rng,
                k_steps=config.unroll_steps,
            )
            obs = np.stack([t.observation for t in targets])
            actions = np.stack([t.actions for t in targets])
            pi = np.stack([t.policies for t in targets])
            z = np.stack([t.values for t in targets])
            u = np.stack([t.rewards for t in targets])
            weights = np.array([t.weight for t in targets])
            breakdown, grad = muzero_loss_and_grad(
                model, params, obs, actions, pi, z, u, c=0.0, weights=weights
            )
        # L2 shows up as decoupled weight decay in the update; the reported
        # l2 term logs the current c * ||theta||^2 for visibility.
        sgd_step(params, grad, config.learning_rate, config.momentum, config.weight_decay)
        l2_term = config.weight_decay * float(params.theta @ params.theta)
        sums += (
            breakdown.policy_loss, breakdown.value_loss, breakdown.reward_loss,
            l2_term, breakdown.total + l2_term,
        )
    means = sums / steps
    return {
        "policy": means[0], "value": means[1], "reward": means[2],
        "l2": means[3], "total": means[4],
    }


def run_training(config: TrainConfig, *, selfplay_fn=None, quiet: bool = True) -> RunResult:
    """Train per the config; returns reports, checkpoints, and final params.

    ``selfplay_fn(iteration, n_simulations, snapshot_ckpt_path)`` overrides
    local game generation (the distributed server plugs its worker pool in
    here); it must return the iteration's trajectories in game-index order.
    """
    config.validate()
    env = make_environment(config.environment)
    model = model_for_env(
        env, config.algorithm, width=config.net_width, hidden_dim=config.hidden_dim
    )
    init_rng = np.random.default_rng(np.random.SeedSequence(entropy=config.seed))
    params = model.init_parameters(init_rng)
    buffer = make_buffer(config, env)
    schedule = config.simulation_schedule()

    run_dir = Path(config.run_dir)
    (run_dir / "checkpoints").mkdir(parents=True, exist_ok=True)
    (run_dir / "records").mkdir(parents=True, exist_ok=True)
    meta = dict(model.meta())
    meta["algorithm"] = config.algorithm
    meta["env_id"] = env.env_id

    def save(iteration: int) -> Path:
        path = checkpoint_path(run_dir, iteration)
        save_checkpoint(path, meta, params, iteration, config.seed)
        return path

    reports: list[IterationReport] = []
    checkpoints = [save(0)]
    record_paths: list[Path] = []
    episode_returns: list[float] = []
    report_file = run_dir / "reports.csv"
    with open(report_file, "w", encoding="ascii") as reports_fh:
        reports_fh.write(IterationReport.CSV_HEADER + "\n")
        for iteration in range(1, config.iterations + 1):
            started = time.monotonic()
            n_simulations = schedule[iteration - 1]
            snapshot = params.copy()
            if selfplay_fn is not None:
                trajectories = selfplay_fn(iteration, n_simulations, checkpoints[-1])
            else:
                evaluator = NetworkEvaluator(model, snapshot, env)
                trajectories = self_play_batch(
                    env, evaluator, config.algorithm, config.games_per_iteration,
                    n_simulations, config, config.seed, iteration,
                )
            rec_path = records_path(run_dir, iteration)
            write_records(rec_path, [trajectory_to_record(t) for t in trajectories])
            record_paths.append(rec_path)
            for trajectory in trajectories:
                buffer.push(trajectory)
                if not env.is_two_player:
                    episode_returns.append(float(trajectory.result))
            losses = optimize(
                model, params, buffer, config.optimize_steps, config,
                optimize_rng(config.seed, iteration),
            )
            checkpoints.append(save(iteration))
            mean_return = (
                float(np.mean(episode_returns[-RETURN_WINDOW:]))
                if episode_returns else float("nan")
            )
            report = IterationReport(
                iteration=iteration,
                simulations=n_simulations,
                games=len(trajectories),
                mean_game_length=float(np.mean([len(t) for t in trajectories])),
                mean_return=mean_return,
                policy_loss=losses["policy"],
                value_loss=losses["value"],
                reward_loss=losses["reward"],
                l2_term=losses["l2"],
                total_loss=losses["total"],
                seconds=time.monotonic() - started,
            )
            reports.append(report)
            reports_fh.write(report.csv_row() + "\n")
            reports_fh.flush()
            if not quiet:
                print(
                    f"iter {iteration:3d} sims {n_simulations:4d} "
                    f"games {report.games} loss {report.total_loss:.4f}"
                )
    # Thin out intermediate checkpoints per the evaluation cadence.
    if config.checkpoint_every > 1:
        for i in range(1, config.iterations):
            if i % config.checkpoint_every != 0:
                path = checkpoint_path(run_dir, i)
                path.unlink(missing_ok=True)
        checkpoints = [p for p in checkpoints if p.exists()]
    return RunResult(run_dir, reports, checkpoints, params, record_paths)
