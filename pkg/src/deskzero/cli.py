"""Command-line interface.

Subcommands: train, allocate, match, elo-curve, returns, selfplay.
All emit CSV to stdout or --out.  Exit codes: 0 success, 2 config error,
3 infeasible schedule, 4 protocol error.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .envs import make_environment, write_records
from .errors import EXIT_CODES, DeskZeroError
from .evaluate import (
    average_return,
    elo_points_csv,
    evaluate_curve,
    match_csv,
    play_match,
    returns_csv,
)
from .players import NetworkEvaluator, make_agent
from .replay import trajectory_to_record
from .schedule import allocate, schedule_csv
from .train import parse_config_file, run_server, run_training, run_worker
from .train.selfplay import self_play_batch


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="ascii") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_train(args) -> int:
    config = parse_config_file(args.config)
    if args.run_dir:
        config.run_dir = args.run_dir
    if args.worker:
        host, _, port = args.worker.rpartition(":")
        run_worker(host or "127.0.0.1", int(port))
        return 0
    if args.serve is not None:
        run_server(config, port=args.serve)
        return 0
    result = run_training(config, quiet=args.quiet)
    print(f"run complete: {result.run_dir} ({len(result.reports)} iterations)")
    return 0


def _cmd_allocate(args) -> int:
    schedule = allocate(args.iterations, args.budget, args.min, args.max)
    _emit(schedule_csv(schedule), args.out)
    return 0


def _cmd_match(args) -> int:
    env = make_environment(args.env)
    agent_a = make_agent(args.agent_a, env, n_simulations=args.eval_sims)
    agent_b = make_agent(args.agent_b, env, n_simulations=args.eval_sims)
    rng = np.random.default_rng(args.seed)
    result = play_match(env, agent_a, agent_b, args.games, rng)
    _emit(match_csv(result), args.out)
    return 0


def _cmd_elo_curve(args) -> int:
    points = evaluate_curve(
        args.run_dir,
        args.baseline,
        every_k=args.every_k,
        games=args.games,
        eval_simulations=args.eval_sims,
        seed=args.seed,
    )
    _emit(elo_points_csv(points), args.out)
    return 0


def _cmd_returns(args) -> int:
    points = average_return(args.run_dir, window=args.window)
    _emit(returns_csv(points), args.out)
    return 0


def _cmd_selfplay(args) -> int:
    config = parse_config_file(args.config)
    env = make_environment(config.environment)
    if args.checkpoint:
        from .model import load_checkpoint, model_from_meta

        meta, params, _, _ = load_checkpoint(args.checkpoint)
        model = model_from_meta(meta)
    else:
        from .players import model_for_env

        model = model_for_env(env, config.algorithm, config.net_width, config.hidden_dim)
        params = model.init_parameters(np.random.default_rng(config.seed))
    evaluator = NetworkEvaluator(model, params, env)
    trajectories = self_play_batch(
        env, evaluator, config.algorithm, args.games, config.simulations,
        config, config.seed, iteration=0,
    )
    records = [trajectory_to_record(t) for t in trajectories]
    if args.out:
        write_records(args.out, records)
    else:
        from .envs import format_record

        for record in records:
            sys.stdout.write(format_record(record) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deskzero")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run a training session")
    p.add_argument("--config", required=True)
    p.add_argument("--run-dir", default=None)
    p.add_argument("--serve", type=int, default=None, metavar="PORT",
                   help="serve self-play work to remote workers")
    p.add_argument("--worker", default=None, metavar="HOST:PORT",
                   help="run as a self-play worker")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("allocate", help="print a progressive simulation schedule")
    p.add_argument("--iterations", type=int, required=True)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--min", type=int, required=True)
    p.add_argument("--max", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_allocate)

    p = sub.add_parser("match", help="head-to-head match between two agents")
    p.add_argument("--env", required=True)
    p.add_argument("--agent-a", required=True, help="checkpoint path, 'random', or 'oracle'")
    p.add_argument("--agent-b", required=True)
    p.add_argument("--games", type=int, default=200)
    p.add_argument("--eval-sims", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_match)

    p = sub.add_parser("elo-curve", help="rate a run's checkpoints against a baseline")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--baseline", required=True)
    p.add_argument("--every-k", type=int, default=1)
    p.add_argument("--games", type=int, default=200)
    p.add_argument("--eval-sims", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_elo_curve)

    p = sub.add_parser("returns", help="trailing average returns of a run")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--window", type=int, default=100)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_returns)

    p = sub.add_parser("selfplay", help="generate self-play records only")
    p.add_argument("--config", required=True)
    p.add_argument("--games", type=int, required=True)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_selfplay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DeskZeroError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for err_type, code in EXIT_CODES.items():
            if isinstance(exc, err_type):
                return code
        return 1


if __name__ == "__main__":
    sys.exit(main())
