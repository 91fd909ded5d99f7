"""Distributed training: a server that farms self-play out to TCP workers.

The server runs the exact same iteration loop as local training; only game
generation is replaced.  Per iteration it broadcasts the snapshot
checkpoint path (storage is a shared directory) and assigns contiguous
chunks of game indices to connected workers.  Workers derive each game's
rng from (seed, iteration, index), so any assignment of indices to workers
reproduces the same set of records; with one worker the byte stream is
identical to local training.  Records are collected per index (duplicates
ignored, corrupt lines discarded), chunks from dropped workers are
reassigned, and the iteration completes when every index is present.
"""
from __future__ import annotations

import json
import socket
import threading
from dataclasses import dataclass, field
from queue import Empty, Queue

from ..envs import make_environment, parse_record
from ..envs.records import RecordError
from ..errors import ProtocolError
from ..model import load_checkpoint, params_hash
from ..players import NetworkEvaluator, model_from_meta
from ..replay import trajectory_from_record, trajectory_to_record
from ..envs.records import format_record
from .config import TrainConfig
from .orchestrator import RunResult, run_training
from .protocol import (
    WorkerMessage,
    decode_message,
    encode_message,
    json_message,
    payload_dict,
)

STALL_RETRY_SECONDS = 0.2


@dataclass
class _WorkerConn:
    sock: socket.socket
    inbox: Queue = field(default_factory=Queue)
    alive: bool = True
    assigned: tuple[int, int] | None = None  # [start, end) of game indices
    send_lock: threading.Lock = field(default_factory=threading.Lock)

    def send(self, message: WorkerMessage) -> None:
        data = (encode_message(message) + "\n").encode("utf-8")
        try:
            with self.send_lock:
                self.sock.sendall(data)
        except OSError:
            self.alive = False

    def close(self) -> None:
        self.alive = False
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


def _reader(conn: _WorkerConn) -> None:
    try:
        with conn.sock.makefile("r", encoding="utf-8", newline="\n") as stream:
            for line in stream:
                conn.inbox.put(line)
    except OSError:
        pass
    finally:
        conn.alive = False
        conn.inbox.put(None)  # EOF marker


class TrainingServer:
    def __init__(self, config: TrainConfig, port: int = 0, host: str = "127.0.0.1"):
        self.config = config.validate()
        self.env = make_environment(config.environment)
        self.listener = socket.create_server((host, port))
        self.port = self.listener.getsockname()[1]
        self.workers: list[_WorkerConn] = []
        self._workers_lock = threading.Lock()
        self._accepting = True
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()

    def _accept_loop(self) -> None:
        while self._accepting:
            try:
                sock, _ = self.listener.accept()
            except OSError:
                return
            conn = _WorkerConn(sock)
            threading.Thread(target=_reader, args=(conn,), daemon=True).start()
            with self._workers_lock:
                self.workers.append(conn)

    def _live_workers(self) -> list[_WorkerConn]:
        with self._workers_lock:
            self.workers = [w for w in self.workers if w.alive]
            return list(self.workers)

    def run(self) -> RunResult:
        try:
            return run_training(self.config, selfplay_fn=self._selfplay_remote)
        finally:
            self.shutdown()

    def shutdown(self) -> None:
        self._accepting = False
        try:
            self.listener.close()
        except OSError:
            pass
        for worker in self._live_workers():
            worker.send(WorkerMessage("stop_selfplay"))
            worker.close()

    def _selfplay_remote(self, iteration: int, n_simulations: int, snapshot_path):
        quota = self.config.games_per_iteration
        chunk = self.config.parallel_games
        unassigned = list(range(0, quota, chunk))  # chunk start indices
        records: dict[int, str] = {}
        loaded: set[int] = set()

        def ensure_loaded(worker: _WorkerConn) -> None:
            if id(worker) not in loaded:
                worker.send(json_message(
                    "load_model",
                    path=str(snapshot_path),
                    config=self.config.to_dict(),
                ))
                loaded.add(id(worker))

        while len(records) < quota:
            workers = self._live_workers()
            if not workers:
                print("server: no connected workers; waiting", flush=True)
                threading.Event().wait(STALL_RETRY_SECONDS)
                continue
            # Reassign chunks owned by dead workers, hand out new ones.
            with self._workers_lock:
                pass
            for worker in workers:
                if worker.assigned is None and unassigned:
                    start = unassigned.pop(0)
                    end = min(start + chunk, quota)
                    ensure_loaded(worker)
                    worker.assigned = (start, end)
                    worker.send(json_message(
                        "start_selfplay",
                        iteration=iteration,
                        simulations=n_simulations,
                        start=start,
                        count=end - start,
                        seed=self.config.seed,
                    ))
            progressed = False
            for worker in workers:
                while True:
                    try:
                        line = worker.inbox.get(timeout=0.01)
                    except Empty:
                        break
                    progressed = True
                    if line is None:
                        worker.alive = False
                        break
                    self._handle_line(worker, line, records, quota)
                if not worker.alive and worker.assigned is not None:
                    start, end = worker.assigned
                    if any(i not in records for i in range(start, end)):
                        unassigned.insert(0, start)
                    worker.assigned = None
            if not progressed:
                threading.Event().wait(0.005)
        for worker in self._live_workers():
            worker.send(WorkerMessage("stop_selfplay"))
        trajectories = []
        for index in range(quota):
            record = parse_record(records[index], self.env.action_space_size)
            trajectories.append(trajectory_from_record(self.env, record))
        return trajectories

    def _handle_line(self, worker: _WorkerConn, line: str,
                     records: dict[int, str], quota: int) -> None:
        try:
            message = decode_message(line)
        except ProtocolError as exc:
            print(f"server: dropping bad message: {exc}", flush=True)
            return
        if message.kind == "heartbeat":
            return
        if message.kind != "game_record":
            return
        try:
            data = payload_dict(message)
            index = int(data["index"])
            record_line = data["record"]
            parse_record(record_line, self.env.action_space_size)
        except (ProtocolError, RecordError, KeyError, ValueError) as exc:
            print(f"server: discarding corrupt record: {exc}", flush=True)
            return
        if 0 <= index < quota and index not in records:
            records[index] = record_line
        if worker.assigned is not None:
            start, end = worker.assigned
            if all(i in records for i in range(start, end)):
                worker.assigned = None


def run_server(config: TrainConfig, port: int = 0, host: str = "127.0.0.1",
               started_callback=None) -> RunResult:
    """Drive a full training run, sourcing self-play games from workers."""
    server = TrainingServer(config, port=port, host=host)
    if started_callback is not None:
        started_callback(server)
    print(f"server: listening on {host}:{server.port}", flush=True)
    return server.run()


class Worker:
    """Self-play worker: connects to a server and generates assigned games."""

    def __init__(self, host: str, port: int):
        self.sock = socket.create_connection((host, port))
        self.stream = self.sock.makefile("r", encoding="utf-8", newline="\n")
        self.send_lock = threading.Lock()
        self.config: TrainConfig | None = None
        self.env = None
        self.model = None
        self.params = None
        self.model_hash = ""

    def _send(self, message: WorkerMessage) -> None:
        with self.send_lock:
            self.sock.sendall((encode_message(message) + "\n").encode("utf-8"))

    def run(self) -> None:
        self._send(WorkerMessage("heartbeat"))
        try:
            for line in self.stream:
                message = decode_message(line)
                if message.kind == "load_model":
                    self._load_model(payload_dict(message))
                elif message.kind == "start_selfplay":
                    self._generate(payload_dict(message))
                elif message.kind == "heartbeat":
                    self._send(WorkerMessage("heartbeat"))
                elif message.kind == "stop_selfplay":
                    continue  # between-assignment stop; nothing in flight
        except (OSError, ProtocolError):
            pass
        finally:
            try:
                self.sock.close()
            except OSError:
                pass

    def _load_model(self, data: dict) -> None:
        self.config = TrainConfig.from_dict(data["config"])
        self.env = make_environment(self.config.environment)
        meta, params, _, _ = load_checkpoint(data["path"])
        self.model = model_from_meta(meta)
        self.params = params
        self.model_hash = params_hash(params)

    def _generate(self, data: dict) -> None:
        if self.config is None:
            raise ProtocolError("start_selfplay before load_model")
        from .selfplay import self_play_batch  # local import avoids cycles

        evaluator = NetworkEvaluator(self.model, self.params, self.env)
        trajectories = self_play_batch(
            self.env, evaluator, self.config.algorithm, data["count"],
            data["simulations"], self.config, data["seed"], data["iteration"],
            start_index=data["start"],
        )
        for offset, trajectory in enumerate(trajectories):
            line = format_record(trajectory_to_record(trajectory))
            self._send(json_message(
                "game_record",
                index=data["start"] + offset,
                model_hash=self.model_hash,
                record=line,
            ))


def run_worker(host: str, port: int) -> None:
    Worker(host, port).run()
