"""Line-delimited text protocol between the training server and workers.

One message per line: ``<version> <kind> <payload>``.  The header fields
are space-delimited; the payload is everything after the second space and
must not contain newlines.  Version and kind are validated on decode;
payloads above 1 MiB are rejected.  Structured payloads use compact JSON
with sorted keys so encoding is deterministic.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from ..errors import ProtocolError

PROTOCOL_VERSION = "v1"
MAX_PAYLOAD_BYTES = 1 << 20

MESSAGE_KINDS = (
    "start_selfplay",
    "stop_selfplay",
    "game_record",
    "start_optimize",
    "optimize_done",
    "load_model",
    "heartbeat",
)


@dataclass
class WorkerMessage:
    kind: str
    payload: str = ""
    version: str = PROTOCOL_VERSION


def encode_message(message: WorkerMessage) -> str:
    if message.version != PROTOCOL_VERSION:
        raise ProtocolError(f"cannot encode protocol version {message.version!r}")
    if message.kind not in MESSAGE_KINDS:
        raise ProtocolError(f"unknown message kind {message.kind!r}")
    if "\n" in message.payload or "\r" in message.payload:
        raise ProtocolError("payload must not contain newlines")
    if len(message.payload.encode("utf-8")) > MAX_PAYLOAD_BYTES:
        raise ProtocolError("payload exceeds 1 MiB")
    return f"{message.version} {message.kind} {message.payload}"


def decode_message(line: str) -> WorkerMessage:
    line = line.rstrip("\n")
    if len(line.encode("utf-8")) > MAX_PAYLOAD_BYTES + 64:
        raise ProtocolError("message line exceeds 1 MiB")
    parts = line.split(" ", 2)
    if len(parts) < 2 or not parts[0] or not parts[1]:
        raise ProtocolError(f"malformed message line: {line[:80]!r}")
    version, kind = parts[0], parts[1]
    payload = parts[2] if len(parts) == 3 else ""
    if version != PROTOCOL_VERSION:
        raise ProtocolError(f"unsupported protocol version {version!r}")
    if kind not in MESSAGE_KINDS:
        raise ProtocolError(f"unknown message kind {kind!r}")
    return WorkerMessage(kind=kind, payload=payload)


def json_message(kind: str, **payload) -> WorkerMessage:
    return WorkerMessage(kind=kind, payload=json.dumps(payload, sort_keys=True))


def payload_dict(message: WorkerMessage) -> dict:
    if not message.payload:
        return {}
    try:
        data = json.loads(message.payload)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"{message.kind}: payload is not JSON") from exc
    if not isinstance(data, dict):
        raise ProtocolError(f"{message.kind}: payload must be a JSON object")
    return data
