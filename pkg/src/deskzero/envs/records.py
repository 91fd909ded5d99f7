"""Line-oriented game-record text format.

One finished episode per line::

    env_id|result|move1,move2,...|pi_1;pi_2;...|v1,v2,...|r1,r2,...

- ``result``: terminal z for two-player games (first player's perspective),
  episode return for single-player games.
- ``moves``: comma-separated action indices, one per step.
- policy targets: one distribution per step over the full action space,
  entries comma-separated, steps separated by ``;``.
- root values / rewards: one float per step, comma-separated.

Field order is normative.  Floats are written with ``repr`` so parsing
reproduces the written values bit-exactly.  Parsers reject malformed lines.
"""
from __future__ import annotations

from dataclasses import dataclass

FIELD_COUNT = 6
POLICY_SUM_TOL = 1e-6


class RecordError(ValueError):
    """A record line violates the format."""


@dataclass
class GameRecord:
    env_id: str
    result: float
    moves: list[int]
    policies: list[list[float]]
    root_values: list[float]
    rewards: list[float]

    def __len__(self) -> int:
        return len(self.moves)


def _fmt(x: float) -> str:
    return repr(float(x))


def format_record(record: GameRecord) -> str:
    if not record.moves:
        raise RecordError("cannot format an empty record")
    return "|".join(
        [
            record.env_id,
            _fmt(record.result),
            ",".join(str(int(m)) for m in record.moves),
            ";".join(",".join(_fmt(p) for p in dist) for dist in record.policies),
            ",".join(_fmt(v) for v in record.root_values),
            ",".join(_fmt(r) for r in record.rewards),
        ]
    )


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",")]
    except ValueError as exc:
        raise RecordError(f"bad {what} field: {text!r}") from exc


def parse_record(line: str, action_space_size: int | None = None) -> GameRecord:
    """Parse one record line, validating structure and normalization."""
    line = line.rstrip("\n")
    if not line:
        raise RecordError("empty record line")
    fields = line.split("|")
    if len(fields) != FIELD_COUNT:
        raise RecordError(f"expected {FIELD_COUNT} fields, got {len(fields)}")
    env_id, result_s, moves_s, policies_s, values_s, rewards_s = fields
    if not env_id:
        raise RecordError("missing env id")
    try:
        result = float(result_s)
    except ValueError as exc:
        raise RecordError(f"bad result field: {result_s!r}") from exc
    try:
        moves = [int(tok) for tok in moves_s.split(",")]
    except ValueError as exc:
        raise RecordError(f"bad moves field: {moves_s!r}") from exc
    policies = [_parse_floats(part, "policy") for part in policies_s.split(";")]
    root_values = _parse_floats(values_s, "root values")
    rewards = _parse_floats(rewards_s, "rewards")
    n = len(moves)
    if not (len(policies) == len(root_values) == len(rewards) == n):
        raise RecordError("per-step field lengths disagree")
    for dist in policies:
        if action_space_size is not None and len(dist) != action_space_size:
            raise RecordError(
                f"policy length {len(dist)} != action space {action_space_size}"
            )
        if abs(sum(dist) - 1.0) > POLICY_SUM_TOL or min(dist) < 0:
            raise RecordError("policy target is not a distribution")
    if any(not 0 <= m for m in moves):
        raise RecordError("negative move index")
    if action_space_size is not None and any(m >= action_space_size for m in moves):
        raise RecordError("move index out of range")
    return GameRecord(env_id, result, moves, policies, root_values, rewards)


def write_records(path, records) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for record in records:
            fh.write(format_record(record))
            fh.write("\n")


def read_records(path, action_space_size: int | None = None) -> list[GameRecord]:
    out = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            if line.strip():
                out.append(parse_record(line, action_space_size))
    return out
