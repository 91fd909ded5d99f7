"""Versioned checkpoint container.

Layout: one magic line, one JSON header line (model metadata, layout
descriptor, iteration, seed), then the raw float64 bytes of theta followed
by the momentum buffer.  Writing the same parameters twice produces
byte-identical files, which the distributed-equivalence checks rely on.
"""
from __future__ import annotations

import hashlib
import json

import numpy as np

from ..errors import ConfigError
from .parameters import ParameterLayout, Parameters

MAGIC = b"DZCKPT1\n"


def save_checkpoint(path, meta: dict, params: Parameters, iteration: int, seed: int) -> None:
    header = {
        "meta": meta,
        "layout": params.layout.describe(),
        "size": params.layout.size,
        "iteration": iteration,
        "seed": seed,
    }
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode("ascii"))
        fh.write(b"\n")
        fh.write(params.theta.tobytes())
        fh.write(params.momentum.tobytes())


def load_checkpoint(path):
    """Returns (meta, params, iteration, seed)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ConfigError(f"{path}: not a checkpoint file")
        header = json.loads(fh.readline().decode("ascii"))
        layout = ParameterLayout.from_description(header["layout"])
        if layout.size != header["size"]:
            raise ConfigError(f"{path}: corrupt layout descriptor")
        blob = fh.read()
    expected = 2 * layout.size * 8
    if len(blob) != expected:
        raise ConfigError(f"{path}: expected {expected} payload bytes, got {len(blob)}")
    theta = np.frombuffer(blob[: layout.size * 8], dtype=np.float64).copy()
    momentum = np.frombuffer(blob[layout.size * 8:], dtype=np.float64).copy()
    params = Parameters(layout, theta, momentum)
    return header["meta"], params, header["iteration"], header["seed"]


def require_layout(expected: ParameterLayout, actual: ParameterLayout, origin: str) -> None:
    if expected != actual:
        raise ConfigError(f"{origin}: checkpoint layout does not match the model")


def params_hash(params: Parameters) -> str:
    """Short content hash of theta; echoed by workers to pin the snapshot."""
    return hashlib.sha256(params.theta.tobytes()).hexdigest()[:16]
