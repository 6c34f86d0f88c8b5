"""Binary policy file codec.

Byte layout (all integers uint32 little-endian, all floats IEEE-754
binary64 little-endian):

    magic        8 bytes, b"MLPTORQ1"
    layer_count  uint32 (L)
    input_dim    uint32
    shapes       L x (rows uint32, cols uint32); cols of layer 0 equals
                 input_dim, cols of layer k equals rows of layer k-1
    offset       input_dim float64  (input normalization offset)
    scale        input_dim float64  (input normalization scale)
    layers       L x (weights row-major rows*cols float64,
                      bias rows float64)
"""

from __future__ import annotations

import struct

import numpy as np

from .controllers import MlpPolicy

MAGIC = b"MLPTORQ1"


class PolicyFileError(ValueError):
    """Malformed policy file."""


def save_policy(policy: MlpPolicy, path: str) -> None:
    parts = [MAGIC, struct.pack("<II", len(policy.weights), policy.input_dim)]
    for W in policy.weights:
        parts.append(struct.pack("<II", W.shape[0], W.shape[1]))
    parts.append(np.asarray(policy.offset, dtype="<f8").tobytes())
    parts.append(np.asarray(policy.scale, dtype="<f8").tobytes())
    for W, b in zip(policy.weights, policy.biases):
        parts.append(np.ascontiguousarray(W, dtype="<f8").tobytes())
        parts.append(np.asarray(b, dtype="<f8").tobytes())
    with open(path, "wb") as f:
        f.write(b"".join(parts))


def load_policy(path: str) -> MlpPolicy:
    with open(path, "rb") as f:
        data = f.read()
    if data[:8] != MAGIC:
        raise PolicyFileError("bad magic")
    pos = 8

    def take(n):
        nonlocal pos
        if pos + n > len(data):
            raise PolicyFileError("truncated policy file")
        out = data[pos:pos + n]
        pos += n
        return out

    layer_count, input_dim = struct.unpack("<II", take(8))
    if layer_count == 0:
        raise PolicyFileError("zero layers")
    shapes = [struct.unpack("<II", take(8)) for _ in range(layer_count)]
    expect = input_dim
    for k, (rows, cols) in enumerate(shapes):
        if cols != expect:
            raise PolicyFileError(f"layer {k}: cols {cols} != expected {expect}")
        expect = rows
    offset = np.frombuffer(take(8 * input_dim), dtype="<f8")
    scale = np.frombuffer(take(8 * input_dim), dtype="<f8")
    weights, biases = [], []
    for rows, cols in shapes:
        W = np.frombuffer(take(8 * rows * cols), dtype="<f8").reshape(rows, cols)
        b = np.frombuffer(take(8 * rows), dtype="<f8")
        weights.append(W)
        biases.append(b)
    if pos != len(data):
        raise PolicyFileError("trailing bytes in policy file")
    return MlpPolicy(weights, biases, offset, scale)
