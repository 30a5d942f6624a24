"""Flat binary model files.

Layout (little-endian): magic "FMIM1", uint32 layer count, uint8 loss id
(0=mae, 1=xent), then per layer uint32 in_dim, uint32 out_dim, uint8
activation id (0=relu, 1=softmax); then per layer the row-major float32
weight matrix followed by the float32 bias vector.
"""

from __future__ import annotations

import struct

import numpy as np

from .nn import LOSS_MAE, LOSS_XENT, ModelParams

MAGIC = b"FMIM1"

_LOSS_IDS = {LOSS_MAE: 0, LOSS_XENT: 1}
_LOSS_NAMES = {v: k for k, v in _LOSS_IDS.items()}


class ModelFormatError(Exception):
    pass


def save_model(model: ModelParams, path, loss_kind: str = LOSS_MAE):
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IB", len(model.weights), _LOSS_IDS[loss_kind]))
        for w, act in zip(model.weights, model.activations):
            f.write(struct.pack("<IIB", w.shape[1], w.shape[0], act))
        for w, b in zip(model.weights, model.biases):
            f.write(np.ascontiguousarray(w, dtype="<f4").tobytes())
            f.write(np.ascontiguousarray(b, dtype="<f4").tobytes())


def load_model(path) -> tuple[ModelParams, str]:
    with open(path, "rb") as f:
        data = f.read()
    if data[:5] != MAGIC:
        raise ModelFormatError(f"bad magic in {path}: expected {MAGIC!r}, "
                               f"got {data[:5]!r}")
    off = 5
    n_layers, loss_id = struct.unpack_from("<IB", data, off)
    off += 5
    if loss_id not in _LOSS_NAMES:
        raise ModelFormatError(f"unknown loss id {loss_id} in {path}")
    dims, acts = [], []
    for _ in range(n_layers):
        in_d, out_d, act = struct.unpack_from("<IIB", data, off)
        off += 9
        dims.append((in_d, out_d))
        acts.append(act)
    weights, biases = [], []
    for in_d, out_d in dims:
        n = out_d * in_d
        w = np.frombuffer(data, dtype="<f4", count=n, offset=off)
        off += 4 * n
        b = np.frombuffer(data, dtype="<f4", count=out_d, offset=off)
        off += 4 * out_d
        weights.append(w.reshape(out_d, in_d).astype(np.float64))
        biases.append(b.astype(np.float64))
    if off != len(data):
        raise ModelFormatError(f"trailing bytes in {path}")
    return ModelParams(weights, biases, acts), _LOSS_NAMES[loss_id]
