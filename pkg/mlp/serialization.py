"""Versioned little-endian binary model files.

Layout::

    magic            8 bytes   b"INTMLP\\x00\\x01"
    version          uint32    FORMAT_VERSION
    activation       uint8     1 tanh, 2 relu, 3 identity
    layer count      uint32
    per layer        uint32 rows, uint32 cols,
                     rows*cols float64 weights (row-major, rows = outputs),
                     rows float64 biases
    scaler           6 float64 means, 6 float64 stds
    checksum         32 bytes  SHA-256 of every preceding byte
"""
import logging
import struct
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from errors import (
    ModelChecksumError,
    ModelDimensionError,
    ModelFileError,
    ModelTruncatedError,
    ModelVersionError,
    NotAModelFileError,
)
from mlp.network import Activation, MlpModel
from trajectory.types import N_CHANNELS, ChannelScaler
from utils.checksum import DIGEST_SIZE, sha256_digest

logger = logging.getLogger(__name__)

MAGIC = b"INTMLP\x00\x01"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<IBI")
_DIMS = struct.Struct("<II")
_F64 = np.dtype("<f8")

ACTIVATION_TAGS = {Activation.TANH: 1, Activation.RELU: 2, Activation.IDENTITY: 3}
_TAG_ACTIVATIONS = {tag: act for act, tag in ACTIVATION_TAGS.items()}


class _OutOfBytes(Exception):
    pass


class _Reader:
    def __init__(self, data: bytes, offset: int):
        self.data = data
        self.offset = offset

    def take(self, count: int) -> bytes:
        end = self.offset + count
        if end > len(self.data):
            raise _OutOfBytes()
        chunk = self.data[self.offset:end]
        self.offset = end
        return chunk

    def floats(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(count * _F64.itemsize), dtype=_F64).astype(np.float64)


def model_to_bytes(model: MlpModel) -> bytes:
    """Encode a model in the binary file layout, checksum included."""
    parts = [MAGIC, _HEADER.pack(FORMAT_VERSION, ACTIVATION_TAGS[model.activation], model.n_layers)]
    for w, b in zip(model.weights, model.biases):
        rows, cols = w.shape
        parts.append(_DIMS.pack(rows, cols))
        parts.append(np.ascontiguousarray(w, dtype=_F64).tobytes())
        parts.append(np.ascontiguousarray(b, dtype=_F64).tobytes())
    parts.append(np.ascontiguousarray(model.scaler.mean, dtype=_F64).tobytes())
    parts.append(np.ascontiguousarray(model.scaler.std, dtype=_F64).tobytes())
    body = b"".join(parts)
    return body + sha256_digest(body)


def save_model(model: MlpModel, path: Union[str, Path]) -> Path:
    """Write ``model`` to ``path``."""
    path = Path(path)
    path.write_bytes(model_to_bytes(model))
    logger.info("Saved %s model to %s", "x".join(str(d) for d in model.layer_dims), path)
    return path


def _parse_body(data: bytes, end: int):
    """Walk the layer records of ``data[:end]``; raises _OutOfBytes when they do not fit."""
    reader = _Reader(data[:end], len(MAGIC) + _HEADER.size)
    _, tag, n_layers = _HEADER.unpack_from(data, len(MAGIC))
    layers: List[Tuple[np.ndarray, np.ndarray]] = []
    for _ in range(n_layers):
        rows, cols = _DIMS.unpack(reader.take(_DIMS.size))
        if rows * cols * _F64.itemsize > end - reader.offset:
            raise _OutOfBytes()
        w = reader.floats(rows * cols).reshape(rows, cols)
        b = reader.floats(rows)
        layers.append((w, b))
    mean = reader.floats(N_CHANNELS)
    std = reader.floats(N_CHANNELS)
    return tag, layers, mean, std, reader.offset


def model_from_bytes(data: bytes) -> MlpModel:
    """Decode a model file; each failure mode raises its own ModelFileError subclass."""
    if len(data) < len(MAGIC) or data[:len(MAGIC)] != MAGIC:
        raise NotAModelFileError("not a model file")
    if len(data) < len(MAGIC) + _HEADER.size:
        raise ModelTruncatedError("truncated model file: header incomplete")
    version, _, _ = _HEADER.unpack_from(data, len(MAGIC))
    if version != FORMAT_VERSION:
        raise ModelVersionError(f"model file version {version} is not supported (expected {FORMAT_VERSION})")

    end = len(data) - DIGEST_SIZE
    intact = end >= len(MAGIC) + _HEADER.size and sha256_digest(data[:end]) == data[end:]
    if not intact:
        # An incomplete structure means the file was cut short; otherwise its bytes changed
        try:
            _parse_body(data, max(end, 0))
        except _OutOfBytes:
            raise ModelTruncatedError("truncated model file")
        raise ModelChecksumError("model file checksum mismatch")

    try:
        tag, layers, mean, std, consumed = _parse_body(data, end)
    except _OutOfBytes:
        raise ModelDimensionError("dimension inconsistency: declared matrix sizes exceed the file contents")
    if consumed != end:
        raise ModelDimensionError(f"dimension inconsistency: {end - consumed} unaccounted bytes")
    if not layers:
        raise ModelDimensionError("dimension inconsistency: model has no layers")
    for i in range(1, len(layers)):
        if layers[i][0].shape[1] != layers[i - 1][0].shape[0]:
            raise ModelDimensionError(
                f"dimension inconsistency: layer {i} expects {layers[i][0].shape[1]} inputs, "
                f"layer {i - 1} produces {layers[i - 1][0].shape[0]}"
            )
    if tag not in _TAG_ACTIVATIONS:
        raise ModelFileError(f"unknown activation tag {tag}")

    dims = [layers[0][0].shape[1]] + [w.shape[0] for w, _ in layers]
    try:
        return MlpModel(
            layer_dims=dims,
            weights=[w for w, _ in layers],
            biases=[b for _, b in layers],
            activation=_TAG_ACTIVATIONS[tag],
            scaler=ChannelScaler(mean=mean, std=std),
        )
    except ValueError as e:
        raise ModelFileError(f"invalid model parameters: {e}")


def load_model(path: Union[str, Path]) -> MlpModel:
    """Read and verify a model file."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise ModelFileError(f"cannot read model file {path}: {e}")
    model = model_from_bytes(data)
    logger.info("Loaded %s model from %s", "x".join(str(d) for d in model.layer_dims), path)
    return model
