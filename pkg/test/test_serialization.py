import struct

import numpy as np
import pytest

from errors import (
    ModelChecksumError,
    ModelDimensionError,
    ModelFileError,
    ModelTruncatedError,
    ModelVersionError,
    NotAModelFileError,
)
from mlp.network import init_model
from mlp.serialization import FORMAT_VERSION, MAGIC, load_model, model_from_bytes, model_to_bytes, save_model
from trajectory.types import ChannelScaler
from utils.checksum import sha256_digest


@pytest.fixture
def scaled_model(rng):
    scaler = ChannelScaler(mean=rng.normal(size=6), std=rng.uniform(0.5, 2.0, 6))
    return init_model([900, 8, 6], activation="tanh", seed=11, scaler=scaler)


def test_round_trip_is_bit_exact(tmp_path, scaled_model, rng):
    """Saved and reloaded models produce identical forecasts."""
    path = save_model(scaled_model, tmp_path / "model.bin")
    loaded = load_model(path)
    assert loaded.layer_dims == scaled_model.layer_dims
    assert loaded.activation == scaled_model.activation
    for a, b in zip(loaded.weights + loaded.biases, scaled_model.weights + scaled_model.biases):
        np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(loaded.scaler.mean, scaled_model.scaler.mean)
    np.testing.assert_array_equal(loaded.scaler.std, scaled_model.scaler.std)
    assert model_to_bytes(loaded) == path.read_bytes()


def test_bad_magic(scaled_model):
    with pytest.raises(NotAModelFileError, match="not a model file"):
        model_from_bytes(b"dyad_id,trial_id,t\n" + model_to_bytes(scaled_model))
    with pytest.raises(NotAModelFileError):
        model_from_bytes(b"")


def test_truncated_file(scaled_model):
    data = model_to_bytes(scaled_model)
    with pytest.raises(ModelTruncatedError, match="truncated"):
        model_from_bytes(data[:-100])
    with pytest.raises(ModelTruncatedError):
        model_from_bytes(data[:len(MAGIC) + 3])


def test_version_mismatch(scaled_model):
    data = bytearray(model_to_bytes(scaled_model))
    struct.pack_into("<I", data, len(MAGIC), FORMAT_VERSION + 1)
    with pytest.raises(ModelVersionError) as info:
        model_from_bytes(bytes(data))
    assert info.value.exit_code == 6


def test_checksum_mismatch(scaled_model):
    data = bytearray(model_to_bytes(scaled_model))
    data[len(MAGIC) + 40] ^= 0x01
    with pytest.raises(ModelChecksumError, match="checksum"):
        model_from_bytes(bytes(data))


def _raw_file(layers, activation_tag=1):
    """A model file with arbitrary layer records and a correct checksum."""
    parts = [MAGIC, struct.pack("<IBI", FORMAT_VERSION, activation_tag, len(layers))]
    for w, b in layers:
        parts.append(struct.pack("<II", *w.shape))
        parts.append(w.astype("<f8").tobytes())
        parts.append(b.astype("<f8").tobytes())
    parts.append(np.zeros(6).astype("<f8").tobytes())
    parts.append(np.ones(6).astype("<f8").tobytes())
    body = b"".join(parts)
    return body + sha256_digest(body)


def test_dimension_inconsistency_with_valid_checksum():
    """Layers that do not chain are reported as a dimension problem, not corruption."""
    data = _raw_file([(np.zeros((3, 4)), np.zeros(3)), (np.zeros((6, 2)), np.zeros(6))])
    with pytest.raises(ModelDimensionError, match="dimension inconsistency"):
        model_from_bytes(data)


def test_hand_built_file_loads():
    data = _raw_file([(np.ones((2, 3)), np.zeros(2)), (np.ones((1, 2)), np.full(1, 0.5))], activation_tag=3)
    model = model_from_bytes(data)
    assert model.layer_dims == [3, 2, 1]
    assert model.activation.value == "identity"


def test_unknown_activation_tag():
    data = _raw_file([(np.ones((1, 1)), np.zeros(1))], activation_tag=9)
    with pytest.raises(ModelFileError, match="activation"):
        model_from_bytes(data)


def test_missing_file(tmp_path):
    with pytest.raises(ModelFileError, match="cannot read"):
        load_model(tmp_path / "absent.bin")
