"""Feed-forward network: initialization, forward pass and exact backpropagation."""
from enum import Enum
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, field_validator, model_validator

from definition.channels import CHANNEL_SETS
from errors import ConfigError, NumericalError
from trajectory.types import ChannelScaler

DEFAULT_HIDDEN = [100, 100, 100]


class Activation(Enum):
    TANH = "tanh"
    RELU = "relu"
    IDENTITY = "identity"


def _activate(kind: Activation, z: np.ndarray) -> np.ndarray:
    if kind is Activation.TANH:
        return np.tanh(z)
    if kind is Activation.RELU:
        return np.maximum(z, 0.0)
    return z


def _activation_grad(kind: Activation, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if kind is Activation.TANH:
        return 1.0 - a * a
    if kind is Activation.RELU:
        return (z > 0).astype(z.dtype)
    return np.ones_like(z)


class MlpModel(BaseModel):
    """Layer dimensions, parameters, hidden activation and the bundled channel scaler.

    ``weights[i]`` has shape ``(layer_dims[i + 1], layer_dims[i])``; the output
    layer is linear.
    """

    layer_dims: List[int]
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    activation: Activation = Activation.TANH
    scaler: ChannelScaler = ChannelScaler.identity()

    class Config:
        arbitrary_types_allowed = True

    @field_validator("weights", "biases", mode="before")
    @classmethod
    def _as_float_arrays(cls, value):
        return [np.array(v, dtype=np.float64) for v in value]

    @model_validator(mode="after")
    def _check_shapes(self):
        dims = self.layer_dims
        if len(dims) < 2 or any(d <= 0 for d in dims):
            raise ValueError(f"invalid layer dims {dims}")
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ValueError("need one weight matrix and bias vector per layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[i + 1], dims[i]) or b.shape != (dims[i + 1],):
                raise ValueError(f"layer {i} parameters do not match dims {dims[i]} -> {dims[i + 1]}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {i} parameters are not finite")
        return self

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def output_dim(self) -> int:
        return self.layer_dims[-1]

    @property
    def channel_indices(self) -> List[int]:
        """Channels the network consumes and predicts, inferred from the output width."""
        for indices in CHANNEL_SETS.values():
            if len(indices) == self.output_dim:
                return indices
        raise ConfigError(f"no channel set has {self.output_dim} channels")

    @property
    def channel_set(self) -> str:
        for name, indices in CHANNEL_SETS.items():
            if len(indices) == self.output_dim:
                return name
        raise ConfigError(f"no channel set has {self.output_dim} channels")

    @property
    def history_len(self) -> int:
        if self.input_dim % self.output_dim:
            raise ConfigError("input width is not a whole number of output-sized steps")
        return self.input_dim // self.output_dim

    def clone(self) -> "MlpModel":
        """Deep copy with independent arrays."""
        return MlpModel(
            layer_dims=list(self.layer_dims),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            activation=self.activation,
            scaler=self.scaler,
        )


class Gradients(NamedTuple):
    weights: List[np.ndarray]
    biases: List[np.ndarray]


class TrainBatch(BaseModel):
    """Scaled, flattened input windows and their scaled next-step targets."""

    inputs: np.ndarray
    targets: np.ndarray

    class Config:
        arbitrary_types_allowed = True

    @field_validator("inputs", "targets", mode="before")
    @classmethod
    def _as_matrix(cls, value):
        array = np.asarray(value, dtype=np.float64)
        if array.ndim == 1:
            array = array[None, :]
        if array.ndim != 2:
            raise ValueError("batch blocks must be 2-d")
        return array

    @model_validator(mode="after")
    def _check_rows(self):
        if self.inputs.shape[0] != self.targets.shape[0]:
            raise ValueError("inputs and targets need the same number of rows")
        if self.inputs.shape[0] == 0:
            raise ValueError("empty batch")
        return self

    @property
    def size(self) -> int:
        return int(self.inputs.shape[0])


def init_model(
    layer_dims: Sequence[int],
    activation: str = "tanh",
    seed: int = 0,
    scaler: Optional[ChannelScaler] = None,
) -> MlpModel:
    """Scaled-uniform weights, limit sqrt(6 / (fan_in + fan_out)), and zero biases."""
    dims = [int(d) for d in layer_dims]
    if len(dims) < 2:
        raise ConfigError("a network needs at least an input and an output layer")
    if any(d <= 0 for d in dims):
        raise ConfigError(f"layer sizes must be positive, got {dims}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(
        layer_dims=dims,
        weights=weights,
        biases=biases,
        activation=Activation(activation),
        scaler=scaler or ChannelScaler.identity(),
    )


def _check_input(model: MlpModel, inputs) -> Tuple[np.ndarray, bool]:
    x = np.asarray(inputs, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise ValueError(f"expected input length {model.input_dim}, got shape {np.shape(inputs)}")
    return x, single


def _forward_trace(model: MlpModel, x: np.ndarray):
    """Pre-activations and activations of every layer; activations[0] is the input."""
    pre, post = [], [x]
    last = model.n_layers - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = post[-1] @ w.T + b
        a = z if i == last else _activate(model.activation, z)
        if not np.all(np.isfinite(a)):
            raise NumericalError(f"numerical blow-up in layer {i}")
        pre.append(z)
        post.append(a)
    return pre, post


def forward(model: MlpModel, inputs) -> np.ndarray:
    """One-step prediction for a single input vector or a batch of rows."""
    x, single = _check_input(model, inputs)
    out = x
    last = model.n_layers - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        out = out @ w.T + b
        if i != last:
            out = _activate(model.activation, out)
    return out[0] if single else out


def loss_and_gradients(model: MlpModel, batch: TrainBatch, reduction: str = "sum") -> Tuple[float, Gradients]:
    """Squared-error loss over all rows and outputs, with exact gradients.

    ``reduction="sum"`` is the plain sum of squared errors; ``"mean"`` divides
    loss and gradients by rows * outputs.
    """
    x, _ = _check_input(model, batch.inputs)
    if batch.targets.shape[1] != model.output_dim:
        raise ValueError(f"expected target width {model.output_dim}, got {batch.targets.shape[1]}")
    pre, post = _forward_trace(model, x)
    residual = post[-1] - batch.targets
    loss = float(np.sum(residual * residual))
    norm = 1.0
    if reduction == "mean":
        norm = float(residual.size)
    elif reduction != "sum":
        raise ValueError(f"unknown reduction '{reduction}'")
    if not np.isfinite(loss):
        raise NumericalError("numerical blow-up in loss")

    delta = 2.0 * residual / norm
    grad_w: List[np.ndarray] = [None] * model.n_layers
    grad_b: List[np.ndarray] = [None] * model.n_layers
    for i in range(model.n_layers - 1, -1, -1):
        grad_w[i] = delta.T @ post[i]
        grad_b[i] = delta.sum(axis=0)
        if i:
            delta = (delta @ model.weights[i]) * _activation_grad(model.activation, pre[i - 1], post[i])
    return loss / norm, Gradients(weights=grad_w, biases=grad_b)
