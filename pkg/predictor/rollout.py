"""Iterated multi-step forecasting with a one-step network."""
import logging
from typing import List, Union

import numpy as np
from pydantic import BaseModel, field_validator, model_validator

from definition.channels import ACCELERATION_CHANNELS
from errors import NumericalError, TrajectoryDataError
from mlp.network import MlpModel, forward
from trajectory.types import HISTORY_LEN, MAX_FUTURE_LEN, N_CHANNELS, TrajectorySample, Window

logger = logging.getLogger(__name__)


class Forecast(BaseModel):
    """Predicted samples in physical units, one row per step ahead."""

    steps: np.ndarray
    horizon: int

    class Config:
        frozen = True
        arbitrary_types_allowed = True

    @field_validator("steps", mode="before")
    @classmethod
    def _check_steps(cls, value):
        array = np.array(value, dtype=np.float64)
        if array.ndim != 2 or array.shape[1] != N_CHANNELS:
            raise ValueError(f"forecast steps must be (horizon, {N_CHANNELS})")
        if not np.all(np.isfinite(array)):
            raise ValueError("forecast contains non-finite values")
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def _check_horizon(self):
        if not 1 <= self.horizon <= MAX_FUTURE_LEN:
            raise ValueError(f"horizon must lie in 1..{MAX_FUTURE_LEN}")
        if self.steps.shape[0] != self.horizon:
            raise ValueError("forecast must hold exactly `horizon` steps")
        return self

    def samples(self) -> List[TrajectorySample]:
        return [TrajectorySample.from_array(row) for row in self.steps]


def check_horizon(horizon: int) -> int:
    """Validate a forecast horizon."""
    if not 1 <= horizon <= MAX_FUTURE_LEN:
        raise ValueError(f"horizon must lie in 1..{MAX_FUTURE_LEN}, got {horizon}")
    return horizon


def rollout_scaled(model: MlpModel, windows: np.ndarray, steps: int) -> np.ndarray:
    """Feed predictions back ``steps`` times for a batch of scaled windows.

    ``windows`` is (B, history_len, C) in the model's channel subset; the
    result is (B, steps, C), still scaled. Raises NumericalError naming the
    first step (1-based) at which any row stops being finite.
    """
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim != 3:
        raise ValueError("windows must be (batch, history, channels)")
    batch, length, channels = windows.shape
    if length != model.history_len or channels != model.output_dim:
        raise ValueError(
            f"model expects windows of {model.history_len} x {model.output_dim}, got {length} x {channels}"
        )
    buffer = np.concatenate([windows, np.empty((batch, steps, channels))], axis=1)
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(steps):
            prediction = forward(model, buffer[:, step:step + length].reshape(batch, -1))
            if not np.all(np.isfinite(prediction)):
                raise NumericalError(f"rollout diverged at step {step + 1}")
            buffer[:, length + step] = prediction
    return buffer[:, length:]


def forecast_histories(model: MlpModel, histories: np.ndarray, horizon: int, rate_hz: float = 200.0) -> np.ndarray:
    """(B, horizon, 6) physical-unit forecasts for (B, 150, 6) physical-unit histories.

    Velocity-only networks report acceleration as the backward difference of
    predicted velocity.
    """
    histories = np.asarray(histories, dtype=np.float64)
    if histories.ndim != 3 or histories.shape[2] != N_CHANNELS:
        raise ValueError(f"histories must be (batch, length, {N_CHANNELS})")
    if histories.shape[1] < model.history_len:
        raise TrajectoryDataError(
            f"insufficient history: {histories.shape[1]} samples, need {model.history_len}"
        )
    histories = histories[:, -model.history_len:]
    channels = model.channel_indices
    scaled = model.scaler.scale(histories[..., channels], channels)
    predicted = model.scaler.unscale(rollout_scaled(model, scaled, horizon), channels)
    if len(channels) == N_CHANNELS:
        return predicted

    out = np.empty(predicted.shape[:2] + (N_CHANNELS,))
    out[..., channels] = predicted
    previous = np.concatenate([histories[:, -1:, channels], predicted[:, :-1]], axis=1)
    out[..., ACCELERATION_CHANNELS] = (predicted - previous) * rate_hz
    return out


def rollout(
    model: MlpModel,
    history: Union[np.ndarray, Window],
    horizon: int = 50,
    rate_hz: float = 200.0,
) -> Forecast:
    """Forecast ``horizon`` steps from exactly 150 samples of unscaled history."""
    check_horizon(horizon)
    if isinstance(history, Window):
        history = history.history
    history = np.asarray(history, dtype=np.float64)
    if history.ndim != 2 or history.shape[1] != N_CHANNELS:
        raise ValueError(f"history must be (length, {N_CHANNELS})")
    if history.shape[0] < HISTORY_LEN:
        raise TrajectoryDataError(f"insufficient history: expected {HISTORY_LEN} samples, got {history.shape[0]}")
    if history.shape[0] > HISTORY_LEN:
        raise ValueError(f"history must hold exactly {HISTORY_LEN} samples, got {history.shape[0]}")
    steps = forecast_histories(model, history[None], horizon, rate_hz)[0]
    return Forecast(steps=steps, horizon=horizon)
