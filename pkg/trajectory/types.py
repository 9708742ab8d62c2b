"""Domain types for sampled object motion."""
from typing import FrozenSet, Iterable, List, Optional

import numpy as np
from pydantic import BaseModel, field_validator, model_validator

from definition.channels import CHANNEL_NAMES

N_CHANNELS = len(CHANNEL_NAMES)
HISTORY_LEN = 150
MAX_FUTURE_LEN = 100
# Windows need one history plus at least one step of continuation
MIN_TRIAL_SAMPLES = HISTORY_LEN + 1


def _as_frozen_array(value, ndim: int) -> np.ndarray:
    array = np.array(value, dtype=np.float64)
    if array.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {array.shape}")
    array.setflags(write=False)
    return array


class TrajectorySample(BaseModel):
    """One sample of object velocity (m/s) and acceleration (m/s^2)."""

    vx: float
    vy: float
    vz: float
    ax: float
    ay: float
    az: float

    class Config:
        frozen = True
        allow_inf_nan = False

    def to_array(self) -> np.ndarray:
        return np.array([self.vx, self.vy, self.vz, self.ax, self.ay, self.az])

    @classmethod
    def from_array(cls, values) -> "TrajectorySample":
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (N_CHANNELS,):
            raise ValueError(f"a sample has {N_CHANNELS} channels, got shape {values.shape}")
        return cls(**dict(zip(CHANNEL_NAMES, values.tolist())))


class Trial(BaseModel):
    """A recording of one dyad performing one task.

    ``samples`` is an (N, 6) array in channel order vx, vy, vz, ax, ay, az.
    """

    dyad_id: int
    trial_id: int
    sample_rate_hz: float = 200.0
    samples: np.ndarray
    start_time: float = 0.0

    class Config:
        frozen = True
        arbitrary_types_allowed = True

    @field_validator("samples", mode="before")
    @classmethod
    def _check_samples(cls, value):
        array = _as_frozen_array(value, ndim=2)
        if array.shape[0] == 0:
            raise ValueError("a trial needs at least one sample")
        if array.shape[1] != N_CHANNELS:
            raise ValueError(f"samples need {N_CHANNELS} channels, got {array.shape[1]}")
        if not np.all(np.isfinite(array)):
            raise ValueError("samples contain non-finite values")
        return array

    @field_validator("sample_rate_hz")
    @classmethod
    def _check_rate(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("sample_rate_hz must be positive")
        return value

    @property
    def n_samples(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate_hz

    def times(self) -> np.ndarray:
        return self.start_time + np.arange(self.n_samples) / self.sample_rate_hz

    def sample(self, index: int) -> TrajectorySample:
        return TrajectorySample.from_array(self.samples[index])


class Window(BaseModel):
    """A 150-sample history plus its ground-truth continuation."""

    history: np.ndarray
    future: np.ndarray
    dyad_id: Optional[int] = None
    trial_id: Optional[int] = None
    start: int = 0

    class Config:
        frozen = True
        arbitrary_types_allowed = True

    @field_validator("history", "future", mode="before")
    @classmethod
    def _check_block(cls, value):
        array = _as_frozen_array(value, ndim=2)
        if array.shape[1] != N_CHANNELS:
            raise ValueError(f"window blocks need {N_CHANNELS} channels")
        return array

    @model_validator(mode="after")
    def _check_lengths(self):
        if self.history.shape[0] != HISTORY_LEN:
            raise ValueError(f"history must hold exactly {HISTORY_LEN} samples")
        if self.future.shape[0] > MAX_FUTURE_LEN:
            raise ValueError(f"future holds at most {MAX_FUTURE_LEN} samples")
        return self

    def supports_horizon(self, horizon: int) -> bool:
        return self.future.shape[0] >= horizon


class ChannelScaler(BaseModel):
    """Per-channel z-scoring statistics."""

    mean: np.ndarray
    std: np.ndarray

    class Config:
        frozen = True
        arbitrary_types_allowed = True

    @field_validator("mean", "std", mode="before")
    @classmethod
    def _check_vector(cls, value):
        array = _as_frozen_array(value, ndim=1)
        if array.shape != (N_CHANNELS,):
            raise ValueError(f"scaler vectors need {N_CHANNELS} entries")
        if not np.all(np.isfinite(array)):
            raise ValueError("scaler statistics must be finite")
        return array

    @field_validator("std")
    @classmethod
    def _check_std(cls, value: np.ndarray) -> np.ndarray:
        if np.any(value <= 0):
            raise ValueError("scaler std must be strictly positive")
        return value

    @classmethod
    def identity(cls) -> "ChannelScaler":
        return cls(mean=np.zeros(N_CHANNELS), std=np.ones(N_CHANNELS))

    def scale(self, values, channels: Optional[List[int]] = None) -> np.ndarray:
        """Z-score ``values`` whose last axis holds ``channels`` (all six by default)."""
        idx = slice(None) if channels is None else channels
        return (np.asarray(values, dtype=np.float64) - self.mean[idx]) / self.std[idx]

    def unscale(self, values, channels: Optional[List[int]] = None) -> np.ndarray:
        idx = slice(None) if channels is None else channels
        return np.asarray(values, dtype=np.float64) * self.std[idx] + self.mean[idx]


class DatasetSplit(BaseModel):
    """Dyad-level assignment to training and validation sets."""

    train_dyads: FrozenSet[int]
    validation_dyads: FrozenSet[int]

    class Config:
        frozen = True

    @model_validator(mode="after")
    def _check_disjoint(self):
        if self.train_dyads & self.validation_dyads:
            raise ValueError("train and validation dyads overlap")
        return self

    @property
    def all_dyads(self) -> FrozenSet[int]:
        return self.train_dyads | self.validation_dyads

    def train_trials(self, trials: Iterable[Trial]) -> List[Trial]:
        """Trials whose dyad is in the training set, in input order."""
        return [t for t in trials if t.dyad_id in self.train_dyads]

    def validation_trials(self, trials: Iterable[Trial]) -> List[Trial]:
        """Trials whose dyad is in the validation set, in input order."""
        return [t for t in trials if t.dyad_id in self.validation_dyads]
