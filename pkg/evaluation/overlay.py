"""Anchored forecasts over one trial, as plot-ready velocity series."""
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, model_validator

from definition.channels import CHANNEL_NAMES, VELOCITY_CHANNELS
from errors import ConfigError, TrajectoryDataError
from evaluation.harness import EVAL_NOISE_STREAM
from evaluation.predictors import Predictor
from models import NoiseSpec
from predictor.rollout import check_horizon
from synthetic.plan import add_noise
from trajectory.types import HISTORY_LEN, Trial

OVERLAY_COLUMNS = ["trial_id", "series", "segment", "t", "vx", "vy", "vz"]
ACTUAL_SEGMENT = -1


class ForecastSegment(BaseModel):
    start_time: float
    times: np.ndarray
    velocity: np.ndarray

    class Config:
        arbitrary_types_allowed = True


class OverlayTrace(BaseModel):
    trial_id: int
    horizon: int
    times: np.ndarray
    actual: np.ndarray
    segments: List[ForecastSegment]

    class Config:
        arbitrary_types_allowed = True

    @model_validator(mode="after")
    def _check_segments(self):
        for seg in self.segments:
            if seg.velocity.shape[0] != self.horizon:
                raise ValueError("each forecast segment must hold exactly `horizon` points")
        return self

    def to_frame(self) -> pd.DataFrame:
        """Actual series followed by every forecast segment."""
        velocity_names = [CHANNEL_NAMES[c] for c in VELOCITY_CHANNELS]
        frames = [self._series("actual", ACTUAL_SEGMENT, self.times, self.actual, velocity_names)]
        for i, seg in enumerate(self.segments):
            frames.append(self._series("forecast", i, seg.times, seg.velocity, velocity_names))
        return pd.concat(frames, ignore_index=True)[OVERLAY_COLUMNS]

    def _series(self, series: str, segment: int, times: np.ndarray, values: np.ndarray, names) -> pd.DataFrame:
        frame = pd.DataFrame(values, columns=names)
        frame.insert(0, "t", times)
        frame.insert(0, "segment", segment)
        frame.insert(0, "series", series)
        frame.insert(0, "trial_id", self.trial_id)
        return frame


def anchor_indices(n_samples: int, rate_hz: float, anchor_period_s: float, horizon: int) -> List[int]:
    """Sample indices at which forecasts start: one full history in, then every period."""
    if not anchor_period_s * rate_hz >= 1:
        raise ConfigError(f"invalid anchor period {anchor_period_s} s: shorter than one sample at {rate_hz} Hz")
    period = int(round(anchor_period_s * rate_hz))
    return list(range(HISTORY_LEN, n_samples - horizon + 1, period))


def overlay(
    predictor: Predictor,
    trial: Trial,
    anchor_period_s: float = 1.0,
    horizon: int = 50,
    noise: Optional[NoiseSpec] = None,
) -> OverlayTrace:
    """Forecast ``horizon`` steps every ``anchor_period_s``; the actual series stays clean."""
    check_horizon(horizon)
    anchors = anchor_indices(trial.n_samples, trial.sample_rate_hz, anchor_period_s, horizon)
    if not anchors:
        raise TrajectoryDataError(
            f"trial {trial.trial_id} has {trial.n_samples} samples; an anchored forecast needs {HISTORY_LEN + horizon}"
        )
    inputs = trial.samples
    if noise is not None:
        inputs = add_noise(trial.samples, noise, stream=(trial.dyad_id, trial.trial_id, EVAL_NOISE_STREAM))
    histories = np.stack([inputs[a - HISTORY_LEN:a] for a in anchors])
    forecasts = predictor.forecast(histories, horizon)

    times = trial.times()
    segments = [
        ForecastSegment(
            start_time=float(times[a]),
            times=times[a:a + horizon],
            velocity=forecasts[i][:, VELOCITY_CHANNELS],
        )
        for i, a in enumerate(anchors)
    ]
    return OverlayTrace(
        trial_id=trial.trial_id,
        horizon=horizon,
        times=times,
        actual=trial.samples[:, VELOCITY_CHANNELS],
        segments=segments,
    )


def save_overlays(traces: List[OverlayTrace], path: Union[str, Path]) -> Path:
    """Write overlay traces as one CSV."""
    path = Path(path)
    frame = pd.concat([t.to_frame() for t in traces], ignore_index=True)
    frame.to_csv(path, index=False, float_format="%.12g", lineterminator="\n")
    return path
