"""MSE-vs-horizon evaluation over every window of a set of trials."""
import logging
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, field_validator, model_validator

from definition.channels import ACCELERATION_CHANNELS, CHANNEL_NAMES, VELOCITY_CHANNELS
from errors import ConfigError, TrajectoryDataError
from evaluation.predictors import Predictor
from models import NoiseSpec
from predictor.rollout import check_horizon
from synthetic.plan import add_noise
from trajectory.service import window_blocks
from trajectory.types import HISTORY_LEN, N_CHANNELS, Trial
from utils.parallel import ordered_map

logger = logging.getLogger(__name__)

REPORT_COLUMNS = [
    "predictor", "dataset", "step",
    "mse_vx", "mse_vy", "mse_vz", "mse_v_mean",
    "mse_ax", "mse_ay", "mse_az",
    "n_windows",
]
DEFAULT_CHUNK_SIZE = 2048
# Noise streams are keyed apart from corpus generation noise
EVAL_NOISE_STREAM = 4


class HorizonReport(BaseModel):
    """Per-step, per-channel MSE averaged over windows.

    Velocity columns are (m/s)^2 and acceleration columns (m/s^2)^2; the
    aggregate velocity MSE is the mean of the three velocity channels.
    """

    predictor_id: str
    dataset_id: str
    per_step_mse: np.ndarray
    n_windows: int

    class Config:
        frozen = True
        arbitrary_types_allowed = True

    @field_validator("per_step_mse", mode="before")
    @classmethod
    def _check_mse(cls, value):
        array = np.array(value, dtype=np.float64)
        if array.ndim != 2 or array.shape[1] != N_CHANNELS or array.shape[0] < 1:
            raise ValueError(f"per_step_mse must be (horizon, {N_CHANNELS})")
        if not np.all(np.isfinite(array)) or np.any(array < 0):
            raise ValueError("per_step_mse must be finite and non-negative")
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def _check_windows(self):
        if self.n_windows < 1:
            raise ValueError("a report needs at least one window")
        return self

    @property
    def horizon(self) -> int:
        return int(self.per_step_mse.shape[0])

    @property
    def velocity_mse(self) -> np.ndarray:
        return self.per_step_mse[:, VELOCITY_CHANNELS].mean(axis=1)

    @property
    def acceleration_mse(self) -> np.ndarray:
        return self.per_step_mse[:, ACCELERATION_CHANNELS].mean(axis=1)

    def velocity_at(self, step: int) -> float:
        """Aggregate velocity MSE ``step`` samples ahead (1-based)."""
        if not 1 <= step <= self.horizon:
            raise ValueError(f"step {step} outside 1..{self.horizon}")
        return float(self.velocity_mse[step - 1])

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.per_step_mse, columns=[f"mse_{c}" for c in CHANNEL_NAMES])
        frame.insert(3, "mse_v_mean", self.velocity_mse)
        frame.insert(0, "step", np.arange(1, self.horizon + 1))
        frame.insert(0, "dataset", self.dataset_id)
        frame.insert(0, "predictor", self.predictor_id)
        frame["n_windows"] = self.n_windows
        return frame[REPORT_COLUMNS]


def save_reports(reports: Sequence[HorizonReport], path: Union[str, Path]) -> Path:
    """Write reports as one long CSV, one row per predictor, dataset and step."""
    path = Path(path)
    frame = pd.concat([r.to_frame() for r in reports], ignore_index=True)
    frame.to_csv(path, index=False, float_format="%.12g", lineterminator="\n")
    return path


def load_reports(path: Union[str, Path]) -> List[HorizonReport]:
    """Read reports written by ``save_reports``."""
    path = Path(path)
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError:
        raise ConfigError(f"report file not found: {path}")
    missing = [c for c in REPORT_COLUMNS if c not in frame.columns]
    if missing:
        raise TrajectoryDataError(f"{path}: missing report column(s) {', '.join(missing)}")
    reports = []
    for (predictor_id, dataset_id), group in frame.groupby(["predictor", "dataset"], sort=False):
        group = group.sort_values("step")
        reports.append(
            HorizonReport(
                predictor_id=str(predictor_id),
                dataset_id=str(dataset_id),
                per_step_mse=group[[f"mse_{c}" for c in CHANNEL_NAMES]].to_numpy(),
                n_windows=int(group["n_windows"].iloc[0]),
            )
        )
    return reports


def _window_jobs(n_samples: int, span: int, stride: int, chunk_size: int):
    count = max(0, n_samples - span + 1)
    starts = np.arange(0, count, stride)
    return [starts[i:i + chunk_size] for i in range(0, starts.shape[0], chunk_size)]


def evaluate(
    predictor: Predictor,
    trials: Sequence[Trial],
    horizon: int = 100,
    noise: Optional[NoiseSpec] = None,
    dataset_id: str = "validation",
    window_stride: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    threads: int = 1,
) -> HorizonReport:
    """Score ``predictor`` on every window with a full ``horizon`` of ground truth.

    With ``noise``, histories come from a noise-corrupted copy of each trial
    while errors are measured against the clean future.
    """
    check_horizon(horizon)
    if window_stride < 1:
        raise ConfigError("window_stride must be at least 1")
    span = HISTORY_LEN + horizon

    jobs = []
    for trial in trials:
        inputs = trial.samples
        if noise is not None:
            inputs = add_noise(trial.samples, noise, stream=(trial.dyad_id, trial.trial_id, EVAL_NOISE_STREAM))
        for starts in _window_jobs(trial.n_samples, span, window_stride, chunk_size):
            jobs.append((inputs, trial.samples, starts))
    if not jobs:
        raise TrajectoryDataError(f"no usable windows: no trial has {span} samples for horizon {horizon}")

    def score(job) -> np.ndarray:
        inputs, clean, starts = job
        histories = np.ascontiguousarray(window_blocks(inputs, HISTORY_LEN)[starts])
        futures = window_blocks(clean[HISTORY_LEN:], horizon)[starts]
        errors = predictor.forecast(histories, horizon) - futures
        return np.sum(errors * errors, axis=0)

    totals = ordered_map(score, jobs, threads=threads)
    n_windows = sum(job[2].shape[0] for job in jobs)
    per_step = np.sum(totals, axis=0) / n_windows
    logger.info("Evaluated %s on %s: %d windows, horizon %d", predictor.name, dataset_id, n_windows, horizon)
    return HorizonReport(
        predictor_id=predictor.name,
        dataset_id=dataset_id,
        per_step_mse=per_step,
        n_windows=n_windows,
    )


class Comparison(NamedTuple):
    table: pd.DataFrame
    crossover: Dict[str, Optional[int]]


def _labels(reports: Sequence[HorizonReport]) -> List[str]:
    labels, seen = [], {}
    for report in reports:
        label = f"{report.predictor_id}:{report.dataset_id}"
        seen[label] = seen.get(label, 0) + 1
        labels.append(label if seen[label] == 1 else f"{label}#{seen[label]}")
    return labels


def _ratio(numerator: np.ndarray, denominator: np.ndarray) -> np.ndarray:
    out = np.ones_like(numerator)
    np.divide(numerator, denominator, out=out, where=denominator > 0)
    out[(denominator == 0) & (numerator > 0)] = np.inf
    return out


def compare(reports: Sequence[HorizonReport]) -> Comparison:
    """Side-by-side aggregate velocity MSE, each report's ratio to the first, and NN/polynomial crossovers.

    A crossover is the first step at which an ``nn`` report's MSE falls below
    a ``poly-*`` report's MSE on the same dataset.
    """
    if not reports:
        raise ConfigError("nothing to compare")
    horizons = {r.horizon for r in reports}
    if len(horizons) > 1:
        raise ConfigError(f"cannot compare reports with different horizons {sorted(horizons)}")
    datasets = {r.dataset_id for r in reports}
    if len(datasets) > 1:
        logger.warning("Comparing reports across datasets %s", sorted(datasets))

    labels = _labels(reports)
    reference = reports[0].velocity_mse
    table = pd.DataFrame({"step": np.arange(1, reports[0].horizon + 1)})
    for label, report in zip(labels, reports):
        table[label] = report.velocity_mse
    for label, report in zip(labels[1:], reports[1:]):
        table[f"ratio[{label}/{labels[0]}]"] = _ratio(report.velocity_mse, reference)

    crossover: Dict[str, Optional[int]] = {}
    for nn_label, nn in zip(labels, reports):
        if not nn.predictor_id.startswith("nn"):
            continue
        for poly_label, poly in zip(labels, reports):
            if not poly.predictor_id.startswith("poly") or poly.dataset_id != nn.dataset_id:
                continue
            below = np.flatnonzero(nn.velocity_mse < poly.velocity_mse)
            crossover[f"{nn_label} vs {poly_label}"] = int(below[0]) + 1 if below.size else None
    return Comparison(table=table, crossover=crossover)
