"""Scaling, windowing and dyad-level splitting of trajectory data."""
import logging
from typing import Iterable, List, Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from errors import ConfigError, TrajectoryDataError
from trajectory.types import (
    HISTORY_LEN,
    N_CHANNELS,
    ChannelScaler,
    DatasetSplit,
    TrajectorySample,
    Trial,
    Window,
)

logger = logging.getLogger(__name__)

# Channels whose spread falls below this pass through centered, unscaled
DEGENERATE_STD = 1e-9


def fit_scaler(trials: Iterable[Trial]) -> ChannelScaler:
    """Pool every sample of ``trials`` and compute per-channel mean and population std."""
    blocks = [t.samples for t in trials]
    if not blocks or sum(b.shape[0] for b in blocks) == 0:
        raise TrajectoryDataError("no samples")
    pooled = np.concatenate(blocks, axis=0)
    if pooled.shape[0] < 2:
        raise TrajectoryDataError("fit_scaler needs at least 2 samples")

    mean = pooled.mean(axis=0)
    std = np.sqrt(((pooled - mean) ** 2).mean(axis=0))
    degenerate = std < DEGENERATE_STD
    if np.any(degenerate):
        logger.info("Degenerate channels %s: std replaced by 1", np.flatnonzero(degenerate).tolist())
    std = np.where(degenerate, 1.0, std)
    return ChannelScaler(mean=mean, std=std)


def scale(sample: TrajectorySample, scaler: ChannelScaler) -> TrajectorySample:
    """Standardize one sample."""
    return TrajectorySample.from_array(scaler.scale(sample.to_array()))


def unscale(sample: TrajectorySample, scaler: ChannelScaler) -> TrajectorySample:
    """Undo ``scale`` for one sample."""
    return TrajectorySample.from_array(scaler.unscale(sample.to_array()))


def window_count(n_samples: int, history_len: int, future_len: int) -> int:
    """Windows a trial of ``n_samples`` yields at stride 1."""
    return max(0, n_samples - history_len - future_len + 1)


def make_windows(
    trial: Trial,
    history_len: int = HISTORY_LEN,
    future_len: int = 50,
) -> List[Window]:
    """Every stride-1 window of ``trial`` in chronological order; empty if the trial is too short."""
    if future_len < 0:
        raise ValueError("future_len must be non-negative")
    count = window_count(trial.n_samples, history_len, future_len)
    windows = []
    for start in range(count):
        split = start + history_len
        windows.append(
            Window(
                history=trial.samples[start:split],
                future=trial.samples[split:split + future_len],
                dyad_id=trial.dyad_id,
                trial_id=trial.trial_id,
                start=start,
            )
        )
    return windows


def window_blocks(samples: np.ndarray, length: int, stride: int = 1) -> np.ndarray:
    """Read-only (W, length, channels) view of every ``length``-sample block, ``stride`` apart."""
    if samples.shape[0] < length:
        return np.empty((0, length, samples.shape[1]))
    view = sliding_window_view(samples, length, axis=0)  # (W, C, length)
    return np.swapaxes(view, 1, 2)[::stride]


class WindowIndex:
    """Flat index of (trial, start) pairs for windows of a fixed span across many trials.

    Training draws random rows from it; evaluation walks it in order.
    """

    def __init__(self, arrays: Sequence[np.ndarray], span: int, stride: int = 1):
        if span < 1:
            raise ValueError("span must be positive")
        self.arrays = list(arrays)
        self.span = span
        trial_idx, starts = [], []
        for i, array in enumerate(self.arrays):
            count = window_count(array.shape[0], span, 0)
            if count:
                s = np.arange(0, count, stride)
                starts.append(s)
                trial_idx.append(np.full(s.shape[0], i))
        self.trial_idx = np.concatenate(trial_idx) if trial_idx else np.empty(0, dtype=int)
        self.starts = np.concatenate(starts) if starts else np.empty(0, dtype=int)

    def __len__(self) -> int:
        return int(self.starts.shape[0])

    def gather(self, rows: np.ndarray) -> np.ndarray:
        """(len(rows), span, channels) copies of the selected windows."""
        if len(rows) == 0:
            channels = self.arrays[0].shape[1] if self.arrays else N_CHANNELS
            return np.empty((0, self.span, channels))
        return np.stack(
            [self.arrays[self.trial_idx[r]][self.starts[r]:self.starts[r] + self.span] for r in rows]
        )

    def sample_rows(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw ``count`` window rows uniformly with replacement."""
        if len(self) == 0:
            raise TrajectoryDataError(f"no trial is long enough for a {self.span}-sample window")
        return rng.integers(0, len(self), size=count)


def split_by_dyad(trials: Iterable[Trial], train_fraction: float = 0.75, seed: int = 0) -> DatasetSplit:
    """Randomly assign whole dyads to training and validation sets."""
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError("train_fraction must lie strictly between 0 and 1")
    dyads = sorted({t.dyad_id for t in trials})
    if len(dyads) < 2:
        raise ConfigError(f"cannot split: need at least 2 dyads, got {len(dyads)}")

    n_train = int(np.floor(train_fraction * len(dyads) + 0.5))
    n_train = min(max(n_train, 1), len(dyads) - 1)
    order = np.random.default_rng(seed).permutation(len(dyads))
    shuffled = [dyads[i] for i in order]
    split = DatasetSplit(
        train_dyads=frozenset(shuffled[:n_train]),
        validation_dyads=frozenset(shuffled[n_train:]),
    )
    logger.info("Split %d dyads: %d train, %d validation", len(dyads), n_train, len(dyads) - n_train)
    return split


def select_scaler_trials(
    trials: Sequence[Trial],
    split: Optional[DatasetSplit],
    fit_on: str = "all",
) -> List[Trial]:
    """Trials the scaler is fitted on: every trial, or the training split only."""
    if fit_on == "all" or split is None:
        return list(trials)
    if fit_on == "train":
        return split.train_trials(trials)
    raise ConfigError(f"unknown scaler scope '{fit_on}'")
