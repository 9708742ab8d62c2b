"""Trajectory CSV reading and writing.

Format: header ``dyad_id,trial_id,t,vx,vy,vz,ax,ay,az``; one row per sample,
rows grouped by (dyad_id, trial_id), ``t`` in seconds and strictly increasing
within a trial.
"""
import logging
from pathlib import Path
from typing import Iterable, List, Literal, Union

import numpy as np
import pandas as pd

from definition.channels import CHANNEL_NAMES
from errors import TrajectoryDataError
from trajectory.types import Trial

logger = logging.getLogger(__name__)

KEY_COLUMNS = ["dyad_id", "trial_id"]
CSV_COLUMNS = KEY_COLUMNS + ["t"] + CHANNEL_NAMES
DEFAULT_RATE_HZ = 200.0
FLOAT_FORMAT = "%.12g"


def trials_to_frame(trials: Iterable[Trial]) -> pd.DataFrame:
    """One row per sample in the trajectory CSV column order."""
    frames = []
    for trial in trials:
        frame = pd.DataFrame(trial.samples, columns=CHANNEL_NAMES)
        frame.insert(0, "t", trial.times())
        frame.insert(0, "trial_id", trial.trial_id)
        frame.insert(0, "dyad_id", trial.dyad_id)
        frames.append(frame)
    if not frames:
        return pd.DataFrame(columns=CSV_COLUMNS)
    return pd.concat(frames, ignore_index=True)


def save_trials(trials: Iterable[Trial], path: Union[str, Path]) -> Path:
    """Write trials to ``path``; the output is byte-identical for identical trials."""
    path = Path(path)
    trials_to_frame(trials).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def _csv_row(position: int) -> int:
    # Header is line 1
    return position + 2


def load_trials(
    path: Union[str, Path],
    on_bad: Literal["error", "skip"] = "error",
) -> List[Trial]:
    """Read a trajectory CSV into trials, validating finiteness and time order.

    With ``on_bad="skip"`` trials holding non-finite values are dropped with a
    warning instead of failing the load.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError:
        raise TrajectoryDataError(f"trajectory file not found: {path}")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise TrajectoryDataError(f"cannot parse {path}: {e}")

    missing = [c for c in CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise TrajectoryDataError(f"{path}: missing columns {', '.join(missing)}")
    if frame.empty:
        raise TrajectoryDataError(f"{path}: no samples")

    values = frame[["t"] + CHANNEL_NAMES].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=np.float64)
    keys = frame[KEY_COLUMNS].apply(pd.to_numeric, errors="coerce")
    bad_keys = keys.isna().any(axis=1) | (keys % 1 != 0).any(axis=1)
    if bad_keys.any():
        row = int(np.flatnonzero(bad_keys.to_numpy())[0])
        raise TrajectoryDataError(f"{path}: row {_csv_row(row)} has a non-integer dyad_id/trial_id")
    keys = keys.astype(np.int64).to_numpy()

    # Group boundaries: a new group starts wherever the key changes
    changes = np.flatnonzero(np.any(keys[1:] != keys[:-1], axis=1)) + 1
    bounds = np.concatenate([[0], changes, [len(frame)]])

    trials: List[Trial] = []
    seen = set()
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        dyad_id, trial_id = (int(k) for k in keys[lo])
        if (dyad_id, trial_id) in seen:
            raise TrajectoryDataError(
                f"{path}: row {_csv_row(lo)} reopens trial ({dyad_id}, {trial_id}); rows must be grouped"
            )
        seen.add((dyad_id, trial_id))

        block = values[lo:hi]
        finite = np.all(np.isfinite(block), axis=1)
        if not finite.all():
            row = _csv_row(lo + int(np.flatnonzero(~finite)[0]))
            if on_bad == "skip":
                logger.warning("Skipping trial (%d, %d): non-finite value at row %d", dyad_id, trial_id, row)
                continue
            raise TrajectoryDataError(f"{path}: row {row} holds a non-finite value")

        t = block[:, 0]
        steps = np.diff(t)
        if np.any(steps <= 0):
            row = _csv_row(lo + int(np.flatnonzero(steps <= 0)[0]) + 1)
            raise TrajectoryDataError(f"{path}: row {row} breaks monotone time in trial ({dyad_id}, {trial_id})")

        rate = round(1.0 / float(np.median(steps)), 6) if steps.size else DEFAULT_RATE_HZ
        trials.append(
            Trial(
                dyad_id=dyad_id,
                trial_id=trial_id,
                sample_rate_hz=rate,
                samples=block[:, 1:],
                start_time=float(t[0]),
            )
        )

    logger.info("Loaded %d trials from %s", len(trials), path)
    return trials
