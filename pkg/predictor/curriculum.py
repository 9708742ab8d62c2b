"""Prediction-augmented curriculum training of the one-step network.

Stage k trains on windows whose last k entries are the network's own
rollout from the preceding real data; stage 0 is plain one-step supervised
training. Stages continue from the current weights.
"""
import logging
import time
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from definition.channels import CHANNEL_SETS
from errors import ConfigError, NumericalError, TrajectoryDataError
from mlp.network import DEFAULT_HIDDEN, MlpModel, TrainBatch, forward, init_model, loss_and_gradients
from mlp.optimizer import AdamState, optimizer_step
from models import CurriculumConfig, StageReport, TrainingReport
from predictor.rollout import rollout_scaled
from trajectory.service import WindowIndex
from trajectory.types import HISTORY_LEN, ChannelScaler, DatasetSplit, Trial

logger = logging.getLogger(__name__)

REPORT_SUFFIX = ".report.json"


class TrainingDataset:
    """Scaled training and validation trials restricted to one channel set."""

    def __init__(
        self,
        train_trials: Sequence[Trial],
        validation_trials: Sequence[Trial],
        scaler: ChannelScaler,
        channels: str = "all",
        split: Optional[DatasetSplit] = None,
        history_len: int = HISTORY_LEN,
    ):
        if channels not in CHANNEL_SETS:
            raise ConfigError(f"unknown channel set '{channels}'")
        if not train_trials:
            raise TrajectoryDataError("no training trials")
        if not validation_trials:
            raise TrajectoryDataError("no validation trials")
        self.channels = channels
        self.channel_indices = CHANNEL_SETS[channels]
        self.scaler = scaler
        self.split = split
        self.history_len = history_len
        self.train_arrays = [self._prepare(t) for t in train_trials]
        self.validation_arrays = [self._prepare(t) for t in validation_trials]

    @classmethod
    def from_split(cls, trials: Sequence[Trial], split: DatasetSplit, scaler: ChannelScaler, channels: str = "all"):
        """Scale the split's trials for training."""
        return cls(split.train_trials(trials), split.validation_trials(trials), scaler, channels=channels, split=split)

    def _prepare(self, trial: Trial) -> np.ndarray:
        idx = self.channel_indices
        return self.scaler.scale(trial.samples[:, idx], idx)

    def indexes(self, k: int) -> Tuple[WindowIndex, WindowIndex]:
        """Training and validation window indexes for a stage that rolls out ``k`` steps."""
        span = self.history_len + k + 1
        train = WindowIndex(self.train_arrays, span)
        validation = WindowIndex(self.validation_arrays, span)
        for name, index in (("training", train), ("validation", validation)):
            if len(index) == 0:
                raise TrajectoryDataError(
                    f"stage k={k} needs trials of at least {span} samples; none in the {name} set"
                )
        return train, validation


def make_batch(
    model: MlpModel,
    index: WindowIndex,
    rng: np.random.Generator,
    k: int,
    batch_size: int,
    mix_ratio: float = 0.5,
) -> TrainBatch:
    """Random windows; for k > 0 all but the first ``round(mix_ratio * batch_size)`` rows end in k predictions."""
    length = index.span - k - 1
    blocks = index.gather(index.sample_rows(rng, batch_size))
    inputs = blocks[:, k:k + length].copy()
    targets = blocks[:, length + k]
    if k > 0:
        n_real = int(round(mix_ratio * batch_size))
        if n_real < batch_size:
            predicted = rollout_scaled(model, blocks[n_real:, :length], k)
            inputs[n_real:, length - k:] = predicted
    return TrainBatch(inputs=inputs.reshape(batch_size, -1), targets=targets)


def batch_mse(model: MlpModel, batch: TrainBatch) -> float:
    """Mean squared error per element, without gradients."""
    residual = forward(model, batch.inputs) - batch.targets
    return float(np.mean(residual * residual))


def train_stage(
    model: MlpModel,
    dataset: TrainingDataset,
    k: int,
    config: CurriculumConfig,
    seed: int,
    threshold: Optional[float] = None,
) -> Tuple[MlpModel, StageReport]:
    """Train ``model`` in place at curriculum stage ``k`` until the stopping rule fires.

    The stage converges once the validation-batch MSE stays below ``threshold``
    for ``config.patience`` consecutive validation batches; otherwise it ends
    unconverged after ``config.max_steps_per_stage`` optimizer steps.
    """
    if k < 0:
        raise ConfigError("k must be non-negative")
    threshold = config.mse_threshold if threshold is None else threshold
    train_index, validation_index = dataset.indexes(k)
    train_rng = np.random.default_rng([seed, k, 0])
    validation_rng = np.random.default_rng([seed, k, 1])
    state = AdamState.for_model(model, learning_rate=config.learning_rate)

    started = time.perf_counter()
    streak = 0
    steps = 0
    train_mse = validation_mse = float("nan")
    converged = False
    while steps < config.max_steps_per_stage:
        batch = make_batch(model, train_index, train_rng, k, config.batch_size, config.mix_ratio)
        try:
            train_mse, gradients = loss_and_gradients(model, batch, reduction="mean")
        except NumericalError as e:
            raise NumericalError(f"stage k={k} aborted at step {steps + 1}: {e}")
        optimizer_step(model, gradients, state)
        steps += 1

        if steps % config.validation_every:
            continue
        validation_batch = make_batch(model, validation_index, validation_rng, k, config.batch_size, config.mix_ratio)
        validation_mse = batch_mse(model, validation_batch)
        if not np.isfinite(validation_mse):
            raise NumericalError(f"stage k={k} aborted at step {steps}: non-finite validation loss")
        streak = streak + 1 if validation_mse < threshold else 0
        if streak >= config.patience:
            converged = True
            break

    report = StageReport(
        k=k,
        steps=steps,
        final_train_mse=train_mse,
        final_validation_mse=validation_mse,
        threshold=threshold,
        converged=converged,
        wall_time_s=time.perf_counter() - started,
    )
    logger.info(
        "Stage k=%d %s after %d steps (train %.4g, validation %.4g, threshold %.4g)",
        k, "converged" if converged else "did not converge", steps, train_mse, validation_mse, threshold,
    )
    return model, report


class CurriculumResult(NamedTuple):
    model: MlpModel
    stage0_model: Optional[MlpModel]
    report: TrainingReport


def train_curriculum(
    dataset: TrainingDataset,
    config: CurriculumConfig,
    seed: int,
    hidden_dims: Sequence[int] = DEFAULT_HIDDEN,
    activation: str = "tanh",
    initial_model: Optional[MlpModel] = None,
    previous_stages: Sequence[StageReport] = (),
) -> CurriculumResult:
    """Run the stage schedule and keep the last converged model.

    Training stops at the first stage that fails to converge. A stage-0
    failure raises NumericalError("base training failed") unless the run
    resumes from ``initial_model``.
    """
    n_channels = len(dataset.channel_indices)
    if initial_model is None:
        dims = [dataset.history_len * n_channels, *hidden_dims, n_channels]
        model = init_model(dims, activation=activation, seed=seed, scaler=dataset.scaler)
    else:
        if initial_model.output_dim != n_channels or initial_model.history_len != dataset.history_len:
            raise ConfigError("resumed model does not match the dataset's channel set")
        model = initial_model.clone()

    stages: List[StageReport] = list(previous_stages)
    stage0_model: Optional[MlpModel] = None
    for i, k in enumerate(config.stage_ks()):
        candidate, report = train_stage(model.clone(), dataset, k, config, seed, threshold=config.threshold_for(i))
        stages.append(report)
        if not report.converged:
            if k == 0 and initial_model is None:
                raise NumericalError(
                    f"base training failed: stage 0 did not reach validation MSE {report.threshold:.4g} "
                    f"within {report.steps} steps"
                )
            logger.info("Curriculum stops at k=%d; keeping the k=%d model", k, _last_converged(stages))
            break
        model = candidate
        if k == 0:
            stage0_model = model.clone()

    split = dataset.split
    report = TrainingReport(
        channels=dataset.channels,
        layer_dims=model.layer_dims,
        activation=model.activation.value,
        seed=seed,
        train_dyads=sorted(split.train_dyads) if split else [],
        validation_dyads=sorted(split.validation_dyads) if split else [],
        stages=stages,
    )
    return CurriculumResult(model=model, stage0_model=stage0_model, report=report)


def _last_converged(stages: Sequence[StageReport]) -> Optional[int]:
    converged = [s.k for s in stages if s.converged]
    return converged[-1] if converged else None


def resume_config(config: CurriculumConfig, report: TrainingReport) -> Tuple[CurriculumConfig, List[StageReport]]:
    """Schedule that continues after the last converged stage of ``report``."""
    last = report.last_converged_k
    if last is None:
        raise ConfigError("training report has no converged stage to resume from")
    kept = [s for s in report.stages if s.k <= last and s.converged]
    updated = config.model_copy(update={"start_k": last + 1, "stage_offset": config.stage_offset + len(kept)})
    return updated, kept


def report_path_for(model_path: Union[str, Path]) -> Path:
    """Training report path next to a model file."""
    model_path = Path(model_path)
    return model_path.with_name(model_path.name + REPORT_SUFFIX)


def save_report(report: TrainingReport, path: Union[str, Path]) -> Path:
    """Write the training report as JSON."""
    path = Path(path)
    path.write_text(report.model_dump_json(indent=2) + "\n")
    return path


def load_report(path: Union[str, Path]) -> TrainingReport:
    """Read a training report; a missing file is a configuration error."""
    path = Path(path)
    try:
        return TrainingReport.model_validate_json(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"training report not found: {path}")
