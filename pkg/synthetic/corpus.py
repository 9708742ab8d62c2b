"""Multi-dyad synthetic corpus generation."""
import logging
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
import yaml

from definition.tasks import TaskFamily, task_plan
from errors import ConfigError, TrajectoryDataError
from models import CorpusConfig, FollowerImpedance
from synthetic.dyad import simulate_dyad
from synthetic.plan import MotionPlan
from trajectory.types import Trial
from utils.parallel import ordered_map

logger = logging.getLogger(__name__)


def load_corpus_config(path: Union[str, Path, None]) -> CorpusConfig:
    """Read a YAML corpus config; a missing path yields the default config."""
    if path is None:
        return CorpusConfig()
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text()) or {}
    except FileNotFoundError:
        raise ConfigError(f"corpus config not found: {path}")
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse corpus config {path}: {e}")
    if not isinstance(data, dict):
        raise ConfigError(f"corpus config {path} must be a mapping")
    return CorpusConfig.model_validate(data)


def _task_names(config: CorpusConfig) -> List[str]:
    names = config.tasks if config.tasks is not None else [f.value for f in TaskFamily]
    known = {f.value for f in TaskFamily} | set(config.custom_tasks)
    unknown = [n for n in names if n not in known]
    if unknown:
        raise ConfigError(f"unknown task(s): {', '.join(unknown)}")
    return list(names) + [n for n in config.custom_tasks if n not in names]


def _jitter(rng: np.random.Generator, amount: float) -> float:
    return float(rng.uniform(1.0 - amount, 1.0 + amount))


def dyad_follower(config: CorpusConfig, dyad_index: int) -> FollowerImpedance:
    """The follower impedance of one dyad, jittered deterministically from the corpus seed."""
    rng = np.random.default_rng([config.seed, dyad_index, 0])
    j = config.impedance_jitter
    return config.follower.scaled(mass=_jitter(rng, j), damping=_jitter(rng, j), stiffness=_jitter(rng, j))


def _plan_for(config: CorpusConfig, name: str, rng: np.random.Generator, dyad_scales: Tuple[float, float]) -> MotionPlan:
    if name in config.custom_tasks:
        return MotionPlan(config.custom_tasks[name])
    # Repetitions vary by half the dyad-level jitter
    ds = dyad_scales[0] * _jitter(rng, config.displacement_jitter / 2)
    ts = dyad_scales[1] * _jitter(rng, config.duration_jitter / 2)
    return MotionPlan(task_plan(TaskFamily(name), displacement_scale=ds, duration_scale=ts))


def make_corpus(config: CorpusConfig, threads: int = 1) -> List[Trial]:
    """Generate ``dyad_count x tasks x repetitions`` object trajectories."""
    names = _task_names(config)
    jobs = []
    for d in range(config.dyad_count):
        dyad_id = d + 1
        rng = np.random.default_rng([config.seed, d, 1])
        scales = (_jitter(rng, config.displacement_jitter), _jitter(rng, config.duration_jitter))
        follower = dyad_follower(config, d)
        for task_index, name in enumerate(names):
            for rep in range(config.repetitions):
                trial_id = task_index * config.repetitions + rep
                jobs.append((dyad_id, trial_id, name, scales, follower))

    def build(job) -> Trial:
        dyad_id, trial_id, name, scales, follower = job
        rng = np.random.default_rng([config.seed, dyad_id, trial_id, 2])
        plan = _plan_for(config, name, rng, scales)
        trial = simulate_dyad(
            plan,
            follower,
            rate_hz=config.sample_rate_hz,
            noise=config.noise,
            dyad_id=dyad_id,
            trial_id=trial_id,
        )
        if trial.n_samples < config.min_samples:
            raise TrajectoryDataError(
                f"trial '{name}' (dyad {dyad_id}, trial {trial_id}) has {trial.n_samples} samples; "
                f"at least {config.min_samples} are needed for one window"
            )
        return trial

    trials = ordered_map(build, jobs, threads=threads)
    logger.info("Generated %d trials for %d dyads", len(trials), config.dyad_count)
    return trials


def robot_plans(config: CorpusConfig, seed: int, count: Optional[int] = None) -> List[MotionPlan]:
    """Leader plans for robot-in-the-loop trials, jittered from ``seed`` instead of the corpus seed."""
    names = [n for n in _task_names(config) if n not in config.custom_tasks]
    count = len(names) if count is None else count
    plans = []
    for i in range(count):
        rng = np.random.default_rng([seed, i, 3])
        scales = (_jitter(rng, config.displacement_jitter), _jitter(rng, config.duration_jitter))
        plans.append(_plan_for(config, names[i % len(names)], rng, scales))
    return plans
