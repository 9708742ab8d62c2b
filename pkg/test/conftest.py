"""Test configuration and fixtures."""
import numpy as np
import pytest

from mlp.network import init_model
from models import CorpusConfig, CurriculumConfig
from synthetic.corpus import make_corpus
from trajectory.types import HISTORY_LEN, Trial


def random_trial(rng: np.random.Generator, n_samples: int, dyad_id: int = 1, trial_id: int = 0, std: float = 1.0) -> Trial:
    return Trial(
        dyad_id=dyad_id,
        trial_id=trial_id,
        samples=rng.normal(0.0, std, size=(n_samples, 6)),
    )


def smooth_trial(n_samples: int, dyad_id: int = 1, trial_id: int = 0, phase: float = 0.0) -> Trial:
    """Slow sinusoidal velocities with their exact accelerations."""
    t = np.arange(n_samples) / 200.0
    w = np.array([0.8, 1.1, 0.5])
    amp = np.array([0.5, 0.3, 0.1])
    vel = amp * np.sin(w * t[:, None] + phase)
    acc = amp * w * np.cos(w * t[:, None] + phase)
    return Trial(dyad_id=dyad_id, trial_id=trial_id, samples=np.hstack([vel, acc]))


@pytest.fixture
def rng():
    """Seeded generator so property-style loops are reproducible."""
    return np.random.default_rng(12345)


@pytest.fixture
def small_corpus_config():
    """Three dyads, two short tasks, one repetition."""
    return CorpusConfig(dyad_count=3, repetitions=1, tasks=["forward", "lateral_left"])


@pytest.fixture
def small_corpus(small_corpus_config):
    return make_corpus(small_corpus_config)


@pytest.fixture
def smooth_trials():
    """Four dyads of smooth, easily learnable motion."""
    return [smooth_trial(600, dyad_id=d, trial_id=0, phase=0.3 * d) for d in range(1, 5)]


@pytest.fixture
def tiny_model():
    """A 150-step, 6-channel network with a single small hidden layer."""
    return init_model([HISTORY_LEN * 6, 8, 6], activation="tanh", seed=3)


@pytest.fixture
def fast_curriculum():
    """Curriculum settings that finish in a handful of steps."""
    return CurriculumConfig(
        stages=[0, 1, 2],
        mse_threshold=1e9,
        patience=2,
        max_steps_per_stage=20,
        batch_size=8,
    )
