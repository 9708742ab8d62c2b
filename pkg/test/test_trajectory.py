import numpy as np
import pytest
from pydantic import ValidationError

from conftest import random_trial
from errors import ConfigError, TrajectoryDataError
from trajectory.service import (
    WindowIndex,
    fit_scaler,
    make_windows,
    scale,
    select_scaler_trials,
    split_by_dyad,
    unscale,
    window_count,
)
from trajectory.types import ChannelScaler, DatasetSplit, TrajectorySample, Trial, Window


def _trial(samples, dyad_id=1, trial_id=0):
    return Trial(dyad_id=dyad_id, trial_id=trial_id, samples=np.asarray(samples, dtype=float))


def test_sample_rejects_non_finite():
    """A sample with a NaN channel is invalid."""
    with pytest.raises(ValidationError):
        TrajectorySample(vx=float("nan"), vy=0, vz=0, ax=0, ay=0, az=0)


def test_trial_validates_samples():
    """Trials need a non-empty, finite (N, 6) block and a positive rate."""
    with pytest.raises(ValidationError):
        _trial(np.zeros((0, 6)))
    with pytest.raises(ValidationError):
        _trial(np.zeros((5, 5)))
    with pytest.raises(ValidationError):
        _trial([[0, 0, 0, 0, 0, np.inf]])
    with pytest.raises(ValidationError):
        Trial(dyad_id=1, trial_id=0, sample_rate_hz=0, samples=np.zeros((3, 6)))


def test_trial_samples_are_read_only():
    """Trials are immutable once built."""
    trial = _trial(np.zeros((3, 6)))
    with pytest.raises(ValueError):
        trial.samples[0, 0] = 1.0


def test_window_history_must_be_150():
    """A window holds exactly 150 history samples and at most 100 future samples."""
    with pytest.raises(ValidationError):
        Window(history=np.zeros((149, 6)), future=np.zeros((10, 6)))
    with pytest.raises(ValidationError):
        Window(history=np.zeros((150, 6)), future=np.zeros((101, 6)))
    window = Window(history=np.zeros((150, 6)), future=np.zeros((50, 6)))
    assert window.supports_horizon(50)
    assert not window.supports_horizon(51)


def test_fit_scaler_symmetric_pair():
    """vx in {-1, 1} gives mean 0 and population std 1."""
    samples = np.zeros((2, 6))
    samples[:, 0] = [-1.0, 1.0]
    scaler = fit_scaler([_trial(samples)])
    assert scaler.mean[0] == 0.0
    assert scaler.std[0] == 1.0


def test_fit_scaler_degenerate_channel():
    """A constant channel keeps its mean and gets std 1."""
    samples = np.zeros((10, 6))
    samples[:, 0] = 3.0
    scaler = fit_scaler([_trial(samples)])
    assert scaler.mean[0] == 3.0
    assert np.all(scaler.std == 1.0)


def test_fit_scaler_matches_two_pass_oracle(rng):
    """Pooled statistics over several trials equal a brute-force two-pass computation."""
    trials = [
        Trial(dyad_id=d, trial_id=0, samples=rng.normal([1, -2, 0.5, 3, 0, -1], [0.5, 2, 1, 4, 0.1, 3], size=(n, 6)))
        for d, n in [(1, 300), (2, 450), (3, 250)]
    ]
    scaler = fit_scaler(trials)
    pooled = np.concatenate([t.samples for t in trials])
    n = pooled.shape[0]
    mean = [sum(pooled[:, c]) / n for c in range(6)]
    std = [np.sqrt(sum((pooled[:, c] - mean[c]) ** 2) / n) for c in range(6)]
    np.testing.assert_allclose(scaler.mean, mean, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(scaler.std, std, rtol=1e-12)


def test_fit_scaler_errors():
    """No trials means no samples; a single sample is not enough."""
    with pytest.raises(TrajectoryDataError, match="no samples"):
        fit_scaler([])
    with pytest.raises(TrajectoryDataError):
        fit_scaler([_trial(np.zeros((1, 6)))])


def test_scale_examples():
    """(10 - 2) / 4 = 2, and the mean maps to the zero sample."""
    mean = np.array([2.0, 0, 0, 0, 0, 0])
    std = np.array([4.0, 1, 1, 1, 1, 1])
    scaler = ChannelScaler(mean=mean, std=std)
    assert scale(TrajectorySample(vx=10, vy=0, vz=0, ax=0, ay=0, az=0), scaler).vx == 2.0
    zero = scale(TrajectorySample.from_array(mean), scaler)
    assert zero.to_array().tolist() == [0.0] * 6


def test_scale_round_trip(rng):
    """unscale(scale(x)) returns x within 1e-12 for random scalers and samples."""
    for _ in range(100):
        scaler = ChannelScaler(mean=rng.normal(0, 5, 6), std=rng.uniform(0.01, 10, 6))
        sample = TrajectorySample.from_array(rng.normal(0, 20, 6))
        back = unscale(scale(sample, scaler), scaler)
        np.testing.assert_allclose(back.to_array(), sample.to_array(), rtol=0, atol=1e-12)


def test_scaler_rejects_non_positive_std():
    with pytest.raises(ValidationError):
        ChannelScaler(mean=np.zeros(6), std=np.array([1, 1, 0, 1, 1, 1.0]))


@pytest.mark.parametrize("n, expected", [(250, 51), (200, 1), (199, 0)])
def test_make_windows_counts(n, expected):
    """Window count is N - 150 - future_len + 1, never negative."""
    windows = make_windows(_trial(np.zeros((n, 6))), future_len=50)
    assert len(windows) == expected


def test_window_count_formula_property(rng):
    """make_windows agrees with the closed-form count for random lengths."""
    for _ in range(30):
        n = int(rng.integers(100, 400))
        future = int(rng.integers(0, 101))
        trial = _trial(np.zeros((n, 6)))
        assert len(make_windows(trial, future_len=future)) == window_count(n, 150, future) == max(0, n - 150 - future + 1)


def test_make_windows_content_is_chronological(rng):
    """Each window's history and future are consecutive slices of the trial."""
    trial = random_trial(rng, 220)
    windows = make_windows(trial, future_len=20)
    assert [w.start for w in windows] == list(range(len(windows)))
    last = windows[-1]
    np.testing.assert_array_equal(last.history, trial.samples[50:200])
    np.testing.assert_array_equal(last.future, trial.samples[200:220])


def test_window_index_gathers_spans(rng):
    """The flat window index covers every start of every long-enough trial."""
    arrays = [rng.normal(size=(10, 6)), rng.normal(size=(3, 6)), rng.normal(size=(5, 6))]
    index = WindowIndex(arrays, span=4)
    assert len(index) == 7 + 0 + 2
    block = index.gather(np.array([8]))
    np.testing.assert_array_equal(block[0], arrays[2][1:5])
    assert index.gather(np.array([], dtype=int)).shape == (0, 4, 6)


def test_window_index_empty_raises(rng):
    index = WindowIndex([rng.normal(size=(3, 6))], span=10)
    with pytest.raises(TrajectoryDataError):
        index.sample_rows(rng, 4)


def _dyads(n):
    return [_trial(np.zeros((2, 6)), dyad_id=d) for d in range(1, n + 1)]


def test_split_twenty_dyads():
    """20 dyads at 0.75 give 15 training and 5 validation dyads."""
    split = split_by_dyad(_dyads(20), train_fraction=0.75, seed=1)
    assert len(split.train_dyads) == 15
    assert len(split.validation_dyads) == 5
    assert split.all_dyads == frozenset(range(1, 21))
    assert not split.train_dyads & split.validation_dyads


def test_split_two_dyads_keeps_one_each():
    split = split_by_dyad(_dyads(2), train_fraction=0.75, seed=0)
    assert len(split.train_dyads) == 1 and len(split.validation_dyads) == 1


def test_split_single_dyad_fails():
    with pytest.raises(ConfigError, match="cannot split"):
        split_by_dyad(_dyads(1))


def test_split_determinism_and_variation():
    """Same seed, same split; some pair of seeds gives a different split."""
    trials = _dyads(12)
    assert split_by_dyad(trials, seed=5) == split_by_dyad(trials, seed=5)
    splits = {split_by_dyad(trials, seed=s).train_dyads for s in range(10)}
    assert len(splits) > 1


def test_split_never_divides_a_dyad():
    """All trials of one dyad land in the same set."""
    trials = [_trial(np.zeros((2, 6)), dyad_id=d, trial_id=r) for d in range(1, 9) for r in range(3)]
    split = split_by_dyad(trials, seed=3)
    assert len(split.train_trials(trials)) + len(split.validation_trials(trials)) == len(trials)
    assert len(split.train_trials(trials)) == 3 * len(split.train_dyads)


def test_split_rejects_overlap():
    with pytest.raises(ValidationError):
        DatasetSplit(train_dyads=frozenset({1, 2}), validation_dyads=frozenset({2}))


def test_select_scaler_trials_scope():
    trials = _dyads(4)
    split = DatasetSplit(train_dyads=frozenset({1, 2, 3}), validation_dyads=frozenset({4}))
    assert len(select_scaler_trials(trials, split, "all")) == 4
    assert {t.dyad_id for t in select_scaler_trials(trials, split, "train")} == {1, 2, 3}
    with pytest.raises(ConfigError):
        select_scaler_trials(trials, split, "validation")
