import struct

import pandas as pd
import pytest

from cli import main
from conftest import random_trial
from mlp.network import init_model
from mlp.serialization import FORMAT_VERSION, MAGIC, model_to_bytes, save_model
from predictor.curriculum import load_report
from trajectory.csv_io import save_trials
from utils.checksum import file_checksum

FAST_TRAINING = [
    "--hidden", "8",
    "--threshold", "1e9",
    "--patience", "1",
    "--max-steps", "5",
    "--batch-size", "4",
]


@pytest.fixture
def corpus_yaml(tmp_path):
    path = tmp_path / "corpus.yaml"
    path.write_text("seed: 3\ndyad_count: 3\nrepetitions: 1\ntasks: [forward]\n")
    return path


@pytest.fixture
def corpus_csv(tmp_path, corpus_yaml):
    out = tmp_path / "corpus.csv"
    assert main(["generate", "--config", str(corpus_yaml), "--out", str(out)]) == 0
    return out


@pytest.fixture
def model_file(tmp_path):
    return save_model(init_model([900, 8, 6], seed=0), tmp_path / "model.bin")


def _sha(output):
    return [line.split()[-1] for line in output.splitlines() if "sha256" in line][0]


def test_generate_is_reproducible(tmp_path, corpus_yaml, capsys):
    assert main(["generate", "--config", str(corpus_yaml), "--out", str(tmp_path / "a.csv")]) == 0
    first = _sha(capsys.readouterr().out)
    assert main(["--threads", "2", "generate", "--config", str(corpus_yaml), "--out", str(tmp_path / "b.csv")]) == 0
    assert _sha(capsys.readouterr().out) == first
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_generate_reports_unwritable_path(tmp_path, corpus_yaml, capsys):
    target = tmp_path / "missing" / "corpus.csv"
    assert main(["generate", "--config", str(corpus_yaml), "--out", str(target)]) == 2
    assert str(target) in capsys.readouterr().err


def test_bad_arguments_exit_2(capsys):
    assert main(["train"]) == 2
    assert main(["generate", "--out", "x.csv", "--dyads", "0"]) == 2


def test_train_needs_two_dyads(tmp_path, corpus_yaml, capsys):
    out = tmp_path / "one.csv"
    assert main(["generate", "--config", str(corpus_yaml), "--dyads", "1", "--out", str(out)]) == 0
    code = main(["train", "--data", str(out), "--out", str(tmp_path / "m.bin"), *FAST_TRAINING])
    assert code == 2
    assert "cannot split" in capsys.readouterr().err


def test_train_and_resume(tmp_path, corpus_csv):
    model = tmp_path / "model.bin"
    args = ["train", "--data", str(corpus_csv), "--out", str(model), *FAST_TRAINING]
    assert main(args + ["--stages", "0", "1", "--stage0-out", str(tmp_path / "stage0.bin")]) == 0
    assert (tmp_path / "stage0.bin").exists()
    report = load_report(tmp_path / "model.bin.report.json")
    assert [s.k for s in report.stages] == [0, 1]

    resumed = tmp_path / "resumed.bin"
    assert main(["train", "--data", str(corpus_csv), "--out", str(resumed), "--resume", str(model),
                 *FAST_TRAINING, "--stages", "0", "1", "2"]) == 0
    again = load_report(tmp_path / "resumed.bin.report.json")
    assert [s.k for s in again.stages] == [0, 1, 2]
    assert again.train_dyads == report.train_dyads
    assert again.stages[2].threshold == pytest.approx(1e9 * 1.5**2)


def test_predict_writes_horizon_rows(tmp_path, model_file, rng):
    data = save_trials([random_trial(rng, 300)], tmp_path / "input.csv")
    out = tmp_path / "forecast.csv"
    assert main(["predict", "--model", str(model_file), "--input", str(data), "--horizon", "20", "--out", str(out)]) == 0
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["step", "t", "vx", "vy", "vz", "ax", "ay", "az"]
    assert frame["step"].tolist() == list(range(1, 21))


def test_predict_short_input(tmp_path, model_file, rng, capsys):
    data = save_trials([random_trial(rng, 100)], tmp_path / "short.csv")
    code = main(["predict", "--model", str(model_file), "--input", str(data), "--out", str(tmp_path / "f.csv")])
    assert code == 3
    assert "insufficient history" in capsys.readouterr().err


def test_evaluate_rejects_other_model_versions(tmp_path, corpus_csv, capsys):
    data = bytearray(model_to_bytes(init_model([900, 8, 6], seed=0)))
    struct.pack_into("<I", data, len(MAGIC), FORMAT_VERSION + 1)
    bad = tmp_path / "future.bin"
    bad.write_bytes(bytes(data))
    code = main(["evaluate", "--model", str(bad), "--data", str(corpus_csv), "--out", str(tmp_path / "r.csv")])
    assert code == 6
    assert "version" in capsys.readouterr().err


def test_evaluate_rejects_non_model_files(tmp_path, corpus_csv):
    code = main(["evaluate", "--model", str(corpus_csv), "--data", str(corpus_csv), "--out", str(tmp_path / "r.csv")])
    assert code == 5


def test_evaluate_and_compare(tmp_path, corpus_csv, model_file):
    reports = tmp_path / "reports.csv"
    assert main([
        "evaluate", "--model", str(model_file), "--data", str(corpus_csv), "--horizon", "20",
        "--poly-degrees", "2", "8", "--stride", "5", "--overlay", "--overlay-horizon", "20", "--out", str(reports),
    ]) == 0
    frame = pd.read_csv(reports)
    assert sorted(frame["predictor"].unique()) == ["nn", "poly-2", "poly-8"]
    assert (tmp_path / "overlay_nn.csv").exists()

    noisy = tmp_path / "noisy.csv"
    assert main([
        "evaluate", "--data", str(corpus_csv), "--horizon", "20", "--noise", "default", "--stride", "5", "--out", str(noisy),
    ]) == 0
    assert set(pd.read_csv(noisy)["dataset"]) == {"noisy"}

    table = tmp_path / "comparison.csv"
    assert main(["compare", str(reports), str(noisy), "--out", str(table)]) == 0
    columns = pd.read_csv(table).columns
    assert "nn:validation" in columns and "poly-8:noisy" in columns


def test_invalid_noise_spec(tmp_path, corpus_csv):
    code = main(["evaluate", "--data", str(corpus_csv), "--noise", "loud", "--out", str(tmp_path / "r.csv")])
    assert code == 2


def test_discontinuous_custom_task_is_a_data_error(tmp_path, capsys):
    path = tmp_path / "jump.yaml"
    path.write_text(
        "dyad_count: 2\nrepetitions: 1\ntasks: [forward]\n"
        "custom_tasks:\n"
        "  jump:\n"
        "    - {kind: rest, duration: 1.0}\n"
        "    - {kind: const_vel, velocity: [1.0, 0.0, 0.0], duration: 2.0}\n"
    )
    assert main(["generate", "--config", str(path), "--out", str(tmp_path / "c.csv")]) == 3
    assert "discontinuous plan" in capsys.readouterr().err


def _run_all(tmp_path, corpus_yaml, name, threads):
    out_dir = tmp_path / name
    code = main([
        "--threads", str(threads), "run-all", "--config", str(corpus_yaml), "--dyads", "4",
        "--out-dir", str(out_dir), "--stride", "40", *FAST_TRAINING, "--stages", "0", "1",
    ])
    assert code == 0
    return out_dir


def test_run_all_is_reproducible(tmp_path, corpus_yaml):
    """Two runs with fixed seeds and different thread counts write identical files."""
    first = _run_all(tmp_path, corpus_yaml, "first", threads=1)
    second = _run_all(tmp_path, corpus_yaml, "second", threads=3)

    names = sorted(p.name for p in first.iterdir())
    assert names == sorted(p.name for p in second.iterdir())
    for name in ["corpus.csv", "model.bin", "stage0.bin", "model_velocity.bin", "reports.csv",
                 "comparison.csv", "overlay_nn.csv", "overlay_poly-8.csv", "acceptance.json"]:
        assert name in names
    report_name = "model.bin.report.json"
    assert report_name in names

    for name in names:
        if name == report_name:
            continue
        assert file_checksum(first / name) == file_checksum(second / name), name
    a, b = load_report(first / report_name), load_report(second / report_name)
    assert a.without_timing() == b.without_timing()

    frame = pd.read_csv(first / "reports.csv")
    assert {"train", "validation", "noisy", "robot-sim"} <= set(frame["dataset"])
    assert {"nn", "nn-stage0", "nn-velocity", "poly-8"} <= set(frame["predictor"])
