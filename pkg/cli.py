#!/usr/bin/env python3
"""Command-line pipeline: corpus generation, training, prediction, evaluation and comparison."""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import ValidationError

from config import settings
from definition.channels import CHANNEL_NAMES
from errors import ConfigError, IntentError, TrajectoryDataError
from evaluation.acceptance import build_summary, save_summary
from evaluation.harness import HorizonReport, compare, evaluate, load_reports, save_reports
from evaluation.overlay import overlay, save_overlays
from evaluation.predictors import NeuralPredictor, PolynomialPredictor
from evaluation.robot import robot_in_loop_eval
from mlp.network import MlpModel
from mlp.serialization import load_model, save_model
from models import CorpusConfig, CurriculumConfig, FollowerImpedance, NoiseSpec, TrainingReport
from predictor.curriculum import (
    CurriculumResult,
    TrainingDataset,
    load_report,
    report_path_for,
    resume_config,
    save_report,
    train_curriculum,
)
from predictor.rollout import rollout
from synthetic.corpus import load_corpus_config, make_corpus, robot_plans
from trajectory.csv_io import load_trials, save_trials
from trajectory.service import fit_scaler, select_scaler_trials, split_by_dyad, window_count
from trajectory.types import HISTORY_LEN, DatasetSplit, Trial
from utils.checksum import file_checksum
from utils.parallel import resolve_threads

logger = logging.getLogger("intent")

# Follower dynamics for robot-in-the-loop runs, outside the corpus jitter range
ROBOT_FOLLOWER = FollowerImpedance(mass=20.0, damping=120.0, stiffness=0.0)


# Shared helpers
def _noise(value: str, seed: int) -> Optional[NoiseSpec]:
    """``none``, ``default`` or ``V_STD,A_STD``."""
    if value == "none":
        return None
    if value == "default":
        return NoiseSpec.from_channels(settings.noise_velocity_std, settings.noise_acceleration_std, seed)
    try:
        v_std, a_std = (float(part) for part in value.split(","))
    except ValueError:
        raise ConfigError(f"invalid noise '{value}': use none, default or V_STD,A_STD")
    return NoiseSpec.from_channels(v_std, a_std, seed)


def _write(path: Path, writer, *args):
    try:
        return writer(*args, path)
    except OSError as e:
        raise ConfigError(f"cannot write {path}: {e.strerror or e}")


def _ensure_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"cannot create output directory {path}: {e.strerror or e}")
    return path


def _curriculum_config(args) -> CurriculumConfig:
    return CurriculumConfig(
        stages=args.stages,
        schedule=args.schedule,
        max_k=args.max_k,
        mse_threshold=args.threshold,
        threshold_growth=args.growth,
        patience=args.patience,
        max_steps_per_stage=args.max_steps,
        batch_size=args.batch_size,
        mix_ratio=args.mix_ratio,
        validation_every=args.validation_every,
        learning_rate=args.lr,
    )


def _split_from_report(report: TrainingReport) -> Optional[DatasetSplit]:
    if not report.train_dyads or not report.validation_dyads:
        return None
    return DatasetSplit(train_dyads=frozenset(report.train_dyads), validation_dyads=frozenset(report.validation_dyads))


def _train(
    trials: Sequence[Trial],
    split: DatasetSplit,
    config: CurriculumConfig,
    seed: int,
    channels: str,
    hidden: Sequence[int],
    activation: str,
    scaler_fit_on: str,
    initial_model: Optional[MlpModel] = None,
    previous: Sequence = (),
) -> CurriculumResult:
    scaler = initial_model.scaler if initial_model else fit_scaler(select_scaler_trials(trials, split, scaler_fit_on))
    dataset = TrainingDataset.from_split(trials, split, scaler, channels=channels)
    return train_curriculum(
        dataset,
        config,
        seed,
        hidden_dims=hidden,
        activation=activation,
        initial_model=initial_model,
        previous_stages=previous,
    )


def _print_stages(report: TrainingReport) -> None:
    for stage in report.stages:
        mark = "✅" if stage.converged else "⚠️"
        print(
            f"   {mark} k={stage.k:3d}  steps={stage.steps:6d}  train={stage.final_train_mse:.4g}  "
            f"validation={stage.final_validation_mse:.4g}  threshold={stage.threshold:.4g}"
        )


def _print_report(report: HorizonReport) -> None:
    steps = [s for s in (1, 25, 50, 75, 100) if s <= report.horizon]
    summary = "  ".join(f"@{s}={report.velocity_at(s):.4g}" for s in steps)
    print(f"📊 {report.predictor_id} on {report.dataset_id} ({report.n_windows} windows): velocity MSE {summary}")


# Subcommands
def cmd_generate(args) -> int:
    """Build the corpus from YAML plus overrides and write it as CSV."""
    config = load_corpus_config(args.config)
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.dyads is not None:
        updates["dyad_count"] = args.dyads
    if args.repetitions is not None:
        updates["repetitions"] = args.repetitions
    if updates:
        config = CorpusConfig.model_validate({**config.model_dump(), **updates})

    print(f"🏗️  Generating {config.dyad_count} dyads x {config.repetitions} repetitions...")
    trials = make_corpus(config, threads=args.threads)
    out = Path(args.out)
    _write(out, save_trials, trials)
    windows = sum(window_count(t.n_samples, HISTORY_LEN, settings.horizon) for t in trials)
    print(f"✅ {len(trials)} trials, {windows} windows -> {out}")
    print(f"   sha256 {file_checksum(out)}")
    return 0


def cmd_train(args) -> int:
    """Split, scale and train the forecaster; write the model and its report."""
    trials = load_trials(args.data, on_bad=args.on_bad)
    config = _curriculum_config(args)
    initial_model, previous, split = None, [], None
    channels = args.channels
    split_seed = args.split_seed

    if args.resume:
        initial_model = load_model(args.resume)
        saved = load_report(report_path_for(args.resume))
        config, previous = resume_config(config, saved)
        split = _split_from_report(saved)
        channels = initial_model.channel_set
        split_seed = saved.split_seed
        print(f"🔁 Resuming from {args.resume} at k={config.start_k}")
    if split is None:
        split = split_by_dyad(trials, train_fraction=args.train_fraction, seed=args.split_seed)
    print(f"📚 {len(trials)} trials: {len(split.train_dyads)} training dyads, {len(split.validation_dyads)} validation dyads")

    result = _train(
        trials, split, config, args.seed, channels, args.hidden, args.activation, args.scaler_fit_on,
        initial_model=initial_model, previous=previous,
    )
    report = result.report.model_copy(update={"split_seed": split_seed})
    out = Path(args.out)
    _write(out, save_model, result.model)
    _write(report_path_for(out), save_report, report)
    if args.stage0_out and result.stage0_model is not None:
        _write(Path(args.stage0_out), save_model, result.stage0_model)
    _print_stages(report)
    print(f"✅ Model (last converged k={report.last_converged_k}) -> {out}")
    return 0


def cmd_predict(args) -> int:
    """Forecast one trial from its last full history."""
    model = load_model(args.model)
    trials = load_trials(args.input)
    if args.dyad is not None or args.trial is not None:
        trials = [
            t for t in trials
            if (args.dyad is None or t.dyad_id == args.dyad) and (args.trial is None or t.trial_id == args.trial)
        ]
    if not trials:
        raise TrajectoryDataError("no matching trial in the input")
    if len(trials) > 1:
        raise ConfigError(f"input holds {len(trials)} trials; choose one with --dyad and --trial")
    trial = trials[0]
    if trial.n_samples < HISTORY_LEN:
        raise TrajectoryDataError(f"insufficient history: {trial.n_samples} samples, need {HISTORY_LEN}")

    forecast = rollout(model, trial.samples[-HISTORY_LEN:], horizon=args.horizon, rate_hz=trial.sample_rate_hz)
    steps = np.arange(1, forecast.horizon + 1)
    frame = pd.DataFrame(forecast.steps, columns=CHANNEL_NAMES)
    frame.insert(0, "t", trial.times()[-1] + steps / trial.sample_rate_hz)
    frame.insert(0, "step", steps)
    out = Path(args.out)
    _write(out, lambda f, p: f.to_csv(p, index=False, float_format="%.12g", lineterminator="\n"), frame)
    print(f"✅ {forecast.horizon}-step forecast -> {out}")
    return 0


def _evaluation_split(args, trials: Sequence[Trial], model_path: Optional[str]) -> DatasetSplit:
    if model_path:
        report_path = report_path_for(model_path)
        if report_path.exists():
            split = _split_from_report(load_report(report_path))
            if split is not None:
                return split
    return split_by_dyad(trials, train_fraction=args.train_fraction, seed=args.split_seed)


def _select(trials: Sequence[Trial], split: DatasetSplit, name: str) -> List[Trial]:
    if name == "train":
        return split.train_trials(trials)
    if name == "validation":
        return split.validation_trials(trials)
    return list(trials)


def cmd_evaluate(args) -> int:
    """Score the network and polynomial baselines and write report CSVs."""
    trials = load_trials(args.data, on_bad=args.on_bad)
    model = load_model(args.model) if args.model else None
    if args.split == "all":
        selected = list(trials)
    else:
        selected = _select(trials, _evaluation_split(args, trials, args.model), args.split)
    noise = _noise(args.noise, args.noise_seed)
    dataset_id = args.split if noise is None else ("noisy" if args.split == "validation" else f"{args.split}-noisy")

    predictors = []
    if model is not None:
        predictors.append(NeuralPredictor(model, rate_hz=settings.sample_rate_hz))
    if not args.no_poly:
        predictors.extend(PolynomialPredictor(d) for d in args.poly_degrees)
    if not predictors:
        raise ConfigError("nothing to evaluate: pass --model or drop --no-poly")

    reports = []
    for predictor in predictors:
        report = evaluate(
            predictor, selected, horizon=args.horizon, noise=noise, dataset_id=dataset_id,
            window_stride=args.stride, chunk_size=settings.eval_chunk_size, threads=args.threads,
        )
        reports.append(report)
        _print_report(report)
    if args.robot:
        if model is None:
            raise ConfigError("--robot needs --model")
        corpus = load_corpus_config(args.corpus_config)
        robot = robot_in_loop_eval(
            model, ROBOT_FOLLOWER, robot_plans(corpus, settings.robot_seed),
            horizon=args.horizon, rate_hz=settings.sample_rate_hz, window_stride=args.stride, threads=args.threads,
        )
        _print_report(robot)
        reports.append(robot)

    out = Path(args.out)
    _write(out, save_reports, reports)
    print(f"✅ Report -> {out}")

    if args.overlay:
        _write_overlays(args, predictors, selected, noise, out.parent)
    return 0


def _write_overlays(args, predictors, trials: Sequence[Trial], noise, directory: Path) -> None:
    candidates = [t for t in trials if args.overlay_trial is None or t.trial_id == args.overlay_trial]
    if not candidates:
        raise TrajectoryDataError(f"no trial {args.overlay_trial} to overlay")
    trial = candidates[0]
    for predictor in predictors:
        trace = overlay(predictor, trial, anchor_period_s=args.anchor_period, horizon=args.overlay_horizon, noise=noise)
        path = directory / f"overlay_{predictor.name}.csv"
        _write(path, save_overlays, [trace])
        print(f"📈 {len(trace.segments)} forecast segments ({predictor.name}) -> {path}")


def cmd_compare(args) -> int:
    """Join report files into one comparison table."""
    reports = [r for path in args.reports for r in load_reports(path)]
    comparison = compare(reports)
    out = Path(args.out)
    _write(out, lambda f, p: f.to_csv(p, index=False, float_format="%.12g", lineterminator="\n"), comparison.table)
    for pair, step in comparison.crossover.items():
        print(f"📊 {pair}: " + (f"NN below polynomial from step {step}" if step else "no crossover"))
    print(f"✅ Comparison of {len(reports)} reports -> {out}")
    return 0


def cmd_run_all(args) -> int:
    """Corpus, training, every evaluation and the acceptance summary in one directory."""
    out_dir = _ensure_dir(Path(args.out_dir))
    corpus = load_corpus_config(args.config)
    if args.dyads is not None:
        corpus = CorpusConfig.model_validate({**corpus.model_dump(), "dyad_count": args.dyads})
    print(f"🏗️  Generating corpus ({corpus.dyad_count} dyads)...")
    trials = make_corpus(corpus, threads=args.threads)
    _write(out_dir / "corpus.csv", save_trials, trials)

    split = split_by_dyad(trials, train_fraction=args.train_fraction, seed=args.split_seed)
    config = _curriculum_config(args)
    print(f"🧠 Training ({len(config.stage_ks())} stages planned)...")
    result = _train(trials, split, config, args.seed, "all", args.hidden, args.activation, args.scaler_fit_on)
    report = result.report.model_copy(update={"split_seed": args.split_seed})
    _write(out_dir / "model.bin", save_model, result.model)
    _write(report_path_for(out_dir / "model.bin"), save_report, report)
    _print_stages(report)

    train_trials, validation_trials = split.train_trials(trials), split.validation_trials(trials)
    noise = NoiseSpec.from_channels(settings.noise_velocity_std, settings.noise_acceleration_std, args.noise_seed)
    horizon = settings.eval_horizon
    nn = NeuralPredictor(result.model, rate_hz=corpus.sample_rate_hz)
    poly = PolynomialPredictor(settings.poly_degree)

    def run(predictor, selected, dataset_id, noise_spec=None) -> HorizonReport:
        report = evaluate(
            predictor, selected, horizon=horizon, noise=noise_spec, dataset_id=dataset_id,
            window_stride=args.stride, chunk_size=settings.eval_chunk_size, threads=args.threads,
        )
        _print_report(report)
        return report

    nn_train = run(nn, train_trials, "train")
    nn_validation = run(nn, validation_trials, "validation")
    nn_noisy = run(nn, validation_trials, "noisy", noise)
    poly_validation = run(poly, validation_trials, "validation")
    poly_noisy = run(poly, validation_trials, "noisy", noise)
    reports = [nn_train, nn_validation, nn_noisy, poly_validation, poly_noisy]

    stage0 = None
    if result.stage0_model is not None:
        _write(out_dir / "stage0.bin", save_model, result.stage0_model)
        stage0 = run(NeuralPredictor(result.stage0_model, corpus.sample_rate_hz, name="nn-stage0"), validation_trials, "validation")
        reports.append(stage0)

    robot = robot_in_loop_eval(
        result.model, ROBOT_FOLLOWER, robot_plans(corpus, settings.robot_seed),
        horizon=horizon, rate_hz=corpus.sample_rate_hz, window_stride=args.stride, threads=args.threads,
    )
    _print_report(robot)
    reports.append(robot)

    ablation = None
    if not args.skip_ablation:
        print("🧠 Training velocity-only ablation...")
        ablated = _train(trials, split, config, args.seed, "velocity", args.hidden, args.activation, args.scaler_fit_on)
        _write(out_dir / "model_velocity.bin", save_model, ablated.model)
        ablation = run(NeuralPredictor(ablated.model, corpus.sample_rate_hz, name="nn-velocity"), validation_trials, "validation")
        reports.append(ablation)

    _write(out_dir / "reports.csv", save_reports, reports)
    comparison = compare([nn_noisy, poly_noisy])
    _write(out_dir / "comparison.csv", lambda f, p: f.to_csv(p, index=False, float_format="%.12g", lineterminator="\n"), comparison.table)

    showcase = max(validation_trials, key=lambda t: t.n_samples)
    for predictor in (nn, poly):
        trace = overlay(predictor, showcase, anchor_period_s=1.0, horizon=settings.horizon)
        _write(out_dir / f"overlay_{predictor.name}.csv", save_overlays, [trace])

    summary = build_summary(
        nn_train, nn_validation, nn_noisy, poly_validation, poly_noisy,
        stage0_validation=stage0, robot=robot, ablation=ablation,
    )
    _write(out_dir / "acceptance.json", save_summary, summary)
    for check in summary.checks:
        print(f"   {'✅' if check.passed else '❌'} {check.name}: {check.value}")
    print(f"{'✅' if summary.passed else '⚠️'} Run complete -> {out_dir}")
    return 0


# Parser
def _add_training_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=settings.train_seed, help="Initialization and batch seed")
    parser.add_argument("--split-seed", type=int, default=settings.split_seed)
    parser.add_argument("--train-fraction", type=float, default=settings.train_fraction)
    parser.add_argument("--scaler-fit-on", choices=["all", "train"], default=settings.scaler_fit_on)
    parser.add_argument("--hidden", type=int, nargs="+", default=settings.hidden_dims)
    parser.add_argument("--activation", choices=["tanh", "relu", "identity"], default=settings.activation)
    parser.add_argument("--batch-size", type=int, default=settings.batch_size)
    parser.add_argument("--lr", type=float, default=settings.learning_rate)
    parser.add_argument("--threshold", type=float, default=settings.mse_threshold, help="Stage-0 validation MSE threshold")
    parser.add_argument("--growth", type=float, default=settings.threshold_growth, help="Threshold factor per stage")
    parser.add_argument("--patience", type=int, default=settings.patience)
    parser.add_argument("--max-steps", type=int, default=settings.max_steps_per_stage)
    parser.add_argument("--max-k", type=int, default=settings.max_k)
    parser.add_argument("--schedule", choices=["increment", "doubling"], default=settings.schedule)
    parser.add_argument("--stages", type=int, nargs="+", default=None, help="Explicit k values")
    parser.add_argument("--mix-ratio", type=float, default=settings.mix_ratio)
    parser.add_argument("--validation-every", type=int, default=settings.validation_every)


def build_parser() -> argparse.ArgumentParser:
    """Argument parser for every subcommand."""
    parser = argparse.ArgumentParser(prog="intent", description=__doc__)
    parser.add_argument("--threads", type=int, default=settings.threads, help="Worker threads (0 = machine default)")
    parser.add_argument("--log-level", default=settings.log_level)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="Generate the synthetic dyad corpus")
    p.add_argument("--config", help="Corpus YAML config")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--dyads", type=int, default=None)
    p.add_argument("--repetitions", type=int, default=None)
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("train", help="Train the forecaster with the stabilization curriculum")
    p.add_argument("--data", required=True, help="Trajectory CSV")
    p.add_argument("--out", required=True, help="Model file")
    p.add_argument("--channels", choices=["all", "velocity"], default="all")
    p.add_argument("--resume", help="Continue from a saved model and its report")
    p.add_argument("--stage0-out", help="Also save the stage-0 model here")
    p.add_argument("--on-bad", choices=["error", "skip"], default="error")
    _add_training_args(p)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("predict", help="Forecast from the last 150 samples of a trial")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="Trajectory CSV")
    p.add_argument("--horizon", type=int, default=settings.horizon)
    p.add_argument("--dyad", type=int, default=None)
    p.add_argument("--trial", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("evaluate", help="MSE-vs-horizon reports, overlays and robot-in-the-loop runs")
    p.add_argument("--model", help="Model file; omit to score the polynomial baseline only")
    p.add_argument("--data", required=True, help="Trajectory CSV")
    p.add_argument("--split", choices=["train", "validation", "all"], default="validation")
    p.add_argument("--split-seed", type=int, default=settings.split_seed)
    p.add_argument("--train-fraction", type=float, default=settings.train_fraction)
    p.add_argument("--horizon", type=int, default=settings.eval_horizon)
    p.add_argument("--noise", default="none", help="none, default or V_STD,A_STD")
    p.add_argument("--noise-seed", type=int, default=settings.noise_seed)
    p.add_argument("--poly-degrees", type=int, nargs="+", default=[settings.poly_degree])
    p.add_argument("--no-poly", action="store_true")
    p.add_argument("--stride", type=int, default=1, help="Window stride")
    p.add_argument("--overlay", action="store_true", help="Also write anchored forecast overlays")
    p.add_argument("--overlay-trial", type=int, default=None)
    p.add_argument("--overlay-horizon", type=int, default=settings.horizon)
    p.add_argument("--anchor-period", type=float, default=1.0, help="Seconds between overlay anchors")
    p.add_argument("--robot", action="store_true", help="Also run the robot-in-the-loop surrogate")
    p.add_argument("--corpus-config", help="Corpus YAML the robot plans are drawn from")
    p.add_argument("--on-bad", choices=["error", "skip"], default="error")
    p.add_argument("--out", required=True, help="Report CSV")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("compare", help="Side-by-side comparison of report CSVs")
    p.add_argument("reports", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_compare)

    p = sub.add_parser("run-all", help="Full reproduction: corpus, training, evaluation, acceptance summary")
    p.add_argument("--out-dir", default=settings.output_dir)
    p.add_argument("--config", help="Corpus YAML config")
    p.add_argument("--dyads", type=int, default=None)
    p.add_argument("--noise-seed", type=int, default=settings.noise_seed)
    p.add_argument("--stride", type=int, default=1, help="Evaluation window stride")
    p.add_argument("--skip-ablation", action="store_true")
    _add_training_args(p)
    p.set_defaults(handler=cmd_run_all)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Run one command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    args.threads = resolve_threads(args.threads)
    try:
        return args.handler(args)
    except IntentError as e:
        print(f"❌ {e}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        print(f"❌ Invalid configuration: {e}", file=sys.stderr)
        return ConfigError.exit_code
    except KeyboardInterrupt:
        print("\n👋 Interrupted", file=sys.stderr)
        return 130
    except Exception as e:
        logger.exception("Unexpected failure")
        print(f"❌ Error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
