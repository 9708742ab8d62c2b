"""Pass/fail summary of a full reproduction run."""
import logging
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel, computed_field

from evaluation.harness import HorizonReport

logger = logging.getLogger(__name__)

HEADLINE_STEP = 50
HEADLINE_MSE = 0.02
OVERFIT_RANGE = (0.8, 1.25)
DEGRADATION_FACTOR = 2.0
POLY_NOISE_FACTOR = 10.0
NN_NOISE_FACTOR = 3.0
ROBOT_FACTOR = 4.0


class AcceptanceCheck(BaseModel):
    name: str
    value: Optional[float] = None
    passed: bool
    detail: str = ""


class AcceptanceSummary(BaseModel):
    checks: List[AcceptanceCheck]

    @computed_field
    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def headline_check(validation: HorizonReport) -> AcceptanceCheck:
    """Validation velocity MSE at the headline step stays under the headline limit."""
    value = validation.velocity_at(HEADLINE_STEP)
    return AcceptanceCheck(
        name="headline_validation_mse",
        value=value,
        passed=value <= HEADLINE_MSE,
        detail=f"step-{HEADLINE_STEP} velocity MSE (m/s)^2, limit {HEADLINE_MSE}",
    )


def overfit_check(train: HorizonReport, validation: HorizonReport) -> AcceptanceCheck:
    """Validation over training MSE stays in a modest band."""
    steps = min(HEADLINE_STEP, train.horizon, validation.horizon)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = validation.velocity_mse[:steps] / train.velocity_mse[:steps]
    low, high = OVERFIT_RANGE
    finite = np.all(np.isfinite(ratio))
    return AcceptanceCheck(
        name="overfit_ratio",
        value=float(np.max(ratio)) if finite else None,
        passed=bool(finite and np.all((ratio >= low) & (ratio <= high))),
        detail=f"validation/train ratio over steps 1..{steps}: min {np.min(ratio):.4g}, max {np.max(ratio):.4g}",
    )


def degradation_check(validation: HorizonReport) -> AcceptanceCheck:
    """Late-horizon error exceeds the early mean by at least the degradation factor."""
    if validation.horizon < 2 * HEADLINE_STEP:
        return AcceptanceCheck(name="horizon_degradation", passed=False, detail="needs a 100-step report")
    v = validation.velocity_mse
    early = float(np.mean(v[:HEADLINE_STEP]))
    late = v[HEADLINE_STEP:2 * HEADLINE_STEP]
    factor = float(late[-1] / early) if early > 0 else float("inf")
    return AcceptanceCheck(
        name="horizon_degradation",
        value=factor,
        passed=bool(np.all(late > early) and factor >= DEGRADATION_FACTOR),
        detail=f"step-100 MSE over mean of steps 1..{HEADLINE_STEP}, limit >= {DEGRADATION_FACTOR}",
    )


def noise_check(
    nn_clean: HorizonReport,
    nn_noisy: HorizonReport,
    poly_clean: HorizonReport,
    poly_noisy: HorizonReport,
) -> List[AcceptanceCheck]:
    last = min(r.horizon for r in (nn_clean, nn_noisy, poly_clean, poly_noisy))
    poly_factor = poly_noisy.velocity_at(last) / max(poly_clean.velocity_at(last), 1e-300)
    nn_factor = nn_noisy.velocity_at(HEADLINE_STEP) / max(nn_clean.velocity_at(HEADLINE_STEP), 1e-300)
    return [
        AcceptanceCheck(
            name="noise_poly_vs_nn",
            value=poly_noisy.velocity_at(last) / max(nn_noisy.velocity_at(last), 1e-300),
            passed=poly_noisy.velocity_at(last) > nn_noisy.velocity_at(last),
            detail=f"noisy polynomial over noisy NN MSE at step {last}",
        ),
        AcceptanceCheck(
            name="noise_poly_degradation",
            value=poly_factor,
            passed=poly_factor >= POLY_NOISE_FACTOR,
            detail=f"polynomial noisy/clean MSE at step {last}, limit >= {POLY_NOISE_FACTOR}",
        ),
        AcceptanceCheck(
            name="noise_nn_degradation",
            value=nn_factor,
            passed=nn_factor <= NN_NOISE_FACTOR,
            detail=f"NN noisy/clean MSE at step {HEADLINE_STEP}, limit <= {NN_NOISE_FACTOR}",
        ),
    ]


def stabilization_check(curriculum: HorizonReport, stage0: Optional[HorizonReport]) -> AcceptanceCheck:
    """The curriculum model is no worse than the stage-0 model at the headline step."""
    if stage0 is None:
        return AcceptanceCheck(name="stabilization", passed=False, detail="no stage-0 model to compare against")
    value = curriculum.velocity_at(HEADLINE_STEP)
    reference = stage0.velocity_at(HEADLINE_STEP)
    return AcceptanceCheck(
        name="stabilization",
        value=value / reference if reference > 0 else None,
        passed=value <= reference,
        detail=f"curriculum over stage-0 MSE at step {HEADLINE_STEP}, limit <= 1",
    )


def robot_check(robot: HorizonReport, validation: HorizonReport) -> AcceptanceCheck:
    """Robot-in-the-loop error stays close to validation error."""
    ratio = robot.velocity_at(HEADLINE_STEP) / max(validation.velocity_at(HEADLINE_STEP), 1e-300)
    return AcceptanceCheck(
        name="robot_in_loop",
        value=ratio,
        passed=ratio <= ROBOT_FACTOR,
        detail=f"robot-sim over validation MSE at step {HEADLINE_STEP}, limit <= {ROBOT_FACTOR}",
    )


def ablation_check(ablation: HorizonReport, full: HorizonReport) -> AcceptanceCheck:
    """Velocity-only training is no better than the full channel set."""
    ratio = ablation.velocity_at(HEADLINE_STEP) / max(full.velocity_at(HEADLINE_STEP), 1e-300)
    return AcceptanceCheck(
        name="velocity_only_ablation",
        value=ratio,
        passed=ratio >= 1.0,
        detail=f"velocity-only over full-channel MSE at step {HEADLINE_STEP}, limit >= 1",
    )


def build_summary(
    nn_train: HorizonReport,
    nn_validation: HorizonReport,
    nn_noisy: HorizonReport,
    poly_validation: HorizonReport,
    poly_noisy: HorizonReport,
    stage0_validation: Optional[HorizonReport] = None,
    robot: Optional[HorizonReport] = None,
    ablation: Optional[HorizonReport] = None,
) -> AcceptanceSummary:
    checks = [
        headline_check(nn_validation),
        overfit_check(nn_train, nn_validation),
        degradation_check(nn_validation),
        *noise_check(nn_validation, nn_noisy, poly_validation, poly_noisy),
        stabilization_check(nn_validation, stage0_validation),
    ]
    if robot is not None:
        checks.append(robot_check(robot, nn_validation))
    if ablation is not None:
        checks.append(ablation_check(ablation, nn_validation))
    summary = AcceptanceSummary(checks=checks)
    for check in checks:
        logger.info("Acceptance %s: %s (%s)", check.name, "pass" if check.passed else "FAIL", check.value)
    return summary


def save_summary(summary: AcceptanceSummary, path: Union[str, Path]) -> Path:
    """Write the summary as JSON."""
    path = Path(path)
    path.write_text(summary.model_dump_json(indent=2) + "\n")
    return path
