"""Robot-in-the-loop surrogate: leader plans driving an impedance follower with unseen dynamics."""
import logging
from typing import Optional, Sequence, Union

from errors import TrajectoryDataError
from evaluation.harness import HorizonReport, evaluate
from evaluation.predictors import NeuralPredictor, Predictor
from mlp.network import MlpModel
from models import FollowerImpedance, NoiseSpec
from synthetic.dyad import simulate_dyad
from synthetic.plan import MotionPlan
from trajectory.types import HISTORY_LEN
from utils.parallel import ordered_map

logger = logging.getLogger(__name__)

ROBOT_DATASET = "robot-sim"
# Keeps robot trials apart from corpus dyad ids
ROBOT_DYAD_ID = 1000


def robot_in_loop_eval(
    model: Union[MlpModel, Predictor],
    follower: FollowerImpedance,
    plans: Sequence[MotionPlan],
    horizon: int = 50,
    rate_hz: float = 200.0,
    noise: Optional[NoiseSpec] = None,
    window_stride: int = 1,
    threads: int = 1,
) -> HorizonReport:
    """Simulate each plan with ``follower`` and score the predictor on the resulting trials.

    A diverging rollout raises NumericalError instead of producing a report.
    """
    predictor = NeuralPredictor(model, rate_hz=rate_hz) if isinstance(model, MlpModel) else model
    trials = ordered_map(
        lambda job: simulate_dyad(job[1], follower, rate_hz=rate_hz, dyad_id=ROBOT_DYAD_ID, trial_id=job[0]),
        list(enumerate(plans)),
        threads=threads,
    )
    usable = [t for t in trials if t.n_samples >= HISTORY_LEN + horizon]
    if not usable:
        raise TrajectoryDataError("no robot trial is long enough for a single window")
    logger.info(
        "Robot-in-the-loop: %d trials, follower m=%.3g b=%.3g k=%.3g",
        len(usable), follower.mass, follower.damping, follower.stiffness,
    )
    return evaluate(
        predictor,
        usable,
        horizon=horizon,
        noise=noise,
        dataset_id=ROBOT_DATASET,
        window_stride=window_stride,
        threads=threads,
    )
