"""Leader/impedance-follower dyad simulation.

The leader's hand follows a motion plan; the object (with the follower) is
coupled to it through ``m*e'' + b*e' + k*e = -m*a_leader`` where ``e`` is the
object's position relative to the hand. Integration is semi-implicit Euler on
``(e, e')`` with ``substeps`` internal steps per output sample. The recursion is
linear and time-invariant, so it is evaluated with IIR filters instead of a
Python loop.
"""
import logging
from typing import Optional, Sequence, Union

import numpy as np
from scipy import signal

from errors import ConfigError
from models import FollowerImpedance, NoiseSpec
from synthetic.plan import AnySegment, MotionPlan, add_noise
from trajectory.types import Trial

logger = logging.getLogger(__name__)

DEFAULT_SUBSTEPS = 10


def _euler_system(follower: FollowerImpedance, h: float):
    m, b, k = follower.mass, follower.damping, follower.stiffness
    A = np.array([
        [1 - h * h * k / m, h - h * h * b / m],
        [-h * k / m, 1 - h * b / m],
    ])
    B = np.array([[-h * h], [-h]])
    return A, B


def _tracking_error(A: np.ndarray, B: np.ndarray, u: np.ndarray, s0: np.ndarray) -> np.ndarray:
    """States (M, 2, axes) of ``s[n+1] = A s[n] + B u[n]`` from ``s[0] = s0``."""
    M, axes = u.shape
    num, den = signal.ss2tf(A, B, np.eye(2), np.zeros((2, 1)))
    states = np.stack([signal.lfilter(num[j], den, u, axis=0) for j in range(2)], axis=1)

    if np.any(s0 != 0) and M > 1:
        # Free response C A^n s0 obeys the characteristic recurrence from n = 2 on
        y0 = s0
        y1 = A @ s0
        states[0] += y0
        states[1] += y1
        if M > 2:
            for j in range(2):
                zi = np.stack([signal.lfiltic([1.0], den, y=[y1[j, a], y0[j, a]]) for a in range(axes)], axis=1)
                free, _ = signal.lfilter([1.0], den, np.zeros((M - 2, axes)), axis=0, zi=zi)
                states[2:, j] += free
    return states


def simulate_dyad(
    leader_plan: Union[MotionPlan, Sequence[AnySegment]],
    follower: FollowerImpedance,
    rate_hz: float = 200.0,
    substeps: int = DEFAULT_SUBSTEPS,
    initial_velocity: Optional[Sequence[float]] = None,
    noise: Optional[NoiseSpec] = None,
    dyad_id: int = 0,
    trial_id: int = 0,
) -> Trial:
    """Object velocity and acceleration while the leader executes ``leader_plan``.

    The object starts at the leader's hand with ``initial_velocity`` (the
    leader's own initial velocity when omitted).
    """
    if not follower.mass > 0:
        raise ConfigError("follower mass must be positive")
    if substeps < 1:
        raise ConfigError("substeps must be at least 1")
    plan = leader_plan if isinstance(leader_plan, MotionPlan) else MotionPlan(leader_plan)
    n = plan.sample_count(rate_hz)
    if n < 2:
        raise ConfigError("plan is shorter than two samples")

    h = 1.0 / (rate_hz * substeps)
    t = np.arange((n - 1) * substeps + 1) * h
    _, v_lead, a_lead = plan.evaluate(t)

    e_dot0 = np.zeros(3) if initial_velocity is None else np.asarray(initial_velocity, dtype=float) - v_lead[0]
    s0 = np.vstack([np.zeros(3), e_dot0])
    A, B = _euler_system(follower, h)
    states = _tracking_error(A, B, a_lead, s0)[::substeps]
    e, e_dot = states[:, 0], states[:, 1]

    m, b, k = follower.mass, follower.damping, follower.stiffness
    vel = v_lead[::substeps] + e_dot
    acc = -(b * e_dot + k * e) / m
    samples = add_noise(np.hstack([vel, acc]), noise, stream=(dyad_id, trial_id))
    if not np.all(np.isfinite(samples)):
        raise ConfigError("impedance simulation produced non-finite values; check the follower parameters")
    return Trial(dyad_id=dyad_id, trial_id=trial_id, sample_rate_hz=rate_hz, samples=samples)
