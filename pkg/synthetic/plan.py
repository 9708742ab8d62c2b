"""Analytic motion plans built from minimum-jerk, constant-velocity and rest segments."""
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from errors import ConfigError, TrajectoryDataError
from models import ConstVelPhase, MinJerkSegment, NoiseSpec, RestPhase
from trajectory.types import HISTORY_LEN, Trial

AnySegment = Union[MinJerkSegment, ConstVelPhase, RestPhase]

# Boundary velocities closer than this count as continuous (m/s)
CONTINUITY_TOL = 1e-9
DEFAULT_MIN_SAMPLES = HISTORY_LEN + 50


def _min_jerk(seg: MinJerkSegment, s: np.ndarray):
    T = seg.duration
    D = np.asarray(seg.displacement)
    tau = (s / T)[:, None]
    pos = D * (10 * tau**3 - 15 * tau**4 + 6 * tau**5)
    vel = D / T * (30 * tau**2 - 60 * tau**3 + 30 * tau**4)
    acc = D / T**2 * (60 * tau - 180 * tau**2 + 120 * tau**3)
    return pos, vel, acc


def _const_vel(seg: ConstVelPhase, s: np.ndarray):
    V = np.asarray(seg.velocity)
    T, b = seg.duration, seg.blend_time
    s = s[:, None]
    if b == 0:
        return V * s, np.broadcast_to(V, s.shape[:1] + (3,)).copy(), np.zeros(s.shape[:1] + (3,))

    up = s < b
    down = s > T - b
    r = T - s
    pos = np.where(up, V * s**2 / (2 * b), V * b / 2 + V * (s - b))
    pos = np.where(down, V * (T - b) - V * r**2 / (2 * b), pos)
    vel = np.where(up, V * s / b, np.where(down, V * r / b, V))
    acc = np.where(up, V / b, np.where(down, -V / b, 0.0 * V))
    return pos, vel, acc


def _rest(seg: RestPhase, s: np.ndarray):
    zeros = np.zeros((s.shape[0], 3))
    return zeros, zeros.copy(), zeros.copy()


def boundary_velocities(seg: AnySegment) -> Tuple[np.ndarray, np.ndarray]:
    """(start, end) velocity of a segment."""
    if isinstance(seg, ConstVelPhase) and seg.blend_time == 0:
        v = np.asarray(seg.velocity, dtype=float)
        return v, v
    return np.zeros(3), np.zeros(3)


def segment_displacement(seg: AnySegment) -> np.ndarray:
    """Net displacement of a segment over its duration."""
    if isinstance(seg, MinJerkSegment):
        return np.asarray(seg.displacement, dtype=float)
    if isinstance(seg, ConstVelPhase):
        return np.asarray(seg.velocity, dtype=float) * (seg.duration - seg.blend_time)
    return np.zeros(3)


_PROFILES = {
    MinJerkSegment: _min_jerk,
    ConstVelPhase: _const_vel,
    RestPhase: _rest,
}


class MotionPlan:
    """Piecewise analytic position, velocity and acceleration of a sequence of segments.

    Outside the plan the motion continues at the boundary velocity with zero
    acceleration.
    """

    def __init__(self, segments: Sequence[AnySegment]):
        if not segments:
            raise ConfigError("a plan needs at least one segment")
        for i, (prev, nxt) in enumerate(zip(segments, segments[1:])):
            gap = boundary_velocities(prev)[1] - boundary_velocities(nxt)[0]
            if np.max(np.abs(gap)) > CONTINUITY_TOL:
                raise TrajectoryDataError(
                    f"discontinuous plan: velocity jumps by {gap.tolist()} m/s between segments {i} and {i + 1}"
                )
        self.segments = list(segments)
        durations = np.array([seg.duration for seg in self.segments])
        self.starts = np.concatenate([[0.0], np.cumsum(durations)[:-1]])
        self.duration = float(durations.sum())
        offsets = np.cumsum([segment_displacement(seg) for seg in self.segments], axis=0)
        self.offsets = np.vstack([np.zeros(3), offsets[:-1]])
        self.end_position = offsets[-1]

    def evaluate(self, t: np.ndarray):
        """Position, velocity and acceleration, each (len(t), 3), at times ``t``."""
        t = np.asarray(t, dtype=np.float64)
        pos = np.zeros((t.shape[0], 3))
        vel = np.zeros((t.shape[0], 3))
        acc = np.zeros((t.shape[0], 3))

        idx = np.clip(np.searchsorted(self.starts, t, side="right") - 1, 0, len(self.segments) - 1)
        inside = (t >= 0) & (t <= self.duration)
        for i, seg in enumerate(self.segments):
            mask = inside & (idx == i)
            if not np.any(mask):
                continue
            s = np.minimum(t[mask] - self.starts[i], seg.duration)
            p, v, a = _PROFILES[type(seg)](seg, s)
            pos[mask] = self.offsets[i] + p
            vel[mask] = v
            acc[mask] = a

        before = t < 0
        if np.any(before):
            v0 = boundary_velocities(self.segments[0])[0]
            pos[before] = v0 * t[before, None]
            vel[before] = v0
        after = t > self.duration
        if np.any(after):
            v1 = boundary_velocities(self.segments[-1])[1]
            pos[after] = self.end_position + v1 * (t[after, None] - self.duration)
            vel[after] = v1
        return pos, vel, acc

    def sample_count(self, rate_hz: float) -> int:
        """Number of samples the plan spans at ``rate_hz``."""
        return int(round(self.duration * rate_hz))


def add_noise(samples: np.ndarray, noise: Optional[NoiseSpec], stream: Sequence[int] = ()) -> np.ndarray:
    """Add zero-mean Gaussian noise drawn from ``noise.seed`` and the ``stream`` key."""
    if noise is None:
        return samples
    rng = np.random.default_rng([noise.seed, *[int(s) for s in stream]])
    return samples + rng.standard_normal(samples.shape) * np.asarray(noise.std)


def gen_min_jerk(segment: MinJerkSegment, rate_hz: float = 200.0) -> Trial:
    """Sample one minimum-jerk segment at ``rate_hz``, both endpoints included."""
    if not segment.duration > 0:
        raise ConfigError("segment duration must be positive")
    n = int(round(segment.duration * rate_hz))
    if n < 2:
        raise ConfigError("duration * rate_hz must be at least 2")
    s = np.arange(n + 1) * (segment.duration / n)
    _, vel, acc = _min_jerk(segment, s)
    return Trial(dyad_id=0, trial_id=0, sample_rate_hz=rate_hz, samples=np.hstack([vel, acc]))


def gen_trial(
    segments: Sequence[AnySegment],
    rate_hz: float = 200.0,
    noise: Optional[NoiseSpec] = None,
    dyad_id: int = 0,
    trial_id: int = 0,
    min_samples: int = DEFAULT_MIN_SAMPLES,
) -> Trial:
    """Concatenate segments into one trial of the leader's planned motion."""
    plan = MotionPlan(segments)
    n = plan.sample_count(rate_hz)
    if n < min_samples:
        raise TrajectoryDataError(
            f"plan lasts {plan.duration:.3f} s ({n} samples); at least {min_samples} samples are needed"
        )
    _, vel, acc = plan.evaluate(np.arange(n) / rate_hz)
    samples = add_noise(np.hstack([vel, acc]), noise, stream=(dyad_id, trial_id))
    return Trial(dyad_id=dyad_id, trial_id=trial_id, sample_rate_hz=rate_hz, samples=samples)
