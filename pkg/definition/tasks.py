"""Task families of the synthetic corpus, as leader plan templates.

Translation-only stand-ins for the table-carrying tasks: lateral and
forward/backward moves, diagonals, constant-velocity corridors, stop-and-go
and hallway-style sequences. Every plan starts and ends at rest.
"""
from enum import Enum
from typing import List

from models import ConstVelPhase, MinJerkSegment, RestPhase

LEAD_IN_S = 1.0
LEAD_OUT_S = 0.75


class TaskFamily(Enum):
    LATERAL_LEFT = "lateral_left"
    LATERAL_RIGHT = "lateral_right"
    FORWARD = "forward"
    BACKWARD = "backward"
    DIAGONAL = "diagonal"
    DIAGONAL_RETURN = "diagonal_return"
    CORRIDOR = "corridor"
    STOP_AND_GO = "stop_and_go"
    HALLWAY = "hallway"
    LIFT_OVER = "lift_over"
    LONG_CARRY = "long_carry"
    WEAVE = "weave"


def _mj(dx: float, dy: float, dz: float, duration: float, ds: float, ts: float) -> MinJerkSegment:
    return MinJerkSegment(displacement=(dx * ds, dy * ds, dz * ds), duration=duration * ts)


def _cv(vx: float, vy: float, vz: float, duration: float, blend: float, ds: float, ts: float) -> ConstVelPhase:
    # Scaling distance and time together keeps the plateau speed at ds/ts
    return ConstVelPhase(
        velocity=(vx * ds / ts, vy * ds / ts, vz * ds / ts),
        duration=duration * ts,
        blend_time=blend * ts,
    )


def task_plan(family: TaskFamily, displacement_scale: float = 1.0, duration_scale: float = 1.0) -> List:
    """Leader plan for ``family`` with distances and durations scaled by the given factors."""
    ds, ts = displacement_scale, duration_scale
    moves = {
        TaskFamily.LATERAL_LEFT: [_mj(0.0, 1.5, 0.0, 2.5, ds, ts)],
        TaskFamily.LATERAL_RIGHT: [_mj(0.0, -1.5, 0.0, 2.5, ds, ts)],
        TaskFamily.FORWARD: [_mj(2.0, 0.0, 0.0, 3.0, ds, ts)],
        TaskFamily.BACKWARD: [_mj(-1.5, 0.0, 0.0, 3.0, ds, ts)],
        TaskFamily.DIAGONAL: [_mj(1.5, 1.0, 0.0, 3.0, ds, ts)],
        TaskFamily.DIAGONAL_RETURN: [_mj(-1.5, -1.0, 0.0, 3.0, ds, ts)],
        TaskFamily.CORRIDOR: [_cv(0.8, 0.0, 0.0, 4.0, 0.8, ds, ts)],
        TaskFamily.STOP_AND_GO: [
            _mj(1.0, 0.0, 0.0, 2.0, ds, ts),
            RestPhase(duration=0.5 * ts),
            _mj(1.0, 0.0, 0.0, 2.0, ds, ts),
        ],
        TaskFamily.HALLWAY: [
            _cv(0.9, 0.0, 0.0, 3.0, 0.9, ds, ts),
            _mj(0.0, 1.2, 0.0, 2.0, ds, ts),
        ],
        TaskFamily.LIFT_OVER: [
            _mj(0.0, 0.0, 0.3, 1.2, ds, ts),
            _mj(1.0, 0.0, 0.0, 2.0, ds, ts),
            _mj(0.0, 0.0, -0.3, 1.2, ds, ts),
        ],
        TaskFamily.LONG_CARRY: [_cv(1.0, 0.2, 0.0, 5.0, 1.0, ds, ts)],
        TaskFamily.WEAVE: [
            _mj(0.6, 0.5, 0.0, 1.5, ds, ts),
            _mj(0.6, -0.5, 0.0, 1.5, ds, ts),
            _mj(0.6, 0.5, 0.0, 1.5, ds, ts),
        ],
    }
    return [RestPhase(duration=LEAD_IN_S * ts), *moves[family], RestPhase(duration=LEAD_OUT_S * ts)]
