"""Pydantic models for plans, configs and reports."""
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, field_validator, model_validator

Vector3 = Tuple[float, float, float]
Vector6 = Tuple[float, float, float, float, float, float]


# Motion plan segments
class MinJerkSegment(BaseModel):
    """Point-to-point quintic move with zero endpoint velocity and acceleration."""
    kind: Literal["min_jerk"] = "min_jerk"
    displacement: Vector3 = Field(..., description="Displacement in meters")
    duration: float = Field(..., gt=0, description="Seconds")

    class Config:
        frozen = True


class ConstVelPhase(BaseModel):
    """Constant-velocity plateau, optionally entered and left through linear ramps."""
    kind: Literal["const_vel"] = "const_vel"
    velocity: Vector3 = Field(..., description="Plateau velocity in m/s")
    duration: float = Field(..., gt=0, description="Seconds, ramps included")
    blend_time: float = Field(default=0.0, ge=0, description="Ramp length in seconds at each end")

    class Config:
        frozen = True

    @model_validator(mode="after")
    def _check_blend(self):
        if 2 * self.blend_time > self.duration:
            raise ValueError("blend ramps do not fit in the phase duration")
        return self


class RestPhase(BaseModel):
    """Object held still."""
    kind: Literal["rest"] = "rest"
    duration: float = Field(..., gt=0, description="Seconds")

    class Config:
        frozen = True


Segment = Annotated[Union[MinJerkSegment, ConstVelPhase, RestPhase], Field(discriminator="kind")]


class NoiseSpec(BaseModel):
    """Per-channel white-noise standard deviations (channel units) and the seed that draws them."""
    std: Vector6
    seed: int = 0

    class Config:
        frozen = True

    @field_validator("std")
    @classmethod
    def _check_std(cls, value):
        if any(s < 0 for s in value):
            raise ValueError("noise std components must be non-negative")
        return value

    @classmethod
    def from_channels(cls, velocity_std: float, acceleration_std: float, seed: int = 0) -> "NoiseSpec":
        """Same std on every velocity channel and every acceleration channel."""
        return cls(std=(velocity_std,) * 3 + (acceleration_std,) * 3, seed=seed)


class FollowerImpedance(BaseModel):
    """Mass-damper-spring coupling of the object/follower to the leader's hand."""
    mass: float = Field(..., gt=0, description="kg")
    damping: float = Field(..., ge=0, description="N*s/m")
    stiffness: float = Field(default=0.0, ge=0, description="N/m")

    class Config:
        frozen = True

    def scaled(self, mass: float = 1.0, damping: float = 1.0, stiffness: float = 1.0) -> "FollowerImpedance":
        """Impedance with each constant multiplied by its factor."""
        return FollowerImpedance(
            mass=self.mass * mass,
            damping=self.damping * damping,
            stiffness=self.stiffness * stiffness,
        )


# Corpus configuration
class CorpusConfig(BaseModel):
    """Synthetic dyad corpus description; loaded from YAML."""
    seed: int = 2017
    dyad_count: int = Field(default=20, ge=1)
    repetitions: int = Field(default=3, ge=1)
    tasks: Optional[List[str]] = Field(default=None, description="Task family names; all twelve when omitted")
    custom_tasks: Dict[str, List[Segment]] = Field(default_factory=dict, description="Extra named plans")
    sample_rate_hz: float = Field(default=200.0, gt=0)
    follower: FollowerImpedance = FollowerImpedance(mass=12.0, damping=60.0, stiffness=40.0)
    duration_jitter: float = Field(default=0.2, ge=0, lt=1)
    displacement_jitter: float = Field(default=0.2, ge=0, lt=1)
    impedance_jitter: float = Field(default=0.2, ge=0, lt=1)
    noise: Optional[NoiseSpec] = None
    min_samples: int = Field(default=200, ge=2, description="Shortest acceptable trial")

    class Config:
        extra = "forbid"


# Curriculum configuration
class CurriculumConfig(BaseModel):
    """Stage schedule and stopping rule for prediction-augmented training."""
    stages: Optional[List[int]] = Field(default=None, description="Explicit k values; overrides schedule")
    schedule: Literal["increment", "doubling"] = "increment"
    max_k: int = Field(default=50, ge=0, le=100)
    start_k: int = Field(default=0, ge=0)
    stage_offset: int = Field(default=0, ge=0, description="Stages already trained before start_k (resume)")
    mse_threshold: float = Field(default=0.05, gt=0)
    threshold_growth: float = Field(default=1.5, ge=1.0)
    patience: int = Field(default=5, ge=1)
    max_steps_per_stage: int = Field(default=20000, ge=1)
    batch_size: int = Field(default=32, ge=1)
    mix_ratio: float = Field(default=0.5, ge=0, le=1, description="Share of real-only windows in k>0 batches")
    validation_every: int = Field(default=1, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0)

    @field_validator("stages")
    @classmethod
    def _check_stages(cls, value):
        if value is not None:
            if not value:
                raise ValueError("stage list must not be empty")
            if any(b <= a for a, b in zip(value, value[1:])):
                raise ValueError("stage k values must increase")
            if value[0] < 0 or value[-1] > 100:
                raise ValueError("stage k values must lie in 0..100")
        return value

    def stage_ks(self) -> List[int]:
        """The k values to train, in order."""
        if self.stages is not None:
            return [k for k in self.stages if k >= self.start_k]
        if self.start_k > self.max_k:
            return []
        ks = [self.start_k]
        while ks[-1] < self.max_k:
            if self.schedule == "doubling":
                ks.append(min(self.max_k, max(1, ks[-1] * 2)))
            else:
                ks.append(ks[-1] + 1)
        return ks

    def threshold_for(self, stage_index: int) -> float:
        """Threshold for the stage at ``stage_index``, counted from the first stage ever run."""
        return self.mse_threshold * self.threshold_growth ** (self.stage_offset + stage_index)


# Reports
class StageReport(BaseModel):
    """Outcome of one curriculum stage."""
    k: int
    steps: int
    final_train_mse: float
    final_validation_mse: float
    threshold: float
    converged: bool
    wall_time_s: float = 0.0

    class Config:
        ser_json_inf_nan = "constants"


class TrainingReport(BaseModel):
    """Per-stage record of a curriculum run."""
    channels: Literal["all", "velocity"] = "all"
    layer_dims: List[int]
    activation: str
    seed: int
    split_seed: Optional[int] = None
    train_dyads: List[int] = []
    validation_dyads: List[int] = []
    stages: List[StageReport] = []

    @property
    def last_converged_k(self) -> Optional[int]:
        converged = [s.k for s in self.stages if s.converged]
        return converged[-1] if converged else None

    def without_timing(self) -> dict:
        """Report as a dict without wall times, for comparisons."""
        data = self.model_dump()
        for stage in data["stages"]:
            stage.pop("wall_time_s", None)
        return data
