"""Configuration management for the intent forecasting toolkit."""
from typing import List, Literal

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Toolkit settings loaded from environment variables (prefix INTENT_)."""

    # Data layout
    sample_rate_hz: float = 200.0
    horizon: int = 50
    eval_horizon: int = 100

    # Dataset split and scaling
    train_fraction: float = 0.75
    scaler_fit_on: Literal["all", "train"] = "all"  # "all" pools every trial

    # Seeds
    corpus_seed: int = 2017
    split_seed: int = 7
    train_seed: int = 11
    noise_seed: int = 23
    robot_seed: int = 31

    # Input noise used by the robustness evaluation
    noise_velocity_std: float = 0.01  # m/s
    noise_acceleration_std: float = 0.1  # m/s^2

    # Network
    hidden_dims: List[int] = [100, 100, 100]
    activation: Literal["tanh", "relu", "identity"] = "tanh"
    batch_size: int = 32
    learning_rate: float = 1e-3

    # Curriculum
    mse_threshold: float = 0.05
    threshold_growth: float = 1.5
    patience: int = 5
    max_steps_per_stage: int = 20000
    max_k: int = 50
    schedule: Literal["increment", "doubling"] = "increment"
    mix_ratio: float = 0.5
    validation_every: int = 1

    # Polynomial baseline
    poly_degree: int = 8

    # Runtime
    threads: int = 0  # 0 picks a machine-dependent default
    eval_chunk_size: int = 2048
    log_level: str = "INFO"
    output_dir: str = "runs"

    class Config:
        env_file = ".env"
        env_prefix = "INTENT_"
        case_sensitive = False


settings = Settings()
