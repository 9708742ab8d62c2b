"""Forecasters the harness can score, behind one batch interface."""
from typing import Protocol

import numpy as np

from baseline.polynomial import DEFAULT_DEGREE, poly_forecast
from mlp.network import MlpModel
from predictor.rollout import forecast_histories


class Predictor(Protocol):
    """Maps (B, 150, 6) physical-unit histories to (B, horizon, 6) forecasts."""

    name: str

    def forecast(self, histories: np.ndarray, horizon: int) -> np.ndarray:
        """Forecast ``horizon`` steps for each (history_len, 6) history."""
        ...


class NeuralPredictor:
    def __init__(self, model: MlpModel, rate_hz: float = 200.0, name: str = "nn"):
        self.model = model
        self.rate_hz = rate_hz
        self.name = name

    def forecast(self, histories: np.ndarray, horizon: int) -> np.ndarray:
        return forecast_histories(self.model, histories, horizon, self.rate_hz)


class PolynomialPredictor:
    def __init__(self, degree: int = DEFAULT_DEGREE, name: str = None):
        self.degree = degree
        self.name = name or f"poly-{degree}"

    def forecast(self, histories: np.ndarray, horizon: int) -> np.ndarray:
        return poly_forecast(histories, degree=self.degree, horizon=horizon)


class ZeroPredictor:
    """Always forecasts rest; the floor any useful predictor must beat."""

    name = "zero"

    def forecast(self, histories: np.ndarray, horizon: int) -> np.ndarray:
        histories = np.asarray(histories)
        return np.zeros((histories.shape[0], horizon, histories.shape[2]))
