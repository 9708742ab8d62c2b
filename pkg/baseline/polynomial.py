"""Per-channel polynomial fit of a history window, extrapolated forward.

Time is normalized so the history spans tau in [-1, 0] (oldest to newest
sample); step h ahead sits at tau = h / (L - 1). The fit uses a Legendre
basis in x = 2*tau + 1 and a QR least-squares solve.
"""
import logging
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.linalg as la
from numpy.polynomial import legendre
from pydantic import BaseModel, field_validator, model_validator

from errors import NumericalError, TrajectoryDataError
from predictor.rollout import Forecast, check_horizon
from trajectory.types import N_CHANNELS

logger = logging.getLogger(__name__)

DEFAULT_DEGREE = 8
# Relative size of the smallest R diagonal entry below which the fit is rank deficient
RANK_TOL = 1e-12


class PolyFit(BaseModel):
    """Legendre coefficients, one column per channel."""

    degree: int = DEFAULT_DEGREE
    coeffs: np.ndarray
    history_len: int
    sample_rate_hz: float = 200.0

    class Config:
        frozen = True
        arbitrary_types_allowed = True

    @field_validator("coeffs", mode="before")
    @classmethod
    def _check_coeffs(cls, value):
        array = np.array(value, dtype=np.float64)
        if array.ndim != 2:
            raise ValueError("coeffs must be (degree + 1, channels)")
        if not np.all(np.isfinite(array)):
            raise ValueError("coeffs must be finite")
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def _check_degree(self):
        if self.degree < 0 or self.degree + 1 > self.history_len:
            raise ValueError("degree + 1 must not exceed the history length")
        if self.coeffs.shape[0] != self.degree + 1:
            raise ValueError("coeffs rows must equal degree + 1")
        return self


def _history_x(length: int) -> np.ndarray:
    tau = np.arange(length) / (length - 1) - 1.0
    return 2.0 * tau + 1.0


def _future_x(length: int, horizon: int, step_scale: float = 1.0) -> np.ndarray:
    tau = np.arange(1, horizon + 1) * step_scale / (length - 1)
    return 2.0 * tau + 1.0


def _check_degree(degree: int, length: int) -> None:
    if degree < 0:
        raise ValueError("degree must be non-negative")
    if length < 2 or degree + 1 > length:
        raise ValueError(f"degree {degree} needs at least {degree + 1} history samples (and at least 2), got {length}")


@lru_cache(maxsize=64)
def _least_squares_operator(length: int, degree: int) -> np.ndarray:
    """(degree + 1, length) matrix mapping history values to Legendre coefficients."""
    vander = legendre.legvander(_history_x(length), degree)
    q, r = la.qr(vander, mode="economic")
    diag = np.abs(np.diag(r))
    if diag.min() <= RANK_TOL * diag.max():
        raise NumericalError(f"rank-deficient polynomial fit (degree {degree}, {length} samples)")
    operator = la.solve_triangular(r, q.T)
    operator.setflags(write=False)
    return operator


@lru_cache(maxsize=64)
def _extrapolation_operator(length: int, degree: int, horizon: int) -> np.ndarray:
    """(horizon, length) matrix mapping a history directly to its forecast."""
    operator = legendre.legvander(_future_x(length, horizon), degree) @ _least_squares_operator(length, degree)
    operator.setflags(write=False)
    return operator


def _check_values(values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise TrajectoryDataError("polynomial fit needs finite history values")


def fit_poly(history, degree: int = DEFAULT_DEGREE, sample_rate_hz: float = 200.0) -> PolyFit:
    """Least-squares polynomial per channel over the whole history."""
    history = np.asarray(history, dtype=np.float64)
    if history.ndim != 2:
        raise ValueError("history must be (length, channels)")
    _check_degree(degree, history.shape[0])
    _check_values(history)
    coeffs = _least_squares_operator(history.shape[0], degree) @ history
    return PolyFit(degree=degree, coeffs=coeffs, history_len=history.shape[0], sample_rate_hz=sample_rate_hz)


def evaluate_fit(fit: PolyFit, tau) -> np.ndarray:
    """Fitted values at normalized times ``tau``; -1..0 covers the history."""
    x = 2.0 * np.asarray(tau, dtype=np.float64) + 1.0
    return legendre.legvander(x, fit.degree) @ fit.coeffs


def extrapolate(fit: PolyFit, horizon: int = 50, rate_hz: Optional[float] = None) -> Forecast:
    """Evaluate the fit at steps +1..+horizon after the newest history sample.

    ``rate_hz`` defaults to the rate the history was sampled at; a different
    rate spaces the forecast steps accordingly.
    """
    check_horizon(horizon)
    if fit.coeffs.shape[1] != N_CHANNELS:
        raise ValueError(f"a forecast needs a {N_CHANNELS}-channel fit")
    step_scale = 1.0 if rate_hz is None else fit.sample_rate_hz / rate_hz
    x = _future_x(fit.history_len, horizon, step_scale)
    return Forecast(steps=legendre.legvander(x, fit.degree) @ fit.coeffs, horizon=horizon)


def poly_forecast(histories, degree: int = DEFAULT_DEGREE, horizon: int = 50) -> np.ndarray:
    """(B, horizon, C) extrapolations of (B, L, C) histories with one shared decomposition."""
    histories = np.asarray(histories, dtype=np.float64)
    if histories.ndim != 3:
        raise ValueError("histories must be (batch, length, channels)")
    check_horizon(horizon)
    _check_degree(degree, histories.shape[1])
    _check_values(histories)
    operator = _extrapolation_operator(histories.shape[1], degree, horizon)
    return np.einsum("hl,blc->bhc", operator, histories)
