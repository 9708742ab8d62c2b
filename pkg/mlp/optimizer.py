"""Adam optimizer over MlpModel parameters."""
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, Field

from mlp.network import Gradients, MlpModel


class AdamState(BaseModel):
    """First and second moment estimates plus the step counter."""

    learning_rate: float = Field(default=1e-3, gt=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    eps: float = Field(default=1e-8, gt=0)
    step: int = 0
    m: List[np.ndarray] = []
    v: List[np.ndarray] = []

    class Config:
        arbitrary_types_allowed = True

    @classmethod
    def for_model(cls, model: MlpModel, learning_rate: float = 1e-3, **kwargs) -> "AdamState":
        """Zeroed moments shaped like ``model``."""
        params = _parameters(model)
        return cls(
            learning_rate=learning_rate,
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            **kwargs,
        )


def _parameters(model: MlpModel) -> List[np.ndarray]:
    return [*model.weights, *model.biases]


def optimizer_step(model: MlpModel, gradients: Gradients, state: AdamState) -> Tuple[MlpModel, AdamState]:
    """One bias-corrected Adam update, applied to ``model`` in place."""
    params = _parameters(model)
    grads = [*gradients.weights, *gradients.biases]
    if len(grads) != len(params):
        raise ValueError(f"expected {len(params)} gradient arrays, got {len(grads)}")
    for p, g in zip(params, grads):
        if np.shape(g) != p.shape:
            raise ValueError(f"gradient shape {np.shape(g)} does not match parameter shape {p.shape}")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    elif [m.shape for m in state.m] != [p.shape for p in params]:
        raise ValueError("optimizer state does not match the model's parameter shapes")

    state.step += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** state.step
    correction2 = 1.0 - b2 ** state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= state.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
    return model, state
