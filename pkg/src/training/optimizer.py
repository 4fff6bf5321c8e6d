"""Adam with bias-corrected moments and optional global-norm clipping."""

from typing import Mapping

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class AdamState(BaseModel):
    """First and second moment estimates plus the step counter."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    step: int = Field(default=0, ge=0)
    m: dict[str, np.ndarray] = Field(default_factory=dict)
    v: dict[str, np.ndarray] = Field(default_factory=dict)


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_global_norm(grads: Mapping[str, np.ndarray], max_norm: float) -> tuple[dict[str, np.ndarray], float]:
    """
    Rescales all gradients together so their joint L2 norm is at most `max_norm`.

    Returns:
        The (possibly) rescaled gradients and the norm before clipping
    """
    norm = global_norm(grads)
    if norm <= max_norm or norm == 0.0:
        return dict(grads), norm
    factor = max_norm / norm
    return {name: g * factor for name, g in grads.items()}, norm


def adam_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    learning_rate: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    clip_norm: float | None = None,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """
    One Adam update. Inputs are left untouched.

    Args:
        params: Current parameter values
        grads: Gradients with the same names and shapes
        state: Moments from the previous step
        learning_rate: Step size
        beta1: First-moment decay
        beta2: Second-moment decay
        eps: Denominator floor
        clip_norm: Global-norm threshold applied before the update, None disables clipping

    Returns:
        Updated parameters and state
    """

    if clip_norm is not None:
        grads, _ = clip_global_norm(grads, clip_norm)

    step = state.step + 1
    correction1 = 1.0 - beta1**step
    correction2 = 1.0 - beta2**step
    new_params: dict[str, np.ndarray] = {}
    m_new: dict[str, np.ndarray] = {}
    v_new: dict[str, np.ndarray] = {}
    for name, value in params.items():
        g = grads[name]
        m = beta1 * state.m.get(name, np.zeros_like(value)) + (1.0 - beta1) * g
        v = beta2 * state.v.get(name, np.zeros_like(value)) + (1.0 - beta2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        new_params[name] = value - learning_rate * m_hat / (np.sqrt(v_hat) + eps)
        m_new[name] = m
        v_new[name] = v
    return new_params, AdamState(step=step, m=m_new, v=v_new)
