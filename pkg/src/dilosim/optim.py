"""Inner and outer optimizers.

Inner: Adam with bias correction (optional decoupled weight decay, off by
default). Outer: SGD with Nesterov momentum in the look-ahead form

    v <- mu * v + delta
    theta <- anchor - lr * (mu * v + delta)

applied to averaged outer gradients. Steps are pure functions: they return a
new state and a new parameter vector and never mutate their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, NumericError
from .tensorcore import ParamVector


@dataclass(frozen=True)
class AdamState:
    m: ParamVector
    v: ParamVector
    t: int
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.99
    eps: float = 1e-8
    weight_decay: float = 0.0

    @classmethod
    def init(cls, dim: int, lr: float = 0.01, beta1: float = 0.9, beta2: float = 0.99,
             eps: float = 1e-8, weight_decay: float = 0.0) -> "AdamState":
        return cls(m=np.zeros(dim), v=np.zeros(dim), t=0, lr=lr, beta1=beta1,
                   beta2=beta2, eps=eps, weight_decay=weight_decay)

    def reset(self) -> "AdamState":
        """Fresh moments and step counter, same hyperparameters."""
        return replace(self, m=np.zeros_like(self.m), v=np.zeros_like(self.v), t=0)


def adam_step(state: AdamState, theta: ParamVector, g: ParamVector) -> tuple[AdamState, ParamVector]:
    """One Adam update. Returns (new state, new parameters)."""
    if theta.shape != g.shape or state.m.shape != theta.shape:
        raise ConfigurationError(
            f"dimension mismatch: params {theta.shape}, grad {g.shape}, state {state.m.shape}")
    if not np.all(np.isfinite(g)):
        raise NumericError("non-finite gradient passed to adam_step")
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * g
    v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    step = m_hat / (np.sqrt(v_hat) + state.eps)
    if state.weight_decay != 0.0:
        step = step + state.weight_decay * theta
    new_theta = theta - state.lr * step
    return replace(state, m=m, v=v, t=t), new_theta


@dataclass(frozen=True)
class NesterovState:
    velocity: ParamVector
    lr: float = 0.4
    momentum: float = 0.9

    @classmethod
    def init(cls, dim: int, lr: float = 0.4, momentum: float = 0.9) -> "NesterovState":
        return cls(velocity=np.zeros(dim), lr=lr, momentum=momentum)


def nesterov_outer_step(state: NesterovState, anchor: ParamVector,
                        delta: ParamVector) -> tuple[NesterovState, ParamVector]:
    """Apply an outer gradient `delta` to `anchor` with Nesterov momentum."""
    if anchor.shape != delta.shape or state.velocity.shape != anchor.shape:
        raise ConfigurationError(
            f"dimension mismatch: anchor {anchor.shape}, delta {delta.shape}, velocity {state.velocity.shape}")
    if not np.all(np.isfinite(delta)):
        raise NumericError("non-finite outer gradient passed to nesterov_outer_step")
    velocity = state.momentum * state.velocity + delta
    new_params = anchor - state.lr * (state.momentum * velocity + delta)
    return replace(state, velocity=velocity), new_params


def sgd_step(theta: ParamVector, g: ParamVector, lr: float) -> ParamVector:
    """Plain gradient step theta - lr * g."""
    if theta.shape != g.shape:
        raise ConfigurationError(f"dimension mismatch: params {theta.shape}, grad {g.shape}")
    return theta - lr * g
