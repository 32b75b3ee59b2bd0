"""Rectified Adam over a mapping of named parameter arrays."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class TrainingFault(FloatingPointError):
    """Raised when a gradient or loss stops being finite."""


@dataclass(frozen=True)
class RAdamHyper:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    weight_decay: float = 1e-4
    epsilon: float = 1e-8

    def __post_init__(self):
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")

    @property
    def rho_inf(self) -> float:
        return 2.0 / (1.0 - self.beta2) - 1.0

    def rho(self, t: int) -> float:
        """Length of the approximated simple moving average at step ``t``."""
        b2t = self.beta2**t
        return self.rho_inf - 2.0 * t * b2t / (1.0 - b2t)

    def rectification(self, t: int) -> float | None:
        """Variance rectification term, or ``None`` while ``rho(t) <= 4``."""
        rho_t = self.rho(t)
        if rho_t <= 4:
            return None
        rho_inf = self.rho_inf
        return math.sqrt(
            (rho_t - 4) * (rho_t - 2) * rho_inf / ((rho_inf - 4) * (rho_inf - 2) * rho_t)
        )

    def first_rectified_step(self, limit: int = 10_000) -> int:
        for t in range(1, limit + 1):
            if self.rho(t) > 4:
                return t
        raise ValueError(f"rectification never activates within {limit} steps")


@dataclass
class RAdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def radam_init(params) -> RAdamState:
    """Zero moments shaped like ``params`` (a name -> array mapping)."""
    return RAdamState(
        0,
        {k: np.zeros_like(np.asarray(p)) for k, p in params.items()},
        {k: np.zeros_like(np.asarray(p)) for k, p in params.items()},
    )


def radam_step(state: RAdamState, params, grads, hyper: RAdamHyper | None = None):
    """Apply one RAdam update and return ``(new_params, new_state)``.

    Weight decay is classic L2: ``weight_decay * theta`` is added to the
    gradient before the moment updates. Inputs are not modified.
    """
    hyper = hyper or RAdamHyper()
    if set(grads) != set(params) or set(state.m) != set(params):
        raise ValueError("params, grads and optimizer state must share the same keys")
    t = state.step + 1
    b1, b2 = hyper.beta1, hyper.beta2
    bc1 = 1.0 - b1**t
    bc2 = 1.0 - b2**t
    rect = hyper.rectification(t)
    new_params, new_m, new_v = {}, {}, {}
    for name, theta in params.items():
        theta = np.asarray(theta)
        g = np.asarray(grads[name])
        if g.shape != theta.shape:
            raise ValueError(f"gradient for {name!r} has shape {g.shape}, expected {theta.shape}")
        if not np.all(np.isfinite(g)):
            raise TrainingFault(f"non-finite gradient for {name!r} at step {t}")
        if hyper.weight_decay:
            g = g + hyper.weight_decay * theta
        m = b1 * state.m[name] + (1 - b1) * g
        v = b2 * state.v[name] + (1 - b2) * g * g
        m_hat = m / bc1
        if rect is None:
            update = hyper.learning_rate * m_hat
        else:
            update = hyper.learning_rate * rect * m_hat / (np.sqrt(v / bc2) + hyper.epsilon)
        new_params[name] = (theta - update).astype(theta.dtype, copy=False)
        new_m[name] = m.astype(theta.dtype, copy=False)
        new_v[name] = v.astype(theta.dtype, copy=False)
    return new_params, RAdamState(t, new_m, new_v)
