"""Adam optimizer with bias correction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..linalg import ensure_finite


@dataclass(frozen=True)
class AdamParams:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


class Adam:
    """Tracks first/second moments per parameter and applies updates in place.

    The parameter set is fixed at construction; any later change of keys or
    shapes is a hard error.
    """

    def __init__(self, params: dict, hp: AdamParams = AdamParams()):
        self.hp = hp
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict, grads: dict):
        """One Adam update; `grads` must cover exactly the tracked keys."""
        if set(grads) != set(self.m):
            missing = set(self.m) ^ set(grads)
            raise ConfigError(f"gradient keys drifted from optimizer state: {sorted(missing)}")
        self.t += 1
        hp = self.hp
        bc1 = 1.0 - hp.beta1 ** self.t
        bc2 = 1.0 - hp.beta2 ** self.t
        for key, g in grads.items():
            p = params[key]
            if g.shape != p.shape or self.m[key].shape != p.shape:
                raise ConfigError(f"parameter {key} changed shape between steps")
            m = self.m[key]
            v = self.v[key]
            m *= hp.beta1
            m += (1.0 - hp.beta1) * g
            v *= hp.beta2
            v += (1.0 - hp.beta2) * (g * g)
            update = (hp.learning_rate / bc1) * m / (np.sqrt(v / bc2) + hp.epsilon)
            ensure_finite(update, "adam_step")
            p -= update
