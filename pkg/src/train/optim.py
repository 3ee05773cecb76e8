"""
TriMorph v2026 - Adam Optimizer
Updates numpy parameter arrays in place.
"""

from typing import Optional, Sequence

import numpy as np

from ..errors import InvalidInputError


class Adam:
    def __init__(
        self,
        params: Sequence[np.ndarray],
        lr: float = 0.001,
        betas: tuple[float, float] = (0.0, 0.99),
        eps: float = 1e-8,
    ):
        if lr < 0:
            raise InvalidInputError("Learning rate must be non-negative")
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]
        self.t = 0

    def step(self, grads: Sequence[np.ndarray], lr: Optional[float] = None):
        if len(grads) != len(self.params):
            raise InvalidInputError(f"Got {len(grads)} gradients for {len(self.params)} parameters")
        lr = self.lr if lr is None else lr
        self.t += 1
        bias1 = 1.0 - self.beta1**self.t
        bias2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            g = np.asarray(g, dtype=np.float64).reshape(p.shape)
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            if lr != 0.0:
                p -= lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)
