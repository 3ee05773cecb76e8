"""
TriMorph v2026 - Alignment Networks
Residual dense network predicting a direction for a style or condition
vector from (vector || embedding). The output layer starts at zero, so a fresh
network maps every input to 0.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..assets.rng import RngStream
from ..errors import InvalidInputError

logger = logging.getLogger(__name__)


@dataclass
class AlignmentCache:
    inputs: np.ndarray  # (N, main + cond)
    hidden: list[np.ndarray]  # residual stream entering each block, then the final stream
    block_pre: list[tuple[np.ndarray, np.ndarray]]  # (pre-activation of first linear, of second)
    batch_shape: tuple[int, ...]


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


class AlignmentNet:
    """in-projection -> residual blocks [h + L2(relu(L1(relu(h))))] -> relu -> out-projection."""

    def __init__(self, main_dim: int, cond_dim: int, params: list[np.ndarray], blocks: int):
        self.main_dim = main_dim
        self.cond_dim = cond_dim
        self.blocks = blocks
        expected = 2 + 4 * blocks + 2
        if len(params) != expected:
            raise InvalidInputError(f"Alignment net with {blocks} blocks needs {expected} arrays")
        self.params = [np.array(p, dtype=np.float64) for p in params]
        if self.params[0].shape[1] != main_dim + cond_dim or self.params[-2].shape[0] != main_dim:
            raise InvalidInputError("Alignment net layer shapes do not match its dimensions")

    @classmethod
    def create(
        cls,
        main_dim: int,
        cond_dim: int,
        rng: RngStream,
        width: int = 64,
        blocks: int = 2,
        output_scale: float = 0.0,
    ) -> "AlignmentNet":
        """He-initialized hidden layers; the output layer is zero unless output_scale > 0."""
        in_dim = main_dim + cond_dim

        def dense(label, fan_in, fan_out):
            w, _ = rng.derive(label).normal((fan_out, fan_in), np.sqrt(2.0 / fan_in))
            return [w, np.zeros(fan_out)]

        params = dense("in", in_dim, width)
        for k in range(blocks):
            params += dense(("block", k, 0), width, width)
            params += dense(("block", k, 1), width, width)
        if output_scale > 0.0:
            head, _ = rng.derive("out").normal((main_dim, width), output_scale / np.sqrt(width))
        else:
            head = np.zeros((main_dim, width))
        params += [head, np.zeros(main_dim)]
        return cls(main_dim, cond_dim, params, blocks)

    @property
    def width(self) -> int:
        return self.params[0].shape[0]

    @property
    def in_dim(self) -> int:
        return self.main_dim + self.cond_dim

    @property
    def is_zero(self) -> bool:
        return not np.any(self.params[-2]) and not np.any(self.params[-1])

    def parameters(self) -> list[np.ndarray]:
        return self.params

    def copy(self) -> "AlignmentNet":
        return AlignmentNet(self.main_dim, self.cond_dim, [p.copy() for p in self.params], self.blocks)

    def _join(self, x, r) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.main_dim:
            raise InvalidInputError(f"Alignment net expects {self.main_dim}-d vectors, got {x.shape[-1]}")
        if self.cond_dim == 0:
            return x
        if r is None:
            raise InvalidInputError("This alignment net needs an embedding")
        r = np.asarray(r, dtype=np.float64)
        if r.shape[-1] != self.cond_dim:
            raise InvalidInputError(f"Alignment net expects {self.cond_dim}-d embeddings, got {r.shape[-1]}")
        r = np.broadcast_to(r, x.shape[:-1] + (self.cond_dim,))
        return np.concatenate([x, r], axis=-1)

    def forward_cached(self, x, r=None) -> tuple[np.ndarray, AlignmentCache]:
        joined = self._join(x, r)
        batch_shape = joined.shape[:-1]
        inputs = joined.reshape(-1, self.in_dim)
        p = self.params
        h = inputs @ p[0].T + p[1]
        cache = AlignmentCache(inputs, [], [], batch_shape)
        for k in range(self.blocks):
            w1, b1, w2, b2 = p[2 + 4 * k: 6 + 4 * k]
            cache.hidden.append(h)
            pre1 = _relu(h) @ w1.T + b1
            pre2 = _relu(pre1) @ w2.T + b2
            cache.block_pre.append((pre1, pre2))
            h = h + pre2
        cache.hidden.append(h)
        out = _relu(h) @ p[-2].T + p[-1]
        return out.reshape(batch_shape + (self.main_dim,)), cache

    def forward(self, x, r=None) -> np.ndarray:
        return self.forward_cached(x, r)[0]

    __call__ = forward

    def backward(self, cache: AlignmentCache, grad_out) -> tuple[np.ndarray, Optional[np.ndarray], list[np.ndarray]]:
        """(grad w.r.t. main input, grad w.r.t. embedding or None, parameter gradients)."""
        p = self.params
        g = np.asarray(grad_out, dtype=np.float64).reshape(-1, self.main_dim)
        grads: list[np.ndarray] = [np.empty(0)] * len(p)
        final = cache.hidden[-1]
        grads[-2] = g.T @ _relu(final)
        grads[-1] = g.sum(axis=0)
        gh = (g @ p[-2]) * (final > 0)
        for k in reversed(range(self.blocks)):
            w1, _, w2, _ = p[2 + 4 * k: 6 + 4 * k]
            h_in = cache.hidden[k]
            pre1, _ = cache.block_pre[k]
            grads[4 + 4 * k] = gh.T @ _relu(pre1)
            grads[5 + 4 * k] = gh.sum(axis=0)
            g1 = (gh @ w2) * (pre1 > 0)
            grads[2 + 4 * k] = g1.T @ _relu(h_in)
            grads[3 + 4 * k] = g1.sum(axis=0)
            gh = gh + (g1 @ w1) * (h_in > 0)
        grads[0] = gh.T @ cache.inputs
        grads[1] = gh.sum(axis=0)
        g_in = (gh @ p[0]).reshape(cache.batch_shape + (self.in_dim,))
        g_r = g_in[..., self.main_dim:] if self.cond_dim else None
        return g_in[..., : self.main_dim], g_r, grads

    def jvp(self, joined, v) -> tuple[np.ndarray, np.ndarray]:
        """Tangent propagation through the concatenated input (main || embedding)."""
        joined = np.asarray(joined, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        if joined.shape[-1] != self.in_dim or v.shape[-1] != self.in_dim:
            raise InvalidInputError(f"Alignment jvp expects {self.in_dim}-d input and direction")
        p = self.params
        h = joined @ p[0].T + p[1]
        t = v @ p[0].T
        for k in range(self.blocks):
            w1, b1, w2, b2 = p[2 + 4 * k: 6 + 4 * k]
            pre1 = _relu(h) @ w1.T + b1
            tpre1 = ((h > 0) * t) @ w1.T
            pre2 = _relu(pre1) @ w2.T + b2
            tpre2 = ((pre1 > 0) * tpre1) @ w2.T
            h, t = h + pre2, t + tpre2
        return _relu(h) @ p[-2].T + p[-1], ((h > 0) * t) @ p[-2].T

    def to_tensors(self, prefix: str) -> tuple[dict[str, np.ndarray], dict]:
        tensors = {f"{prefix}.p{k}": value for k, value in enumerate(self.params)}
        meta = {"main_dim": self.main_dim, "cond_dim": self.cond_dim, "blocks": self.blocks}
        return tensors, meta

    @classmethod
    def from_tensors(cls, prefix: str, tensors: dict[str, np.ndarray], meta: dict) -> "AlignmentNet":
        count = 2 + 4 * meta["blocks"] + 2
        params = [tensors[f"{prefix}.p{k}"].astype(np.float64) for k in range(count)]
        return cls(meta["main_dim"], meta["cond_dim"], params, meta["blocks"])


def zero_init(net: AlignmentNet) -> AlignmentNet:
    """Copy with the output layer zeroed; earlier layers untouched."""
    out = net.copy()
    out.params[-2][:] = 0.0
    out.params[-1][:] = 0.0
    return out
