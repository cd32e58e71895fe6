"""Parameters, dense layers and the module protocol.

Every module caches what its backward pass needs during ``forward`` and
accumulates parameter gradients in ``backward``. One forward, then one
backward; nested re-entry is not supported.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError


@dataclass
class Tensor:
    """A parameter array with its gradient accumulator."""

    data: np.ndarray
    grad: np.ndarray | None = field(default=None)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def accumulate(self, g: np.ndarray) -> None:
        if g.shape != self.data.shape:
            raise ShapeError(f"gradient shape {g.shape} != parameter shape {self.data.shape}")
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad += g


def glorot_uniform(fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform in ±sqrt(6 / (fan_in + fan_out))."""
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=(fan_in, fan_out))


class Module:
    def named_params(self, prefix: str = "") -> list[tuple[str, Tensor]]:
        out = []
        for name, val in vars(self).items():
            if name.startswith("_"):
                continue
            if isinstance(val, Tensor):
                out.append((prefix + name, val))
            elif isinstance(val, Module):
                out.extend(val.named_params(prefix + name + "."))
            elif isinstance(val, list):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        out.extend(item.named_params(f"{prefix}{name}.{i}."))
        return out

    def params(self) -> list[Tensor]:
        return [t for _, t in self.named_params()]

    def zero_grad(self) -> None:
        for t in self.params():
            t.zero_grad()


class Linear(Module):
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator):
        self.w = Tensor(glorot_uniform(d_in, d_out, rng))
        # zero biases keep every vertex vector on one ray when inputs are
        # constant, which collapses the GNN to walk counting
        bound = 1.0 / np.sqrt(d_in)
        self.b = Tensor(rng.uniform(-bound, bound, size=d_out))
        self._x = None

    @property
    def d_in(self) -> int:
        return self.w.shape[0]

    @property
    def d_out(self) -> int:
        return self.w.shape[1]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.shape[-1] != self.d_in:
            raise ShapeError(f"Linear expects width {self.d_in}, got {x.shape[-1]}")
        self._x = x
        return x @ self.w.data + self.b.data

    def backward(self, dy: np.ndarray) -> np.ndarray:
        self.w.accumulate(self._x.T @ dy)
        self.b.accumulate(dy.sum(axis=0))
        return dy @ self.w.data.T


class MLP(Module):
    """Linear layers with ReLU between them (none after the last).

    ``dims`` of length 1 is the identity map.
    """

    def __init__(self, dims: list[int], rng: np.random.Generator):
        self.dims = list(dims)
        self.layers = [Linear(a, b, rng) for a, b in zip(dims[:-1], dims[1:])]
        self._pre: list[np.ndarray] = []

    @property
    def d_in(self) -> int:
        return self.dims[0]

    @property
    def d_out(self) -> int:
        return self.dims[-1]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.shape[-1] != self.dims[0]:
            raise ShapeError(f"MLP expects width {self.dims[0]}, got {x.shape[-1]}")
        self._pre = []
        for i, lin in enumerate(self.layers):
            x = lin.forward(x)
            if i < len(self.layers) - 1:
                self._pre.append(x)
                x = np.maximum(x, 0.0)
        return x

    def backward(self, dy: np.ndarray) -> np.ndarray:
        for i in range(len(self.layers) - 1, -1, -1):
            if i < len(self.layers) - 1:
                dy = dy * (self._pre[i] > 0)
            dy = self.layers[i].backward(dy)
        return dy


def standardize_forward(x: np.ndarray, eps: float = 1e-5) -> tuple[np.ndarray, tuple]:
    """Per-row feature standardization (no learned affine)."""
    mu = x.mean(axis=1, keepdims=True)
    sigma = np.sqrt(x.var(axis=1, keepdims=True) + eps)
    y = (x - mu) / sigma
    return y, (y, sigma)


def standardize_backward(dy: np.ndarray, cache: tuple) -> np.ndarray:
    y, sigma = cache
    return (dy - dy.mean(axis=1, keepdims=True) - y * (dy * y).mean(axis=1, keepdims=True)) / sigma
