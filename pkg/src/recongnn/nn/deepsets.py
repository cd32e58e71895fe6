"""Sum-decomposition head: rho(pool(phi(x) for x in set))."""

from __future__ import annotations

from typing import Sequence

import numpy as np
import scipy.sparse as sp

from ..errors import InvalidArgument
from .core import MLP, Module


def set_pool_matrix(set_sizes: Sequence[int], weights: Sequence[float]) -> sp.csr_matrix:
    """Sparse (num_sets x num_elements) matrix giving each element of set i weight ``weights[i]``."""
    sizes = np.asarray(set_sizes, dtype=np.int64)
    ids = np.repeat(np.arange(len(sizes)), sizes)
    w = np.asarray(weights, dtype=float)[ids]
    return sp.csr_matrix((w, (ids, np.arange(len(ids)))), shape=(len(sizes), len(ids)))


class DeepSetsHead(Module):
    def __init__(self, phi_dims: list[int], rho_dims: list[int], pooling: str = "mean",
                 rng: np.random.Generator | None = None):
        if pooling not in ("mean", "sum"):
            raise InvalidArgument(f"pooling must be mean or sum, got {pooling!r}")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.phi = MLP(phi_dims, rng)
        self.rho = MLP(rho_dims, rng)
        self.pooling = pooling
        self._pool = None

    @property
    def out_dim(self) -> int:
        return self.rho.d_out

    def pool_weights(self, sampled: Sequence[int], total: Sequence[int]) -> np.ndarray:
        """Per-set weight: 1/|sample| for mean pooling, |all|/|sample| for sum."""
        sampled = np.asarray(sampled, dtype=float)
        if self.pooling == "mean":
            return 1.0 / sampled
        return np.asarray(total, dtype=float) / sampled

    def pooled(self, xs: np.ndarray, pool: sp.csr_matrix) -> np.ndarray:
        self._pool = pool
        return pool @ self.phi.forward(xs)

    def forward(self, xs: np.ndarray, pool: sp.csr_matrix, extra: np.ndarray | None = None) -> np.ndarray:
        """``extra`` (if given) is concatenated to the pooled vector before rho."""
        z = self.pooled(xs, pool)
        if extra is not None:
            z = np.concatenate([z, extra], axis=1)
        return self.rho.forward(z)

    def backward(self, dy: np.ndarray, extra_dim: int = 0) -> tuple[np.ndarray, np.ndarray | None]:
        dz = self.rho.backward(dy)
        dextra = None
        if extra_dim:
            dz, dextra = dz[:, :-extra_dim], dz[:, -extra_dim:]
        return self.phi.backward(self._pool.T @ dz), dextra


def deepsets_apply(head: DeepSetsHead, xs: np.ndarray) -> np.ndarray:
    """Apply the head to one multiset given as rows of ``xs``."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if xs.shape[0] == 0:
        raise InvalidArgument("multiset must be non-empty")
    pool = set_pool_matrix([xs.shape[0]], head.pool_weights([xs.shape[0]], [xs.shape[0]]))
    return head.forward(xs, pool)[0]
