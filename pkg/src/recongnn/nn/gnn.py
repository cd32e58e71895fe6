"""Message passing over batches of small graphs.

A ``GraphBatch`` stacks many graphs (typically k-cards of several parent
graphs) into one block-diagonal sparse adjacency so every layer is a
couple of sparse and dense matrix products.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from ..errors import InvalidArgument, ShapeError
from ..graph import Graph
from .core import MLP, Linear, Module, standardize_backward, standardize_forward


def vertex_features(g: Graph) -> np.ndarray:
    """Constant 1 for unattributed graphs, else the attribute vectors as floats."""
    if g.vertex_attrs is None:
        return np.ones((g.n, 1))
    return np.asarray(g.vertex_attrs, dtype=float).reshape(g.n, -1)


@dataclass
class GraphBatch:
    x: np.ndarray
    adj: sp.csr_matrix
    graph_id: np.ndarray
    sizes: np.ndarray

    @property
    def num_graphs(self) -> int:
        return len(self.sizes)

    @property
    def num_nodes(self) -> int:
        return len(self.graph_id)

    @classmethod
    def from_parts(cls, xs: list[np.ndarray], edge_lists: list[np.ndarray]) -> "GraphBatch":
        sizes = np.array([len(x) for x in xs], dtype=np.int64)
        offs = np.concatenate([[0], np.cumsum(sizes)[:-1]]) if len(sizes) else np.zeros(0, dtype=np.int64)
        n = int(sizes.sum())
        rows, cols = [], []
        for off, e in zip(offs, edge_lists):
            if len(e):
                rows.append(e[:, 0] + off)
                cols.append(e[:, 1] + off)
        if rows:
            r = np.concatenate(rows)
            c = np.concatenate(cols)
            data = np.ones(2 * len(r))
            adj = sp.csr_matrix((data, (np.concatenate([r, c]), np.concatenate([c, r]))), shape=(n, n))
        else:
            adj = sp.csr_matrix((n, n))
        x = np.concatenate(xs, axis=0) if xs else np.zeros((0, 1))
        return cls(x, adj, np.repeat(np.arange(len(sizes)), sizes), sizes)

    @classmethod
    def from_graphs(cls, graphs: Sequence[Graph]) -> "GraphBatch":
        return cls.from_parts([vertex_features(g) for g in graphs],
                              [np.asarray(g.edges, dtype=np.int64).reshape(-1, 2) for g in graphs])

    @classmethod
    def from_cards(cls, graphs: Sequence[Graph], subsets: Sequence[Sequence[Sequence[int]]]) -> "GraphBatch":
        """Batch the induced subgraphs ``graphs[i][S]`` for every S in ``subsets[i]``."""
        xs, es = [], []
        for g, subs in zip(graphs, subsets):
            feats = vertex_features(g)
            e = np.asarray(g.edges, dtype=np.int64).reshape(-1, 2)
            for s in subs:
                s = np.asarray(s, dtype=np.int64)
                pos = np.full(g.n, -1, dtype=np.int64)
                pos[s] = np.arange(len(s))
                pu, pv = pos[e[:, 0]], pos[e[:, 1]]
                keep = (pu >= 0) & (pv >= 0)
                xs.append(feats[s])
                es.append(np.stack([pu[keep], pv[keep]], axis=1))
        return cls.from_parts(xs, es)

    def gcn_norm(self) -> sp.csr_matrix:
        """D^-1/2 (A + I) D^-1/2 with degrees counted including the self-loop."""
        if getattr(self, "_gcn", None) is None:
            a = self.adj + sp.identity(self.num_nodes, format="csr")
            d = np.asarray(a.sum(axis=1)).ravel()
            inv = 1.0 / np.sqrt(d)
            self._gcn = sp.diags(inv) @ a @ sp.diags(inv)
            self._gcn = self._gcn.tocsr()
        return self._gcn

    def pool_matrix(self, kind: str) -> sp.csr_matrix:
        n = self.num_nodes
        if kind == "sum":
            w = np.ones(n)
        elif kind == "mean":
            w = 1.0 / self.sizes[self.graph_id]
        else:
            raise InvalidArgument(f"readout must be sum or mean, got {kind!r}")
        return sp.csr_matrix((w, (self.graph_id, np.arange(n))), shape=(self.num_graphs, n))


class _Conv(Module):
    def __init__(self, standardize: bool):
        self.standardize = standardize
        self._pre = None
        self._std = None

    def _post(self, out: np.ndarray) -> np.ndarray:
        if self.standardize:
            out, self._std = standardize_forward(out)
        self._pre = out
        return np.maximum(out, 0.0)

    def _post_back(self, dy: np.ndarray) -> np.ndarray:
        dy = dy * (self._pre > 0)
        if self.standardize:
            dy = standardize_backward(dy, self._std)
        return dy


class GINLayer(_Conv):
    """h_v <- ReLU(MLP(h_v + sum of neighbor h_u)), epsilon fixed at 0.

    The MLP is Linear -> ReLU -> Linear, both of width ``d_out``.
    """

    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, standardize: bool = False):
        super().__init__(standardize)
        self.mlp = MLP([d_in, d_out, d_out], rng)
        self._batch = None

    def forward(self, h: np.ndarray, batch: GraphBatch) -> np.ndarray:
        if h.shape[1] != self.mlp.dims[0]:
            raise ShapeError(f"GIN layer expects width {self.mlp.dims[0]}, got {h.shape[1]}")
        self._batch = batch
        z = h + batch.adj @ h
        return self._post(self.mlp.forward(z))

    def backward(self, dy: np.ndarray) -> np.ndarray:
        dz = self.mlp.backward(self._post_back(dy))
        return dz + self._batch.adj.T @ dz


class GCNLayer(_Conv):
    """h <- ReLU(Â h W + b) with Â the self-loop symmetric normalization."""

    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, standardize: bool = False):
        super().__init__(standardize)
        self.lin = Linear(d_in, d_out, rng)
        self._norm = None

    def forward(self, h: np.ndarray, batch: GraphBatch) -> np.ndarray:
        if h.shape[1] != self.lin.d_in:
            raise ShapeError(f"GCN layer expects width {self.lin.d_in}, got {h.shape[1]}")
        self._norm = batch.gcn_norm()
        return self._post(self.lin.forward(self._norm @ h))

    def backward(self, dy: np.ndarray) -> np.ndarray:
        dz = self.lin.backward(self._post_back(dy))
        return self._norm.T @ dz


def readout(h: np.ndarray, batch: GraphBatch, kind: str = "sum") -> np.ndarray:
    return batch.pool_matrix(kind) @ h


class GnnModel(Module):
    """Stack of GIN or GCN layers followed by a graph readout.

    With ``jumping_knowledge`` the readouts of every layer are concatenated,
    so the output width is ``hidden_dim * num_layers``. ``degree_features=D``
    appends a one-hot of min(degree, D) to the input features; degree is
    the first 1-WL refinement, so this adds no distinguishing power but
    gives unattributed graphs non-collinear inputs.
    """

    def __init__(self, in_dim: int, hidden_dim: int = 64, num_layers: int = 4, conv_kind: str = "gin",
                 readout: str = "sum", jumping_knowledge: bool = False, standardize: bool = False,
                 rng: np.random.Generator | None = None, degree_features: int = 0):
        if conv_kind not in ("gin", "gcn"):
            raise InvalidArgument(f"conv_kind must be gin or gcn, got {conv_kind!r}")
        if readout not in ("sum", "mean"):
            raise InvalidArgument(f"readout must be sum or mean, got {readout!r}")
        rng = rng if rng is not None else np.random.default_rng(0)
        layer_cls = GINLayer if conv_kind == "gin" else GCNLayer
        if degree_features < 0:
            raise InvalidArgument("degree_features must be >= 0")
        self.degree_features = degree_features
        dims = [in_dim + (degree_features + 1 if degree_features else 0)] + [hidden_dim] * num_layers
        self.conv_kind = conv_kind
        self.readout_kind = readout
        self.jumping_knowledge = jumping_knowledge
        self.in_dim = in_dim
        self.hidden_dim = hidden_dim
        self.layers = [layer_cls(a, b, rng, standardize) for a, b in zip(dims[:-1], dims[1:])]
        self._pool = None

    @property
    def out_dim(self) -> int:
        return self.hidden_dim * (len(self.layers) if self.jumping_knowledge else 1)

    def forward(self, batch: GraphBatch) -> np.ndarray:
        self._pool = batch.pool_matrix(self.readout_kind)
        h = self.input_features(batch)
        outs = []
        for layer in self.layers:
            h = layer.forward(h, batch)
            outs.append(h)
        if self.jumping_knowledge:
            return np.concatenate([self._pool @ o for o in outs], axis=1)
        return self._pool @ h

    def input_features(self, batch: GraphBatch) -> np.ndarray:
        if not self.degree_features:
            return batch.x
        deg = np.asarray(batch.adj.sum(axis=1)).ravel().astype(np.int64)
        onehot = np.eye(self.degree_features + 1)[np.minimum(deg, self.degree_features)]
        return np.concatenate([batch.x, onehot], axis=1)

    def backward(self, dg: np.ndarray) -> np.ndarray:
        d = self.hidden_dim
        n_layers = len(self.layers)
        dh = None
        for i in range(n_layers - 1, -1, -1):
            if self.jumping_knowledge:
                local = self._pool.T @ dg[:, i * d:(i + 1) * d]
            else:
                local = self._pool.T @ dg if i == n_layers - 1 else 0.0
            dh = local if dh is None else dh + local
            dh = self.layers[i].backward(dh)
        return dh

    def config(self) -> dict:
        return {"in_dim": self.in_dim, "hidden_dim": self.hidden_dim, "num_layers": len(self.layers),
                "conv_kind": self.conv_kind, "readout": self.readout_kind,
                "jumping_knowledge": self.jumping_knowledge,
                "standardize": self.layers[0].standardize if self.layers else False,
                "degree_features": self.degree_features}


def gin_layer(h: np.ndarray, g: Graph, layer: GINLayer) -> np.ndarray:
    return layer.forward(h, GraphBatch.from_graphs([g]))


def gcn_layer(h: np.ndarray, g: Graph, layer: GCNLayer) -> np.ndarray:
    return layer.forward(h, GraphBatch.from_graphs([g]))
