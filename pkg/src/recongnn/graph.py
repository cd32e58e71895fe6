"""Immutable simple graphs and induced subgraphs.

Vertices are ``0..n-1``. Edges are stored as sorted ``(u, v)`` pairs with
``u < v``, in sorted order, so structurally equal graphs compare and
serialize identically. Adjacency is also kept as one integer bitmask per
vertex, which is what the hot loops (canonical labeling, decks) work on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

from .errors import InvalidArgument

_MOD = (1 << 61) - 1
_BASE = 1_000_003


def attr_hash(vec: Sequence[int]) -> int:
    """Polynomial rolling hash of an integer attribute vector.

    h = (len + sum_i (x_i mod p) * B^(i+1)) mod p with p = 2^61 - 1 and
    B = 1_000_003. Used wherever an attribute vector must become a single
    initial color (WL, fingerprints).
    """
    h = len(vec) % _MOD
    mult = 1
    for x in vec:
        mult = (mult * _BASE) % _MOD
        h = (h + (int(x) % _MOD) * mult) % _MOD
    return h


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple[tuple[int, int], ...] = ()
    vertex_attrs: tuple[tuple[int, ...], ...] | None = field(default=None)

    def __init__(self, n: int, edges: Iterable[Sequence[int]] = (), vertex_attrs=None):
        if n < 0:
            raise InvalidArgument(f"vertex count must be >= 0, got {n}")
        norm = set()
        for e in edges:
            u, v = int(e[0]), int(e[1])
            if u == v:
                raise InvalidArgument(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidArgument(f"edge ({u}, {v}) out of range for n={n}")
            norm.add((u, v) if u < v else (v, u))
        if vertex_attrs is not None:
            vertex_attrs = tuple(tuple(int(x) for x in a) for a in vertex_attrs)
            if len(vertex_attrs) != n:
                raise InvalidArgument(f"expected {n} attribute vectors, got {len(vertex_attrs)}")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "edges", tuple(sorted(norm)))
        object.__setattr__(self, "vertex_attrs", vertex_attrs)

    @classmethod
    def from_adjacency_masks(cls, masks: Sequence[int], vertex_attrs=None) -> "Graph":
        n = len(masks)
        edges = [(u, v) for u in range(n) for v in range(u + 1, n) if (masks[u] >> v) & 1]
        return cls(n, edges, vertex_attrs)

    @cached_property
    def adj(self) -> tuple[int, ...]:
        masks = [0] * self.n
        for u, v in self.edges:
            masks[u] |= 1 << v
            masks[v] |= 1 << u
        return tuple(masks)

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        out = [[] for _ in range(self.n)]
        for u, v in self.edges:
            out[u].append(v)
            out[v].append(u)
        return tuple(tuple(sorted(x)) for x in out)

    @property
    def m(self) -> int:
        return len(self.edges)

    def degrees(self) -> list[int]:
        return [len(nb) for nb in self.neighbors]

    def has_edge(self, u: int, v: int) -> bool:
        return bool((self.adj[u] >> v) & 1)

    def permute(self, perm: Sequence[int]) -> "Graph":
        """Relabel vertex ``v`` as ``perm[v]``."""
        if sorted(perm) != list(range(self.n)):
            raise InvalidArgument("perm is not a permutation of the vertex set")
        attrs = None
        if self.vertex_attrs is not None:
            attrs = [None] * self.n
            for v, a in enumerate(self.vertex_attrs):
                attrs[perm[v]] = a
        return Graph(self.n, [(perm[u], perm[v]) for u, v in self.edges], attrs)

    def disjoint_union(self, other: "Graph") -> "Graph":
        if (self.vertex_attrs is None) != (other.vertex_attrs is None):
            raise InvalidArgument("cannot union attributed with unattributed graph")
        off = self.n
        attrs = None
        if self.vertex_attrs is not None:
            attrs = self.vertex_attrs + other.vertex_attrs
        return Graph(self.n + other.n, self.edges + tuple((u + off, v + off) for u, v in other.edges), attrs)

    def complement(self) -> "Graph":
        es = set(self.edges)
        return Graph(self.n, [e for e in combinations(range(self.n), 2) if e not in es], self.vertex_attrs)

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        d = {"n": self.n, "edges": [list(e) for e in self.edges]}
        if self.vertex_attrs is not None:
            d["vertex_attrs"] = [list(a) for a in self.vertex_attrs]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Graph":
        try:
            return cls(d["n"], d.get("edges", []), d.get("vertex_attrs"))
        except (KeyError, TypeError, IndexError) as exc:
            raise InvalidArgument(f"malformed graph object: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    def to_edgelist(self) -> str:
        lines = [f"{self.n} {self.m}"] + [f"{u} {v}" for u, v in self.edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edgelist(cls, text: str) -> "Graph":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not rows or len(rows[0]) != 2:
            raise InvalidArgument("edge list must start with an 'n m' header")
        n, m = int(rows[0][0]), int(rows[0][1])
        edges = [(int(r[0]), int(r[1])) for r in rows[1:]]
        if len(edges) != m:
            raise InvalidArgument(f"header says {m} edges, found {len(edges)}")
        return cls(n, edges)

    def __repr__(self) -> str:
        tag = ", attrs" if self.vertex_attrs is not None else ""
        return f"Graph(n={self.n}, m={self.m}{tag})"


def load_graph(path: str | Path) -> Graph:
    """Read a graph from a ``.json`` file or a plain edge-list file."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json" or text.lstrip().startswith("{"):
        return Graph.from_dict(json.loads(text))
    return Graph.from_edgelist(text)


def save_graph(g: Graph, path: str | Path) -> None:
    path = Path(path)
    if path.suffix == ".json":
        path.write_text(g.to_json() + "\n")
    else:
        path.write_text(g.to_edgelist())


def _compress(mask: int, verts: Sequence[int]) -> int:
    out = 0
    for j, w in enumerate(verts):
        if (mask >> w) & 1:
            out |= 1 << j
    return out


def induced_masks(adj: Sequence[int], verts: Sequence[int]) -> tuple[int, ...]:
    """Adjacency masks of the subgraph induced on ``verts`` (ascending), relabeled 0..k-1."""
    sel = 0
    for w in verts:
        sel |= 1 << w
    return tuple(_compress(adj[v] & sel, verts) for v in verts)


def induced_subgraph(g: Graph, s: Iterable[int]) -> Graph:
    verts = sorted(set(int(v) for v in s))
    if not verts:
        raise InvalidArgument("vertex set must be non-empty")
    if verts[0] < 0 or verts[-1] >= g.n:
        raise InvalidArgument(f"vertex set {verts} not contained in 0..{g.n - 1}")
    attrs = None
    if g.vertex_attrs is not None:
        attrs = [g.vertex_attrs[v] for v in verts]
    return Graph.from_adjacency_masks(induced_masks(g.adj, verts), attrs)
