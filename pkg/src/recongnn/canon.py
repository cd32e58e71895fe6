"""Exact canonical forms and small-graph enumeration.

Canonical labeling is individualization-refinement: the vertex partition
is refined to an equitable one, a vertex of the first non-singleton cell
is individualized, and the search recurses until the partition is
discrete. Every leaf gives a vertex order; the canonical form is the
lexicographically smallest permuted adjacency matrix over all leaves.
The search tree is built from isomorphism-invariant choices only, so
isomorphic graphs have the same multiset of leaf matrices.

Pruning uses automorphisms found along the way (two leaves with the same
matrix differ by one): sibling candidates in the same orbit of the
pointwise stabilizer of the current path are skipped, and a leaf that
repeats the first or best leaf backjumps to the common ancestor.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

from .errors import UnsupportedSize
from .graph import Graph

DEFAULT_CANON_CAP = 16
MAX_ENUM_N = 8


@dataclass(frozen=True, order=True)
class CanonicalForm:
    """Byte string identifying an isomorphism class.

    Layout: ``n`` as u16, a flag byte for attributes, then (if attributed)
    each vertex's attribute vector in canonical order as a u16 length plus
    i64 entries, then the upper triangle of the canonically ordered
    adjacency matrix packed row by row, most significant bit first.
    """

    data: bytes

    @property
    def n(self) -> int:
        return struct.unpack_from(">H", self.data, 0)[0]

    def to_graph(self) -> Graph:
        """The canonical representative (vertices in canonical order)."""
        n = self.n
        flag = self.data[2]
        off = 3
        attrs = None
        if flag:
            attrs = []
            for _ in range(n):
                (ln,) = struct.unpack_from(">H", self.data, off)
                off += 2
                vec = struct.unpack_from(f">{ln}q", self.data, off)
                off += 8 * ln
                attrs.append(vec)
        bits = int.from_bytes(self.data[off:], "big")
        nbits = n * (n - 1) // 2
        total = len(self.data[off:]) * 8
        edges = []
        idx = 0
        for i in range(n):
            for j in range(i + 1, n):
                if (bits >> (total - 1 - idx)) & 1:
                    edges.append((i, j))
                idx += 1
        assert idx == nbits
        return Graph(n, edges, attrs)

    def hex(self) -> str:
        return self.data.hex()

    def __repr__(self) -> str:
        return f"CanonicalForm(n={self.n}, {self.data[:12].hex()}...)"


def _refine(adj: Sequence[int], cells: list[list[int]]) -> list[list[int]]:
    """Split cells by neighbor counts into every cell until equitable.

    Sub-cells are ordered by their count vectors, which keeps the result
    equivariant under relabeling.
    """
    while True:
        masks = []
        for c in cells:
            m = 0
            for v in c:
                m |= 1 << v
            masks.append(m)
        out: list[list[int]] = []
        split = False
        for c in cells:
            if len(c) == 1:
                out.append(c)
                continue
            groups: dict[tuple, list[int]] = {}
            for v in c:
                a = adj[v]
                key = tuple((a & m).bit_count() for m in masks)
                groups.setdefault(key, []).append(v)
            if len(groups) == 1:
                out.append(c)
            else:
                split = True
                for key in sorted(groups):
                    out.append(groups[key])
        cells = out
        if not split:
            return cells


def _leaf_code(adj: Sequence[int], order: Sequence[int]) -> tuple[int, ...]:
    pos = [0] * len(order)
    for i, v in enumerate(order):
        pos[v] = i
    rows = []
    for v in order:
        a = adj[v]
        r = 0
        while a:
            low = a & -a
            r |= 1 << pos[low.bit_length() - 1]
            a ^= low
        rows.append(r)
    return tuple(rows)


class _Search:
    def __init__(self, adj: Sequence[int]):
        self.adj = adj
        self.n = len(adj)
        self.first = None  # (code, order, path)
        self.best = None
        self.autos: list[list[int]] = []

    def _orbit_rep(self, path: list[int], cand: list[int]) -> dict[int, int]:
        parent = {v: v for v in cand}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for g in self.autos:
            if any(g[p] != p for p in path):
                continue
            for v in cand:
                w = g[v]
                if w in parent:
                    a, b = find(v), find(w)
                    if a != b:
                        parent[max(a, b)] = min(a, b)
        return {v: find(v) for v in cand}

    def _leaf(self, cells, path) -> int | None:
        order = [c[0] for c in cells]
        code = _leaf_code(self.adj, order)
        if self.first is None:
            self.first = self.best = (code, order, path)
            return None
        for ref in (self.first, self.best):
            if code == ref[0]:
                # automorphism: ref order -> this order
                g = [0] * self.n
                for a, b in zip(ref[1], order):
                    g[a] = b
                self.autos.append(g)
                common = 0
                for x, y in zip(path, ref[2]):
                    if x != y:
                        break
                    common += 1
                return common
        if code < self.best[0]:
            self.best = (code, order, path)
        return None

    def run(self, cells, path: list[int]) -> int | None:
        cells = _refine(self.adj, cells)
        t = next((i for i, c in enumerate(cells) if len(c) > 1), None)
        if t is None:
            return self._leaf(cells, path)
        cand = sorted(cells[t])
        depth = len(path)
        explored_roots: set[int] = set()
        for v in cand:
            if explored_roots and self.autos:
                reps = self._orbit_rep(path, cand)
                if reps[v] in {reps[u] for u in explored_roots}:
                    continue
            rest = [u for u in cells[t] if u != v]
            child = cells[:t] + [[v], rest] + cells[t + 1:]
            r = self.run(child, path + [v])
            explored_roots.add(v)
            if r is not None and r < depth:
                return r
        return None


def _initial_cells(n: int, colors: Sequence | None) -> list[list[int]]:
    if colors is None:
        return [list(range(n))] if n else []
    groups: dict = {}
    for v, c in enumerate(colors):
        groups.setdefault(c, []).append(v)
    return [groups[c] for c in sorted(groups)]


@lru_cache(maxsize=1 << 20)
def canonical_order(adj: tuple[int, ...], colors: tuple | None = None) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Return ``(order, code)``: canonical vertex order and its row masks.

    ``colors`` (if given) are sortable per-vertex labels that must be
    preserved; cells are ordered by label.
    """
    n = len(adj)
    if n == 0:
        return (), ()
    s = _Search(adj)
    s.run(_initial_cells(n, colors), [])
    code, order, _ = s.best
    return tuple(order), code


def _pack(n: int, code: Sequence[int], attrs) -> bytes:
    head = struct.pack(">HB", n, 1 if attrs is not None else 0)
    if attrs is not None:
        head += b"".join(struct.pack(f">H{len(a)}q", len(a), *a) for a in attrs)
    bits = 0
    nbits = 0
    for i in range(n):
        row = code[i]
        for j in range(i + 1, n):
            bits = (bits << 1) | ((row >> j) & 1)
            nbits += 1
    pad = (-nbits) % 8
    bits <<= pad
    return head + bits.to_bytes((nbits + pad) // 8, "big")


@lru_cache(maxsize=1 << 20)
def canonical_bytes(adj: tuple[int, ...], attrs: tuple | None = None) -> bytes:
    order, code = canonical_order(adj, attrs)
    cattrs = None if attrs is None else [attrs[v] for v in order]
    return _pack(len(adj), code, cattrs)


def canonical_form(g: Graph, cap: int = DEFAULT_CANON_CAP) -> CanonicalForm:
    """Canonical form of ``g``; equal exactly for isomorphic graphs.

    Vertex attributes are preserved by the isomorphism (they seed the
    initial partition). Raises ``UnsupportedSize`` when ``g.n > cap``.
    """
    if g.n > cap:
        raise UnsupportedSize(f"canonicalization cap is {cap} vertices, graph has {g.n}")
    return CanonicalForm(canonical_bytes(g.adj, g.vertex_attrs))


def canonical_relabel(g: Graph, cap: int = DEFAULT_CANON_CAP) -> Graph:
    """``g`` relabeled into canonical vertex order."""
    return canonical_form(g, cap).to_graph()


def is_isomorphic(a: Graph, b: Graph, cap: int = DEFAULT_CANON_CAP) -> bool:
    if a.n != b.n or a.m != b.m:
        return False
    return canonical_form(a, cap) == canonical_form(b, cap)


@lru_cache(maxsize=None)
def _classes(n: int) -> tuple[bytes, ...]:
    if n <= 1:
        return (canonical_bytes((0,) * n),)
    seen = set()
    for cb in _classes(n - 1):
        base = CanonicalForm(cb).to_graph().adj
        for sub in range(1 << (n - 1)):
            adj = list(base) + [sub]
            for v in range(n - 1):
                if (sub >> v) & 1:
                    adj[v] |= 1 << (n - 1)
            seen.add(canonical_bytes(tuple(adj)))
    return tuple(sorted(seen, key=lambda b: (CanonicalForm(b).to_graph().m, b)))


def enumerate_graphs(n: int) -> Iterator[Graph]:
    """One representative per isomorphism class of simple graphs on ``n`` vertices.

    Classes on n vertices are obtained by adding a vertex with every
    possible neighborhood to each class on n-1 vertices and deduplicating
    by canonical form. Output order: by edge count, then canonical bytes.
    """
    if n < 0 or n > MAX_ENUM_N:
        raise UnsupportedSize(f"enumerate_graphs supports 0 <= n <= {MAX_ENUM_N}, got {n}")
    for cb in _classes(n):
        yield CanonicalForm(cb).to_graph()


def count_graphs(n: int) -> int:
    if n < 0 or n > MAX_ENUM_N:
        raise UnsupportedSize(f"count_graphs supports 0 <= n <= {MAX_ENUM_N}, got {n}")
    return len(_classes(n))
