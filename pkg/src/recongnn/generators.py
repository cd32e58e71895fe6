"""Graph-family constructors and exact label oracles."""

from __future__ import annotations

from collections import deque
from functools import lru_cache
from itertools import combinations
from math import gcd
from typing import Iterator, Sequence

import numpy as np

from .canon import CanonicalForm, canonical_bytes, enumerate_graphs
from .errors import InvalidArgument, UnsupportedSize
from .graph import Graph

MAX_TREE_N = 16


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise InvalidArgument(f"cycle needs n >= 3, got {n}")
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def path_graph(n: int) -> Graph:
    if n < 1:
        raise InvalidArgument(f"path needs n >= 1, got {n}")
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def complete_graph(n: int) -> Graph:
    return Graph(n, combinations(range(n), 2))


def star_graph(leaves: int) -> Graph:
    """K_{1,leaves}, center 0."""
    return Graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def spider_graph(leg_lengths: Sequence[int]) -> Graph:
    """A center (vertex 0) joined to disjoint paths of the given lengths."""
    if len(leg_lengths) < 3 or min(leg_lengths) < 1:
        raise InvalidArgument(f"spider needs >= 3 legs of length >= 1, got {list(leg_lengths)}")
    edges = []
    nxt = 1
    for length in leg_lengths:
        prev = 0
        for _ in range(length):
            edges.append((prev, nxt))
            prev = nxt
            nxt += 1
    return Graph(nxt, edges)


def csl_graph(m: int, r: int) -> Graph:
    """Circular skip link graph: the m-cycle plus skip links s -> s + r (mod m)
    along the sequence s_1 = 0, s_{i+1} = s_i + r, which visits every vertex."""
    if r < 2 or r >= m - 1:
        raise InvalidArgument(f"skip length must satisfy 2 <= r < m-1, got m={m}, r={r}")
    if gcd(m, r) != 1:
        raise InvalidArgument(f"m={m} and r={r} are not coprime")
    edges = {(i, (i + 1) % m) for i in range(m)}
    s = 0
    for _ in range(m):
        t = (s + r) % m
        edges.add((s, t))
        s = t
    return Graph(m, edges)


def rook_graph(side: int = 4) -> Graph:
    """Rook's graph on side x side (the line graph of K_{side,side})."""
    n = side * side
    return Graph(n, [(a, b) for a, b in combinations(range(n), 2) if a // side == b // side or a % side == b % side])


def shrikhande_graph() -> Graph:
    """Cayley graph on Z4 x Z4 with connection set {±(1,0), ±(0,1), ±(1,1)}."""
    conn = {(1, 0), (3, 0), (0, 1), (0, 3), (1, 1), (3, 3)}
    return Graph(16, [(a, b) for a, b in combinations(range(16), 2)
                      if ((b // 4 - a // 4) % 4, (b % 4 - a % 4) % 4) in conn])


def srg_pair() -> tuple[Graph, Graph]:
    """(4x4 rook's graph, Shrikhande graph), both SRG(16, 6, 2, 2)."""
    return rook_graph(4), shrikhande_graph()


def apex_example() -> Graph:
    """A 5-cycle plus a vertex joined to all of it, disjoint from a second
    5-cycle (11 vertices). Deleting the apex (vertex 10) leaves 2 x C5."""
    edges = [(i, (i + 1) % 5) for i in range(5)]
    edges += [(5 + i, 5 + (i + 1) % 5) for i in range(5)]
    edges += [(10, i) for i in range(5)]
    return Graph(11, edges)


# -- label oracles ------------------------------------------------------


def bfs_distances(g: Graph, src: int) -> list[int]:
    dist = [-1] * g.n
    dist[src] = 0
    q = deque([src])
    while q:
        u = q.popleft()
        for w in g.neighbors[u]:
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                q.append(w)
    return dist


def is_connected(g: Graph) -> bool:
    if g.n == 0:
        return True
    return min(bfs_distances(g, 0)) >= 0


def diameter(g: Graph) -> int:
    """Largest finite eccentricity; the max over components when disconnected."""
    best = 0
    for v in range(g.n):
        best = max(best, max(bfs_distances(g, v)))
    return best


def spectral_radius(g: Graph, rtol: float = 1e-8, max_iter: int = 200_000) -> float:
    """Largest adjacency eigenvalue by power iteration on A + I.

    The shift keeps bipartite spectra (±lambda) from oscillating. The start
    vector is all ones, which overlaps the Perron vector of every component.
    Stops when the Rayleigh quotient changes by less than ``rtol`` relatively.
    """
    if g.n == 0 or g.m == 0:
        return 0.0
    a = np.zeros((g.n, g.n))
    for u, v in g.edges:
        a[u, v] = a[v, u] = 1.0
    shifted = a + np.eye(g.n)
    x = np.ones(g.n) / np.sqrt(g.n)
    lam = float(x @ shifted @ x)
    for _ in range(max_iter):
        y = shifted @ x
        x = y / np.linalg.norm(y)
        new = float(x @ shifted @ x)
        if abs(new - lam) <= rtol * abs(new):
            lam = new
            break
        lam = new
    return lam - 1.0


def label_oracles(g: Graph) -> tuple[bool, float, float]:
    """(connected, diameter, spectral radius)."""
    return is_connected(g), float(diameter(g)), spectral_radius(g)


def has_cycle_of_length(g: Graph, length: int) -> bool:
    """True iff ``g`` has a (not necessarily induced) cycle of exactly ``length`` edges.

    Depth-first search from each start vertex s over vertices larger than s,
    so every cycle is found from its smallest vertex.
    """
    if length < 3:
        raise InvalidArgument(f"cycle length must be >= 3, got {length}")
    nb = g.neighbors
    for s in range(g.n):
        stack = [(s, 1 << s, 1)]
        while stack:
            u, used, depth = stack.pop()
            for w in nb[u]:
                if depth == length:
                    if w == s:
                        return True
                    continue
                if w > s and not (used >> w) & 1:
                    stack.append((w, used | (1 << w), depth + 1))
    return False


# -- families -------------------------------------------------------------


@lru_cache(maxsize=None)
def _tree_classes(n: int) -> tuple[bytes, ...]:
    if n <= 2:
        return (canonical_bytes(path_graph(n).adj) if n else canonical_bytes(()),)
    seen = set()
    for cb in _tree_classes(n - 1):
        base = CanonicalForm(cb).to_graph().adj
        for v in range(n - 1):
            adj = list(base) + [1 << v]
            adj[v] |= 1 << (n - 1)
            seen.add(canonical_bytes(tuple(adj)))
    return tuple(sorted(seen))


def enumerate_trees(n: int) -> Iterator[Graph]:
    """One tree per isomorphism class on n vertices (leaf augmentation + dedupe)."""
    if n < 1 or n > MAX_TREE_N:
        raise UnsupportedSize(f"enumerate_trees supports 1 <= n <= {MAX_TREE_N}, got {n}")
    for cb in _tree_classes(n):
        yield CanonicalForm(cb).to_graph()


def _partitions(total: int, parts_min: int, largest: int) -> Iterator[list[int]]:
    if total == 0:
        if parts_min <= 0:
            yield []
        return
    for first in range(min(total, largest), 0, -1):
        for rest in _partitions(total - first, parts_min - 1, first):
            yield [first] + rest


def enumerate_spiders(n: int) -> Iterator[Graph]:
    """Every spider on n vertices: leg lengths are partitions of n-1 into >= 3 parts."""
    for legs in _partitions(n - 1, 3, n - 1):
        yield spider_graph(legs)


def spider_legs(n: int) -> list[list[int]]:
    return list(_partitions(n - 1, 3, n - 1))


def graph_family(name: str, n: int) -> Iterator[Graph]:
    if name == "all":
        return enumerate_graphs(n)
    if name == "trees":
        return enumerate_trees(n)
    if name == "spiders":
        return enumerate_spiders(n)
    if name == "regular":
        return (g for g in enumerate_graphs(n) if len(set(g.degrees())) <= 1)
    raise InvalidArgument(f"unknown family {name!r} (expected all|trees|spiders|regular)")


# -- random graphs --------------------------------------------------------


def erdos_renyi(n: int, p: float, rng: np.random.Generator) -> Graph:
    iu = np.triu_indices(n, 1)
    keep = rng.random(len(iu[0])) < p
    return Graph(n, zip(iu[0][keep].tolist(), iu[1][keep].tolist()))


def random_tree(n: int, rng: np.random.Generator) -> Graph:
    """Uniform labeled tree via a random Prüfer sequence."""
    if n <= 2:
        return path_graph(n)
    seq = rng.integers(0, n, size=n - 2).tolist()
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    edges = []
    for x in seq:
        leaf = next(v for v in range(n) if degree[v] == 1)
        edges.append((leaf, x))
        degree[leaf] -= 1
        degree[x] -= 1
    u, v = [w for w in range(n) if degree[w] == 1]
    edges.append((u, v))
    return Graph(n, edges)


def random_forest(n: int, trees: int, rng: np.random.Generator) -> Graph:
    """Random forest with ``trees`` components on a random vertex partition."""
    trees = max(1, min(trees, n))
    perm = rng.permutation(n).tolist()
    cuts = sorted(rng.choice(np.arange(1, n), size=trees - 1, replace=False).tolist()) if trees > 1 else []
    edges = []
    start = 0
    for end in cuts + [n]:
        block = perm[start:end]
        t = random_tree(len(block), rng)
        edges.extend((block[u], block[v]) for u, v in t.edges)
        start = end
    return Graph(n, edges)


def cycle_with_chords(n: int, chords: int, rng: np.random.Generator) -> Graph:
    edges = {(i, (i + 1) % n) if i < (i + 1) % n else ((i + 1) % n, i) for i in range(n)}
    non = [e for e in combinations(range(n), 2) if e not in edges]
    if non and chords:
        pick = rng.choice(len(non), size=min(chords, len(non)), replace=False)
        edges |= {non[i] for i in pick}
    return Graph(n, edges)


def relabel_randomly(g: Graph, rng: np.random.Generator) -> Graph:
    return g.permute(rng.permutation(g.n).tolist())
