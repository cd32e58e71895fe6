"""1-WL and folklore-style 2-WL color refinement.

Colors are renamed every round by the rank of their signature in the
sorted list of all signatures present. When several graphs are refined
together, the ranking runs over the signatures of all of them, so their
histograms are directly comparable.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Sequence

import numpy as np

from .canon import DEFAULT_CANON_CAP, canonical_form
from .deck import sample_subsets
from .errors import InvalidArgument, ResourceError, UnsupportedSize
from .graph import Graph, attr_hash, induced_subgraph

WL2_CAP = 32
DEFAULT_UNION_BUDGET = 200_000

Histogram = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class Coloring:
    """Stable coloring. ``colors`` maps a vertex (arity 1) or an ordered
    pair (arity 2) to its color; ``histogram`` is sorted (color, count)."""

    arity: int
    colors: dict
    histogram: Histogram
    rounds: int

    def num_colors(self) -> int:
        return len(self.histogram)


def _initial_vertex_colors(graphs: Sequence[Graph]) -> list[int]:
    keys = []
    for g in graphs:
        if g.vertex_attrs is None:
            keys.extend([0] * g.n)
        else:
            keys.extend(attr_hash(a) for a in g.vertex_attrs)
    ranks = {k: i for i, k in enumerate(sorted(set(keys)))}
    return [ranks[k] for k in keys]


def _relabel(sigs: list) -> list[int]:
    ranks = {s: i for i, s in enumerate(sorted(set(sigs)))}
    return [ranks[s] for s in sigs]


def refine_1wl(graphs: Sequence[Graph]) -> tuple[list[list[int]], int]:
    """Jointly refine ``graphs`` to a stable 1-WL coloring.

    Returns per-graph color lists and the number of rounds that refined
    the joint partition.
    """
    nbrs: list[tuple[int, ...]] = []
    bounds = []
    off = 0
    for g in graphs:
        nbrs.extend(tuple(u + off for u in nb) for nb in g.neighbors)
        bounds.append((off, off + g.n))
        off += g.n
    colors = _initial_vertex_colors(graphs)
    num = len(set(colors))
    rounds = 0
    while True:
        sigs = [(colors[v], tuple(sorted(colors[u] for u in nbrs[v]))) for v in range(off)]
        new = _relabel(sigs)
        new_num = len(set(new))
        colors = new
        if new_num == num:
            break
        num = new_num
        rounds += 1
    return [colors[a:b] for a, b in bounds], rounds


def _histogram(colors) -> Histogram:
    return tuple(sorted(Counter(colors).items()))


def wl1(g: Graph) -> Coloring:
    (cols,), rounds = refine_1wl([g])
    return Coloring(1, dict(enumerate(cols)), _histogram(cols), rounds)


def wl1_histograms(graphs: Sequence[Graph]) -> list[Histogram]:
    """Stable 1-WL histograms of ``graphs``, comparable across the list."""
    cols, _ = refine_1wl(graphs)
    return [_histogram(c) for c in cols]


def _initial_pair_colors(graphs: Sequence[Graph]) -> list[np.ndarray]:
    keys = []
    for g in graphs:
        ac = [0] * g.n if g.vertex_attrs is None else [attr_hash(a) for a in g.vertex_attrs]
        keys.append([(0 if u == v else 1 + g.has_edge(u, v), ac[u], ac[v]) for u in range(g.n) for v in range(g.n)])
    ranks = {k: i for i, k in enumerate(sorted({k for ks in keys for k in ks}))}
    return [np.array([ranks[k] for k in ks], dtype=np.int64).reshape(g.n, g.n) for ks, g in zip(keys, graphs)]


def refine_2wl(graphs: Sequence[Graph]) -> tuple[list[np.ndarray], int]:
    """Jointly refine ordered-pair colors (folklore-style 2-WL).

    Signature of (u, v): its color plus the sorted multiset over w of
    (color(u, w), color(w, v)).
    """
    for g in graphs:
        if g.n > WL2_CAP:
            raise UnsupportedSize(f"wl2 supports n <= {WL2_CAP}, got {g.n}")
    cols = _initial_pair_colors(graphs)
    num = len({int(x) for c in cols for x in c.ravel()})
    rounds = 0
    while True:
        base = 1 + max(int(c.max()) for c in cols if c.size) if any(c.size for c in cols) else 1
        sigs = []
        for c in cols:
            n = c.shape[0]
            if n == 0:
                continue
            # pairs[u, v, w] = color(u, w) * base + color(w, v)
            pairs = c[:, None, :] * base + c.T[None, :, :]
            pairs.sort(axis=2)
            rows = np.concatenate([c[:, :, None], pairs], axis=2).reshape(n * n, n + 1)
            sigs.extend(map(bytes, rows.astype(">i8")))
        flat = _relabel(sigs)
        new_cols = []
        i = 0
        for c in cols:
            n = c.shape[0]
            new_cols.append(np.array(flat[i:i + n * n], dtype=np.int64).reshape(n, n))
            i += n * n
        new_num = len(set(flat))
        cols = new_cols
        if new_num == num:
            break
        num = new_num
        rounds += 1
    return cols, rounds


def wl2(g: Graph) -> Coloring:
    (c,), rounds = refine_2wl([g])
    colors = {(u, v): int(c[u, v]) for u in range(g.n) for v in range(g.n)}
    return Coloring(2, colors, _histogram(c.ravel().tolist()), rounds)


def wl_distinguishes(a: Graph, b: Graph, arity: int = 1) -> bool:
    """True iff the stable WL histograms of ``a`` and ``b`` differ."""
    if arity == 1:
        ha, hb = wl1_histograms([a, b])
    elif arity == 2:
        ca, cb = refine_2wl([a, b])[0]
        ha, hb = _histogram(ca.ravel().tolist()), _histogram(cb.ravel().tolist())
    else:
        raise InvalidArgument(f"arity must be 1 or 2, got {arity}")
    return ha != hb


def deck_union_graph(g: Graph, k: int, budget: int = DEFAULT_UNION_BUDGET) -> Graph:
    """Disjoint union of all induced k-vertex subgraphs, in lexicographic subset order."""
    if not 1 <= k <= g.n:
        raise InvalidArgument(f"need 1 <= k <= n={g.n}, got {k}")
    size = comb(g.n, k) * k
    if size > budget:
        raise ResourceError(f"deck union would have {size} vertices, above budget {budget}", knob="budget-subgraphs")
    edges = []
    attrs = [] if g.vertex_attrs is not None else None
    off = 0
    for s in combinations(range(g.n), k):
        card = induced_subgraph(g, s)
        edges.extend((u + off, v + off) for u, v in card.edges)
        if attrs is not None:
            attrs.extend(card.vertex_attrs)
        off += k
    return Graph(off, edges, attrs)


def wl_collision_rate(g: Graph, k: int, sample_count: int, seed: int, cap: int = DEFAULT_CANON_CAP) -> float:
    """Fraction of unordered pairs of sampled k-cards that are non-isomorphic
    yet receive equal 1-WL histograms.

    Cards are ``sample_count`` distinct uniformly drawn k-subsets (all of
    them when that exceeds C(n, k)). Returns 0.0 when fewer than two cards
    are drawn.
    """
    if not 3 <= k <= g.n:
        raise InvalidArgument(f"need 3 <= k <= n={g.n}, got {k}")
    if k > cap:
        raise UnsupportedSize(f"card size {k} above canonicalization cap {cap}")
    rng = np.random.default_rng(seed)
    subsets = sample_subsets(g.n, k, sample_count, rng)
    cards = [induced_subgraph(g, s) for s in subsets]
    if len(cards) < 2:
        return 0.0
    forms = [canonical_form(c, cap) for c in cards]
    hists = wl1_histograms(cards)
    bad = sum(1 for i, j in combinations(range(len(cards)), 2) if forms[i] != forms[j] and hists[i] == hists[j])
    return bad / comb(len(cards), 2)
