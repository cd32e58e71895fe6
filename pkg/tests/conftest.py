"""Shared independent oracles for the test suite.

The oracles here are deliberately naive (brute-force permutations,
networkx) so they do not share code paths with the package.
"""

from __future__ import annotations

from itertools import combinations, permutations

import networkx as nx
import numpy as np
import pytest
from hypothesis import strategies as st

from recongnn.graph import Graph


@st.composite
def graphs(draw, max_n=7, min_n=1):
    n = draw(st.integers(min_n, max_n))
    pairs = list(combinations(range(n), 2))
    keep = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph(n, [p for p, k in zip(pairs, keep) if k])


@st.composite
def graph_and_perm(draw, max_n=7):
    g = draw(graphs(max_n))
    return g, draw(st.permutations(range(g.n)))


def to_nx(g: Graph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges)
    return h


def from_nx(h: nx.Graph) -> Graph:
    h = nx.convert_node_labels_to_integers(h)
    return Graph(h.number_of_nodes(), h.edges())


def brute_code(g: Graph) -> tuple:
    """Lexicographically smallest adjacency bitstring over all n! orderings."""
    best = None
    for order in permutations(range(g.n)):
        code = tuple(int(g.has_edge(order[i], order[j])) for i in range(g.n) for j in range(i + 1, g.n))
        if best is None or code < best:
            best = code
    return (g.n, best)


def brute_isomorphic(a: Graph, b: Graph) -> bool:
    return a.n == b.n and a.m == b.m and brute_code(a) == brute_code(b)


def brute_classes(n: int) -> set:
    """Isomorphism classes on n vertices by deduplicating all labeled graphs."""
    pairs = list(combinations(range(n), 2))
    out = set()
    for mask in range(1 << len(pairs)):
        g = Graph(n, [p for i, p in enumerate(pairs) if (mask >> i) & 1])
        out.add(brute_code(g))
    return out


def nx_count_induced(g: Graph, h: Graph) -> int:
    """Induced copies of h in g: subsets of |V(h)| vertices isomorphic to h."""
    gn, hn = to_nx(g), to_nx(h)
    return sum(1 for s in combinations(range(g.n), h.n) if nx.is_isomorphic(gn.subgraph(s), hn))


def brute_has_cycle(g: Graph, length: int) -> bool:
    """Factorial-time check over every vertex sequence of the given length."""
    for s in combinations(range(g.n), length):
        first = s[0]
        for rest in permutations(s[1:]):
            seq = (first,) + rest
            if all(g.has_edge(seq[i], seq[(i + 1) % length]) for i in range(length)):
                return True
    return False


def petersen() -> Graph:
    return from_nx(nx.petersen_graph())


def random_perm(rng: np.random.Generator, n: int) -> list[int]:
    return rng.permutation(n).tolist()


def numeric_grad(f, arr: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of scalar ``f()`` w.r.t. ``arr`` (mutated in place)."""
    out = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = arr[i]
        arr[i] = old + h
        fp = f()
        arr[i] = old - h
        fm = f()
        arr[i] = old
        out[i] = (fp - fm) / (2 * h)
    return out


def rel_err(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance check lines, echoed in the terminal summary so they survive output capture
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
