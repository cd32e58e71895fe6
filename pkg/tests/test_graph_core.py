from itertools import combinations
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_classes, brute_isomorphic, graph_and_perm, graphs, petersen, random_perm
from recongnn.canon import canonical_form, count_graphs, enumerate_graphs, is_isomorphic
from recongnn.deck import deck, sample_subsets, unrank_subset
from recongnn.errors import InvalidArgument, ResourceError, UnsupportedSize
from recongnn.generators import complete_graph, cycle_graph, path_graph, star_graph
from recongnn.graph import Graph, induced_subgraph, load_graph, save_graph


# -- Graph ----------------------------------------------------------------


def test_graph_normalizes_edges():
    g = Graph(3, [(1, 0), (0, 1), (2, 1)])
    assert g.edges == ((0, 1), (1, 2))
    assert g.m == 2


@pytest.mark.parametrize("edges", [[(0, 0)], [(0, 3)], [(-1, 0)]])
def test_graph_rejects_bad_edges(edges):
    with pytest.raises(InvalidArgument):
        Graph(3, edges)


def test_graph_rejects_attr_length():
    with pytest.raises(InvalidArgument):
        Graph(2, [], [[1]])


def test_graph_is_immutable():
    g = cycle_graph(4)
    with pytest.raises(Exception):
        g.n = 5


def test_json_and_edgelist_roundtrip(tmp_path):
    g = Graph(4, [(0, 1), (2, 3)], [[1], [2], [1], [0]])
    p = tmp_path / "g.json"
    save_graph(g, p)
    assert load_graph(p) == g
    h = petersen()
    q = tmp_path / "g.txt"
    q.write_text(h.to_edgelist())
    assert load_graph(q) == h


def test_edgelist_header_mismatch():
    with pytest.raises(InvalidArgument):
        Graph.from_edgelist("3 2\n0 1\n")


# -- induced_subgraph -----------------------------------------------------


def test_induced_subgraph_c4_gives_path():
    card = induced_subgraph(Graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)]), [0, 1, 2])
    assert card == path_graph(3)


@given(graphs())
def test_induced_subgraph_whole_vertex_set_is_identity(g):
    assert induced_subgraph(g, range(g.n)) == g


def test_induced_subgraph_petersen_edge_count(rng):
    g = petersen()
    edges = set(g.edges)
    for _ in range(20):
        s = sorted(rng.choice(10, size=6, replace=False).tolist())
        brute = sum(1 for u, v in combinations(s, 2) if (u, v) in edges)
        assert induced_subgraph(g, s).m == brute


def test_induced_subgraph_keeps_attrs():
    g = Graph(3, [(0, 2)], [[5], [6], [7]])
    card = induced_subgraph(g, [0, 2])
    assert card.vertex_attrs == ((5,), (7,))
    assert card.edges == ((0, 1),)


# -- canonical_form -------------------------------------------------------


def test_canonical_c5_permuted(rng):
    g = cycle_graph(5)
    assert canonical_form(g) == canonical_form(g.permute(random_perm(rng, 5)))


def test_canonical_c6_vs_two_triangles():
    two = cycle_graph(3).disjoint_union(cycle_graph(3))
    assert canonical_form(cycle_graph(6)) != canonical_form(two)


@pytest.mark.parametrize("n,expected", [(1, 1), (2, 2), (3, 4), (4, 11), (5, 34)])
def test_enumerate_graphs_matches_brute_force_dedup(n, expected):
    forms = {canonical_form(g) for g in enumerate_graphs(n)}
    assert len(forms) == expected
    assert len(brute_classes(n)) == expected


@pytest.mark.parametrize("n,expected", [(6, 156), (7, 1044)])
def test_count_graphs_known_sequence(n, expected):
    # OEIS A000088
    assert count_graphs(n) == expected


def test_canonical_form_roundtrip():
    g = petersen()
    assert is_isomorphic(canonical_form(g).to_graph(), g)


def test_canonical_attrs_matter():
    a = Graph(2, [(0, 1)], [[0], [1]])
    b = Graph(2, [(0, 1)], [[1], [0]])
    c = Graph(2, [(0, 1)], [[0], [0]])
    assert canonical_form(a) == canonical_form(b)
    assert canonical_form(a) != canonical_form(c)


def test_canonical_cap():
    with pytest.raises(UnsupportedSize):
        canonical_form(path_graph(17))


def test_enumerate_graphs_cap():
    with pytest.raises(UnsupportedSize):
        list(enumerate_graphs(9))


@settings(max_examples=60, deadline=None)
@given(graph_and_perm())
def test_canonical_form_permutation_invariant(gp):
    g, perm = gp
    assert canonical_form(g.permute(perm)) == canonical_form(g)


@settings(max_examples=60, deadline=None)
@given(graphs(max_n=6), graphs(max_n=6))
def test_canonical_form_agrees_with_brute_force(a, b):
    assert (canonical_form(a) == canonical_form(b)) == brute_isomorphic(a, b)


def test_canonical_form_hundred_perms_per_graph(rng):
    for g in [petersen(), star_graph(5), cycle_graph(8).disjoint_union(path_graph(3))]:
        ref = canonical_form(g)
        for _ in range(100):
            assert canonical_form(g.permute(random_perm(rng, g.n))) == ref


# -- deck -----------------------------------------------------------------


def test_deck_c4_k3():
    d = deck(cycle_graph(4), 3)
    assert len(d.cards) == 1
    form, mult = d.cards[0]
    assert mult == 4 and is_isomorphic(form.to_graph(), path_graph(3))


def test_deck_c5_k4():
    d = deck(cycle_graph(5), 4)
    assert len(d.cards) == 1 and d.cards[0][1] == 5
    assert is_isomorphic(d.cards[0][0].to_graph(), path_graph(4))
    assert sum(form.to_graph().m * c for form, c in d.cards) == 15


def test_deck_budget():
    with pytest.raises(ResourceError) as exc:
        deck(path_graph(16), 8, budget=1000)
    assert exc.value.knob


@settings(max_examples=40, deadline=None)
@given(graph_and_perm(), st.data())
def test_deck_isomorphism_invariant(gp, data):
    g, perm = gp
    k = data.draw(st.integers(1, g.n))
    d = deck(g, k)
    assert d == deck(g.permute(perm), k)
    assert len(d) == comb(g.n, k)


@settings(max_examples=40, deadline=None)
@given(graphs(min_n=3))
def test_kelly_edge_identity(g):
    d = deck(g, g.n - 1)
    assert sum(form.to_graph().m * c for form, c in d.cards) == g.m * (g.n - 2)


# -- subset sampling ------------------------------------------------------


def test_unrank_subset_is_lexicographic():
    assert [unrank_subset(r, 6, 3) for r in range(comb(6, 3))] == list(combinations(range(6), 3))


def test_sample_subsets_full_is_lexicographic(rng):
    assert sample_subsets(5, 3, 100, rng) == list(combinations(range(5), 3))


@pytest.mark.parametrize("n,k,count", [(10, 4, 50), (30, 15, 20), (8, 7, 3)])
def test_sample_subsets_distinct_and_valid(rng, n, k, count):
    s = sample_subsets(n, k, count, rng)
    assert len(s) == count == len(set(s))
    assert all(len(x) == k and list(x) == sorted(x) and 0 <= x[0] and x[-1] < n for x in s)


def test_sample_subsets_uniform(rng):
    # every 2-subset of 5 drawn with probability 3/10 when sampling 3
    counts = np.zeros(10)
    index = {s: i for i, s in enumerate(combinations(range(5), 2))}
    trials = 4000
    for _ in range(trials):
        for s in sample_subsets(5, 2, 3, rng):
            counts[index[s]] += 1
    p = 0.3
    se = np.sqrt(trials * p * (1 - p))
    assert np.all(np.abs(counts - trials * p) < 4 * se)


def test_complete_and_star_helpers():
    assert complete_graph(5).m == 10
    assert star_graph(3).degrees() == [3, 1, 1, 1]
