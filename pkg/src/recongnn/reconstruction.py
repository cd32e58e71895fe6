"""Deck-based analyses: reconstructibility audits, Kelly counting,
WL deck distinguishers and the recursive subset fingerprint."""

from __future__ import annotations

import hashlib
import math
import time
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Iterable, Sequence

from .canon import canonical_bytes
from .deck import DEFAULT_DECK_BUDGET, Deck, check_budget, deck, deck_counter, iter_cards
from .errors import CorruptedDeck, InvalidArgument, UnsupportedSize
from .graph import Graph, attr_hash
from .wl import wl1_histograms

FINGERPRINT_CAP = 8


@dataclass
class ReconReport:
    n: int
    k: int
    classes: int
    colliding_groups: list[list[Graph]] = field(default_factory=list)
    elapsed: float = 0.0
    family: str = "all"

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "family": self.family,
            "classes": self.classes,
            "collisions": len(self.colliding_groups),
            "colliding_groups": [[g.to_dict() for g in grp] for grp in self.colliding_groups],
            "elapsed": self.elapsed,
        }


def same_deck(a: Graph, b: Graph, k: int, budget: int = DEFAULT_DECK_BUDGET) -> bool:
    if a.n != b.n:
        raise InvalidArgument(f"decks of graphs with different sizes ({a.n} vs {b.n}) are not comparable")
    return deck(a, k, budget) == deck(b, k, budget)


def _deck_key(g: Graph, k: int) -> tuple:
    return tuple(sorted(deck_counter(g.adj, g.vertex_attrs, k).items()))


def group_by_deck(graphs: Iterable[Graph], k: int, budget: int = DEFAULT_DECK_BUDGET) -> list[list[Graph]]:
    """Groups (size >= 2) of pairwise non-isomorphic graphs sharing a k-deck.

    Inputs are deduplicated by canonical form first.
    """
    uniq: dict[bytes, Graph] = {}
    for g in graphs:
        check_budget(g.n, k, budget)
        uniq.setdefault(canonical_bytes(g.adj, g.vertex_attrs), g)
    buckets: dict[tuple, list[Graph]] = defaultdict(list)
    for g in uniq.values():
        buckets[_deck_key(g, k)].append(g)
    return [grp for grp in buckets.values() if len(grp) > 1]


def audit_k_reconstructibility(n: int, k: int, family: str = "all", graphs: Iterable[Graph] | None = None,
                               budget: int = DEFAULT_DECK_BUDGET) -> ReconReport:
    """Group every isomorphism class in ``family`` on ``n`` vertices by its k-deck.

    An empty ``colliding_groups`` means every graph examined is
    k-reconstructible within the family. ``graphs`` overrides ``family``.
    """
    from .generators import graph_family

    if not 1 <= k <= n:
        raise InvalidArgument(f"need 1 <= k <= n={n}, got {k}")
    t0 = time.perf_counter()
    if graphs is None:
        graphs = list(graph_family(family, n))
        label = family
    else:
        graphs = list(graphs)
        label = "custom"
        for g in graphs:
            if g.n != n:
                raise InvalidArgument(f"graph with {g.n} vertices in an n={n} audit")
    groups = group_by_deck(graphs, k, budget)
    groups.sort(key=lambda grp: [canonical_bytes(g.adj, g.vertex_attrs) for g in grp])
    classes = len({canonical_bytes(g.adj, g.vertex_attrs) for g in graphs})
    return ReconReport(n, k, classes, groups, time.perf_counter() - t0, label)


def kelly_count(d: Deck, h: Graph, n: int) -> int:
    """Number of induced copies of ``h`` in the (unknown) graph behind ``d``.

    Each induced copy on j = |V(h)| vertices lies in exactly C(n-j, k-j) of
    the k-cards, so the copy count summed over cards is divided by that.
    """
    j = h.n
    if j > d.k or j >= n:
        raise InvalidArgument(f"need |V(h)| <= k and |V(h)| < n; got |V(h)|={j}, k={d.k}, n={n}")
    if len(d) != comb(n, d.k):
        raise CorruptedDeck(f"deck has {len(d)} cards, a {d.k}-deck of an {n}-vertex graph has {comb(n, d.k)}")
    target = canonical_bytes(h.adj, h.vertex_attrs)
    total = 0
    for form, mult in d.cards:
        card = form.to_graph()
        if card.n != d.k:
            raise CorruptedDeck(f"card with {card.n} vertices in a {d.k}-deck")
        total += mult * deck_counter(card.adj, card.vertex_attrs, j).get(target, 0)
    per = comb(n - j, d.k - j)
    q, r = divmod(total, per)
    if r:
        raise CorruptedDeck(f"card count {total} not divisible by C({n - j},{d.k - j}) = {per}")
    return q


def count_induced(g: Graph, h: Graph) -> int:
    """Direct count of induced subgraphs of ``g`` isomorphic to ``h``."""
    if h.n > g.n:
        return 0
    return deck_counter(g.adj, g.vertex_attrs, h.n).get(canonical_bytes(h.adj, h.vertex_attrs), 0)


def deck_wl_histograms(graphs: Sequence[Graph], k: int, budget: int = DEFAULT_DECK_BUDGET) -> list[Counter]:
    """For each graph, the multiset of stable 1-WL histograms of its k-cards.

    All cards of all graphs are refined jointly, so the multisets are
    comparable across ``graphs``.
    """
    cards: list[Graph] = []
    owner: list[int] = []
    for i, g in enumerate(graphs):
        check_budget(g.n, k, budget)
        for _, c in iter_cards(g, k):
            cards.append(c)
            owner.append(i)
    hists = wl1_histograms(cards)
    out = [Counter() for _ in graphs]
    for i, h in zip(owner, hists):
        out[i][h] += 1
    return out


def deck_wl_distinguishes(a: Graph, b: Graph, k: int, budget: int = DEFAULT_DECK_BUDGET) -> bool:
    """True iff the multisets of 1-WL histograms over the k-cards of ``a`` and ``b`` differ."""
    if a.n != b.n:
        raise InvalidArgument(f"graphs must have equal sizes, got {a.n} and {b.n}")
    if not 1 <= k <= a.n:
        raise InvalidArgument(f"need 1 <= k <= n={a.n}, got {k}")
    ha, hb = deck_wl_histograms([a, b], k, budget)
    return ha != hb


def _digest(*parts: bytes) -> bytes:
    h = hashlib.blake2b(digest_size=16)
    for p in parts:
        h.update(len(p).to_bytes(4, "big"))
        h.update(p)
    return h.digest()


def full_reconstruction_fingerprint(g: Graph) -> bytes:
    """Bottom-up 128-bit fingerprint over all vertex subsets.

    Pairs get their exact type (edge flag plus the two attribute hashes,
    sorted); every larger subset hashes the sorted digests of its subsets
    with one vertex removed. The result is the digest of V(g).
    """
    n = g.n
    if n > FINGERPRINT_CAP:
        raise UnsupportedSize(f"fingerprint supports n <= {FINGERPRINT_CAP}, got {n}")
    ah = [0] * n if g.vertex_attrs is None else [attr_hash(a) for a in g.vertex_attrs]
    if n == 0:
        return _digest(b"empty")
    if n == 1:
        return _digest(b"vertex", ah[0].to_bytes(8, "big"))
    fp: dict[int, bytes] = {}
    for u, v in combinations(range(n), 2):
        lo, hi = sorted((ah[u], ah[v]))
        fp[(1 << u) | (1 << v)] = _digest(b"pair", bytes([g.has_edge(u, v)]), lo.to_bytes(8, "big"), hi.to_bytes(8, "big"))
    for size in range(3, n + 1):
        for s in combinations(range(n), size):
            mask = 0
            for v in s:
                mask |= 1 << v
            children = sorted(fp[mask & ~(1 << v)] for v in s)
            fp[mask] = _digest(b"set", size.to_bytes(2, "big"), *children)
    return fp[(1 << n) - 1]


def _cond_connectivity(n: int, ell: int, slack: float = 1.0) -> tuple[bool, float]:
    bound = slack * math.sqrt(2 * math.log(n) / math.log(math.log(n)))
    return ell < bound, bound


def _cond_degree_list(n: int, ell: int) -> tuple[bool, float]:
    # evaluated exactly as printed; for ell = 1 the log terms vanish
    lg = math.log(ell)
    e = math.e
    rhs = (ell - lg + 1) * ((e + e * lg + e + 1) / ((ell - 1) * lg - 1)) + 1
    return n >= rhs, rhs


def cycle_theorem_report(n: int, ell: int, near: float = 0.05) -> dict:
    """Both cycle-distinguishability conditions with their bounds.

    ``strict`` uses factor 1 for the (1 + o(1)) term, ``slack`` uses 1.1.
    ``near_boundary`` flags either bound within relative distance ``near``.
    """
    if n < 4 or not 1 <= ell <= n - 3:
        raise InvalidArgument(f"need n >= 4 and 1 <= ell <= n-3, got n={n}, ell={ell}")
    c1, b1 = _cond_connectivity(n, ell)
    c1s, b1s = _cond_connectivity(n, ell, 1.1)
    c2, b2 = _cond_degree_list(n, ell)
    near_flag = abs(ell - b1) <= near * abs(b1) or abs(n - b2) <= near * max(abs(b2), 1.0)
    return {
        "n": n, "ell": ell,
        "connectivity_bound": b1, "connectivity_ok": c1, "connectivity_ok_slack": c1s,
        "degree_list_bound": b2, "degree_list_ok": c2,
        "strict": c1 and c2, "slack": c1s and c2, "near_boundary": near_flag,
    }


def cycle_theorem_conditions(n: int, ell: int) -> bool:
    return cycle_theorem_report(n, ell)["strict"]


def fingerprint_collisions(graphs: Iterable[Graph]) -> list[tuple[Graph, Graph]]:
    """Pairs of non-isomorphic graphs with equal fingerprints."""
    seen: dict[bytes, tuple[bytes, Graph]] = {}
    bad = []
    for g in graphs:
        fp = full_reconstruction_fingerprint(g)
        cf = canonical_bytes(g.adj, g.vertex_attrs)
        if fp in seen and seen[fp][0] != cf:
            bad.append((seen[fp][1], g))
        seen.setdefault(fp, (cf, g))
    return bad
