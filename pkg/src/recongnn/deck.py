"""k-decks: multisets of canonical forms of all induced k-vertex subgraphs."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb
from typing import Iterator, Mapping

from .canon import CanonicalForm, canonical_bytes
from .errors import InvalidArgument, ResourceError
from .graph import Graph, induced_masks

DEFAULT_DECK_BUDGET = 250_000


@dataclass(frozen=True)
class Deck:
    """A k-deck. ``cards`` is sorted ``(form, multiplicity)`` pairs.

    Two decks are equal iff their card multisets (and k) are equal.
    """

    k: int
    cards: tuple[tuple[CanonicalForm, int], ...]

    @classmethod
    def from_counter(cls, k: int, counts: Mapping[bytes, int]) -> "Deck":
        return cls(k, tuple((CanonicalForm(b), c) for b, c in sorted(counts.items())))

    def __len__(self) -> int:
        return sum(c for _, c in self.cards)

    def __iter__(self):
        return iter(self.cards)

    @property
    def counts(self) -> dict[CanonicalForm, int]:
        return dict(self.cards)

    def multiplicity(self, form: CanonicalForm) -> int:
        return self.counts.get(form, 0)

    def to_dict(self) -> dict:
        out = []
        for form, c in self.cards:
            g = form.to_graph()
            out.append({"form": form.hex(), "multiplicity": c, "n": g.n, "m": g.m, "edges": [list(e) for e in g.edges]})
        return {"k": self.k, "total": len(self), "classes": len(self.cards), "cards": out}


def check_budget(n: int, k: int, budget: int, what: str = "deck") -> int:
    total = comb(n, k)
    if total > budget:
        raise ResourceError(
            f"{what} needs C({n},{k}) = {total} subgraphs, above budget {budget}; "
            "raise --budget-subgraphs or use sampled cards",
            knob="budget-subgraphs",
        )
    return total


def iter_cards(g: Graph, k: int) -> Iterator[tuple[tuple[int, ...], Graph]]:
    """Yield ``(S, G[S])`` for every k-subset S in lexicographic order."""
    for s in combinations(range(g.n), k):
        attrs = None if g.vertex_attrs is None else [g.vertex_attrs[v] for v in s]
        yield s, Graph.from_adjacency_masks(induced_masks(g.adj, s), attrs)


def _card_bytes(adj, attrs, s) -> bytes:
    sub = induced_masks(adj, s)
    sa = None if attrs is None else tuple(attrs[v] for v in s)
    return canonical_bytes(sub, sa)


@lru_cache(maxsize=1 << 16)
def deck_counter(adj: tuple[int, ...], attrs: tuple | None, k: int) -> Counter:
    """Multiset of canonical bytes of all induced k-subgraphs (cached)."""
    n = len(adj)
    return Counter(_card_bytes(adj, attrs, s) for s in combinations(range(n), k))


def deck(g: Graph, k: int, budget: int = DEFAULT_DECK_BUDGET) -> Deck:
    """The k-deck of ``g``. ``k = n - 1`` gives the classical deck."""
    if not 1 <= k <= g.n:
        raise InvalidArgument(f"card size k must satisfy 1 <= k <= n={g.n}, got {k}")
    check_budget(g.n, k, budget)
    return Deck.from_counter(k, deck_counter(g.adj, g.vertex_attrs, k))


def card_sizes(d: Deck) -> list[int]:
    return [form.n for form, _ in d.cards]


def unrank_subset(rank: int, n: int, k: int) -> tuple[int, ...]:
    """The ``rank``-th k-subset of range(n) in lexicographic order."""
    out = []
    x = 0
    for slot in range(k, 0, -1):
        while True:
            c = comb(n - x - 1, slot - 1)
            if rank < c:
                break
            rank -= c
            x += 1
        out.append(x)
        x += 1
    return tuple(out)


def sample_subsets(n: int, k: int, count: int, rng) -> list[tuple[int, ...]]:
    """``count`` distinct k-subsets of range(n), uniformly without replacement.

    Returns every subset (lexicographic order) when ``count >= C(n, k)``.
    ``rng`` is a ``numpy.random.Generator``.
    """
    total = comb(n, k)
    if count >= total:
        return list(combinations(range(n), k))
    if total <= 64 * count:
        # dense regime: rejection would stall, unrank distinct ranks instead
        ranks = rng.choice(total, size=count, replace=False)
        return [unrank_subset(int(r), n, k) for r in ranks]
    seen: dict[tuple[int, ...], None] = {}
    while len(seen) < count:
        s = tuple(sorted(int(v) for v in rng.choice(n, size=k, replace=False)))
        seen.setdefault(s, None)
    return list(seen)
