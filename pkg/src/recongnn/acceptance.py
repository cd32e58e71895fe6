"""The twelve acceptance checks, shared by ``recongnn audit-all`` and the
test suite. Each check returns a ``CheckResult``; none of them raise on a
failed property.
"""

from __future__ import annotations

import json
import math
import os
import time
from collections import defaultdict
from dataclasses import dataclass
from importlib import resources
from itertools import combinations
from typing import Callable, Iterable

import numpy as np

from .canon import canonical_form, enumerate_graphs
from .datasets import DatasetSpec, build_dataset, kfold_splits
from .deck import deck, deck_counter
from .errors import InvalidArgument
from .generators import csl_graph, enumerate_spiders, enumerate_trees, erdos_renyi, relabel_randomly, srg_pair
from .graph import Graph
from .model import KRule, ReconModel, pooled_exact, pooled_sampled
from .nn import DeepSetsHead, GnnModel, GraphBatch, cross_entropy, mse
from .reconstruction import (
    audit_k_reconstructibility,
    count_induced,
    deck_wl_distinguishes,
    fingerprint_collisions,
    kelly_count,
)
from .training import TrainConfig, evaluate, train
from .variance import identity_rho_model, variance_experiment
from .wl import wl_distinguishes

FULL_TIER_ENV = "RECONGNN_FULL"

# desk-scale training setups for the learning checks
CSL_MODEL = dict(hidden_dim=64, num_layers=4, conv_kind="gcn", readout="mean", standardize=True,
                 degree_features=5, phi_dims=(64,), rho_dims=(64,), train_samples=1)
CSL_TRAIN = dict(epochs=200, batch_size=16, lr=1e-3)
CYCLE_MODEL = dict(hidden_dim=32, num_layers=4, conv_kind="gin", readout="sum", phi_dims=(32,),
                   rho_dims=(32,), train_samples=8)
CYCLE_TRAIN = dict(epochs=60, batch_size=32, lr=1e-3)


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.1f}s)"

    def to_dict(self) -> dict:
        return {"criterion": self.number, "name": self.name, "passed": self.passed, "detail": self.detail}


def _classes_upto(n_max: int, n_min: int = 1) -> Iterable[Graph]:
    for n in range(n_min, n_max + 1):
        yield from enumerate_graphs(n)


# -- 1 ------------------------------------------------------------------------


def check_kelly(n_max: int = 7, pattern_max: int = 4) -> tuple[bool, str]:
    patterns = list(_classes_upto(pattern_max))
    checked = mismatches = 0
    for n in range(2, n_max + 1):
        for g in enumerate_graphs(n):
            d = deck(g, n - 1)
            for h in patterns:
                if h.n >= n:
                    continue
                checked += 1
                if kelly_count(d, h, n) != count_induced(g, h):
                    mismatches += 1
    return mismatches == 0, f"{checked} (graph, pattern) pairs, {mismatches} mismatches"


# -- 2 ------------------------------------------------------------------------


def check_audit(n_max: int = 7) -> tuple[bool, str]:
    parts = []
    ok = True
    for n in range(3, n_max + 1):
        rep = audit_k_reconstructibility(n, n - 1)
        ok &= not rep.colliding_groups
        parts.append(f"n={n}:{rep.classes} classes/{len(rep.colliding_groups)} groups")
    return ok, ", ".join(parts)


# -- 3 ------------------------------------------------------------------------


def check_hierarchy(n_max: int = 7) -> tuple[bool, str]:
    pairs = violations = 0
    for n in range(5, n_max + 1):
        graphs = list(enumerate_graphs(n))
        for k in range(4, n):
            buckets: dict[tuple, list[Graph]] = defaultdict(list)
            for g in graphs:
                buckets[tuple(sorted(deck_counter(g.adj, None, k).items()))].append(g)
            for grp in buckets.values():
                lower = {tuple(sorted(deck_counter(g.adj, None, k - 1).items())) for g in grp}
                pairs += len(grp) * (len(grp) - 1) // 2
                violations += len(lower) > 1
    return violations == 0, f"{pairs} same-deck pairs, {violations} violating groups"


# -- 4 ------------------------------------------------------------------------


def check_fingerprint(n_max: int = 7) -> tuple[bool, str]:
    graphs = list(_classes_upto(n_max))
    bad = fingerprint_collisions(graphs)
    return not bad, f"{len(graphs)} classes, {len(bad)} collisions"


# -- 5 ------------------------------------------------------------------------


def csl_pairs(m_min: int = 9, m_max: int = 20) -> Iterable[tuple[int, int, int]]:
    """(m, r1, r2) for non-isomorphic coprime skip pairs."""
    for m in range(m_min, m_max + 1):
        reps: dict[bytes, int] = {}
        for r in range(2, m - 1):
            if math.gcd(m, r) == 1:
                reps.setdefault(canonical_form(csl_graph(m, r), cap=m).data, r)
        for r1, r2 in combinations(sorted(reps.values()), 2):
            yield m, r1, r2


def check_csl_oracle() -> tuple[bool, str]:
    total = wl_fail = deck_fail = 0
    for m, r1, r2 in csl_pairs():
        a, b = csl_graph(m, r1), csl_graph(m, r2)
        total += 1
        wl_fail += wl_distinguishes(a, b, 1)
        deck_fail += not deck_wl_distinguishes(a, b, m - 1)
    ok = total > 0 and wl_fail == 0 and deck_fail == 0
    return ok, f"{total} pairs; 1-WL separated {wl_fail}; deck 1-WL missed {deck_fail}"


# -- 6 ------------------------------------------------------------------------


def check_srg() -> tuple[bool, str]:
    rook, shri = srg_pair()
    wl2_sep = wl_distinguishes(rook, shri, 2)
    deck_sep = deck_wl_distinguishes(rook, shri, 14)
    return (not wl2_sep) and deck_sep, f"2-WL distinguishes: {wl2_sep}; 14-deck 1-WL distinguishes: {deck_sep}"


# -- 7 ------------------------------------------------------------------------


def find_half_deck_pairs(n_max: int = 12) -> dict:
    """Spider and tree pairs on up to ``n_max`` vertices with equal ceil(n/2)-decks."""
    first = None
    counts = {}
    for n in range(4, n_max + 1):
        k = math.ceil(n / 2)
        for family, gen in (("spiders", enumerate_spiders), ("trees", enumerate_trees)):
            groups = audit_k_reconstructibility(n, k, graphs=list(gen(n))).colliding_groups
            counts[f"{family}-{n}"] = len(groups)
            for grp in groups:
                for a, b in combinations(grp, 2):
                    if first is None and family == "spiders" and wl_distinguishes(a, b, 1):
                        first = {"n": n, "k": k, "a": a.to_dict(), "b": b.to_dict()}
    return {"pair": first, "groups": counts}


def golden_spider_pair() -> dict:
    return json.loads(resources.files("recongnn").joinpath("data/spider_pair.json").read_text())


def check_spiders() -> tuple[bool, str]:
    found = find_half_deck_pairs()
    pair = found["pair"]
    if pair is None:
        return False, "no spider pair with equal ceil(n/2)-decks found"
    a, b = Graph.from_dict(pair["a"]), Graph.from_dict(pair["b"])
    gold = golden_spider_pair()
    ga, gb = Graph.from_dict(gold["a"]), Graph.from_dict(gold["b"])
    same = {canonical_form(a).data, canonical_form(b).data} == {canonical_form(ga).data, canonical_form(gb).data}
    ok = same and wl_distinguishes(a, b, 1) and deck(a, pair["k"]) == deck(b, pair["k"])
    tree_groups = sum(v for k, v in found["groups"].items() if k.startswith("trees"))
    return ok, (f"first pair n={pair['n']} k={pair['k']}, matches golden: {same}; "
                f"tree collision groups up to n=12: {tree_groups}")


# -- 8 ------------------------------------------------------------------------


def run_csl(k_rule: str, folds: int = 5, seed: int = 0, conv_kind: str = "gcn",
            log: Callable[[str], None] | None = None) -> list[float]:
    ds = build_dataset(DatasetSpec("csl", seed=seed))
    labels = [t for _, t in ds.items]
    accs = []
    for fold in range(folds):
        d = ds.with_splits(kfold_splits(labels, folds, fold, ds.seed))
        m = ReconModel.build(ds.in_dim, ds.out_dim, k_rule, seed=seed * 100 + fold,
                             **{**CSL_MODEL, "conv_kind": conv_kind})
        train(m, d, TrainConfig(seed=seed * 100 + fold, **CSL_TRAIN))
        accs.append(evaluate(m, d, "test", "accuracy", seed))
        if log:
            log(f"csl {conv_kind} {k_rule} fold {fold}: {accs[-1]:.1f}%")
    return accs


def check_csl_learning(seed: int = 0) -> tuple[bool, str]:
    gcn = float(np.mean(run_csl("full", seed=seed)))
    gin = float(np.mean(run_csl("full", seed=seed, conv_kind="gin")))
    recon = float(np.mean(run_csl("n-1", seed=seed)))
    ok = gcn <= 20.0 and gin <= 20.0 and recon >= 95.0
    return ok, f"plain GCN {gcn:.1f}%, plain GIN {gin:.1f}% (<= 20); (n-1) GCN {recon:.1f}% (>= 95)"


# -- 9 ------------------------------------------------------------------------


def run_cycles(length: int, k_rule: str, seed: int = 0) -> float:
    ds = build_dataset(DatasetSpec(f"cycles-{length}", size=2000, seed=seed))
    m = ReconModel.build(ds.in_dim, ds.out_dim, k_rule, seed=seed, **CYCLE_MODEL)
    train(m, ds, TrainConfig(seed=seed, **CYCLE_TRAIN))
    return evaluate(m, ds, "test", "accuracy", seed)


def check_cycles(seed: int = 0) -> tuple[bool, str]:
    ok = True
    parts = []
    for length in (4, 6):
        plain = run_cycles(length, "full", seed)
        minus = run_cycles(length, "n-1", seed)
        half = run_cycles(length, "half", seed)
        ok &= minus >= plain + 2.0 and half < minus
        parts.append(f"cycles-{length}: GIN {plain:.1f}, (n-1) {minus:.1f}, half {half:.1f}")
    return ok, "; ".join(parts)


# -- 10 -----------------------------------------------------------------------


def check_variance(seed: int = 0) -> tuple[bool, str]:
    ds = build_dataset(DatasetSpec("padded-connectivity", seed=seed))
    m = identity_rho_model(ds.in_dim, "n-1", seed=seed)
    res = variance_experiment(ds, m, trials=1000, seed=seed)
    ok = res.ordered and res.confidence_recon_le_aug >= 0.95 and res.confidence_aug_le_gnn >= 0.95
    return ok, (f"var gnn {res.var_gnn:.3g} >= aug {res.var_aug:.3g} >= recon {res.var_recon:.3g}; "
                f"confidence {res.confidence_aug_le_gnn:.2f}/{res.confidence_recon_le_aug:.2f}")


# -- 11 -----------------------------------------------------------------------


def check_sampling(seed: int = 0, graphs: int = 10, draws: int = 10_000, n: int = 7, k: int = 5,
                   samples: int = 5) -> tuple[bool, str]:
    rng = np.random.default_rng([seed, 11])
    m = ReconModel.build(1, 2, f"abs:{k}", hidden_dim=8, num_layers=2, phi_dims=(8, 3), rho_dims=(),
                         degree_features=4, seed=seed)
    worst = 0.0
    for _ in range(graphs):
        g = erdos_renyi(n, 0.5, rng)
        exact = pooled_exact(m, g)
        est = np.concatenate([pooled_sampled(m, g, samples, 1000, rng) for _ in range(draws // 1000)])
        se = est.std(axis=0, ddof=1) / math.sqrt(len(est))
        dev = np.abs(est.mean(axis=0) - exact)
        # coordinates with no spread must match to rounding
        z = np.where(se > 0, dev / np.maximum(se, 1e-300), np.where(dev < 1e-9, 0.0, np.inf))
        worst = max(worst, float(z.max()))
    return worst <= 3.0, f"max |mean - exact| / SE over {graphs} graphs = {worst:.2f} (<= 3)"


# -- 12 -----------------------------------------------------------------------


def _rel_err(a: np.ndarray, b: np.ndarray) -> float:
    den = max(np.linalg.norm(a), np.linalg.norm(b))
    return 0.0 if den == 0 else float(np.linalg.norm(a - b) / den)


def gradient_check(params, loss_fn: Callable[[], float], h: float = 1e-5) -> float:
    """Worst per-tensor relative error between stored grads and central differences."""
    worst = 0.0
    for p in params:
        num = np.zeros_like(p.data)
        for i in np.ndindex(p.data.shape):
            old = p.data[i]
            p.data[i] = old + h
            up = loss_fn()
            p.data[i] = old - h
            down = loss_fn()
            p.data[i] = old
            num[i] = (up - down) / (2 * h)
        worst = max(worst, _rel_err(p.grad, num))
    return worst


def _random_graphs(rng, count: int, lo: int = 4, hi: int = 8) -> list[Graph]:
    return [erdos_renyi(int(rng.integers(lo, hi + 1)), 0.45, rng) for _ in range(count)]


def check_hygiene(seed: int = 0, instances: int = 10) -> tuple[bool, str]:
    rng = np.random.default_rng([seed, 12])
    worst_grad = 0.0
    for inst in range(instances):
        graphs = _random_graphs(rng, 3)
        conv = ("gin", "gcn")[inst % 2]
        readout = ("sum", "mean")[(inst // 2) % 2]
        std = bool(inst % 3 == 0)
        jk = bool(inst % 4 == 1)
        gnn = GnnModel(1, 4, 2, conv, readout, jk, std, np.random.default_rng([seed, inst]), degree_features=3)
        head = DeepSetsHead([gnn.out_dim, 4, 3], [3 + gnn.out_dim, 4, 2], ("mean", "sum")[inst % 2],
                            np.random.default_rng([seed, inst, 1]))
        m = ReconModel(gnn, head, KRule.parse(("n-1", "half", "abs:3")[inst % 3]),
                       concat_original=True)
        y = rng.integers(0, 2, size=len(graphs))
        target = rng.normal(size=(len(graphs), 2))

        def loss_fn() -> float:
            out = m.forward(graphs)
            return cross_entropy(out, y)[0] if inst % 2 else mse(out, target)[0]

        m.zero_grad()
        out = m.forward(graphs)
        _, grad = cross_entropy(out, y) if inst % 2 else mse(out, target)
        m.backward(grad)
        worst_grad = max(worst_grad, gradient_check(m.params(), loss_fn))
    worst_perm = 0.0
    for inst in range(instances):
        g = _random_graphs(rng, 1, 6, 9)[0]
        gnn = GnnModel(1, 6, 3, ("gin", "gcn")[inst % 2], ("sum", "mean")[inst % 2],
                       rng=np.random.default_rng([seed, inst, 2]), degree_features=3)
        m = ReconModel(gnn, DeepSetsHead([6, 5], [5, 2], "mean", np.random.default_rng([seed, inst, 3])),
                       KRule.parse("n-2"))
        ref_g = gnn.forward(GraphBatch.from_graphs([g]))
        ref_m = m.forward([g])
        for _ in range(10):
            p = relabel_randomly(g, rng)
            worst_perm = max(worst_perm, float(np.abs(gnn.forward(GraphBatch.from_graphs([p])) - ref_g).max()),
                             float(np.abs(m.forward([p]) - ref_m).max()))
    ok = worst_grad <= 1e-4 and worst_perm <= 1e-9
    return ok, f"worst gradient rel. error {worst_grad:.2e} (<= 1e-4); worst permutation deviation {worst_perm:.1e}"


# -- driver -------------------------------------------------------------------


def full_tier() -> bool:
    return os.environ.get(FULL_TIER_ENV, "") not in ("", "0")


CHECKS: dict[int, tuple[str, Callable[..., tuple[bool, str]]]] = {
    1: ("Kelly oracle equivalence", lambda tier, seed: check_kelly()),
    2: ("(n-1)-reconstruction audit", lambda tier, seed: check_audit(8 if tier == "full" else 7)),
    3: ("deck hierarchy", lambda tier, seed: check_hierarchy()),
    4: ("reconstruction fingerprint injective", lambda tier, seed: check_fingerprint()),
    5: ("CSL: 1-WL fails, (m-1)-deck 1-WL separates", lambda tier, seed: check_csl_oracle()),
    6: ("SRG: 2-WL fails, 14-deck 1-WL separates", lambda tier, seed: check_srg()),
    7: ("spider pair with equal ceil(n/2)-decks", lambda tier, seed: check_spiders()),
    8: ("CSL learning (5-fold)", lambda tier, seed: check_csl_learning(seed)),
    9: ("cycle detection ordering", lambda tier, seed: check_cycles(seed)),
    10: ("estimator variance ordering", lambda tier, seed: check_variance(seed)),
    11: ("sampling estimator unbiased", lambda tier, seed: check_sampling(seed)),
    12: ("gradients and permutation invariance", lambda tier, seed: check_hygiene(seed)),
}


def run_check(number: int, tier: str = "ci", seed: int = 0) -> CheckResult:
    name, fn = CHECKS[number]
    t0 = time.perf_counter()
    passed, detail = fn(tier, seed)
    return CheckResult(number, name, bool(passed), detail, time.perf_counter() - t0)


def run_all(only: list[int] | None = None, tier: str = "ci", seed: int = 0,
            log: Callable[[CheckResult], None] | None = None) -> list[CheckResult]:
    results = []
    for number in only or sorted(CHECKS):
        if number not in CHECKS:
            raise InvalidArgument(f"no acceptance criterion {number}")
        r = run_check(number, tier, seed)
        results.append(r)
        if log:
            log(r)
    return results
