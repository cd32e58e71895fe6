"""Synthetic graph-property datasets and their JSON-lines serialization.

Every item is generated from its own RNG stream ``default_rng([seed, index])``
so the dataset does not depend on generation order.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .canon import canonical_form
from .errors import GenerationError, InvalidArgument, InvalidDataset
from .generators import (
    csl_graph,
    cycle_with_chords,
    erdos_renyi,
    has_cycle_of_length,
    is_connected,
    label_oracles,
    random_forest,
    random_tree,
    relabel_randomly,
)
from .graph import Graph, induced_subgraph

CSL_M = 41
CSL_SKIPS = (2, 3, 4, 5, 6, 9, 11, 12, 13, 16)
CYCLE_MEAN_N = {"desk": {4: 12, 6: 16, 8: 20}, "large": {4: 36, 6: 49, 8: 62}}
MAX_RETRIES = 2000

Target = Any


@dataclass
class DatasetSpec:
    """What to build. ``name`` is csl, cycles-4/6/8, multitask or padded-connectivity."""

    name: str
    size: int | None = None
    seed: int = 0
    scale: str = "desk"
    mean_n: int | None = None
    twin_fraction: float = 0.25
    ell: int = 1
    val_fraction: float = 0.1
    test_fraction: float = 0.1


@dataclass
class Dataset:
    name: str
    items: list[tuple[Graph, Target]]
    splits: dict[str, list[int]]
    task_kind: str
    seed: int
    num_classes: int = 0
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.items)

    @property
    def out_dim(self) -> int:
        if self.task_kind == "classification":
            return self.num_classes
        return len(self.items[0][1])

    @property
    def in_dim(self) -> int:
        g = self.items[0][0]
        return 1 if g.vertex_attrs is None else len(g.vertex_attrs[0])

    def split(self, name: str) -> tuple[list[Graph], np.ndarray]:
        idx = self.splits[name]
        graphs = [self.items[i][0] for i in idx]
        targets = [self.items[i][1] for i in idx]
        if self.task_kind == "classification":
            return graphs, np.asarray(targets, dtype=np.int64)
        return graphs, np.asarray(targets, dtype=float).reshape(len(idx), -1)

    def with_splits(self, splits: dict[str, list[int]]) -> "Dataset":
        return Dataset(self.name, self.items, splits, self.task_kind, self.seed, self.num_classes, dict(self.meta))

    def validate(self) -> None:
        seen = sorted(i for idx in self.splits.values() for i in idx)
        if seen != list(range(len(self.items))):
            raise InvalidDataset("splits must partition the item indices")
        if self.task_kind == "classification":
            if any(not 0 <= int(t) < self.num_classes for _, t in self.items):
                raise InvalidDataset("classification target out of range")
        elif self.name == "multitask" and any(len(t) != 3 for _, t in self.items):
            raise InvalidDataset("multitask targets must have arity 3")


def _item_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def random_splits(n: int, seed: int, val_fraction: float, test_fraction: float) -> dict[str, list[int]]:
    perm = np.random.default_rng([seed, 1 << 30]).permutation(n).tolist()
    n_test = int(round(n * test_fraction))
    n_val = int(round(n * val_fraction))
    return {"train": sorted(perm[n_test + n_val:]), "val": sorted(perm[n_test:n_test + n_val]),
            "test": sorted(perm[:n_test])}


def kfold_splits(labels, folds: int, fold: int, seed: int = 0) -> dict[str, list[int]]:
    """Stratified folds: ``fold`` is test, the next fold is val, the rest train."""
    if not 0 <= fold < folds:
        raise InvalidArgument(f"fold must be in [0, {folds}), got {fold}")
    labels = np.asarray(labels)
    rng = np.random.default_rng([seed, 1 << 31])
    assign = np.empty(len(labels), dtype=np.int64)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(len(idx))]
        assign[idx] = np.arange(len(idx)) % folds
    val = (fold + 1) % folds
    return {"train": np.flatnonzero((assign != fold) & (assign != val)).tolist(),
            "val": np.flatnonzero(assign == val).tolist(),
            "test": np.flatnonzero(assign == fold).tolist()}


# -- csl ------------------------------------------------------------------


def _build_csl(spec: DatasetSpec) -> Dataset:
    copies = spec.size // len(CSL_SKIPS) if spec.size else 15
    reps = [csl_graph(CSL_M, r) for r in CSL_SKIPS]
    if len({canonical_form(g, cap=CSL_M) for g in reps}) != len(reps):
        raise GenerationError("CSL skip values do not give pairwise non-isomorphic graphs")
    items = []
    for c, g in enumerate(reps):
        for j in range(copies):
            items.append((relabel_randomly(g, _item_rng(spec.seed, c * copies + j)), c))
    labels = [t for _, t in items]
    return Dataset("csl", items, kfold_splits(labels, 5, 0, spec.seed), "classification", spec.seed,
                   len(CSL_SKIPS), {"m": CSL_M, "skips": list(CSL_SKIPS), "folds": 5})


# -- cycles ---------------------------------------------------------------


def _plant_cycle(edges: set, verts: list[int]) -> None:
    for a, b in zip(verts, verts[1:] + verts[:1]):
        edges.add((min(a, b), max(a, b)))


def _tree_with_cycle(n: int, length: int, rng: np.random.Generator) -> Graph:
    edges = set(random_tree(n, rng).edges)
    _plant_cycle(edges, rng.choice(n, size=length, replace=False).tolist())
    return Graph(n, edges)


def cycle_twin_pair(base: Graph, length: int) -> tuple[Graph, Graph]:
    """(base + 2 C_L, base + C_2L): same size, same 1-WL colors, opposite L-cycle labels.

    ``base`` must be free of L-cycles for the second graph to be a negative.
    """
    pos = base.disjoint_union(Graph(2 * length, [(i, (i + 1) % length) for i in range(length)]
                                    + [(length + i, length + (i + 1) % length) for i in range(length)]))
    neg = base.disjoint_union(Graph(2 * length, [(i, (i + 1) % (2 * length)) for i in range(2 * length)]))
    return pos, neg


def cycle_item(length: int, label: int, n: int, twin: bool, rng: np.random.Generator) -> Graph:
    """One graph of the cycles-L task with the requested label.

    Ordinary items are a random tree with a planted cycle: of length L for
    positives, of a different length for negatives, so both classes have
    the same vertex and edge counts. Twin items come from
    ``cycle_twin_pair`` and are indistinguishable by 1-WL.
    """
    if twin:
        base = random_tree(n - 2 * length, rng)
        g = cycle_twin_pair(base, length)[0 if label else 1]
        return relabel_randomly(g, rng)
    others = [c for c in range(3, n + 1) if c != length]
    for _ in range(MAX_RETRIES):
        size = length if label else int(rng.choice(others))
        g = _tree_with_cycle(n, size, rng)
        if has_cycle_of_length(g, length) == bool(label):
            return g
    raise GenerationError(f"no {'positive' if label else 'negative'} cycles-{length} graph "
                          f"on {n} vertices after {MAX_RETRIES} tries")


def _build_cycles(spec: DatasetSpec, length: int) -> Dataset:
    if length not in (4, 6, 8):
        raise InvalidArgument(f"cycle length must be 4, 6 or 8, got {length}")
    if spec.scale not in CYCLE_MEAN_N:
        raise InvalidArgument(f"scale must be desk or large, got {spec.scale!r}")
    mean_n = spec.mean_n or CYCLE_MEAN_N[spec.scale][length]
    size = spec.size or (2000 if spec.scale == "desk" else 20000)
    lo = max(2 * length + 1, mean_n - 3)
    hi = max(lo, mean_n + 3)
    items = []
    for i in range(size):
        rng = _item_rng(spec.seed, i)
        label = i % 2
        n = int(rng.integers(lo, hi + 1))
        twin = bool(rng.random() < spec.twin_fraction)
        items.append((cycle_item(length, label, n, twin, rng), label))
    return Dataset(f"cycles-{length}", items, random_splits(size, spec.seed, spec.val_fraction, spec.test_fraction),
                   "classification", spec.seed, 2,
                   {"length": length, "n_range": [lo, hi], "twin_fraction": spec.twin_fraction, "scale": spec.scale})


# -- multitask ------------------------------------------------------------


def multitask_graph(rng: np.random.Generator, n_range: tuple[int, int] = (8, 16)) -> Graph:
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    family = int(rng.integers(3))
    if family == 0:
        return erdos_renyi(n, float(rng.uniform(0.2, 0.8)), rng)
    if family == 1:
        # forests rather than only trees, so the connectivity target is not nearly constant
        return random_forest(n, int(rng.integers(1, 4)), rng)
    return relabel_randomly(cycle_with_chords(n, int(rng.integers(0, n)), rng), rng)


def _build_multitask(spec: DatasetSpec) -> Dataset:
    size = spec.size or 1000
    items = []
    for i in range(size):
        g = multitask_graph(_item_rng(spec.seed, i))
        c, d, r = label_oracles(g)
        items.append((g, [float(c), d, r]))
    splits = random_splits(size, spec.seed, spec.val_fraction, spec.test_fraction)
    raw = np.array([t for _, t in items])
    train = raw[splits["train"]]
    mu = train.mean(axis=0)
    sd = train.std(axis=0)
    sd[sd == 0] = 1.0
    std = (raw - mu) / sd
    items = [(g, std[i].tolist()) for i, (g, _) in enumerate(items)]
    return Dataset("multitask", items, splits, "multitask-regression", spec.seed, 0,
                   {"targets": ["connected", "diameter", "spectral_radius"], "mean": mu.tolist(),
                    "std": sd.tolist()})


# -- padded connectivity --------------------------------------------------


def _random_connected(n: int, rng: np.random.Generator, extra: float = 0.3) -> list[tuple[int, int]]:
    edges = set(random_tree(n, rng).edges)
    for u, v in combinations(range(n), 2):
        if rng.random() < extra:
            edges.add((u, v))
    return sorted(edges)


def _robust_connected(n: int, ell: int, rng: np.random.Generator) -> Graph:
    for _ in range(MAX_RETRIES):
        g = Graph(n, _random_connected(n, rng))
        if all(is_connected(induced_subgraph(g, s)) for s in combinations(range(n), n - ell)):
            return g
    raise GenerationError(f"no {ell + 1}-connected graph on {n} vertices after {MAX_RETRIES} tries")


def _split_graph(n: int, ell: int, rng: np.random.Generator) -> Graph:
    """Two or three components, each with more than ``ell`` vertices."""
    parts = 2 if n < 3 * (ell + 1) else int(rng.integers(2, 4))
    sizes = [ell + 1] * parts
    for j in rng.integers(0, parts, size=n - parts * (ell + 1)):
        sizes[j] += 1
    edges = []
    start = 0
    for size in sizes:
        edges += [(start + u, start + v) for u, v in _random_connected(size, rng, 0.4)]
        start += size
    return relabel_randomly(Graph(n, edges), rng)


def check_hereditary(ds: Dataset, ell: int, label_fn: Callable[[Graph], int] = lambda g: int(is_connected(g))) -> None:
    """Every (n - ell)-card must carry its parent's label."""
    for i, (g, y) in enumerate(ds.items):
        for s in combinations(range(g.n), g.n - ell):
            if label_fn(induced_subgraph(g, s)) != int(y):
                raise InvalidDataset(f"item {i}: card {s} has a different label than the graph")


def _build_padded(spec: DatasetSpec) -> Dataset:
    ell = spec.ell
    if ell < 0:
        raise InvalidArgument("ell must be >= 0")
    size = spec.size or 400
    lo = max(2 * (ell + 1), (spec.mean_n or 10) - 2)
    hi = lo + 4
    items = []
    for i in range(size):
        rng = _item_rng(spec.seed, i)
        n = int(rng.integers(lo, hi + 1))
        label = i % 2
        g = _robust_connected(n, ell, rng) if label else _split_graph(n, ell, rng)
        items.append((g, label))
    ds = Dataset("padded-connectivity", items, random_splits(size, spec.seed, spec.val_fraction, spec.test_fraction),
                 "classification", spec.seed, 2, {"ell": ell, "n_range": [lo, hi]})
    check_hereditary(ds, ell)
    return ds


def build_dataset(spec: DatasetSpec | dict) -> Dataset:
    if isinstance(spec, dict):
        spec = DatasetSpec(**spec)
    name = spec.name
    if name == "csl":
        ds = _build_csl(spec)
    elif name.startswith("cycles-"):
        try:
            length = int(name.split("-", 1)[1])
        except ValueError:
            raise InvalidArgument(f"unknown dataset {name!r}") from None
        ds = _build_cycles(spec, length)
    elif name == "multitask":
        ds = _build_multitask(spec)
    elif name == "padded-connectivity":
        ds = _build_padded(spec)
    else:
        raise InvalidArgument(f"unknown dataset {name!r}; use csl, cycles-L, multitask or padded-connectivity")
    ds.meta["spec"] = asdict(spec)
    ds.validate()
    return ds


# -- serialization --------------------------------------------------------


def save_dataset(ds: Dataset, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for split, idx in ds.splits.items():
        p = out / f"{split}.jsonl"
        with p.open("w") as fh:
            for i in idx:
                g, t = ds.items[i]
                fh.write(json.dumps({"index": i, "graph": g.to_dict(), "target": t}, sort_keys=True) + "\n")
        written.append(p)
    meta = {"name": ds.name, "task_kind": ds.task_kind, "seed": ds.seed, "num_classes": ds.num_classes,
            "size": len(ds), "splits": {k: len(v) for k, v in ds.splits.items()}, "meta": ds.meta}
    p = out / "meta.json"
    p.write_text(json.dumps(meta, sort_keys=True, indent=1) + "\n")
    written.append(p)
    return written


def load_dataset(in_dir: str | Path) -> Dataset:
    src = Path(in_dir)
    try:
        meta = json.loads((src / "meta.json").read_text())
    except FileNotFoundError:
        raise InvalidArgument(f"{src} has no meta.json") from None
    items: dict[int, tuple[Graph, Target]] = {}
    splits = {}
    for split in meta["splits"]:
        idx = []
        for line in (src / f"{split}.jsonl").read_text().splitlines():
            rec = json.loads(line)
            items[rec["index"]] = (Graph.from_dict(rec["graph"]), rec["target"])
            idx.append(rec["index"])
        splits[split] = idx
    ds = Dataset(meta["name"], [items[i] for i in range(len(items))], splits, meta["task_kind"], meta["seed"],
                 meta["num_classes"], meta["meta"])
    ds.validate()
    return ds
