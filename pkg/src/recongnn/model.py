"""k-Reconstruction GNN: a base GNN applied to k-vertex induced subgraphs,
aggregated by a Deep Sets head.

Cards are batched together with (optionally) the whole graphs so a single
forward/backward pass through the base GNN covers everything.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Sequence

import numpy as np

from .deck import DEFAULT_DECK_BUDGET, sample_subsets
from .errors import InvalidArgument, ResourceError, ShapeError
from .graph import Graph
from .nn import DeepSetsHead, GnnModel, GraphBatch, Module, set_pool_matrix

CHECKPOINT_VERSION = 1
DEFAULT_EVAL_SAMPLES = 200


@dataclass(frozen=True)
class KRule:
    """How the card size k is chosen for an n-vertex graph.

    ``abs`` uses a fixed k (clamped to n), ``minus`` uses n - value,
    ``half`` uses ceil(n/2) and ``full`` uses the whole graph (k = n),
    which turns the model into a plain GNN with an MLP head.
    """

    kind: str
    value: int = 0

    @classmethod
    def parse(cls, text: str) -> "KRule":
        t = text.strip().lower()
        if t in ("full", "n"):
            return cls("full")
        if t in ("half", "n/2"):
            return cls("half")
        if t.startswith("n-"):
            ell = int(t[2:])
            if ell < 0:
                raise InvalidArgument(f"bad k rule {text!r}")
            return cls("minus", ell)
        if t.startswith("abs:") or t.isdigit():
            k = int(t.split(":")[-1])
            if k < 3:
                raise InvalidArgument(f"k must be at least 3, got {k}")
            return cls("abs", k)
        raise InvalidArgument(f"unknown k rule {text!r}; use full, half, n-L or abs:K")

    def __str__(self) -> str:
        if self.kind == "minus":
            return f"n-{self.value}"
        if self.kind == "abs":
            return f"abs:{self.value}"
        return self.kind

    def resolve(self, n: int) -> int:
        if self.kind == "full":
            return n
        if self.kind == "half":
            return min(n, max(3, math.ceil(n / 2)))
        if self.kind == "minus":
            # too small to drop ell vertices and keep k >= 3: use the whole graph
            return n if n <= self.value + 3 else n - self.value
        return min(n, self.value)


class ReconModel(Module):
    def __init__(self, base: GnnModel, head: DeepSetsHead, k_rule: KRule, train_samples: int = 10,
                 eval_samples: int = DEFAULT_EVAL_SAMPLES, concat_original: bool = False,
                 budget: int = DEFAULT_DECK_BUDGET):
        if train_samples < 1 or eval_samples < 1:
            raise InvalidArgument("train_samples and eval_samples must be at least 1")
        extra = base.out_dim if concat_original else 0
        if head.phi.d_in != base.out_dim:
            raise ShapeError(f"phi input {head.phi.d_in} != GNN output {base.out_dim}")
        if head.rho.d_in != head.phi.d_out + extra:
            raise ShapeError(f"rho input {head.rho.d_in} != {head.phi.d_out + extra}")
        self.base = base
        self.head = head
        self.k_rule = k_rule
        self.train_samples = train_samples
        self.eval_samples = eval_samples
        self.concat_original = concat_original
        self.budget = budget
        self._ncards = 0

    @classmethod
    def build(cls, in_dim: int, out_dim: int, k_rule: KRule | str = "n-1", hidden_dim: int = 64,
              num_layers: int = 4, conv_kind: str = "gin", readout: str = "sum", jumping_knowledge: bool = False,
              standardize: bool = False, phi_dims: Sequence[int] = (64,), rho_dims: Sequence[int] = (64,),
              pooling: str = "mean", train_samples: int = 10, eval_samples: int = DEFAULT_EVAL_SAMPLES,
              concat_original: bool = False, degree_features: int = 0, seed: int = 0) -> "ReconModel":
        """Convenience constructor; ``phi_dims`` and ``rho_dims`` are hidden widths.

        ``rho_dims=()`` makes rho a single linear layer.
        """
        rng = np.random.default_rng(seed)
        rule = KRule.parse(k_rule) if isinstance(k_rule, str) else k_rule
        base = GnnModel(in_dim, hidden_dim, num_layers, conv_kind, readout, jumping_knowledge, standardize, rng,
                        degree_features)
        phi = [base.out_dim, *phi_dims]
        extra = base.out_dim if concat_original else 0
        rho = [phi[-1] + extra, *rho_dims, out_dim]
        head = DeepSetsHead(phi, rho, pooling, rng)
        return cls(base, head, rule, train_samples, eval_samples, concat_original)

    def k_for(self, n: int) -> int:
        return self.k_rule.resolve(n)

    # -- card selection -------------------------------------------------

    def subsets(self, g: Graph, samples: int | None, rng: np.random.Generator | None) -> list[tuple[int, ...]]:
        """All k-subsets (lexicographic) when ``samples`` is None, else a uniform sample."""
        k = self.k_for(g.n)
        total = math.comb(g.n, k)
        if samples is None:
            if total > self.budget:
                raise ResourceError(
                    f"C({g.n},{k}) = {total} subgraphs exceeds the budget {self.budget}; "
                    "use sampled evaluation (forward_sampled) or raise the budget",
                    knob="budget-subgraphs")
            return list(combinations(range(g.n), k))
        if rng is None:
            raise InvalidArgument("sampled forward needs an rng")
        return sample_subsets(g.n, k, samples, rng)

    def eval_count(self, g: Graph) -> int | None:
        """Evaluation protocol: exact when C(n,k) <= eval_samples, else that many samples."""
        k = self.k_for(g.n)
        return None if math.comb(g.n, k) <= self.eval_samples else self.eval_samples

    # -- forward / backward ---------------------------------------------

    def _batch(self, graphs: Sequence[Graph], subsets: Sequence[Sequence[tuple[int, ...]]]):
        if any(len(s) == 0 for s in subsets):
            raise InvalidArgument("every graph needs at least one card")
        subs = [list(s) for s in subsets]
        if self.concat_original:
            # whole graphs ride along as one extra "card" each at the end
            subs = subs + [[tuple(range(g.n))] for g in graphs]
            batch = GraphBatch.from_cards(list(graphs) + list(graphs), subs)
        else:
            batch = GraphBatch.from_cards(graphs, subs)
        counts = [len(s) for s in subsets]
        totals = [math.comb(g.n, self.k_for(g.n)) for g in graphs]
        pool = set_pool_matrix(counts, self.head.pool_weights(counts, totals))
        return batch, pool, sum(counts)

    def pooled_from_subsets(self, graphs: Sequence[Graph], subsets) -> np.ndarray:
        batch, pool, ncards = self._batch(graphs, subsets)
        reps = self.base.forward(batch)
        return self.head.pooled(reps[:ncards], pool)

    def forward_subsets(self, graphs: Sequence[Graph], subsets) -> np.ndarray:
        batch, pool, ncards = self._batch(graphs, subsets)
        reps = self.base.forward(batch)
        self._ncards = ncards
        extra = reps[ncards:] if self.concat_original else None
        return self.head.forward(reps[:ncards], pool, extra)

    def forward(self, graphs: Sequence[Graph], samples: int | None = None,
                rng: np.random.Generator | None = None) -> np.ndarray:
        """Outputs for a list of graphs; exact over all cards unless ``samples`` is given."""
        return self.forward_subsets(graphs, [self.subsets(g, samples, rng) for g in graphs])

    def forward_eval(self, graphs: Sequence[Graph], rng: np.random.Generator) -> np.ndarray:
        return self.forward_subsets(graphs, [self.subsets(g, self.eval_count(g), rng) for g in graphs])

    def backward(self, dout: np.ndarray) -> None:
        extra_dim = self.base.out_dim if self.concat_original else 0
        dcards, dextra = self.head.backward(dout, extra_dim)
        dreps = dcards if dextra is None else np.concatenate([dcards, dextra], axis=0)
        self.base.backward(dreps)

    # -- serialization --------------------------------------------------

    def config(self) -> dict:
        return {"base": self.base.config(), "phi_dims": self.head.phi.dims, "rho_dims": self.head.rho.dims,
                "pooling": self.head.pooling, "k_rule": str(self.k_rule), "train_samples": self.train_samples,
                "eval_samples": self.eval_samples, "concat_original": self.concat_original}

    @classmethod
    def from_config(cls, cfg: dict) -> "ReconModel":
        b = cfg["base"]
        base = GnnModel(b["in_dim"], b["hidden_dim"], b["num_layers"], b["conv_kind"], b["readout"],
                        b["jumping_knowledge"], b["standardize"], np.random.default_rng(0),
                        b.get("degree_features", 0))
        head = DeepSetsHead(list(cfg["phi_dims"]), list(cfg["rho_dims"]), cfg["pooling"], np.random.default_rng(0))
        return cls(base, head, KRule.parse(cfg["k_rule"]), cfg["train_samples"], cfg["eval_samples"],
                   cfg["concat_original"])

    def state(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.named_params()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        params = dict(self.named_params())
        if set(params) != set(state):
            raise ShapeError("checkpoint parameter names do not match the model")
        for name, t in params.items():
            arr = np.asarray(state[name], dtype=float)
            if arr.shape != t.data.shape:
                raise ShapeError(f"{name}: checkpoint shape {arr.shape} != model shape {t.data.shape}")
            t.data[...] = arr


def forward_exact(m: ReconModel, g: Graph) -> np.ndarray:
    return m.forward([g])[0]


def forward_sampled(m: ReconModel, g: Graph, seed: int | np.random.Generator, samples: int | None = None) -> np.ndarray:
    """One draw of ``samples`` (default ``m.train_samples``) cards without replacement."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return m.forward([g], samples or m.train_samples, rng)[0]


def pooled_exact(m: ReconModel, g: Graph) -> np.ndarray:
    """The pre-rho pooled vector over all cards."""
    return m.pooled_from_subsets([g], [m.subsets(g, None, None)])[0]


def pooled_sampled(m: ReconModel, g: Graph, samples: int, draws: int, rng: np.random.Generator) -> np.ndarray:
    """``draws`` independent sampled pre-rho vectors, shape (draws, dim)."""
    subs = [m.subsets(g, samples, rng) for _ in range(draws)]
    return m.pooled_from_subsets([g] * draws, subs)


def save_checkpoint(m: ReconModel, path: str | Path, extra: dict | None = None) -> None:
    params = m.state()
    doc = {
        "version": CHECKPOINT_VERSION,
        "model": m.config(),
        "manifest": {name: list(a.shape) for name, a in params.items()},
        "params": {name: a.ravel().tolist() for name, a in params.items()},
        "meta": extra or {},
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True))


def load_checkpoint(path: str | Path) -> tuple[ReconModel, dict]:
    doc = json.loads(Path(path).read_text())
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ShapeError(f"unsupported checkpoint version {doc.get('version')}")
    m = ReconModel.from_config(doc["model"])
    state = {name: np.asarray(doc["params"][name], dtype=float).reshape(shape)
             for name, shape in doc["manifest"].items()}
    m.load_state(state)
    return m, doc.get("meta", {})
