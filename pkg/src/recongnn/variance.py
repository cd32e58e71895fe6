"""Variance of three empirical-risk estimators on a hereditary task.

With fixed model weights, a linear (or identity) rho and squared loss, for
each graph with cards S and per-card outputs o_S = rho(phi(h(G[S]))):

* gnn:  loss of one uniformly random card, (o_S - y)^2
* aug:  mean card loss, mean_S (o_S - y)^2 (data augmentation)
* recon: loss of the pooled output, (mean_S o_S - y)^2

Bootstrap resamples of the dataset give the spread of each risk estimate.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .datasets import Dataset, check_hereditary
from .errors import InvalidArgument
from .model import KRule, ReconModel
from .nn import DeepSetsHead, GnnModel

ESTIMATORS = ("gnn", "aug", "recon")


@dataclass
class VarianceResult:
    var_gnn: float
    var_aug: float
    var_recon: float
    confidence_recon_le_aug: float
    confidence_aug_le_gnn: float
    trials: int
    outer: int
    ell: int

    @property
    def ordered(self) -> bool:
        return self.var_recon <= self.var_aug <= self.var_gnn

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ordered"] = self.ordered
        return d


def card_outputs(m: ReconModel, ds: Dataset, split: str | None = None) -> tuple[list[np.ndarray], np.ndarray]:
    """Per-card scalar outputs for every graph (all cards), and the targets."""
    if m.head.pooling != "mean":
        raise InvalidArgument("variance experiment needs mean pooling")
    if len(m.head.rho.dims) > 2 or m.head.rho.d_out != 1:
        raise InvalidArgument("variance experiment needs a linear or identity rho with a scalar output")
    if m.concat_original:
        raise InvalidArgument("variance experiment does not use the whole-graph representation")
    idx = ds.splits[split] if split else list(range(len(ds)))
    graphs = [ds.items[i][0] for i in idx]
    y = np.array([float(ds.items[i][1]) if np.isscalar(ds.items[i][1]) else float(ds.items[i][1][0]) for i in idx])
    subsets = [m.subsets(g, None, None) for g in graphs]
    per_card = []
    for i in range(0, len(graphs), 64):
        gs, ss = graphs[i:i + 64], subsets[i:i + 64]
        flat = [[s] for sub in ss for s in sub]
        flat_graphs = [g for g, sub in zip(gs, ss) for _ in sub]
        # every card as its own singleton set: rho is linear so rho(mean) = mean(rho)
        out = m.forward_subsets(flat_graphs, flat)[:, 0]
        start = 0
        for sub in ss:
            per_card.append(out[start:start + len(sub)])
            start += len(sub)
    return per_card, y


def estimator_samples(per_card: list[np.ndarray], y: np.ndarray, trials: int,
                      rng: np.random.Generator) -> np.ndarray:
    """Array (trials, 3) of bootstrap risk estimates in ESTIMATORS order."""
    n = len(y)
    if n == 0:
        raise InvalidArgument("dataset is empty")
    aug = np.array([np.mean((o - t) ** 2) for o, t in zip(per_card, y)])
    recon = np.array([(o.mean() - t) ** 2 for o, t in zip(per_card, y)])
    sizes = np.array([len(o) for o in per_card])
    out = np.empty((trials, 3))
    for t in range(trials):
        pick = rng.integers(0, n, size=n)
        card = (rng.random(n) * sizes[pick]).astype(np.int64)
        gnn = np.array([(per_card[i][c] - y[i]) ** 2 for i, c in zip(pick, card)])
        out[t] = gnn.mean(), aug[pick].mean(), recon[pick].mean()
    return out


def variance_experiment(ds: Dataset, m: ReconModel, trials: int = 1000, seed: int = 0, outer: int = 200,
                        ell: int | None = None) -> VarianceResult:
    """Bootstrap variances of the three estimators at k = n - ell.

    Confidence for each ordering is the fraction of ``outer`` resamples of
    the trial estimates in which it holds.
    """
    ell = ds.meta.get("ell", 1) if ell is None else ell
    if m.k_rule.kind != "minus" or m.k_rule.value != ell:
        raise InvalidArgument(f"model k rule {m.k_rule} does not match n-{ell}")
    check_hereditary(ds, ell)
    per_card, y = card_outputs(m, ds)
    rng = np.random.default_rng([seed, 7])
    est = estimator_samples(per_card, y, trials, rng)
    var = est.var(axis=0, ddof=1)
    le_ra = le_ag = 0
    for _ in range(outer):
        v = est[rng.integers(0, trials, size=trials)].var(axis=0, ddof=1)
        le_ra += int(v[2] <= v[1])
        le_ag += int(v[1] <= v[0])
    return VarianceResult(float(var[0]), float(var[1]), float(var[2]), float(le_ra / outer), float(le_ag / outer),
                          trials, outer, ell)


def identity_rho_model(in_dim: int, k_rule: str = "n-1", hidden_dim: int = 32, num_layers: int = 3,
                       conv_kind: str = "gin", phi_dims=(32, 1), seed: int = 0, **kw) -> ReconModel:
    """Model whose rho is the identity on a scalar phi output."""
    rng = np.random.default_rng(seed)
    base = GnnModel(in_dim, hidden_dim, num_layers, conv_kind, kw.get("readout", "mean"), False,
                    kw.get("standardize", False), rng, kw.get("degree_features", 0))
    phi = [base.out_dim, *phi_dims]
    head = DeepSetsHead(phi, [phi[-1]], "mean", rng)
    return ReconModel(base, head, KRule.parse(k_rule))
