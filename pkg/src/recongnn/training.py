"""Empirical risk, minibatch training and evaluation for ReconModel."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .datasets import Dataset
from .errors import InvalidArgument, TrainingError
from .graph import Graph
from .model import ReconModel
from .nn import AdamHyper, AdamState, adam_step, cross_entropy, cross_entropy_per_item, mse, mse_per_item

EVAL_STREAM = 1_000_003


@dataclass
class RiskEstimate:
    kind: str
    value: float
    per_graph: list[float]
    surrogate: bool = False

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value, "surrogate": self.surrogate, "n": len(self.per_graph)}


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    lr: float = 1e-3
    # cosine decay from lr to lr * lr_floor over the run; 1.0 keeps lr constant
    lr_floor: float = 1.0
    seed: int = 0
    eval_batch: int = 64
    log: Callable[[dict], None] | None = None


@dataclass
class TrainResult:
    model: ReconModel
    history: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    best_val: float = float("nan")


def loss_for(task_kind: str) -> str:
    return "cross_entropy" if task_kind == "classification" else "mse"


def default_metric(task_kind: str) -> str:
    return "accuracy" if task_kind == "classification" else "log10-mse"


def _per_item(loss: str, out: np.ndarray, y: np.ndarray) -> np.ndarray:
    if loss == "cross_entropy":
        return cross_entropy_per_item(out, y)
    if loss == "mse":
        return mse_per_item(out, y)
    raise InvalidArgument(f"loss must be cross_entropy or mse, got {loss!r}")


def predict(m: ReconModel, graphs: Sequence[Graph], mode: str = "eval", seed: int = 0,
            batch: int = 64) -> np.ndarray:
    """Model outputs for ``graphs``.

    ``mode`` is ``exact`` (all cards), ``sampled`` (``train_samples`` cards)
    or ``eval`` (exact when C(n,k) <= eval_samples, else that many samples).
    """
    rng = np.random.default_rng([seed, EVAL_STREAM])
    outs = []
    for i in range(0, len(graphs), batch):
        chunk = graphs[i:i + batch]
        if mode == "exact":
            outs.append(m.forward(chunk))
        elif mode == "sampled":
            outs.append(m.forward(chunk, m.train_samples, rng))
        elif mode == "eval":
            outs.append(m.forward_eval(chunk, rng))
        else:
            raise InvalidArgument(f"mode must be exact, sampled or eval, got {mode!r}")
    return np.concatenate(outs, axis=0)


def empirical_risk(m: ReconModel, ds: Dataset, split: str, loss: str | None = None, mode: str = "exact",
                   seed: int = 0) -> RiskEstimate:
    graphs, y = ds.split(split)
    if not graphs:
        raise InvalidArgument(f"split {split!r} is empty")
    loss = loss or loss_for(ds.task_kind)
    per = _per_item(loss, predict(m, graphs, mode, seed), y)
    return RiskEstimate("reconstruction", float(per.mean()), per.tolist(), surrogate=(mode == "sampled"))


def metric_value(metric: str, out: np.ndarray, y: np.ndarray) -> float:
    if metric == "accuracy":
        return float(100.0 * np.mean(out.argmax(axis=1) == y))
    per_task = np.mean((out - y.reshape(out.shape)) ** 2, axis=0)
    if metric == "mse":
        return float(per_task.mean())
    if metric == "log10-mse":
        return float(np.mean(np.log10(per_task)))
    raise InvalidArgument(f"metric must be accuracy, mse or log10-mse, got {metric!r}")


def higher_is_better(metric: str) -> bool:
    return metric == "accuracy"


def evaluate(m: ReconModel, ds: Dataset, split: str = "test", metric: str | None = None, seed: int = 0,
             batch: int = 64) -> float:
    graphs, y = ds.split(split)
    metric = metric or default_metric(ds.task_kind)
    return metric_value(metric, predict(m, graphs, "eval", seed, batch), y)


def epoch_lr(cfg: TrainConfig, epoch: int) -> float:
    if cfg.epochs <= 1 or cfg.lr_floor == 1.0:
        return cfg.lr
    frac = epoch / (cfg.epochs - 1)
    return cfg.lr * (cfg.lr_floor + (1.0 - cfg.lr_floor) * 0.5 * (1.0 + math.cos(math.pi * frac)))


def train(m: ReconModel, ds: Dataset, cfg: TrainConfig = TrainConfig()) -> TrainResult:
    """Minibatch Adam on sampled card sets; keeps the best-validation weights."""
    graphs, y = ds.split("train")
    if not graphs:
        raise InvalidArgument("training split is empty")
    loss_name = loss_for(ds.task_kind)
    loss_fn = cross_entropy if loss_name == "cross_entropy" else mse
    metric = default_metric(ds.task_kind)
    better = higher_is_better(metric)
    has_val = bool(ds.splits.get("val"))
    params = m.params()
    state = AdamState()
    result = TrainResult(m)
    best_state = m.state()
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        hyper = AdamHyper(lr=epoch_lr(cfg, epoch))
        rng = np.random.default_rng([cfg.seed, epoch])
        order = rng.permutation(len(graphs))
        total = 0.0
        for step, i in enumerate(range(0, len(order), cfg.batch_size)):
            idx = order[i:i + cfg.batch_size]
            m.zero_grad()
            out = m.forward([graphs[j] for j in idx], m.train_samples, rng)
            loss, grad = loss_fn(out, y[idx])
            if not math.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch} step {step}",
                                    {"epoch": epoch, "step": step, "loss": loss, "history": result.history})
            m.backward(grad)
            adam_step(params, state, hyper)
            total += loss * len(idx)
        row = {"epoch": epoch, "train_loss": total / len(graphs)}
        if has_val:
            val = evaluate(m, ds, "val", metric, cfg.seed, cfg.eval_batch)
            row["val_" + metric] = val
            if result.best_epoch < 0 or (val > result.best_val if better else val < result.best_val):
                result.best_epoch, result.best_val = epoch, val
                best_state = m.state()
        row["seconds"] = time.perf_counter() - t0
        result.history.append(row)
        if cfg.log:
            cfg.log(row)
    if has_val:
        m.load_state(best_state)
    else:
        result.best_epoch = cfg.epochs - 1
    return result
