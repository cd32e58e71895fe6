"""Command-line entry point.

Exit codes: 0 ok, 2 usage or malformed input, 3 budget exceeded,
4 failed assertion (audit) or failed run.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from collections import Counter
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .config import RunConfig, int_list, load_config
from .deck import deck
from .errors import ConfigError, GenerationError, InvalidArgument, InvalidDataset, ReconError, ResourceError, \
    ShapeError, TrainingError, UnsupportedSize
from .graph import load_graph

EXIT_OK, EXIT_USAGE, EXIT_RESOURCE, EXIT_ASSERT = 0, 2, 3, 4
LEDGER_FIELDS = ["run_id", "dataset", "model", "k", "metric", "value", "seed"]


def _dump(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def _emit(doc: dict, cfg: RunConfig, out: str | None, name: str) -> None:
    """Print ``doc``; with ``--out`` also write it and the resolved config there."""
    doc = {**doc, "config_hash": cfg.hash()}
    text = _dump(doc)
    sys.stdout.write(text)
    if out:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        (d / name).write_text(text)
        cfg.write(d)


def _write_run_meta(out: Path, started: float) -> None:
    # wall-clock data lives apart from the deterministic outputs
    (out / "run_meta.json").write_text(_dump({"started": started, "elapsed": time.time() - started}))


def append_ledger(path: str | Path, row: dict) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    new = not p.exists()
    with p.open("a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=LEDGER_FIELDS)
        if new:
            w.writeheader()
        w.writerow({k: row[k] for k in LEDGER_FIELDS})


# -- builders shared by train / eval / variance ----------------------------


def dataset_from_config(cfg: RunConfig):
    from .datasets import DatasetSpec, build_dataset, kfold_splits, load_dataset

    if cfg["data_dir"]:
        ds = load_dataset(cfg["data_dir"])
    else:
        spec = DatasetSpec(cfg["dataset"], size=cfg["size"] or None, seed=cfg["seed"], scale=cfg["scale"],
                           mean_n=cfg["mean_n"] or None, twin_fraction=cfg["twin_fraction"], ell=cfg["ell"])
        ds = build_dataset(spec)
    if "folds" in ds.meta:
        ds = ds.with_splits(kfold_splits([t for _, t in ds.items], ds.meta["folds"], cfg["fold"], ds.seed))
    return ds


def model_from_config(cfg: RunConfig, ds):
    from .model import ReconModel

    m = ReconModel.build(ds.in_dim, ds.out_dim, cfg["k_rule"], hidden_dim=cfg["hidden"], num_layers=cfg["layers"],
                         conv_kind=cfg["conv"], readout=cfg["readout"], jumping_knowledge=cfg["jumping_knowledge"],
                         standardize=cfg["standardize"], phi_dims=int_list(cfg["phi_dims"]),
                         rho_dims=int_list(cfg["rho_dims"]), pooling=cfg["pooling"],
                         train_samples=cfg["train_samples"], eval_samples=cfg["eval_samples"],
                         concat_original=cfg["concat_original"], degree_features=cfg["degree_features"],
                         seed=cfg["seed"])
    m.budget = cfg["budget_subgraphs"]
    return m


def model_name(m) -> str:
    kind = m.base.conv_kind
    return kind if m.k_rule.kind == "full" else f"{kind}-recon[{m.k_rule}]"


# -- commands ---------------------------------------------------------------


def cmd_gen(args, cfg: RunConfig) -> int:
    from .datasets import save_dataset

    if not args.out:
        raise ConfigError("gen needs --out")
    ds = dataset_from_config(cfg)
    ds.meta["config_hash"] = cfg.hash()
    files = save_dataset(ds, args.out)
    cfg.write(args.out)
    sys.stdout.write(_dump({"dataset": ds.name, "size": len(ds), "files": [f.name for f in files],
                            "config_hash": cfg.hash()}))
    return EXIT_OK


def cmd_wl(args, cfg: RunConfig) -> int:
    from .wl import WL2_CAP, refine_1wl, refine_2wl

    graphs = [load_graph(p) for p in args.graphs]
    if len(graphs) < 2:
        raise InvalidArgument("wl needs at least two graph files")
    if args.arity == 2 and max(g.n for g in graphs) > WL2_CAP:
        raise UnsupportedSize(f"2-WL is capped at {WL2_CAP} vertices")
    colors, rounds = (refine_1wl if args.arity == 1 else refine_2wl)(graphs)
    keys = [tuple(sorted(Counter(np.ravel(c).tolist()).items())) for c in colors]
    groups = {k: i for i, k in enumerate(dict.fromkeys(keys))}
    verdict = "indistinguishable" if len(groups) == 1 else "distinguishable"
    doc = {"arity": args.arity, "graphs": [str(p) for p in args.graphs], "rounds": rounds,
           "color_class": [groups[k] for k in keys], "verdict": verdict}
    _emit(doc, cfg, args.out, "wl.json")
    return EXIT_OK


def cmd_deck(args, cfg: RunConfig) -> int:
    g = load_graph(args.graph)
    d = deck(g, args.k, cfg["budget_subgraphs"])
    doc = {"n": g.n, "k": d.k, "cards": len(d), "classes": len(d.cards),
           "deck": [{"canonical": cf.hex(), "edges": [list(e) for e in cf.to_graph().edges], "multiplicity": c}
                    for cf, c in d.cards]}
    _emit(doc, cfg, args.out, "deck.json")
    return EXIT_OK


def cmd_recon_check(args, cfg: RunConfig) -> int:
    from .reconstruction import audit_k_reconstructibility

    rep = audit_k_reconstructibility(args.n, args.k, args.family, budget=cfg["budget_subgraphs"])
    doc = rep.to_dict()
    doc.pop("elapsed", None)
    _emit(doc, cfg, args.out, "recon_check.json")
    return EXIT_OK


def cmd_train(args, cfg: RunConfig) -> int:
    from .model import save_checkpoint
    from .training import TrainConfig, default_metric, evaluate, train

    out = Path(args.out or "runs") / cfg.hash()[:12]
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    ds = dataset_from_config(cfg)
    m = model_from_config(cfg, ds)
    res = train(m, ds, TrainConfig(epochs=cfg["epochs"], batch_size=cfg["batch_size"], lr=cfg["lr"],
                                   seed=cfg["seed"]))
    metric = cfg["metric"] or default_metric(ds.task_kind)
    value = evaluate(m, ds, cfg["split"], metric, cfg["seed"])
    with (out / "curve.csv").open("w", newline="") as fh:
        fields = [k for k in res.history[0] if k != "seconds"] if res.history else ["epoch"]
        w = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        w.writeheader()
        w.writerows(res.history)
    save_checkpoint(m, out / "checkpoint.json", {"config_hash": cfg.hash(), "dataset": ds.name,
                                                  "best_epoch": res.best_epoch})
    cfg.write(out)
    row = {"run_id": cfg.hash()[:12], "dataset": ds.name, "model": model_name(m), "k": str(m.k_rule),
           "metric": f"{cfg['split']}_{metric}", "value": f"{value:.6f}", "seed": cfg["seed"]}
    append_ledger(cfg["ledger"] or out.parent / "results.csv", row)
    doc = {**row, "best_epoch": res.best_epoch, "best_val": res.best_val, "dir": str(out),
           "log_base": 10 if metric == "log10-mse" else None}
    (out / "result.json").write_text(_dump({**doc, "config_hash": cfg.hash()}))
    _write_run_meta(out, started)
    sys.stdout.write(_dump({**doc, "config_hash": cfg.hash()}))
    return EXIT_OK


def cmd_eval(args, cfg: RunConfig) -> int:
    from .model import load_checkpoint
    from .training import default_metric, evaluate

    ckpt = args.checkpoint or cfg["checkpoint"]
    if not ckpt:
        raise ConfigError("eval needs a checkpoint (positional argument or 'checkpoint' key)")
    m, _ = load_checkpoint(ckpt)
    m.budget = cfg["budget_subgraphs"]
    ds = dataset_from_config(cfg)
    metric = cfg["metric"] or default_metric(ds.task_kind)
    value = evaluate(m, ds, cfg["split"], metric, cfg["seed"])
    row = {"run_id": cfg.hash()[:12], "dataset": ds.name, "model": model_name(m), "k": str(m.k_rule),
           "metric": f"{cfg['split']}_{metric}", "value": f"{value:.6f}", "seed": cfg["seed"]}
    if cfg["ledger"] or args.out:
        append_ledger(cfg["ledger"] or Path(args.out) / "results.csv", row)
    _emit(row, cfg, args.out, "eval.json")
    return EXIT_OK


def cmd_variance(args, cfg: RunConfig) -> int:
    from .variance import identity_rho_model, variance_experiment

    ds = dataset_from_config(cfg)
    m = identity_rho_model(ds.in_dim, f"n-{cfg['ell']}", hidden_dim=cfg["hidden"], num_layers=cfg["layers"],
                           conv_kind=cfg["conv"], seed=cfg["seed"], readout=cfg["readout"],
                           degree_features=cfg["degree_features"])
    res = variance_experiment(ds, m, cfg["trials"], cfg["seed"], cfg["outer"], cfg["ell"])
    _emit({"dataset": ds.name, **res.to_dict()}, cfg, args.out, "variance.json")
    return EXIT_OK


def cmd_audit_all(args, cfg: RunConfig) -> int:
    from .acceptance import run_all

    only = int_list(args.only) if args.only else None
    results = run_all(only=only, tier=args.tier, seed=cfg["seed"], log=lambda r: print(r.line(), flush=True))
    doc = {"tier": args.tier, "results": [r.to_dict() for r in results],
           "passed": all(r.passed for r in results)}
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        with (d / "audit.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["criterion", "name", "passed", "detail"])
            for r in results:
                w.writerow([r.number, r.name, int(r.passed), r.detail])
        (d / "audit.json").write_text(_dump({**doc, "config_hash": cfg.hash()}))
        cfg.write(d)
    return EXIT_OK if doc["passed"] else EXIT_ASSERT


# -- argument parsing -------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with a [run] section")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--budget-subgraphs", type=int, dest="budget_subgraphs")
    common.add_argument("--jobs", type=int)
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key (repeatable)")

    p = argparse.ArgumentParser(prog="recongnn", description="Graph reconstruction and k-reconstruction GNNs.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen", parents=[common], help="generate a dataset as JSON lines")
    s.add_argument("--dataset")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("wl", parents=[common], help="compare graphs with 1-WL or 2-WL")
    s.add_argument("graphs", nargs="+", type=Path)
    s.add_argument("--arity", type=int, choices=(1, 2), default=1)
    s.set_defaults(func=cmd_wl)

    s = sub.add_parser("deck", parents=[common], help="summarize the k-deck of a graph")
    s.add_argument("graph", type=Path)
    s.add_argument("-k", type=int, required=True)
    s.set_defaults(func=cmd_deck)

    s = sub.add_parser("recon-check", parents=[common], help="find same-deck collisions among small graphs")
    s.add_argument("-n", type=int, required=True)
    s.add_argument("-k", type=int, required=True)
    s.add_argument("--family", default="all", choices=("all", "trees", "spiders", "regular"))
    s.set_defaults(func=cmd_recon_check)

    s = sub.add_parser("train", parents=[common], help="train a model, write checkpoint and ledger row")
    s.add_argument("--dataset")
    s.add_argument("--epochs", type=int)
    s.add_argument("--k-rule", dest="k_rule")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint on a split")
    s.add_argument("checkpoint", nargs="?")
    s.add_argument("--dataset")
    s.add_argument("--split")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("variance", parents=[common], help="estimator variance experiment")
    s.add_argument("--trials", type=int)
    s.set_defaults(func=cmd_variance)

    s = sub.add_parser("audit-all", parents=[common], help="run the acceptance checks")
    s.add_argument("--only", help="comma-separated criterion numbers")
    s.add_argument("--tier", choices=("ci", "full"), default="ci")
    s.set_defaults(func=cmd_audit_all)
    return p


def _overrides(args) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip().replace("-", "_")] = v
    for key in ("seed", "budget_subgraphs", "jobs", "dataset", "epochs", "k_rule", "split", "trials"):
        v = getattr(args, key, None)
        if v is not None:
            out[key] = v
    return out


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, _overrides(args))
        return args.func(args, cfg)
    except ResourceError as exc:
        knob = f" (raise --{exc.knob})" if exc.knob else ""
        print(f"resource error: {exc}{knob}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ConfigError, InvalidArgument, InvalidDataset, ShapeError, UnsupportedSize, FileNotFoundError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrainingError, GenerationError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    except ReconError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
