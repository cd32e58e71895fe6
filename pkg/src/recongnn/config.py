"""Run configuration: an INI file with one ``[run]`` section.

Values are resolved as defaults < config file < command-line flags, and the
fully resolved config is written next to every run's outputs. Its hash is
embedded in each output file.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError

SCHEMA_VERSION = 1

# key -> (type, default)
KEYS: dict[str, tuple[type, Any]] = {
    # dataset
    "dataset": (str, "cycles-4"),
    "size": (int, 0),
    "scale": (str, "desk"),
    "mean_n": (int, 0),
    "twin_fraction": (float, 0.25),
    "ell": (int, 1),
    "fold": (int, 0),
    "data_dir": (str, ""),
    # model
    "conv": (str, "gin"),
    "hidden": (int, 64),
    "layers": (int, 4),
    "readout": (str, "sum"),
    "jumping_knowledge": (bool, False),
    "standardize": (bool, False),
    "degree_features": (int, 0),
    "phi_dims": (str, "64"),
    "rho_dims": (str, "64"),
    "pooling": (str, "mean"),
    "k_rule": (str, "n-1"),
    "train_samples": (int, 10),
    "eval_samples": (int, 200),
    "concat_original": (bool, False),
    # training / evaluation
    "epochs": (int, 50),
    "batch_size": (int, 32),
    "lr": (float, 1e-3),
    "metric": (str, ""),
    "split": (str, "test"),
    "checkpoint": (str, ""),
    "ledger": (str, ""),
    # variance
    "trials": (int, 1000),
    "outer": (int, 200),
    # shared
    "seed": (int, 0),
    "budget_subgraphs": (int, 250_000),
    "jobs": (int, 1),
}


def _parse(key: str, raw: Any) -> Any:
    typ = KEYS[key][0]
    if isinstance(raw, typ) and not (typ is int and isinstance(raw, bool)):
        return raw
    text = str(raw).strip()
    try:
        if typ is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        return typ(text)
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {text!r} as {typ.__name__}") from None


def int_list(text: str) -> list[int]:
    text = text.strip()
    return [int(x) for x in text.replace(",", " ").split()] if text else []


@dataclass
class RunConfig:
    values: dict[str, Any] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def __getitem__(self, key: str) -> Any:
        if key in self.values:
            return self.values[key]
        return KEYS[key][1]

    def resolved(self) -> dict[str, Any]:
        return {k: self[k] for k in sorted(KEYS)}

    def to_json(self) -> str:
        return json.dumps({"schema_version": self.schema_version, "run": self.resolved()}, sort_keys=True)

    def hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    def to_ini(self) -> str:
        lines = ["[run]", f"schema_version = {self.schema_version}"]
        for k, v in self.resolved().items():
            lines.append(f"{k} = {str(v).lower() if isinstance(v, bool) else v}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir: str | Path, name: str = "config.resolved.ini") -> Path:
        p = Path(out_dir) / name
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(self.to_ini())
        return p


def load_config(path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> RunConfig:
    values: dict[str, Any] = {}
    schema = SCHEMA_VERSION
    if path:
        cp = configparser.ConfigParser()
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
        extra = [s for s in cp.sections() if s != "run"]
        if extra:
            raise ConfigError(f"unknown config section {extra[0]!r}; only [run] is allowed")
        if cp.has_section("run"):
            for key, raw in cp.items("run"):
                if key == "schema_version":
                    schema = _parse_schema(raw)
                    continue
                if key not in KEYS:
                    raise ConfigError(f"unknown config key {key!r}")
                values[key] = _parse(key, raw)
    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        if key not in KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = _parse(key, raw)
    return RunConfig(values, schema)


def _parse_schema(raw: str) -> int:
    try:
        v = int(raw)
    except ValueError:
        raise ConfigError(f"schema_version must be an integer, got {raw!r}") from None
    if v != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {v}; expected {SCHEMA_VERSION}")
    return v
