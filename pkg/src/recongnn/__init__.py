"""Graph reconstruction tools and k-reconstruction graph neural networks."""

from .canon import canonical_form, enumerate_graphs, is_isomorphic
from .datasets import Dataset, DatasetSpec, build_dataset, load_dataset, save_dataset
from .deck import Deck, deck
from .errors import (ConfigError, CorruptedDeck, GenerationError, InvalidArgument, InvalidDataset, ReconError,
                     ResourceError, ShapeError, TrainingError, UnsupportedSize)
from .graph import Graph, load_graph, save_graph
from .model import KRule, ReconModel, load_checkpoint, save_checkpoint
from .reconstruction import audit_k_reconstructibility, full_reconstruction_fingerprint, kelly_count
from .training import TrainConfig, empirical_risk, evaluate, train
from .variance import variance_experiment
from .wl import refine_1wl, refine_2wl, wl_distinguishes

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "CorruptedDeck", "Dataset", "DatasetSpec", "Deck", "GenerationError", "Graph",
    "InvalidArgument", "InvalidDataset", "KRule", "ReconError", "ReconModel", "ResourceError", "ShapeError",
    "TrainConfig", "TrainingError", "UnsupportedSize", "audit_k_reconstructibility", "build_dataset",
    "canonical_form", "deck", "empirical_risk", "enumerate_graphs", "evaluate", "full_reconstruction_fingerprint",
    "is_isomorphic", "kelly_count", "load_checkpoint", "load_dataset", "load_graph", "refine_1wl", "refine_2wl",
    "save_checkpoint", "save_dataset", "save_graph", "train", "variance_experiment", "wl_distinguishes",
]
