from .core import MLP, Linear, Module, Tensor, glorot_uniform
from .deepsets import DeepSetsHead, deepsets_apply, set_pool_matrix
from .gnn import GCNLayer, GINLayer, GnnModel, GraphBatch, gcn_layer, gin_layer, readout, vertex_features
from .losses import cross_entropy, cross_entropy_per_item, mse, mse_per_item
from .optim import AdamHyper, AdamState, adam_step

__all__ = [
    "MLP", "Linear", "Module", "Tensor", "glorot_uniform",
    "DeepSetsHead", "deepsets_apply", "set_pool_matrix",
    "GCNLayer", "GINLayer", "GnnModel", "GraphBatch", "gcn_layer", "gin_layer", "readout", "vertex_features",
    "cross_entropy", "cross_entropy_per_item", "mse", "mse_per_item",
    "AdamHyper", "AdamState", "adam_step",
]
