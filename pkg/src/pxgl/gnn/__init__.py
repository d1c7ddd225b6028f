"""Pattern-ensemble GNN with hand-written forward and backward passes."""
from .estimator import PatternEnsembleGNN
from .layers import GcnStack, gcn_forward, pattern_representation
from .losses import ce_loss, gaussian_kl_loss, median_bandwidth
from .model import (
    EnsembleModel, GraphEncoding, ModelConfig, ensemble_representation, graph_input,
    make_batch,
)
from .train import TrainConfig, explain, fit_model, train

__all__ = [
    "PatternEnsembleGNN", "GcnStack", "gcn_forward", "pattern_representation", "ce_loss",
    "gaussian_kl_loss", "median_bandwidth", "EnsembleModel", "GraphEncoding",
    "ModelConfig", "ensemble_representation", "graph_input", "make_batch",
    "TrainConfig", "explain", "fit_model", "train",
]
