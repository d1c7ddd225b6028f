"""Explainable graph representations from weighted ensembles of pattern channels."""
__version__ = "0.1.0"

from .data import Dataset, SynthSpec, load_tudataset, split, synth_pattern_dataset, write_tudataset
from .egk import EnsembleKernelLearner
from .exceptions import CapabilityError, InputError, NumericError, ParseError, PxglError
from .gnn import PatternEnsembleGNN
from .graph import Graph, Subgraph, induced_subgraph, normalized_adjacency
from .patterns import PatternKind, PatternSampleSet, is_pattern, sample_pattern_set, wl_hash

__all__ = [
    "Dataset", "SynthSpec", "load_tudataset", "split", "synth_pattern_dataset",
    "write_tudataset", "EnsembleKernelLearner", "CapabilityError", "InputError",
    "NumericError", "ParseError", "PxglError", "PatternEnsembleGNN", "Graph", "Subgraph",
    "induced_subgraph", "normalized_adjacency", "PatternKind", "PatternSampleSet",
    "is_pattern", "sample_pattern_set", "wl_hash",
]
