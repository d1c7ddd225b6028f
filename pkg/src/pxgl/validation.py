"""Input validation helpers used by the estimators and the graph types."""
from collections.abc import Sequence

import numpy as np

from .exceptions import InputError


def check_adjacency(adjacency):
    """Return a validated ``uint8`` copy of a symmetric, hollow 0/1 matrix."""
    a = np.asarray(adjacency)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"adjacency must be square, got shape {a.shape}")
    if a.shape[0] < 1:
        raise InputError("graph must have at least one node")
    if not np.isin(a, (0, 1)).all():
        raise InputError("adjacency entries must be 0 or 1")
    a = a.astype(np.uint8)
    if not (a == a.T).all():
        raise InputError("adjacency must be symmetric")
    if np.diag(a).any():
        raise InputError("adjacency must not contain self-loops")
    return a


def check_features(features, n):
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] != n:
        raise InputError(f"features must have {n} rows, got shape {x.shape}")
    if x.shape[1] < 1:
        raise InputError("features must have at least one column")
    if not np.isfinite(x).all():
        raise InputError("features contain non-finite values")
    return x


def check_node_ids(node_ids, n):
    ids = [int(i) for i in node_ids]
    if not ids:
        raise InputError("node_ids must be non-empty")
    if len(set(ids)) != len(ids):
        raise InputError(f"node_ids contain duplicates: {ids}")
    bad = [i for i in ids if i < 0 or i >= n]
    if bad:
        raise InputError(f"node ids out of range [0, {n}): {bad}")
    return tuple(ids)


def check_labels(labels, n_samples=None):
    y = np.asarray(labels)
    if y.ndim != 1:
        raise InputError("labels must be one-dimensional")
    if n_samples is not None and y.shape[0] != n_samples:
        raise InputError(f"expected {n_samples} labels, got {y.shape[0]}")
    if y.size and not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise InputError("labels must be integer class indices")
    y = y.astype(np.int64)
    if y.size and y.min() < 0:
        raise InputError("labels must be non-negative")
    return y


def check_graphs(graphs):
    """Accept a Dataset or any sequence of Graph objects; return a list."""
    from .graph import Graph

    if hasattr(graphs, "graphs"):
        graphs = graphs.graphs
    if not isinstance(graphs, Sequence):
        graphs = list(graphs)
    if len(graphs) == 0:
        raise InputError("empty dataset")
    for g in graphs:
        if not isinstance(g, Graph):
            raise InputError(f"expected Graph instances, got {type(g).__name__}")
    return list(graphs)


def check_probability_ratios(ratios):
    r = np.asarray(ratios, dtype=np.float64)
    if r.shape != (3,) or (r <= 0).any():
        raise InputError("ratios must be three positive numbers")
    if abs(r.sum() - 1.0) > 1e-9:
        raise InputError(f"ratios must sum to 1, got {r.sum()}")
    return r
