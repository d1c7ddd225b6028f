"""Immutable graph value types, induced subgraphs and the GCN propagation operator."""
from dataclasses import dataclass, field

import numpy as np

from .validation import check_adjacency, check_features, check_node_ids

DEGREE_CAP = 10


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph with a dense node feature matrix.

    ``node_labels`` holds optional discrete node labels; they seed the
    Weisfeiler-Lehman colourings and are otherwise independent of
    ``features``.
    """

    adjacency: np.ndarray
    features: np.ndarray
    label: int | None = None
    id: int | str = 0
    node_labels: np.ndarray | None = None
    edges: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        a = check_adjacency(self.adjacency)
        x = check_features(self.features, a.shape[0])
        object.__setattr__(self, "adjacency", _frozen(a))
        object.__setattr__(self, "features", _frozen(x))
        if self.node_labels is not None:
            nl = np.asarray(self.node_labels, dtype=np.int64).reshape(-1)
            if nl.shape[0] != a.shape[0]:
                raise ValueError("node_labels length must equal node count")
            object.__setattr__(self, "node_labels", _frozen(nl))
        if self.label is not None:
            object.__setattr__(self, "label", int(self.label))
        iu, ju = np.nonzero(np.triu(a, 1))
        object.__setattr__(self, "edges", _frozen(np.stack([iu, ju], axis=1)))

    @property
    def n(self):
        return self.adjacency.shape[0]

    @property
    def num_edges(self):
        return self.edges.shape[0]

    @property
    def degrees(self):
        return self.adjacency.sum(axis=1).astype(np.int64)

    @classmethod
    def from_edges(cls, n, edges, features=None, **kwargs):
        """Build a graph from an undirected edge list (pairs listed once)."""
        a = np.zeros((n, n), dtype=np.uint8)
        for i, j in edges:
            a[i, j] = a[j, i] = 1
        if features is None:
            features = degree_features(a)
        return cls(a, features, **kwargs)


@dataclass(frozen=True, eq=False)
class Subgraph:
    """Induced subgraph of a parent graph; node order follows ``node_ids``."""

    parent_id: int | str
    node_ids: tuple
    adjacency: np.ndarray
    features: np.ndarray
    node_labels: np.ndarray | None = None

    @property
    def n(self):
        return len(self.node_ids)

    @property
    def num_edges(self):
        return int(self.adjacency.sum()) // 2


def induced_subgraph(g, node_ids):
    """Return the subgraph of ``g`` induced by ``node_ids``.

    Raises
    ------
    InputError
        If ``node_ids`` is empty, contains duplicates or out-of-range ids.
    """
    ids = check_node_ids(node_ids, g.n)
    idx = np.asarray(ids, dtype=np.intp)
    nl = None if g.node_labels is None else _frozen(g.node_labels[idx])
    return Subgraph(
        parent_id=g.id,
        node_ids=ids,
        adjacency=_frozen(g.adjacency[np.ix_(idx, idx)]),
        features=_frozen(g.features[idx]),
        node_labels=nl,
    )


def normalized_adjacency(g):
    """Symmetrically normalised adjacency with self-loops, D^-1/2 (I + A) D^-1/2.

    Accepts a Graph, a Subgraph or a raw adjacency array.
    """
    a = np.asarray(getattr(g, "adjacency", g), dtype=np.float64)
    a_hat = a + np.eye(a.shape[0])
    d_inv_sqrt = 1.0 / np.sqrt(a_hat.sum(axis=1))
    return a_hat * d_inv_sqrt[:, None] * d_inv_sqrt[None, :]


def degree_features(adjacency, d_max=DEGREE_CAP):
    """One-hot encoding of node degree, capped at ``d_max``."""
    deg = np.minimum(np.asarray(adjacency).sum(axis=1).astype(np.int64), d_max)
    x = np.zeros((deg.shape[0], d_max + 1))
    x[np.arange(deg.shape[0]), deg] = 1.0
    return x


def label_features(node_labels, num_labels):
    """One-hot encoding of discrete node labels in ``[0, num_labels)``."""
    nl = np.asarray(node_labels, dtype=np.int64)
    x = np.zeros((nl.shape[0], num_labels))
    x[np.arange(nl.shape[0]), nl] = 1.0
    return x


def relabel(g, perm):
    """Return ``g`` with node ``i`` moved to position ``perm[i]``."""
    perm = np.asarray(perm)
    inv = np.argsort(perm)
    nl = None if g.node_labels is None else g.node_labels[inv]
    return Graph(g.adjacency[np.ix_(inv, inv)], g.features[inv],
                 label=g.label, id=g.id, node_labels=nl)
