"""Datasets: TUDataset text format, synthetic planted-pattern graphs, splits."""
import hashlib
import os
from dataclasses import dataclass, field

import numpy as np

from ._seeding import make_rng
from .exceptions import InputError, ParseError
from .graph import Graph, degree_features, label_features
from .patterns import PatternKind
from .validation import check_probability_ratios


@dataclass(frozen=True, eq=False)
class Dataset:
    name: str
    graphs: list
    num_classes: int
    feature_dim: int
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.graphs:
            raise InputError("a dataset needs at least one graph")
        dims = {g.features.shape[1] for g in self.graphs}
        if dims != {self.feature_dim}:
            raise InputError(f"graphs have feature dims {sorted(dims)}, expected {self.feature_dim}")
        labels = {g.label for g in self.graphs if g.label is not None}
        if labels and labels != set(range(self.num_classes)):
            raise InputError("labels must cover 0..num_classes-1")

    def __len__(self):
        return len(self.graphs)

    def __getitem__(self, i):
        return self.graphs[i]

    @property
    def labels(self):
        return np.array([-1 if g.label is None else g.label for g in self.graphs])

    def subset(self, indices):
        return [self.graphs[i] for i in indices]

    def fingerprint(self):
        h = hashlib.blake2b(digest_size=16)
        for g in self.graphs:
            h.update(repr((g.id, g.label, g.n)).encode())
            h.update(np.ascontiguousarray(g.adjacency).tobytes())
            h.update(np.ascontiguousarray(g.features).tobytes())
            if g.node_labels is not None:
                h.update(np.ascontiguousarray(g.node_labels).tobytes())
        return h.hexdigest()


# -- TUDataset text format ------------------------------------------------

def _read_lines(path, required=True):
    if not os.path.exists(path):
        if required:
            raise ParseError("missing mandatory file", path, 0)
        return None
    with open(path) as fh:
        lines = [(i + 1, ln.strip()) for i, ln in enumerate(fh)]
    return [(i, ln) for i, ln in lines if ln]


def _parse_ints(path, lines, width):
    out = []
    for lineno, ln in lines:
        parts = [p.strip() for p in ln.split(",")]
        if len(parts) != width:
            raise ParseError(f"expected {width} comma-separated integers, got {ln!r}", path, lineno)
        try:
            out.append([int(p) for p in parts])
        except ValueError:
            raise ParseError(f"non-integer value in {ln!r}", path, lineno) from None
    return out


def load_tudataset(directory, name):
    """Parse ``<name>_A.txt`` and friends from ``directory``.

    Node labels are one-hot encoded (value order = sorted distinct labels);
    node attributes are appended after them. Without either file, nodes get
    the capped degree one-hot encoding. Graph labels are remapped to
    ``0..C-1`` in sorted order.
    """
    path = lambda suffix: os.path.join(directory, f"{name}_{suffix}.txt")
    ind_path = path("graph_indicator")
    indicator = [row[0] for row in _parse_ints(ind_path, _read_lines(ind_path), 1)]
    if not indicator:
        raise ParseError("no nodes listed", ind_path, 0)
    n_nodes = len(indicator)
    graph_ids = sorted(set(indicator))
    gpos = {gid: i for i, gid in enumerate(graph_ids)}
    node_graph = np.array([gpos[x] for x in indicator])
    sizes = np.bincount(node_graph, minlength=len(graph_ids))
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    order = np.argsort(node_graph, kind="stable")
    local = np.empty(n_nodes, dtype=np.int64)
    local[order] = np.arange(n_nodes) - offsets[node_graph[order]]

    adj = [np.zeros((s, s), dtype=np.uint8) for s in sizes]
    a_path = path("A")
    a_lines = _read_lines(a_path)
    for (lineno, _), (i, j) in zip(a_lines, _parse_ints(a_path, a_lines, 2)):
        for v in (i, j):
            if not 1 <= v <= n_nodes:
                raise ParseError(f"node id {v} outside 1..{n_nodes}", a_path, lineno)
        gi, gj = node_graph[i - 1], node_graph[j - 1]
        if gi != gj:
            raise ParseError(f"edge ({i}, {j}) joins two different graphs", a_path, lineno)
        if i != j:
            adj[gi][local[i - 1], local[j - 1]] = adj[gi][local[j - 1], local[i - 1]] = 1

    gl_path = path("graph_labels")
    gl_lines = _read_lines(gl_path, required=False)
    labels = None
    if gl_lines is not None:
        raw = [row[0] for row in _parse_ints(gl_path, gl_lines, 1)]
        if len(raw) != len(graph_ids):
            raise ParseError(f"{len(raw)} graph labels for {len(graph_ids)} graphs", gl_path, len(raw))
        remap = {v: i for i, v in enumerate(sorted(set(raw)))}
        labels = [remap[v] for v in raw]

    nl_path = path("node_labels")
    nl_lines = _read_lines(nl_path, required=False)
    node_labels, n_node_labels = None, 0
    if nl_lines is not None:
        raw = [row[0] for row in _parse_ints(nl_path, nl_lines, 1)]
        if len(raw) != n_nodes:
            raise ParseError(f"{len(raw)} node labels for {n_nodes} nodes", nl_path, len(raw))
        remap = {v: i for i, v in enumerate(sorted(set(raw)))}
        node_labels = np.array([remap[v] for v in raw])
        n_node_labels = len(remap)

    at_path = path("node_attributes")
    at_lines = _read_lines(at_path, required=False)
    attrs = None
    if at_lines is not None:
        rows = []
        for lineno, ln in at_lines:
            try:
                rows.append([float(p) for p in ln.split(",")])
            except ValueError:
                raise ParseError(f"non-numeric attribute in {ln!r}", at_path, lineno) from None
        if len(rows) != n_nodes or len({len(r) for r in rows}) != 1:
            raise ParseError("attribute rows must match node count and share a width",
                             at_path, len(rows))
        attrs = np.array(rows)

    parts = []
    if node_labels is not None:
        parts.append(label_features(node_labels, n_node_labels))
    if attrs is not None:
        parts.append(attrs)
    feats_all = np.hstack(parts) if parts else None
    source = "+".join(k for k, v in (("labels", node_labels), ("attributes", attrs)) if v is not None)

    graphs = []
    for gi in range(len(graph_ids)):
        rows = order[offsets[gi]:offsets[gi + 1]]
        x = feats_all[rows] if feats_all is not None else degree_features(adj[gi])
        nl = node_labels[rows] if node_labels is not None else None
        graphs.append(Graph(adj[gi], x, label=None if labels is None else labels[gi],
                            id=gi, node_labels=nl))
    n_classes = 1 + max(labels) if labels else 0
    prov = {"source": "tudataset", "dir": str(directory), "features": source or "degree",
            "num_node_labels": n_node_labels}
    return Dataset(name, graphs, n_classes, graphs[0].features.shape[1], prov)


def _fmt(x):
    return repr(float(x))


def write_tudataset(ds, directory, name=None):
    """Write ``ds`` in TUDataset format (each undirected edge listed twice)."""
    name = name or ds.name
    os.makedirs(directory, exist_ok=True)
    path = lambda suffix: os.path.join(directory, f"{name}_{suffix}.txt")
    edges, indicator, node_labels, attrs = [], [], [], []
    feats = ds.provenance.get("features", "degree")
    k = ds.provenance.get("num_node_labels", 0)
    offset = 0
    for gi, g in enumerate(ds.graphs):
        for i, j in g.edges:
            edges.append(f"{offset + i + 1}, {offset + j + 1}")
            edges.append(f"{offset + j + 1}, {offset + i + 1}")
        indicator.extend([str(gi + 1)] * g.n)
        if g.node_labels is not None:
            node_labels.extend(str(int(v)) for v in g.node_labels)
        if "attributes" in feats:
            attrs.extend(", ".join(_fmt(v) for v in row) for row in g.features[:, k:])
        offset += g.n
    with open(path("A"), "w") as fh:
        fh.write("\n".join(edges) + ("\n" if edges else ""))
    with open(path("graph_indicator"), "w") as fh:
        fh.write("\n".join(indicator) + "\n")
    if all(g.label is not None for g in ds.graphs):
        with open(path("graph_labels"), "w") as fh:
            fh.write("\n".join(str(g.label) for g in ds.graphs) + "\n")
    if node_labels:
        with open(path("node_labels"), "w") as fh:
            fh.write("\n".join(node_labels) + "\n")
    if attrs:
        with open(path("node_attributes"), "w") as fh:
            fh.write("\n".join(attrs) + "\n")


# -- synthetic planted patterns -------------------------------------------

PLANTABLE = (PatternKind.PATH, PatternKind.CYCLE, PatternKind.CLIQUE,
             PatternKind.STAR, PatternKind.WHEEL)


@dataclass(frozen=True)
class SynthSpec:
    kind_a: str = "clique"
    size_a: int = 5
    kind_b: str = "cycle"
    size_b: int = 6
    counts: tuple = (50, 50)
    n_min: int = 12
    n_max: int = 20
    p: float = 0.1

    def __post_init__(self):
        for kind, size in ((self.kind_a, self.size_a), (self.kind_b, self.size_b)):
            k = PatternKind.parse(kind)
            if k not in PLANTABLE:
                raise InputError(f"cannot plant {k.label}; choose from "
                                 f"{[p.label for p in PLANTABLE]}")
            floor = 4 if k is PatternKind.WHEEL else 3
            if size < floor:
                raise InputError(f"{k.label} needs at least {floor} nodes")
            if size > self.n_min:
                raise InputError(f"{k.label} of size {size} does not fit graphs of {self.n_min} nodes")
        if len(self.counts) != 2 or min(self.counts) < 0 or sum(self.counts) == 0:
            raise InputError("counts must be two non-negative ints, not both zero")
        if not 1 <= self.n_min <= self.n_max or not 0 <= self.p <= 1:
            raise InputError("need 1 <= n_min <= n_max and 0 <= p <= 1")


def pattern_edges(kind, size):
    """Edges of the canonical ``kind`` on nodes ``0..size-1``."""
    kind = PatternKind.parse(kind)
    if kind is PatternKind.CLIQUE:
        return [(i, j) for i in range(size) for j in range(i + 1, size)]
    if kind is PatternKind.PATH:
        return [(i, i + 1) for i in range(size - 1)]
    if kind is PatternKind.CYCLE:
        return [(i, (i + 1) % size) for i in range(size)]
    if kind is PatternKind.STAR:
        return [(0, i) for i in range(1, size)]
    if kind is PatternKind.WHEEL:
        rim = size - 1
        return [(0, i) for i in range(1, size)] + [(1 + i, 1 + (i + 1) % rim) for i in range(rim)]
    raise InputError(f"cannot plant {kind.label}")


def plant(a, kind, size, rng):
    """Plant an induced copy of ``kind`` on ``size`` nodes of ``a`` (in place).

    Cliques go on random nodes; the sparser patterns go on the lowest-degree
    nodes (random tie-break), whose mutual edges are cleared first so the
    copy is induced. Returns the chosen node ids in pattern order.
    """
    kind = PatternKind.parse(kind)
    n = a.shape[0]
    if kind is PatternKind.CLIQUE:
        nodes = rng.choice(n, size, replace=False)
    else:
        deg = a.sum(axis=1)
        nodes = np.lexsort((rng.random(n), deg))[:size]
        nodes = rng.permutation(nodes)
    a[np.ix_(nodes, nodes)] = 0
    for i, j in pattern_edges(kind, size):
        a[nodes[i], nodes[j]] = a[nodes[j], nodes[i]] = 1
    return [int(v) for v in nodes]


def synth_pattern_dataset(spec=SynthSpec(), seed=0):
    """Random sparse graphs with one planted pattern; class = which pattern."""
    rng = make_rng(seed, "synth")
    graphs, planted = [], []
    plan = [(0, spec.kind_a, spec.size_a)] * spec.counts[0] + \
           [(1, spec.kind_b, spec.size_b)] * spec.counts[1]
    for gid, (label, kind, size) in enumerate(plan):
        n = int(rng.integers(spec.n_min, spec.n_max + 1))
        a = np.triu((rng.random((n, n)) < spec.p).astype(np.uint8), 1)
        a = a + a.T
        planted.append(plant(a, kind, size, rng))
        graphs.append(Graph(a, degree_features(a), label=label, id=gid))
    prov = {"source": "synthetic", "spec": {k: (list(v) if isinstance(v, tuple) else v)
                                             for k, v in spec.__dict__.items()},
            "seed": seed, "planted": planted, "features": "degree", "num_node_labels": 0}
    n_classes = 2 if all(spec.counts) else 1
    if n_classes == 1 and spec.counts[0] == 0:
        graphs = [Graph(g.adjacency, g.features, label=0, id=g.id) for g in graphs]
    name = f"synth-{PatternKind.parse(spec.kind_a).label}{spec.size_a}-" \
           f"{PatternKind.parse(spec.kind_b).label}{spec.size_b}"
    return Dataset(name, graphs, n_classes, graphs[0].features.shape[1], prov)


# -- splits ---------------------------------------------------------------

@dataclass(frozen=True)
class Split:
    train: list
    val: list
    test: list
    stratified: bool

    def to_json(self):
        return {"train": self.train, "val": self.val, "test": self.test,
                "stratified": self.stratified}


def split(ds, ratios=(0.8, 0.1, 0.1), seed=0):
    """Seeded train/val/test partition, stratified by class when possible.

    Validation and test sizes are ``floor(ratio * N)``; train takes the
    rest. Under stratification each class is shuffled and its members are
    interleaved by relative position, so every prefix of the merged order
    is close to class-balanced; test takes the first slots, then val.
    Falls back to a plain shuffle (``stratified=False``) when labels are
    missing or a class has fewer than 3 members.
    """
    r = check_probability_ratios(ratios)
    graphs = ds.graphs if hasattr(ds, "graphs") else ds
    n = len(graphs)
    n_val = int(np.floor(r[1] * n + 1e-9))
    n_test = int(np.floor(r[2] * n + 1e-9))
    labels = [g.label for g in graphs]
    rng = make_rng(seed, "split")
    stratified = all(l is not None for l in labels)
    if stratified:
        classes, counts = np.unique(labels, return_counts=True)
        stratified = bool(counts.min() >= 3)
    if stratified:
        keys = []
        for c in classes:
            members = rng.permutation([i for i, l in enumerate(labels) if l == c])
            keys.extend(((j + 0.5) / len(members), int(c), int(i)) for j, i in enumerate(members))
        order = [i for _, _, i in sorted(keys)]
    else:
        order = [int(i) for i in rng.permutation(n)]
    test = sorted(order[:n_test])
    val = sorted(order[n_test:n_test + n_val])
    train = sorted(order[n_test + n_val:])
    return Split(train, val, test, stratified)
