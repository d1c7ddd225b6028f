"""Graph pattern predicates, WL hashing and per-pattern subgraph samplers.

Each sampler is a randomised grower that proposes a node set; a proposal is
kept only if its induced subgraph satisfies :func:`is_pattern` and its WL
digest has not been seen yet for the same (graph, pattern) pair.
"""
import enum
import hashlib
import json
from dataclasses import dataclass

import numpy as np

from ._seeding import derive_seed
from .exceptions import InputError
from .graph import Subgraph, induced_subgraph

WL_DEDUP_ITERATIONS = 3
MAX_GROW_SIZE = 8


class PatternKind(enum.IntEnum):
    PATH = 0
    TREE = 1
    GRAPHLET = 2
    CYCLE = 3
    CLIQUE = 4
    WHEEL = 5
    STAR = 6

    @property
    def label(self):
        return self.name.lower()

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        if isinstance(value, (int, np.integer)):
            return cls(int(value))
        key = str(value).strip().upper()
        if key.endswith("S") and key[:-1] in cls.__members__:
            key = key[:-1]
        try:
            return cls[key]
        except KeyError:
            raise InputError(f"unknown pattern kind {value!r}") from None


ALL_PATTERNS = tuple(PatternKind)


def _connected(a):
    k = a.shape[0]
    if k == 0:
        return False
    seen = np.zeros(k, dtype=bool)
    seen[0] = True
    stack = [0]
    while stack:
        v = stack.pop()
        for u in np.flatnonzero(a[v]):
            if not seen[u]:
                seen[u] = True
                stack.append(u)
    return bool(seen.all())


def is_pattern(s, kind):
    """Whether the (sub)graph ``s`` belongs to pattern family ``kind``.

    Size floors: path, tree, cycle, clique and star need 3 nodes, wheels
    need 4, graphlets are connected graphs on 3 to 5 nodes.
    """
    kind = PatternKind.parse(kind)
    a = np.asarray(getattr(s, "adjacency", s)).astype(np.int64)
    k = a.shape[0]
    deg = a.sum(axis=1)
    m = int(deg.sum()) // 2
    if kind is PatternKind.PATH:
        return k >= 3 and m == k - 1 and deg.max() <= 2 and _connected(a)
    if kind is PatternKind.TREE:
        return k >= 3 and m == k - 1 and _connected(a)
    if kind is PatternKind.GRAPHLET:
        return 3 <= k <= 5 and _connected(a)
    if kind is PatternKind.CYCLE:
        return k >= 3 and bool((deg == 2).all()) and _connected(a)
    if kind is PatternKind.CLIQUE:
        return k >= 3 and m == k * (k - 1) // 2
    if kind is PatternKind.WHEEL:
        if k < 4:
            return False
        for h in np.flatnonzero(deg == k - 1):
            rest = np.delete(np.delete(a, h, axis=0), h, axis=1)
            if (rest.sum(axis=1) == 2).all() and _connected(rest):
                return True
        return False
    if kind is PatternKind.STAR:
        return k >= 3 and m == k - 1 and deg.max() == k - 1
    raise AssertionError(kind)


def _digest(obj):
    h = hashlib.blake2b(repr(obj).encode("ascii"), digest_size=8)
    return int.from_bytes(h.digest(), "little")


def wl_hash(s, iterations=WL_DEDUP_ITERATIONS):
    """64-bit 1-WL colour-refinement digest of a (sub)graph.

    Initial colours come from ``node_labels`` when present, otherwise every
    node starts with the same colour. The digest covers the final colour
    multiset together with the node and edge counts, so isomorphic inputs
    always collide.
    """
    if iterations < 0:
        raise InputError("iterations must be >= 0")
    a = np.asarray(s.adjacency)
    k = a.shape[0]
    labels = getattr(s, "node_labels", None)
    if labels is None:
        colors = [_digest(("init", 0))] * k
    else:
        colors = [_digest(("init", int(x))) for x in labels]
    nbrs = [np.flatnonzero(a[v]).tolist() for v in range(k)]
    for _ in range(iterations):
        colors = [_digest((colors[v], tuple(sorted(colors[u] for u in nbrs[v]))))
                  for v in range(k)]
    m = int(a.sum()) // 2
    return _digest(("graph", k, m, tuple(sorted(colors))))


@dataclass(frozen=True)
class PatternSampleSet:
    """WL-deduplicated subgraphs of one pattern drawn from one graph."""

    graph_id: int | str
    kind: PatternKind
    samples: tuple
    wl_hashes: tuple
    requested_q: int

    def __post_init__(self):
        if len(self.samples) != len(self.wl_hashes):
            raise InputError("samples and wl_hashes must align")
        if len(self.samples) > self.requested_q:
            raise InputError("more samples than requested")
        if len(set(self.wl_hashes)) != len(self.wl_hashes):
            raise InputError("wl_hashes must be pairwise distinct")

    def __len__(self):
        return len(self.samples)

    @property
    def node_id_lists(self):
        return [list(s.node_ids) for s in self.samples]


# -- growers --------------------------------------------------------------
# Each grower takes a neighbour map (node -> list of neighbours), the list of
# candidate nodes and an rng, and returns an ordered node list or None.

def _grow_path(nbrs, nodes, rng):
    n = len(nodes)
    if n < 3:
        return None
    target = int(rng.integers(3, min(n, MAX_GROW_SIZE) + 1))
    path = [nodes[rng.integers(n)]]
    inside = {path[0]}
    while len(path) < target:
        cur = path[-1]
        # stepping next to an earlier node would create a chord
        cand = [u for u in nbrs[cur] if u not in inside
                and not any(w in inside and w != cur for w in nbrs[u])]
        if not cand:
            break
        nxt = cand[rng.integers(len(cand))]
        path.append(nxt)
        inside.add(nxt)
    return path if len(path) >= 3 else None


def _grow_tree(nbrs, nodes, rng):
    n = len(nodes)
    if n < 3:
        return None
    target = int(rng.integers(3, min(n, MAX_GROW_SIZE) + 1))
    tree = [nodes[rng.integers(n)]]
    inside = {tree[0]}
    while len(tree) < target:
        frontier = [(t, u) for t in tree for u in nbrs[t] if u not in inside
                    and sum(w in inside for w in nbrs[u]) == 1]
        if not frontier:
            break
        _, u = frontier[rng.integers(len(frontier))]
        tree.append(u)
        inside.add(u)
    return tree if len(tree) >= 3 else None


def _grow_graphlet(nbrs, nodes, rng):
    n = len(nodes)
    if n < 3:
        return None
    target = int(rng.integers(3, 6))
    chosen = [nodes[rng.integers(n)]]
    inside = {chosen[0]}
    while len(chosen) < target:
        frontier = sorted({u for v in chosen for u in nbrs[v] if u not in inside})
        if not frontier:
            break
        u = frontier[rng.integers(len(frontier))]
        chosen.append(u)
        inside.add(u)
    return chosen if len(chosen) >= 3 else None


def _chordless(cycle, nbrs, rng):
    """Shrink a cycle along random chords until it is an induced cycle."""
    while True:
        k = len(cycle)
        pos = {v: i for i, v in enumerate(cycle)}
        chords = []
        for i, v in enumerate(cycle):
            for u in nbrs[v]:
                j = pos.get(u)
                if j is not None and j > i + 1 and not (i == 0 and j == k - 1):
                    chords.append((i, j))
        if not chords:
            return cycle
        i, j = chords[rng.integers(len(chords))]
        if rng.random() < 0.5:
            cycle = cycle[i:j + 1]
        else:
            cycle = cycle[j:] + cycle[:i + 1]


def _grow_cycle(nbrs, nodes, rng):
    n = len(nodes)
    if n < 3:
        return None
    start = nodes[rng.integers(n)]
    path = [start]
    on_path = {start: 0}
    visited = {start}
    stack = [iter(rng.permutation(nbrs[start]).tolist())]
    while stack:
        v = path[-1]
        parent = path[-2] if len(path) > 1 else None
        advanced = False
        for u in stack[-1]:
            if u == parent:
                continue
            if u in on_path:
                return _chordless(path[on_path[u]:], nbrs, rng)
            if u not in visited:
                visited.add(u)
                on_path[u] = len(path)
                path.append(u)
                stack.append(iter(rng.permutation(nbrs[u]).tolist()))
                advanced = True
                break
        if not advanced:
            stack.pop()
            del on_path[path.pop()]
    return None


def _grow_clique(nbrs, nodes, rng):
    edges = [(v, u) for v in nodes for u in nbrs[v] if v < u]
    if not edges:
        return None
    v, u = edges[rng.integers(len(edges))]
    clique = [v, u]
    common = sorted(set(nbrs[v]) & set(nbrs[u]))
    for w in rng.permutation(common).tolist() if common else []:
        if all(w in nbrs_set for nbrs_set in (set(nbrs[c]) for c in clique)):
            clique.append(w)
    return clique if len(clique) >= 3 else None


def _grow_wheel(nbrs, nodes, rng):
    hubs = [v for v in nodes if len(nbrs[v]) >= 3]
    if not hubs:
        return None
    h = hubs[rng.integers(len(hubs))]
    ring = set(nbrs[h])
    sub = {v: [u for u in nbrs[v] if u in ring] for v in nbrs[h]}
    cycle = _grow_cycle(sub, list(nbrs[h]), rng)
    return None if cycle is None else [h] + cycle


def _grow_star(nbrs, nodes, rng):
    centers = [v for v in nodes if len(nbrs[v]) >= 2]
    if not centers:
        return None
    c = centers[rng.integers(len(centers))]
    leaves = []
    for u in rng.permutation(nbrs[c]).tolist():
        if not any(w in leaves for w in nbrs[u]):
            leaves.append(u)
    return [c] + leaves if len(leaves) >= 2 else None


_GROWERS = {
    PatternKind.PATH: _grow_path,
    PatternKind.TREE: _grow_tree,
    PatternKind.GRAPHLET: _grow_graphlet,
    PatternKind.CYCLE: _grow_cycle,
    PatternKind.CLIQUE: _grow_clique,
    PatternKind.WHEEL: _grow_wheel,
    PatternKind.STAR: _grow_star,
}


def neighbour_lists(g):
    return [np.flatnonzero(row).tolist() for row in np.asarray(g.adjacency)]


def sample_pattern_set(g, kind, q=10, seed=0, max_attempts=None):
    """Draw up to ``q`` distinct (by WL digest) subgraphs of pattern ``kind``.

    Deterministic for fixed ``(g, kind, q, seed, max_attempts)``. The result
    may hold fewer than ``q`` samples, possibly none.
    """
    kind = PatternKind.parse(kind)
    if q < 1:
        raise InputError("q must be >= 1")
    if max_attempts is None:
        max_attempts = 50 * q
    if max_attempts < q:
        raise InputError("max_attempts must be >= q")
    rng = np.random.default_rng(seed)
    nbrs = neighbour_lists(g)
    nodes = list(range(g.n))
    grow = _GROWERS[kind]
    samples, hashes = [], []
    seen_hashes, seen_sets = set(), set()
    for _ in range(max_attempts):
        proposal = grow(nbrs, nodes, rng)
        if proposal is None:
            continue
        key = frozenset(proposal)
        if key in seen_sets:
            continue
        seen_sets.add(key)
        s = induced_subgraph(g, proposal)
        if not is_pattern(s, kind):
            continue
        h = wl_hash(s, WL_DEDUP_ITERATIONS)
        if h in seen_hashes:
            continue
        seen_hashes.add(h)
        samples.append(s)
        hashes.append(h)
        if len(samples) == q:
            break
    return PatternSampleSet(g.id, kind, tuple(samples), tuple(hashes), q)


def pattern_seed(master_seed, graph_id, kind):
    return derive_seed(master_seed, graph_id, PatternKind.parse(kind).name)


def sample_dataset(graphs, kinds=ALL_PATTERNS, q=10, seed=0, max_attempts=None):
    """Sample every (graph, pattern) pair; returns ``{kind: [set per graph]}``.

    Per-graph seeds are derived from ``(seed, graph.id, kind)`` so results
    do not depend on processing order.
    """
    kinds = [PatternKind.parse(k) for k in kinds]
    return {
        k: [sample_pattern_set(g, k, q, pattern_seed(seed, g.id, k), max_attempts)
            for g in graphs]
        for k in kinds
    }


def rebuild_sample_set(g, kind, node_id_lists, requested_q):
    subs = [induced_subgraph(g, ids) for ids in node_id_lists]
    return PatternSampleSet(g.id, PatternKind.parse(kind), tuple(subs),
                            tuple(wl_hash(s) for s in subs), requested_q)


def save_sample_sets(path, sample_sets, key):
    payload = {
        "key": key,
        "sets": {
            k.label: [[s.graph_id, s.requested_q, s.node_id_lists] for s in sets]
            for k, sets in sample_sets.items()
        },
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True)


def load_sample_sets(path, graphs, key=None):
    with open(path) as fh:
        payload = json.load(fh)
    if key is not None and payload["key"] != key:
        raise InputError(f"sample cache key mismatch in {path}")
    out = {}
    for name, rows in payload["sets"].items():
        kind = PatternKind.parse(name)
        if len(rows) != len(graphs):
            raise InputError(f"sample cache {path} does not match dataset size")
        out[kind] = [rebuild_sample_set(g, kind, ids, q)
                     for g, (_, q, ids) in zip(graphs, rows)]
    return dict(sorted(out.items()))


__all__ = [
    "ALL_PATTERNS", "PatternKind", "PatternSampleSet", "Subgraph", "is_pattern",
    "wl_hash", "sample_pattern_set", "sample_dataset", "pattern_seed",
    "save_sample_sets", "load_sample_sets",
]
