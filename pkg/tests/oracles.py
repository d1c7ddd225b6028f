"""Independent reference implementations used only by the tests.

These are deliberately naive (permutation search, exhaustive enumeration,
explicit loops) and share no code with the package.
"""
import itertools
import math

import numpy as np


# -- graph enumeration ----------------------------------------------------

def _pairs(n):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def all_unlabeled_graphs(n):
    """One adjacency matrix per isomorphism class on ``n`` nodes.

    Every edge subset is mapped to the minimum bitmask over all node
    permutations; distinct minima are the classes.
    """
    pairs = _pairs(n)
    idx = {p: b for b, p in enumerate(pairs)}
    masks = np.arange(1 << len(pairs), dtype=np.int64)
    canon = np.full(masks.shape, np.iinfo(np.int64).max)
    for perm in itertools.permutations(range(n)):
        mapped = np.zeros_like(masks)
        for b, (i, j) in enumerate(pairs):
            pi, pj = sorted((perm[i], perm[j]))
            mapped |= ((masks >> b) & 1) << idx[(pi, pj)]
        canon = np.minimum(canon, mapped)
    out = []
    for m in np.unique(canon):
        a = np.zeros((n, n), dtype=np.uint8)
        for b, (i, j) in enumerate(pairs):
            if (int(m) >> b) & 1:
                a[i, j] = a[j, i] = 1
        out.append(a)
    return out


def random_adjacency(rng, n, p):
    a = np.triu((rng.random((n, n)) < p).astype(np.uint8), 1)
    return a + a.T


# -- pattern definitions by permutation search ----------------------------

def _edge_set(a):
    n = a.shape[0]
    return {frozenset((i, j)) for i in range(n) for j in range(i + 1, n) if a[i, j]}


def _connected(a):
    n = a.shape[0]
    seen, todo = {0}, [0]
    while todo:
        v = todo.pop()
        for u in range(n):
            if a[v, u] and u not in seen:
                seen.add(u)
                todo.append(u)
    return len(seen) == n


def _acyclic(a):
    n = a.shape[0]
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x
    for e in _edge_set(a):
        i, j = tuple(e)
        ri, rj = find(i), find(j)
        if ri == rj:
            return False
        parent[ri] = rj
    return True


def brute_force_is_pattern(a, kind):
    """Pattern membership transcribed from the textual definitions.

    ``kind`` is one of path, tree, graphlet, cycle, clique, wheel, star.
    Size floors: 3 nodes (4 for wheels); graphlets have 3 to 5 nodes.
    """
    a = np.asarray(a)
    n = a.shape[0]
    edges = _edge_set(a)
    if kind == "graphlet":
        return 3 <= n <= 5 and _connected(a)
    if kind == "tree":
        return n >= 3 and _connected(a) and _acyclic(a)
    if kind == "clique":
        return n >= 3 and edges == {frozenset(p) for p in _pairs(n)}
    if kind == "path":
        if n < 3 or len(edges) != n - 1:
            return False
        return any(edges == {frozenset((v[i], v[i + 1])) for i in range(n - 1)}
                   for v in itertools.permutations(range(n)))
    if kind == "cycle":
        if n < 3 or len(edges) != n:
            return False
        return any(edges == {frozenset((v[i], v[(i + 1) % n])) for i in range(n)}
                   for v in itertools.permutations(range(n)))
    if kind == "wheel":
        if n < 4 or len(edges) != 2 * (n - 1):
            return False
        for v in itertools.permutations(range(n)):
            rim, hub = v[:-1], v[-1]
            target = {frozenset((rim[i], rim[(i + 1) % (n - 1)])) for i in range(n - 1)}
            target |= {frozenset((hub, r)) for r in rim}
            if edges == target:
                return True
        return False
    if kind == "star":
        if n < 3:
            return False
        return any(edges == {frozenset((c, u)) for u in range(n) if u != c} for c in range(n))
    raise ValueError(kind)


# -- counting -------------------------------------------------------------

def brute_force_walk_counts(a, l_max):
    """Number of walks with ``i`` edges, ``i = 1..l_max``, by explicit DFS."""
    n = a.shape[0]
    counts = [0] * l_max

    def walk(v, length):
        if length:
            counts[length - 1] += 1
        if length == l_max:
            return
        for u in range(n):
            if a[v, u]:
                walk(u, length + 1)
    for v in range(n):
        walk(v, 0)
    return counts


_TEMPLATES = {
    "wedge": (3, [(0, 1), (1, 2)]),
    "triangle": (3, [(0, 1), (1, 2), (0, 2)]),
    "path4": (4, [(0, 1), (1, 2), (2, 3)]),
    "star4": (4, [(0, 1), (0, 2), (0, 3)]),
    "cycle4": (4, [(0, 1), (1, 2), (2, 3), (3, 0)]),
    "tadpole": (4, [(0, 1), (1, 2), (0, 2), (2, 3)]),
    "diamond": (4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]),
    "k4": (4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
}
GRAPHLET_ORDER = list(_TEMPLATES)


def _isomorphic(edges, k, template):
    for perm in itertools.permutations(range(k)):
        if edges == {frozenset((perm[i], perm[j])) for i, j in template}:
            return True
    return False


def brute_force_graphlets(a):
    """Induced counts per template over all node triples and quadruples."""
    n = a.shape[0]
    counts = dict.fromkeys(_TEMPLATES, 0)
    for k in (3, 4):
        for nodes in itertools.combinations(range(n), k):
            sub = a[np.ix_(nodes, nodes)]
            edges = _edge_set(sub)
            for name, (size, template) in _TEMPLATES.items():
                if size == k and len(template) == len(edges) and _isomorphic(edges, k, template):
                    counts[name] += 1
                    break
    return [counts[name] for name in GRAPHLET_ORDER]


# -- losses and formulas, transcribed with explicit loops -----------------

def scl_loss_loops(k, labels, mu):
    n = len(labels)
    total = 0.0
    for i in range(n):
        denom = 0.0
        for j in range(n):
            if j == i:
                continue
            denom += k[i][j] if labels[i] == labels[j] else mu * k[i][j]
        for j in range(n):
            if j != i and labels[i] == labels[j]:
                total -= math.log(k[i][j]) - math.log(denom)
    return total


def kl_loss_loops(k):
    n = len(k)
    r = [sum(k[i][j] for i in range(n)) for j in range(n)]
    total = 0.0
    for i in range(n):
        row = sum(k[i])
        t = [k[i][j] ** 2 / r[j] for j in range(n)]
        ts = sum(t)
        for j in range(n):
            p, q = t[j] / ts, k[i][j] / row
            total += p * math.log(p / q)
    return total


def robustness_bound_text(n, L, rho, beta_W, beta_A, beta_X, alpha, dA, dX, dD):
    first = (1.0 / math.sqrt(n)) * rho ** L * beta_W ** L
    first *= (1 + beta_A + dA) ** (L - 1) / (1 + alpha) ** L
    return first * ((1 + beta_A + 2 * dA) * dX + 2 * L * beta_X * (1 + beta_A) * dD)


def generalization_bound_text(eta, n, c, delta):
    return c * (eta * math.log(n) * math.log(n / delta) + math.sqrt(math.log(1 / delta) / n))


# -- numerical differentiation --------------------------------------------

def central_difference(f, x, step=1e-5):
    """Gradient of scalar ``f`` at array ``x`` (``x`` is restored afterwards)."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = x[i]
        x[i] = old + step
        up = f()
        x[i] = old - step
        down = f()
        x[i] = old
        g[i] = (up - down) / (2 * step)
    return g


def relative_error(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    return 0.0 if scale == 0 else float(np.linalg.norm(a - b) / scale)
