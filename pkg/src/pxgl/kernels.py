"""Pattern counting kernels and the learnable ensemble kernel.

Three counting vectors are provided (walks for paths, WL subtree colours for
trees, induced 3/4-node graphlets). Their Gram matrices are cosine
normalised and mixed with simplex weights ``softmax(w)``; the weights are
fitted under either a supervised contrastive loss or a kernel KL loss.
"""
import hashlib
from dataclasses import dataclass, field

import numpy as np

from .exceptions import CapabilityError, InputError
from .patterns import PatternKind
from .validation import check_labels

EPS = 1e-12
GRAPHLET_CAP = 200
GRAPHLET_CLASSES = ("wedge", "triangle", "path4", "star4", "cycle4",
                    "tadpole", "diamond", "k4")
EGK_KINDS = (PatternKind.PATH, PatternKind.TREE, PatternKind.GRAPHLET)


@dataclass(frozen=True)
class CountingVector:
    graph_id: int | str
    kind: PatternKind
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if (v < 0).any():
            raise InputError("counting vector entries must be non-negative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self):
        return self.values.shape[0]


# -- counting vectors -----------------------------------------------------

def path_counting_vector(g, l_max=4):
    """Walk counts ``1' A^i 1`` for ``i = 1..l_max``."""
    if l_max < 1:
        raise InputError("l_max must be >= 1")
    a = np.asarray(g.adjacency, dtype=np.float64)
    v = np.ones(a.shape[0])
    out = np.empty(l_max)
    for i in range(l_max):
        v = a @ v
        out[i] = v.sum()
    return CountingVector(g.id, PatternKind.PATH, out)


def _color(*parts):
    h = hashlib.blake2b(repr(parts).encode("ascii"), digest_size=8)
    return int.from_bytes(h.digest(), "little")


def wl_colors(g, depth):
    """Per-depth lists of WL node colours, depth 0 through ``depth``."""
    if depth < 0:
        raise InputError("depth must be >= 0")
    a = np.asarray(g.adjacency)
    nbrs = [np.flatnonzero(row).tolist() for row in a]
    if g.node_labels is None:
        colors = [_color("init", 0)] * a.shape[0]
    else:
        colors = [_color("init", int(x)) for x in g.node_labels]
    rounds = [colors]
    for _ in range(depth):
        colors = [_color(colors[v], tuple(sorted(colors[u] for u in nbrs[v])))
                  for v in range(len(colors))]
        rounds.append(colors)
    return rounds


class WLSubtreeVocabulary:
    """Shared WL colour dictionary; the last index is the overflow bucket."""

    def __init__(self, depth=3):
        if depth < 0:
            raise InputError("depth must be >= 0")
        self.depth = depth
        self.index_ = None

    def fit(self, graphs):
        seen = set()
        for g in graphs:
            for d, colors in enumerate(wl_colors(g, self.depth)):
                seen.update((d, c) for c in colors)
        self.index_ = {key: i for i, key in enumerate(sorted(seen))}
        return self

    @property
    def size(self):
        if self.index_ is None:
            raise InputError("vocabulary is not fitted")
        return len(self.index_) + 1

    def vector(self, g):
        return wl_subtree_vector(g, self.depth, self)


def wl_subtree_vector(g, depth, vocab):
    """Histogram of WL colours at depths ``0..depth`` under a fitted vocabulary."""
    if vocab.index_ is None:
        raise InputError("vocabulary is not fitted")
    if depth > vocab.depth:
        raise InputError("depth exceeds the vocabulary depth")
    out = np.zeros(vocab.size)
    overflow = vocab.size - 1
    for d, colors in enumerate(wl_colors(g, depth)):
        for c in colors:
            out[vocab.index_.get((d, c), overflow)] += 1
    return CountingVector(g.id, PatternKind.TREE, out)


def _graphlet_class(a, nodes):
    sub = a[np.ix_(nodes, nodes)]
    deg = sub.sum(axis=1)
    m = int(deg.sum()) // 2
    if len(nodes) == 3:
        return 0 if m == 2 else 1
    dmax = deg.max()
    if m == 3:
        return 2 if dmax == 2 else 3
    if m == 4:
        return 4 if dmax == 2 else 5
    return 6 if m == 5 else 7


def graphlet_counting_vector(g, cap=GRAPHLET_CAP):
    """Induced counts of the connected 3- and 4-node graphlets.

    Connected node sets are enumerated once each by extension from their
    smallest node (ESU scheme). Order of entries: ``GRAPHLET_CLASSES``.
    """
    n = g.n
    if n > cap:
        raise CapabilityError(
            f"graph {g.id!r} has {n} nodes, above the exhaustive graphlet cap "
            f"of {cap}; sampling-based estimates are not supported")
    a = np.asarray(g.adjacency, dtype=np.int64)
    nbrs = [set(np.flatnonzero(row).tolist()) for row in a]
    counts = np.zeros(len(GRAPHLET_CLASSES))

    def extend(sub, closed, ext, root):
        if len(sub) >= 3:
            counts[_graphlet_class(a, sub)] += 1
        if len(sub) == 4:
            return
        ext = list(ext)
        while ext:
            w = ext.pop()
            new = [u for u in nbrs[w] if u > root and u not in closed]
            extend(sub + [w], closed | nbrs[w] | {w}, ext + new, root)

    for v in range(n):
        extend([v], nbrs[v] | {v}, [u for u in nbrs[v] if u > v], v)
    return CountingVector(g.id, PatternKind.GRAPHLET, counts)


# -- Gram matrices --------------------------------------------------------

def _stack_values(vectors):
    vectors = list(vectors)
    if not vectors:
        raise InputError("no counting vectors given")
    dims = {v.dim for v in vectors}
    kinds = {v.kind for v in vectors}
    if len(dims) != 1 or len(kinds) != 1:
        raise InputError(f"counting vectors differ in kind or dimension: {sorted(dims)}")
    return np.stack([v.values for v in vectors])


def gram_from_vectors(vectors, transform=None):
    """Linear kernel between counting vectors; ``transform='log1p'`` first
    maps every entry through ``log(1 + x)``."""
    h = _stack_values(vectors)
    if transform == "log1p":
        h = np.log1p(h)
    elif transform is not None:
        raise InputError(f"unknown transform {transform!r}")
    k = h @ h.T
    return (k + k.T) / 2


def normalize_gram(k):
    k = np.asarray(k, dtype=np.float64)
    d = np.sqrt(np.maximum(np.diag(k), EPS))
    # outer(d, d) is exactly symmetric, so the result is too
    out = k / np.outer(d, d)
    np.fill_diagonal(out, 1.0)
    return out


def softmax(w):
    w = np.asarray(w, dtype=np.float64)
    e = np.exp(w - w.max())
    return e / e.sum()


@dataclass
class KernelStack:
    names: list
    grams: list
    w: np.ndarray = None
    labels: np.ndarray | None = None

    def __post_init__(self):
        if len(self.names) != len(self.grams) or not self.grams:
            raise InputError("names and grams must be non-empty and aligned")
        self.grams = [np.asarray(k, dtype=np.float64) for k in self.grams]
        n = self.grams[0].shape[0]
        for name, k in zip(self.names, self.grams):
            if k.shape != (n, n):
                raise InputError(f"gram {name!r} has shape {k.shape}, expected {(n, n)}")
        self.w = np.zeros(len(self.grams)) if self.w is None else np.asarray(self.w, float)
        if self.labels is not None:
            self.labels = check_labels(self.labels, n)

    @property
    def lam(self):
        return softmax(self.w)

    @property
    def n(self):
        return self.grams[0].shape[0]


def ensemble_gram(stack, w=None):
    lam = softmax(stack.w if w is None else w)
    return sum(l * k for l, k in zip(lam, stack.grams))


# -- losses ---------------------------------------------------------------

def scl_loss(k, labels, mu=1.0, return_grad=False):
    """Supervised contrastive loss over same-class pairs.

    ``-sum_{i != j, y_i = y_j} [log K_ij - log D_i]`` where ``D_i`` sums the
    same-class row entries plus ``mu`` times the other-class entries.
    """
    if mu <= 0:
        raise InputError("mu must be positive")
    k = np.asarray(k, dtype=np.float64)
    y = check_labels(labels, k.shape[0])
    kc = np.maximum(k, EPS)
    same = y[:, None] == y[None, :]
    np.fill_diagonal(same, False)
    weight = np.where(same, 1.0, mu)
    np.fill_diagonal(weight, 0.0)
    d = (weight * kc).sum(axis=1)
    n_pos = same.sum(axis=1)
    loss = -(np.log(kc) * same).sum() + (n_pos * np.log(np.maximum(d, EPS))).sum()
    if not return_grad:
        return float(loss)
    grad = -same.astype(np.float64) / kc + (n_pos / np.maximum(d, EPS))[:, None] * weight
    grad[k < EPS] = 0.0
    return float(loss), grad


def kl_kernel_loss(k, return_grad=False):
    """KL(P || Q) with ``Q`` the row-normalised kernel and ``P`` the sharpened
    target ``K_ij^2 / r_j`` (``r_j`` the column sums), also row-normalised.

    The gradient is exact, i.e. it flows through ``P`` as well as ``Q``.
    """
    k = np.asarray(k, dtype=np.float64)
    kc = np.maximum(k, EPS)
    row = kc.sum(axis=1)
    q = kc / row[:, None]
    r = kc.sum(axis=0)
    t = kc ** 2 / r[None, :]
    trow = t.sum(axis=1)
    p = t / trow[:, None]
    log_ratio = np.log(p) - np.log(q)
    loss = float((p * log_ratio).sum())
    if not return_grad:
        return loss
    g_p = log_ratio + 1.0
    g_q = -p / q
    g_t = (g_p - (g_p * p).sum(axis=1, keepdims=True)) / trow[:, None]
    grad = g_t * 2 * kc / r[None, :]
    grad -= ((g_t * kc ** 2).sum(axis=0) / r ** 2)[None, :]
    grad += (g_q - (g_q * q).sum(axis=1, keepdims=True)) / row[:, None]
    grad[k < EPS] = 0.0
    return loss, grad


def softmax_backward(lam, d_lam):
    return lam * (d_lam - lam @ d_lam)


def _objective(stack, objective, mu):
    if objective == "scl":
        if stack.labels is None:
            raise InputError("the scl objective needs labels")
        labels = stack.labels
        return lambda k: scl_loss(k, labels, mu, return_grad=True)
    if objective == "kl":
        return lambda k: kl_kernel_loss(k, return_grad=True)
    raise InputError(f"unknown objective {objective!r}")


def ensemble_loss(stack, w, objective="scl", mu=1.0):
    """Loss of ``K(softmax(w))`` and its gradient with respect to ``w``."""
    fn = _objective(stack, objective, mu)
    lam = softmax(w)
    loss, g_k = fn(sum(l * k for l, k in zip(lam, stack.grams)))
    d_lam = np.array([(g_k * k).sum() for k in stack.grams])
    return loss, softmax_backward(lam, d_lam)


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 0.05
    n_iter: int = 500
    backtracking: bool = True
    tol: float = 0.0


@dataclass
class FitReport:
    names: list
    w: np.ndarray
    lam: np.ndarray
    loss_curve: list = field(default_factory=list)

    def to_json(self):
        return {"names": list(self.names), "lambda": [float(x) for x in self.lam],
                "loss_curve": [float(x) for x in self.loss_curve]}


def fit_ensemble_weights(stack, objective="scl", mu=1.0, opt=OptimizerConfig()):
    """Gradient descent on the logits ``w`` of ``stack``.

    With backtracking on, a step that raises the loss is halved until it
    does not (down to 1e-12 of the base rate), so the loss trajectory is
    non-increasing. Updates ``stack.w`` in place and returns a report.
    """
    for name, k in zip(stack.names, stack.grams):
        if not np.isfinite(k).all():
            raise InputError(f"gram {name!r} contains non-finite entries")
    w = stack.w.copy()
    loss, grad = ensemble_loss(stack, w, objective, mu)
    if not np.isfinite(loss):
        for name, k in zip(stack.names, stack.grams):
            single = KernelStack([name], [k], labels=stack.labels)
            if not np.isfinite(ensemble_loss(single, single.w, objective, mu)[0]):
                raise InputError(f"non-finite loss at initialization from gram {name!r}")
        raise InputError("non-finite loss at initialization")
    curve = [loss]
    for _ in range(opt.n_iter):
        step = opt.learning_rate
        if step == 0:
            curve.append(loss)
            continue
        while True:
            w_new = w - step * grad
            new_loss, new_grad = ensemble_loss(stack, w_new, objective, mu)
            if not opt.backtracking or new_loss <= loss:
                break
            step /= 2
            if step < opt.learning_rate * 1e-12:
                w_new = None
                break
        if w_new is None:
            curve.append(loss)
            break
        improvement = loss - new_loss
        w, loss, grad = w_new, new_loss, new_grad
        curve.append(loss)
        if opt.tol > 0 and improvement < opt.tol:
            break
    stack.w = w
    return FitReport(list(stack.names), w.copy(), softmax(w), curve)


# -- assembly -------------------------------------------------------------

def counting_vectors(graphs, l_max=4, wl_depth=3, vocab=None, graphlet_cap=GRAPHLET_CAP):
    """Per-kind counting vectors for EGK; fits the WL vocabulary if needed."""
    if vocab is None:
        vocab = WLSubtreeVocabulary(wl_depth).fit(graphs)
    return {
        PatternKind.PATH: [path_counting_vector(g, l_max) for g in graphs],
        PatternKind.TREE: [wl_subtree_vector(g, wl_depth, vocab) for g in graphs],
        PatternKind.GRAPHLET: [graphlet_counting_vector(g, graphlet_cap) for g in graphs],
    }, vocab


def build_kernel_stack(graphs, labels=None, l_max=4, wl_depth=3, graphlet_cap=GRAPHLET_CAP):
    """Normalised path, tree and graphlet Grams (log1p-transformed counts)."""
    vectors, _ = counting_vectors(graphs, l_max, wl_depth, graphlet_cap=graphlet_cap)
    names = [k.label for k in vectors]
    grams = [normalize_gram(gram_from_vectors(v, "log1p")) for v in vectors.values()]
    return KernelStack(names, grams, labels=labels)
