"""Clustering (k-means, ACC, NMI) and classification metrics."""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from ._seeding import make_rng
from .exceptions import InputError


@dataclass(frozen=True)
class ClusterResult:
    assignments: np.ndarray
    centroids: np.ndarray
    inertia: float
    history: tuple = ()
    degenerate: bool = False
    restart: int = 0


def _sq_dists(x, c):
    d = (x ** 2).sum(axis=1)[:, None] + (c ** 2).sum(axis=1)[None, :] - 2 * x @ c.T
    return np.maximum(d, 0.0)


def _kmeans_pp(x, c, rng):
    n = x.shape[0]
    centers = [x[rng.integers(n)]]
    for _ in range(1, c):
        d = _sq_dists(x, np.array(centers)).min(axis=1)
        total = d.sum()
        idx = rng.integers(n) if total <= 0 else rng.choice(n, p=d / total)
        centers.append(x[idx])
    return np.array(centers)


def _lloyd(x, centers, max_iter, tol):
    history = []
    for _ in range(max_iter):
        d = _sq_dists(x, centers)
        assign = d.argmin(axis=1)
        history.append(float(d[np.arange(x.shape[0]), assign].sum()))
        new = centers.copy()
        for k in range(centers.shape[0]):
            members = x[assign == k]
            if len(members):
                new[k] = members.mean(axis=0)
        shift = float(((new - centers) ** 2).sum())
        centers = new
        if shift <= tol:
            break
    d = _sq_dists(x, centers)
    assign = d.argmin(axis=1)
    inertia = float(d[np.arange(x.shape[0]), assign].sum())
    history.append(inertia)
    return assign, centers, inertia, tuple(history)


def kmeans(points, c, seed=0, restarts=10, max_iter=300, tol=1e-8):
    """k-means++ seeding followed by Lloyd iterations; best of ``restarts``.

    Ties in inertia go to the earlier restart. When fewer than ``c``
    distinct points exist, the result is flagged ``degenerate``.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise InputError("points must be a 2-D array")
    n = x.shape[0]
    if not 1 <= c <= n:
        raise InputError(f"need 1 <= c <= N, got c={c}, N={n}")
    if restarts < 1:
        raise InputError("restarts must be >= 1")
    degenerate = np.unique(x, axis=0).shape[0] < c
    best = None
    for r in range(restarts):
        rng = make_rng(seed, "kmeans", r)
        assign, centers, inertia, hist = _lloyd(x, _kmeans_pp(x, c, rng), max_iter, tol)
        if best is None or inertia < best.inertia:
            best = ClusterResult(assign, centers, inertia, hist, bool(degenerate), r)
    return best


def _check_pair(pred, truth):
    p = np.asarray(pred)
    t = np.asarray(truth)
    if p.shape != t.shape or p.ndim != 1:
        raise InputError(f"length mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise InputError("empty label vectors")
    return p, t


def contingency(pred, truth):
    p, t = _check_pair(pred, truth)
    _, pi = np.unique(p, return_inverse=True)
    _, ti = np.unique(t, return_inverse=True)
    m = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(m, (pi, ti), 1)
    return m


def clustering_accuracy(pred, truth):
    """Best matched fraction over one-to-one cluster-to-class assignments."""
    m = contingency(pred, truth)
    rows, cols = linear_sum_assignment(-m)
    return float(m[rows, cols].sum() / m.sum())


def nmi(pred, truth):
    """Mutual information over the geometric mean of the two entropies."""
    m = contingency(pred, truth).astype(np.float64)
    n = m.sum()
    pxy = m / n
    px = pxy.sum(axis=1)
    py = pxy.sum(axis=0)
    h_x = -(px * np.log(px)).sum()
    h_y = -(py * np.log(py)).sum()
    nz = pxy > 0
    mi = (pxy[nz] * np.log(pxy[nz] / np.outer(px, py)[nz])).sum()
    if h_x == 0 or h_y == 0:
        return 1.0 if h_x == h_y else 0.0
    return float(np.clip(mi / np.sqrt(h_x * h_y), 0.0, 1.0))


def accuracy_from_logits(logits, truth):
    # np.argmax picks the first maximum, so ties go to the lowest class
    pred = np.argmax(np.asarray(logits), axis=1)
    p, t = _check_pair(pred, truth)
    return float((p == t).mean())


def classification_accuracy(model, dataset, indices):
    """Argmax accuracy of ``model`` on ``dataset[indices]``.

    ``model`` is a fitted estimator exposing ``decision_function``.
    """
    graphs = [dataset[i] for i in indices]
    if not graphs:
        raise InputError("empty index list")
    truth = np.array([g.label for g in graphs])
    return accuracy_from_logits(model.decision_function(graphs), truth)
