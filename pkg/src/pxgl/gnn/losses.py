"""Training objectives: cross-entropy and the Gaussian-kernel KL loss."""
import numpy as np

from ..exceptions import InputError
from ..kernels import kl_kernel_loss
from ..validation import check_labels


def log_softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def ce_loss(logits, labels):
    """Mean cross-entropy of a batch of logits; returns ``(loss, d_logits)``."""
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    y = check_labels(np.atleast_1d(labels), logits.shape[0])
    if logits.shape[1] < 2:
        raise InputError("need at least two classes")
    if y.size and y.max() >= logits.shape[1]:
        raise InputError("label outside the classifier's output range")
    logp = log_softmax(logits)
    b = logits.shape[0]
    loss = -logp[np.arange(b), y].mean()
    d = np.exp(logp)
    d[np.arange(b), y] -= 1.0
    return float(loss), d / b


def pairwise_sq_dists(g):
    sq = (g ** 2).sum(axis=1)
    d = sq[:, None] + sq[None, :] - 2 * g @ g.T
    np.fill_diagonal(d, 0.0)
    return np.maximum(d, 0.0)


def median_bandwidth(g):
    """Median of the pairwise squared distances (``i < j``); 1.0 if that is 0."""
    g = np.asarray(g, dtype=np.float64)
    iu = np.triu_indices(g.shape[0], 1)
    med = float(np.median(pairwise_sq_dists(g)[iu])) if iu[0].size else 0.0
    return med if med > 0 else 1.0


def gaussian_kl_loss(g, gamma):
    """KL kernel loss on ``K_ij = exp(-|g_i - g_j|^2 / gamma)``.

    Returns ``(loss, d_g)``.
    """
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] < 2:
        raise InputError("gaussian_kl_loss needs a batch of at least two vectors")
    if gamma <= 0:
        raise InputError("gamma must be positive")
    diff = g[:, None, :] - g[None, :, :]
    k = np.exp(-(diff ** 2).sum(axis=2) / gamma)
    loss, d_k = kl_kernel_loss(k, return_grad=True)
    s = d_k * k
    s = s + s.T
    d_g = (-2.0 / gamma) * (s.sum(axis=1)[:, None] * g - s @ g)
    return loss, d_g
