"""Estimator wrapper around the ensemble graph kernel."""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .exceptions import InputError
from .kernels import (
    GRAPHLET_CAP, KernelStack, OptimizerConfig, counting_vectors,
    fit_ensemble_weights, normalize_gram, softmax,
)
from .validation import check_graphs, check_labels


def rank_patterns(names, lam):
    """(name, weight) pairs by descending weight; ties keep input order."""
    order = sorted(range(len(names)), key=lambda i: (-lam[i], i))
    return [(names[i], float(lam[i])) for i in order]


class EnsembleKernelLearner(TransformerMixin, BaseEstimator):
    """Learns simplex weights over the path, tree and graphlet kernels.

    ``transform`` returns rows of the fitted ensemble kernel between new
    graphs and the training graphs.
    """

    def __init__(self, objective="scl", mu=1.0, l_max=4, wl_depth=3,
                 learning_rate=0.05, n_iter=500, backtracking=True,
                 graphlet_cap=GRAPHLET_CAP):
        self.objective = objective
        self.mu = mu
        self.l_max = l_max
        self.wl_depth = wl_depth
        self.learning_rate = learning_rate
        self.n_iter = n_iter
        self.backtracking = backtracking
        self.graphlet_cap = graphlet_cap

    def _features(self, graphs):
        vectors, _ = counting_vectors(graphs, self.l_max, self.wl_depth,
                                      self.vocab_, self.graphlet_cap)
        return [np.log1p(np.stack([v.values for v in vs])) for vs in vectors.values()]

    def fit(self, X, y=None):
        graphs = check_graphs(X)
        if y is None and self.objective == "scl":
            y = [g.label for g in graphs]
            if any(v is None for v in y):
                raise InputError("the scl objective needs labels")
        labels = None if y is None else check_labels(y, len(graphs))
        vectors, self.vocab_ = counting_vectors(graphs, self.l_max, self.wl_depth,
                                                graphlet_cap=self.graphlet_cap)
        self.names_ = [k.label for k in vectors]
        self.train_features_ = [np.log1p(np.stack([v.values for v in vs]))
                                for vs in vectors.values()]
        grams = [normalize_gram(h @ h.T) for h in self.train_features_]
        self.stack_ = KernelStack(self.names_, grams, labels=labels)
        opt = OptimizerConfig(self.learning_rate, self.n_iter, self.backtracking)
        self.report_ = fit_ensemble_weights(self.stack_, self.objective, self.mu, opt)
        self.lambda_ = self.report_.lam
        self.loss_curve_ = list(self.report_.loss_curve)
        return self

    def _check_fitted(self):
        if not hasattr(self, "lambda_"):
            raise NotFittedError("EnsembleKernelLearner is not fitted")

    def gram(self):
        """Fitted ensemble Gram over the training graphs."""
        self._check_fitted()
        return sum(l * k for l, k in zip(self.lambda_, self.stack_.grams))

    def transform(self, X):
        self._check_fitted()
        graphs = check_graphs(X)
        out = 0.0
        for lam, h_new, h_tr in zip(self.lambda_, self._features(graphs), self.train_features_):
            d_new = np.sqrt(np.maximum((h_new ** 2).sum(axis=1), 1e-12))
            d_tr = np.sqrt(np.maximum((h_tr ** 2).sum(axis=1), 1e-12))
            out = out + lam * (h_new @ h_tr.T) / d_new[:, None] / d_tr[None, :]
        return out

    def explain(self):
        self._check_fitted()
        return rank_patterns(self.names_, softmax(self.report_.w))
