"""sklearn-style estimator for the pattern-ensemble GNN."""
import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from ..exceptions import InputError
from ..graph import Graph
from ..patterns import PatternKind
from ..validation import check_graphs, check_labels
from .model import ModelConfig
from .train import TrainConfig, explain, fit_model, sample_inputs

PRESETS = {
    "desk": {"n_layers": 2, "hidden": 32, "out_dim": 32, "clf_layers": 2, "clf_hidden": 32},
    "deep": {"n_layers": 5, "hidden": 32, "out_dim": 32, "clf_layers": 3, "clf_hidden": 32},
}


class PatternEnsembleGNN(ClassifierMixin, TransformerMixin, BaseEstimator):
    """Per-pattern GCN encoders mixed by learnable simplex weights.

    ``objective='ce'`` trains the classifier head with labels;
    ``objective='kl'`` trains the encoders without labels. After fitting,
    ``lambda_`` holds the pattern weights and ``explain()`` ranks them.
    """

    def __init__(self, objective="ce", kinds=None, n_layers=2, hidden=32, out_dim=32,
                 clf_layers=2, clf_hidden=32, activation="relu", q=10, max_attempts=None,
                 epochs=50, batch_size=32, learning_rate=0.01, momentum=0.9, gamma=None,
                 alternate=False, restore_best=True, seed=0):
        self.objective = objective
        self.kinds = kinds
        self.n_layers = n_layers
        self.hidden = hidden
        self.out_dim = out_dim
        self.clf_layers = clf_layers
        self.clf_hidden = clf_hidden
        self.activation = activation
        self.q = q
        self.max_attempts = max_attempts
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.gamma = gamma
        self.alternate = alternate
        self.restore_best = restore_best
        self.seed = seed

    @classmethod
    def preset(cls, name, **kwargs):
        if name not in PRESETS:
            raise InputError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        return cls(**{**PRESETS[name], **kwargs})

    def _configs(self, in_dim, n_classes):
        kinds = self.kinds or [k.label for k in PatternKind]
        mc = ModelConfig(in_dim, max(n_classes, 2), self.n_layers, self.hidden, self.out_dim,
                         self.clf_layers, self.clf_hidden, self.activation, tuple(kinds))
        tc = TrainConfig(self.objective, self.epochs, self.batch_size, self.learning_rate,
                         self.momentum, self.gamma, self.q, self.max_attempts,
                         self.alternate, self.restore_best, self.seed)
        return mc, tc

    def fit(self, X, y=None, X_val=None):
        graphs = check_graphs(X)
        if y is not None:
            y = check_labels(y, len(graphs))
            graphs = [g if g.label == int(l) else _with_label(g, int(l)) for g, l in zip(graphs, y)]
        labels = [g.label for g in graphs]
        if self.objective == "ce" and any(l is None for l in labels):
            raise InputError("the ce objective needs graph labels")
        n_classes = 1 + max((l for l in labels if l is not None), default=1)
        if X_val is not None:
            X_val = check_graphs(X_val)
            n_classes = max(n_classes, 1 + max((g.label or 0) for g in X_val))
        mc, tc = self._configs(graphs[0].features.shape[1], n_classes)
        self.model_, self.history_, inputs = fit_model(graphs, mc, tc, X_val)
        self.sample_counts_ = np.array([gi.counts for gi in inputs])
        self.lambda_ = self.model_.lam
        self.classes_ = np.arange(mc.n_classes)
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("PatternEnsembleGNN is not fitted")

    def _inputs(self, X):
        self._check_fitted()
        inputs, _ = sample_inputs(check_graphs(X), self.model_.config, self.q, self.seed,
                                  self.max_attempts)
        return inputs

    def transform(self, X):
        """Ensemble representations ``g``, one row per graph."""
        return self.model_.embed(self._inputs(X))

    def encode(self, X):
        return self.model_.encode(self._inputs(X))

    def decision_function(self, X):
        return self.model_.logits(self._inputs(X))

    def predict(self, X):
        return self.model_.predict(self._inputs(X))

    def explain(self):
        self._check_fitted()
        return explain(self.model_, self.sample_counts_)


def _with_label(g, label):
    return Graph(g.adjacency, g.features, label=label, id=g.id, node_labels=g.node_labels)
