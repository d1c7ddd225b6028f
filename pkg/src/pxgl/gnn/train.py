"""Minibatch momentum training of the pattern-ensemble GNN."""
from dataclasses import asdict, dataclass, field

import numpy as np

from .._seeding import derive_seed, make_rng
from ..exceptions import InputError
from ..kernels import softmax
from ..patterns import PatternKind, sample_dataset
from ..validation import check_graphs
from .losses import ce_loss, gaussian_kl_loss, median_bandwidth
from .model import EnsembleModel, ModelConfig, inputs_from_sample_sets, make_batch

OBJECTIVES = ("ce", "kl")


@dataclass(frozen=True)
class TrainConfig:
    objective: str = "ce"
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 0.01
    momentum: float = 0.9
    gamma: float | None = None
    q: int = 10
    max_attempts: int | None = None
    alternate: bool = False
    restore_best: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise InputError(f"objective must be one of {OBJECTIVES}")
        if self.epochs < 0 or self.batch_size < 1 or self.q < 1:
            raise InputError("epochs >= 0, batch_size >= 1 and q >= 1 are required")
        if self.learning_rate < 0 or not 0 <= self.momentum < 1:
            raise InputError("learning_rate >= 0 and 0 <= momentum < 1 are required")
        if self.gamma is not None and self.gamma <= 0:
            raise InputError("gamma must be positive")


@dataclass
class History:
    train_loss: list = field(default_factory=list)
    val_accuracy: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    lam: list = field(default_factory=list)
    best_epoch: int | None = None
    gamma: float | None = None

    def to_json(self):
        return {
            "train_loss": [float(x) for x in self.train_loss],
            "val_accuracy": [float(x) for x in self.val_accuracy],
            "val_loss": [float(x) for x in self.val_loss],
            "lambda": [[float(v) for v in l] for l in self.lam],
            "best_epoch": self.best_epoch,
            "gamma": self.gamma,
        }


def sampling_seed(seed):
    return derive_seed(seed, "sampling")


def sample_inputs(graphs, cfg, q, seed, max_attempts=None, sample_sets=None):
    """Sample every channel of every graph and pack the model inputs."""
    if sample_sets is None:
        kinds = [PatternKind.parse(k) for k in cfg.kinds]
        sample_sets = sample_dataset(graphs, kinds, q, sampling_seed(seed), max_attempts)
    return inputs_from_sample_sets(graphs, sample_sets, cfg), sample_sets


def batch_loss(model, batch, objective, gamma, params=None):
    """Loss and parameter gradients on one batch."""
    cache = model.forward(batch, params)
    if objective == "ce":
        if batch.labels is None:
            raise InputError("the ce objective needs graph labels")
        loss, d_logits = ce_loss(cache.logits, batch.labels)
        return loss, model.backward(batch, cache, d_logits=d_logits, params=params)
    loss, d_g = gaussian_kl_loss(cache.g, gamma)
    return loss, model.backward(batch, cache, d_g=d_g, params=params)


def _frozen_names(params, cfg, epoch):
    if not cfg.alternate:
        return set()
    # even epochs fit the encoders and classifier, odd epochs the logits
    return {"w"} if epoch % 2 == 0 else set(params) - {"w"}


def train(model, inputs, config, val_inputs=None):
    """Fit ``model`` in place; returns the training history.

    With ``restore_best`` and supervised validation inputs, the parameters
    of the epoch with the lowest validation cross-entropy (earliest on ties)
    are restored at the end.
    """
    if not inputs:
        raise InputError("empty training set")
    hist = History()
    gamma = config.gamma
    if config.objective == "kl" and gamma is None:
        first = make_rng(config.seed, "shuffle", 0).permutation(len(inputs))[:config.batch_size]
        gamma = median_bandwidth(model.forward(make_batch([inputs[i] for i in first])).g)
    hist.gamma = gamma
    velocity = {k: np.zeros_like(v) for k, v in model.params.items()}
    track_val = (val_inputs and config.objective == "ce" and config.restore_best
                 and all(gi.label is not None for gi in val_inputs))
    best = (np.inf, None)
    if track_val:
        best = (_val_loss(model, val_inputs), model.copy().params)
        hist.best_epoch = 0
    for epoch in range(config.epochs):
        order = make_rng(config.seed, "shuffle", epoch).permutation(len(inputs))
        frozen = _frozen_names(model.params, config, epoch)
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            if config.objective == "kl" and len(idx) < 2:
                continue
            batch = make_batch([inputs[i] for i in idx])
            loss, grads = batch_loss(model, batch, config.objective, gamma)
            total += loss * len(idx)
            for name, gr in grads.items():
                if name in frozen:
                    continue
                velocity[name] = config.momentum * velocity[name] - config.learning_rate * gr
                model.params[name] = model.params[name] + velocity[name]
        hist.train_loss.append(total / len(order))
        hist.lam.append(softmax(model.params["w"]))
        if track_val:
            hist.val_accuracy.append(_accuracy(model, val_inputs))
            val_loss = _val_loss(model, val_inputs)
            hist.val_loss.append(val_loss)
            if val_loss < best[0]:
                best = (val_loss, model.copy().params)
                hist.best_epoch = epoch + 1
    if track_val:
        model.params = best[1]
    model.meta.update({"train_config": asdict(config), "gamma": gamma})
    return hist


def _val_loss(model, inputs):
    y = np.array([gi.label for gi in inputs])
    return ce_loss(model.logits(inputs), y)[0]


def _accuracy(model, inputs):
    y = np.array([gi.label for gi in inputs])
    return float((model.predict(inputs) == y).mean())


def explain(model, sample_counts=None):
    """Patterns ranked by weight (descending, ties by channel order) with
    optional per-pattern sample statistics from an ``(N, M)`` count array."""
    lam = softmax(model.params["w"])
    order = sorted(range(len(lam)), key=lambda i: (-lam[i], i))
    report = []
    for rank, i in enumerate(order):
        row = {"rank": rank + 1, "pattern": model.config.kinds[i], "lambda": float(lam[i])}
        if sample_counts is not None:
            c = np.asarray(sample_counts)[:, i]
            row.update({"mean_samples": float(c.mean()),
                        "graphs_without_samples": int((c == 0).sum())})
        report.append(row)
    return report


def fit_model(graphs, model_config, train_config, val_graphs=None):
    """Sample, build the model and train it; returns (model, history, inputs)."""
    graphs = check_graphs(graphs)
    model = EnsembleModel.create(model_config, derive_seed(train_config.seed, "model"))
    inputs, _ = sample_inputs(graphs, model_config, train_config.q, train_config.seed,
                              train_config.max_attempts)
    val_inputs = None
    if val_graphs:
        val_inputs, _ = sample_inputs(val_graphs, model_config, train_config.q,
                                      train_config.seed, train_config.max_attempts)
    hist = train(model, inputs, train_config, val_inputs)
    model.meta["sampling"] = {"q": train_config.q, "seed": train_config.seed,
                              "max_attempts": train_config.max_attempts}
    return model, hist, inputs


__all__ = ["TrainConfig", "History", "ModelConfig", "train", "explain", "fit_model",
           "sample_inputs", "batch_loss"]
