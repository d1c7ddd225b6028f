"""GCN propagation, activations and weight initialisation."""
from dataclasses import dataclass

import numpy as np

from ..exceptions import InputError
from ..graph import normalized_adjacency
from ..patterns import PatternKind


def _relu(h):
    return np.maximum(h, 0.0)


def _relu_grad(h):
    return (h > 0).astype(np.float64)


def _identity(h):
    return h


def _identity_grad(h):
    return np.ones_like(h)


# name -> (function, derivative, Lipschitz constant)
ACTIVATIONS = {
    "relu": (_relu, _relu_grad, 1.0),
    "identity": (_identity, _identity_grad, 1.0),
}


def activation(name):
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise InputError(f"unknown activation {name!r}; choose from {sorted(ACTIVATIONS)}") from None


def glorot_uniform(rng, fan_in, fan_out):
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=(fan_in, fan_out))


@dataclass(frozen=True)
class GcnStack:
    """Per-pattern GCN weights ``W^(1..L)``; no biases."""

    kind: PatternKind
    layer_weights: tuple
    activation: str = "relu"

    def __post_init__(self):
        if not self.layer_weights:
            raise InputError("a GCN stack needs at least one layer")
        ws = tuple(np.asarray(w, dtype=np.float64) for w in self.layer_weights)
        for a, b in zip(ws, ws[1:]):
            if a.shape[1] != b.shape[0]:
                raise InputError(f"layer shapes do not chain: {a.shape} then {b.shape}")
        object.__setattr__(self, "layer_weights", ws)
        activation(self.activation)

    @property
    def in_dim(self):
        return self.layer_weights[0].shape[0]

    @property
    def out_dim(self):
        return self.layer_weights[-1].shape[1]


def gcn_forward(s, stack):
    """Run ``X <- act(U X W)`` over the stack and mean-pool the last layer.

    Returns ``(layers, pooled)`` where ``layers`` holds ``(UX, H, X)`` per
    layer for backpropagation.
    """
    x = np.asarray(s.features, dtype=np.float64)
    if x.shape[1] != stack.in_dim:
        raise InputError(f"feature dim {x.shape[1]} does not match stack input {stack.in_dim}")
    u = normalized_adjacency(s)
    act = activation(stack.activation)[0]
    layers = []
    for w in stack.layer_weights:
        p = u @ x
        h = p @ w
        x = act(h)
        layers.append((p, h, x))
    return layers, x.mean(axis=0)


def pattern_representation(sample_set, stack):
    """Mean pooled GCN output over the samples; zeros for an empty set."""
    if sample_set.kind != stack.kind:
        raise InputError(f"sample set kind {sample_set.kind.name} != stack kind {stack.kind.name}")
    if len(sample_set) == 0:
        return np.zeros(stack.out_dim)
    return np.mean([gcn_forward(s, stack)[1] for s in sample_set.samples], axis=0)
