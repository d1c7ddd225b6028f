"""Pattern-ensemble GNN: parameters, batched forward pass and exact backward pass.

Each pattern channel owns a GCN stack. A minibatch is packed per channel as
one block-diagonal propagation matrix over every sampled subgraph of every
graph in the batch, plus a sparse readout matrix whose row ``b`` averages
node rows first within a sample and then across the samples of graph ``b``.
Graphs without samples for a channel get an all-zero readout row, i.e. a
zero pattern representation.
"""
import json
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from .._seeding import make_rng
from ..exceptions import InputError, NumericError
from ..graph import normalized_adjacency
from ..kernels import softmax, softmax_backward
from ..patterns import PatternKind
from .layers import GcnStack, activation, glorot_uniform

CHECKPOINT_FORMAT = 1


@dataclass(frozen=True)
class ModelConfig:
    in_dim: int
    n_classes: int = 2
    n_layers: int = 2
    hidden: int = 32
    out_dim: int = 32
    clf_layers: int = 2
    clf_hidden: int = 32
    activation: str = "relu"
    kinds: tuple = tuple(k.label for k in PatternKind)

    def __post_init__(self):
        if self.in_dim < 1 or self.n_layers < 1 or self.clf_layers < 1:
            raise InputError("in_dim, n_layers and clf_layers must be >= 1")
        if self.n_classes < 2:
            raise InputError("n_classes must be >= 2")
        kinds = tuple(PatternKind.parse(k).label for k in self.kinds)
        if not kinds or len(set(kinds)) != len(kinds):
            raise InputError("kinds must be a non-empty list without repeats")
        object.__setattr__(self, "kinds", kinds)
        activation(self.activation)

    @property
    def gcn_dims(self):
        return [self.in_dim] + [self.hidden] * (self.n_layers - 1) + [self.out_dim]

    @property
    def clf_dims(self):
        return [self.out_dim] + [self.clf_hidden] * (self.clf_layers - 1) + [self.n_classes]


def init_params(cfg, seed):
    """Glorot-uniform weights, zero biases, zero logits (uniform weights)."""
    params = {}
    dims = cfg.gcn_dims
    for kind in cfg.kinds:
        rng = make_rng(seed, "init", "gcn", kind)
        for l in range(cfg.n_layers):
            params[f"gcn.{kind}.W{l + 1}"] = glorot_uniform(rng, dims[l], dims[l + 1])
    params["w"] = np.zeros(len(cfg.kinds))
    rng = make_rng(seed, "init", "clf")
    dims = cfg.clf_dims
    for i in range(cfg.clf_layers):
        params[f"clf.W{i + 1}"] = glorot_uniform(rng, dims[i], dims[i + 1])
        params[f"clf.b{i + 1}"] = np.zeros(dims[i + 1])
    return params


# -- inputs ---------------------------------------------------------------

@dataclass
class GraphInput:
    """Per-graph, per-channel packed samples: block-diagonal U, stacked X,
    readout weights ``1 / (|S| n_s)`` and the sample count."""

    graph_id: object
    u: list
    x: list
    weights: list
    counts: list
    label: int | None = None


def pack_samples(samples, in_dim):
    """Pack a list of subgraphs (or ``(adjacency, features)`` pairs)."""
    if not samples:
        return sp.csr_matrix((0, 0)), np.zeros((0, in_dim)), np.zeros(0), 0
    us, xs, ws = [], [], []
    for s in samples:
        a, x = (s.adjacency, s.features) if hasattr(s, "adjacency") else s
        x = np.asarray(x, dtype=np.float64)
        if x.shape[1] != in_dim:
            raise InputError(f"feature dim {x.shape[1]} does not match model input {in_dim}")
        us.append(normalized_adjacency(a))
        xs.append(x)
        ws.append(np.full(x.shape[0], 1.0 / (len(samples) * x.shape[0])))
    return (sp.block_diag(us, format="csr"), np.vstack(xs), np.concatenate(ws),
            len(samples))


def graph_input(graph_id, samples_by_kind, cfg, label=None):
    """``samples_by_kind`` maps channel label to a list of subgraphs."""
    u, x, w, c = [], [], [], []
    for kind in cfg.kinds:
        pu, px, pw, pc = pack_samples(samples_by_kind.get(kind, []), cfg.in_dim)
        u.append(pu)
        x.append(px)
        w.append(pw)
        c.append(pc)
    return GraphInput(graph_id, u, x, w, c, label)


def inputs_from_sample_sets(graphs, sample_sets, cfg):
    """Build a GraphInput per graph from ``{kind: [PatternSampleSet, ...]}``."""
    by_label = {PatternKind.parse(k).label: v for k, v in sample_sets.items()}
    out = []
    for i, g in enumerate(graphs):
        samples = {k: list(by_label[k][i].samples) for k in cfg.kinds if k in by_label}
        out.append(graph_input(g.id, samples, cfg, g.label))
    return out


@dataclass
class Block:
    u: sp.csr_matrix
    x: np.ndarray
    readout: sp.csr_matrix


@dataclass
class Batch:
    blocks: list
    counts: np.ndarray
    labels: np.ndarray | None
    graph_ids: list


def make_batch(inputs):
    b = len(inputs)
    blocks = []
    for m in range(len(inputs[0].u)):
        sizes = [gi.x[m].shape[0] for gi in inputs]
        total = sum(sizes)
        if total == 0:
            d = inputs[0].x[m].shape[1]
            blocks.append(Block(sp.csr_matrix((0, 0)), np.zeros((0, d)),
                                sp.csr_matrix((b, 0))))
            continue
        u = sp.block_diag([gi.u[m] for gi in inputs if gi.x[m].shape[0]], format="csr")
        x = np.vstack([gi.x[m] for gi in inputs])
        indptr = np.concatenate([[0], np.cumsum(sizes)])
        readout = sp.csr_matrix((np.concatenate([gi.weights[m] for gi in inputs]),
                                 np.arange(total), indptr), shape=(b, total))
        blocks.append(Block(u, x, readout))
    counts = np.array([gi.counts for gi in inputs], dtype=np.int64)
    labels = [gi.label for gi in inputs]
    labels = None if any(l is None for l in labels) else np.asarray(labels, dtype=np.int64)
    return Batch(blocks, counts, labels, [gi.graph_id for gi in inputs])


# -- model ----------------------------------------------------------------

@dataclass(frozen=True)
class GraphEncoding:
    graph_id: object
    z: np.ndarray
    g: np.ndarray
    sample_counts: np.ndarray


@dataclass
class ForwardCache:
    layers: list
    z: np.ndarray
    lam: np.ndarray
    g: np.ndarray
    clf: list
    logits: np.ndarray


@dataclass
class EnsembleModel:
    config: ModelConfig
    params: dict
    meta: dict = field(default_factory=dict)

    @classmethod
    def create(cls, config, seed=0):
        return cls(config, init_params(config, seed))

    @property
    def kinds(self):
        return self.config.kinds

    @property
    def lam(self):
        return softmax(self.params["w"])

    def stack(self, kind):
        kind = PatternKind.parse(kind)
        ws = tuple(self.params[f"gcn.{kind.label}.W{l + 1}"]
                   for l in range(self.config.n_layers))
        return GcnStack(kind, ws, self.config.activation)

    def copy(self):
        return EnsembleModel(self.config, {k: v.copy() for k, v in self.params.items()},
                             dict(self.meta))

    # forward / backward

    def forward(self, batch, params=None):
        p = self.params if params is None else params
        cfg = self.config
        act = activation(cfg.activation)[0]
        n_batch = batch.counts.shape[0]
        layers, zs = [], []
        for kind, blk in zip(cfg.kinds, batch.blocks):
            x = blk.x
            cache = []
            for l in range(cfg.n_layers):
                ux = blk.u @ x
                h = ux @ p[f"gcn.{kind}.W{l + 1}"]
                x = act(h)
                cache.append((ux, h))
            layers.append(cache)
            zs.append(blk.readout @ x if x.shape[0] else np.zeros((n_batch, cfg.out_dim)))
        z = np.stack(zs)
        lam = softmax(p["w"])
        g = np.tensordot(lam, z, axes=1)
        a = g
        clf = []
        for i in range(cfg.clf_layers):
            h = a @ p[f"clf.W{i + 1}"] + p[f"clf.b{i + 1}"]
            clf.append((a, h))
            a = np.maximum(h, 0.0) if i < cfg.clf_layers - 1 else h
        return ForwardCache(layers, z, lam, g, clf, a)

    def backward(self, batch, cache, d_logits=None, d_g=None, params=None):
        """Reverse-mode gradients for every parameter.

        ``d_logits`` is the loss gradient at the classifier output and
        ``d_g`` any direct gradient at the ensemble vector; either may be
        None.
        """
        p = self.params if params is None else params
        cfg = self.config
        act_grad = activation(cfg.activation)[1]
        grads = {k: np.zeros_like(v) for k, v in p.items()}
        dg = np.zeros_like(cache.g) if d_g is None else np.array(d_g, dtype=np.float64)
        if d_logits is not None:
            da = d_logits
            for i in reversed(range(cfg.clf_layers)):
                a, h = cache.clf[i]
                dh = da if i == cfg.clf_layers - 1 else da * (h > 0)
                grads[f"clf.W{i + 1}"] = a.T @ dh
                grads[f"clf.b{i + 1}"] = dh.sum(axis=0)
                da = dh @ p[f"clf.W{i + 1}"].T
            dg = dg + da
        d_lam = np.einsum("mbd,bd->m", cache.z, dg)
        grads["w"] = softmax_backward(cache.lam, d_lam)
        for m, (kind, blk) in enumerate(zip(cfg.kinds, batch.blocks)):
            if blk.x.shape[0] == 0:
                continue
            dx = blk.readout.T @ (cache.lam[m] * dg)
            for l in reversed(range(cfg.n_layers)):
                ux, h = cache.layers[m][l]
                name = f"gcn.{kind}.W{l + 1}"
                dh = dx * act_grad(h)
                grads[name] = ux.T @ dh
                if l:
                    dx = blk.u @ (dh @ p[name].T)
        for name, gr in grads.items():
            if not np.isfinite(gr).all():
                raise NumericError(f"non-finite gradient for parameter {name}")
        return grads

    # encoding / prediction

    def encode(self, inputs, batch_size=256):
        out = []
        for start in range(0, len(inputs), batch_size):
            batch = make_batch(inputs[start:start + batch_size])
            c = self.forward(batch)
            for b, gid in enumerate(batch.graph_ids):
                out.append(GraphEncoding(gid, c.z[:, b].copy(), c.g[b].copy(),
                                         batch.counts[b].copy()))
        return out

    def embed(self, inputs, batch_size=256):
        return np.vstack([self.forward(make_batch(inputs[s:s + batch_size])).g
                          for s in range(0, len(inputs), batch_size)])

    def logits(self, inputs, batch_size=256):
        return np.vstack([self.forward(make_batch(inputs[s:s + batch_size])).logits
                          for s in range(0, len(inputs), batch_size)])

    def predict(self, inputs):
        # np.argmax returns the first maximum, i.e. ties go to the lowest class
        return np.argmax(self.logits(inputs), axis=1)

    # checkpoints

    def to_json(self):
        cfg = asdict(self.config)
        cfg["kinds"] = list(cfg["kinds"])
        return {
            "format": CHECKPOINT_FORMAT,
            "config": cfg,
            "params": {k: v.tolist() for k, v in self.params.items()},
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, payload):
        if payload.get("format") != CHECKPOINT_FORMAT:
            raise InputError(f"unsupported checkpoint format {payload.get('format')!r}")
        cfg = ModelConfig(**{**payload["config"], "kinds": tuple(payload["config"]["kinds"])})
        params = {k: np.asarray(v, dtype=np.float64) for k, v in payload["params"].items()}
        expected = init_params(cfg, 0)
        for k, v in expected.items():
            if k not in params or params[k].shape != v.shape:
                raise InputError(f"checkpoint parameter {k} missing or mis-shaped")
        return cls(cfg, params, payload.get("meta", {}))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                return cls.from_json(json.load(fh))
        except FileNotFoundError:
            raise InputError(f"checkpoint not found: {path}") from None


def ensemble_representation(z_list, w):
    z = np.asarray(z_list, dtype=np.float64)
    return np.tensordot(softmax(w), z, axes=1)
