"""Robustness and stability bounds for the pattern-ensemble GNN, plus an
empirical harness that perturbs graphs and checks the robustness bound."""
from dataclasses import asdict, dataclass

import numpy as np

from ._seeding import derive_seed, make_rng
from .exceptions import InputError
from .gnn.layers import ACTIVATIONS
from .gnn.model import graph_input
from .graph import Graph, degree_features
from .patterns import PatternKind, sample_pattern_set, pattern_seed

POWER_ITERATIONS = 200
POWER_TOL = 1e-10


def spectral_norm(m, n_iter=POWER_ITERATIONS, tol=POWER_TOL):
    """Largest singular value by power iteration on ``M^T M``."""
    m = np.asarray(m, dtype=np.float64)
    if m.size == 0 or not m.any():
        return 0.0
    v = make_rng("power-iteration", m.shape).standard_normal(m.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(n_iter):
        u = m.T @ (m @ v)
        nu = np.linalg.norm(u)
        if nu == 0:
            return 0.0
        v = u / nu
        new = np.sqrt(nu)
        if abs(new - sigma) <= tol * max(new, 1.0):
            sigma = new
            break
        sigma = new
    return float(np.linalg.norm(m @ v))


@dataclass(frozen=True)
class Perturbation:
    graph: Graph
    delta_A_norm: float
    delta_X_norm: float
    delta_D_norm: float
    kappa: float


def degree_shift(a, a_new):
    """``I - D'^(1/2) D^(-1/2)`` with self-loop degrees, as a diagonal vector."""
    d = 1.0 + np.asarray(a, dtype=np.float64).sum(axis=1)
    d_new = 1.0 + np.asarray(a_new, dtype=np.float64).sum(axis=1)
    return 1.0 - np.sqrt(d_new / d)


def perturb(g, edge_flips=1, feature_noise=0.0, seed=0):
    """Flip ``edge_flips`` distinct node pairs and add uniform feature noise."""
    n = g.n
    n_pairs = n * (n - 1) // 2
    if not 0 <= edge_flips <= n_pairs:
        raise InputError(f"edge_flips must be in [0, {n_pairs}]")
    if feature_noise < 0:
        raise InputError("feature_noise must be >= 0")
    rng = make_rng(seed, "perturb")
    iu, ju = np.triu_indices(n, 1)
    pick = rng.choice(n_pairs, size=edge_flips, replace=False)
    a = g.adjacency.astype(np.int64)
    a_new = a.copy()
    a_new[iu[pick], ju[pick]] = 1 - a_new[iu[pick], ju[pick]]
    a_new[ju[pick], iu[pick]] = a_new[iu[pick], ju[pick]]
    noise = rng.uniform(-feature_noise, feature_noise, size=g.features.shape) \
        if feature_noise > 0 else np.zeros(g.features.shape)
    x_new = g.features + noise
    delta_a = a_new - a
    out = Graph(a_new, x_new, label=g.label, id=g.id, node_labels=g.node_labels)
    return Perturbation(
        graph=out,
        delta_A_norm=spectral_norm(delta_a),
        delta_X_norm=float(np.linalg.norm(noise)),
        delta_D_norm=float(np.abs(degree_shift(a, a_new)).max()),
        kappa=float(delta_a.sum(axis=0).min()),
    )


@dataclass(frozen=True)
class BoundInputs:
    beta_A: float
    beta_X: float
    beta_W: float
    alpha: float
    rho: float
    L: int
    n: int
    delta_A_norm: float = 0.0
    delta_X_norm: float = 0.0
    delta_D_norm: float = 0.0
    kappa: float = 0.0
    tau: float = 1.0

    def __post_init__(self):
        norms = (self.beta_A, self.beta_X, self.beta_W, self.alpha, self.rho,
                 self.delta_A_norm, self.delta_X_norm, self.delta_D_norm, self.tau)
        if min(norms) < 0:
            raise InputError("norms and constants must be non-negative")
        if self.L < 1 or self.n < 1:
            raise InputError("L and n must be >= 1")


def robustness_bound(b):
    """Upper bound on the change of the ensemble vector under perturbation."""
    pre = (b.rho ** b.L * b.beta_W ** b.L
           * (1 + b.beta_A + b.delta_A_norm) ** (b.L - 1)
           * (1 + b.alpha) ** (-b.L) / np.sqrt(b.n))
    bracket = ((1 + b.beta_A + 2 * b.delta_A_norm) * b.delta_X_norm
               + 2 * b.L * b.beta_X * (1 + b.beta_A) * b.delta_D_norm)
    return float(pre * bracket)


@dataclass(frozen=True)
class StabilityInputs:
    beta_hat_W: float
    beta_hat_dW: float
    gamma_C: float
    gamma_dC: float
    lambda_diff_norm: float
    lambda_norm: float
    rho: float
    tau: float
    L: int
    n: int
    beta_A: float
    beta_X: float
    alpha: float

    def __post_init__(self):
        vals = [v for k, v in asdict(self).items() if k not in ("L", "n")]
        if min(vals) < 0:
            raise InputError("stability inputs must be non-negative")
        if self.L < 1 or self.n < 1:
            raise InputError("L and n must be >= 1")


STABILITY_MODES = ("main_text", "appendix")


def stability_eta(s, mode="appendix"):
    """Uniform-stability constant.

    ``main_text`` uses the constant 2 in place of the weight-difference
    term; ``appendix`` uses the measured ``|lambda - lambda'|`` and
    ``|lambda'|``.
    """
    if mode not in STABILITY_MODES:
        raise InputError(f"mode must be one of {STABILITY_MODES}")
    pre = (s.tau / np.sqrt(s.n) * s.rho ** s.L * s.beta_hat_W ** (s.L - 1) * s.beta_X
           * (1 + s.beta_A) ** s.L * (1 + s.alpha) ** (-s.L))
    if mode == "main_text":
        inner = 2 * s.beta_hat_W + s.L * s.beta_hat_dW
    else:
        inner = s.beta_hat_W * s.lambda_diff_norm + s.L * s.beta_hat_dW * s.lambda_norm
    return float(pre * (s.beta_hat_W * s.gamma_dC + s.gamma_C * inner))


def generalization_bound(eta, n_graphs, c=1.0, delta=0.05):
    if not 0 < delta < 1:
        raise InputError("delta must lie in (0, 1)")
    if n_graphs < 2:
        raise InputError("n_graphs must be >= 2")
    if c <= 0 or eta < 0:
        raise InputError("c must be positive and eta non-negative")
    n = float(n_graphs)
    return float(c * (eta * np.log(n) * np.log(n / delta) + np.sqrt(np.log(1 / delta) / n)))


# -- empirical dominance --------------------------------------------------

@dataclass(frozen=True)
class PerturbConfig:
    edge_flips: int = 1
    feature_noise: float = 0.05
    variant: str = "whole"

    def __post_init__(self):
        if self.variant not in ("whole", "sampled"):
            raise InputError("variant must be 'whole' or 'sampled'")


def model_beta_W(model):
    return max(spectral_norm(v) for k, v in model.params.items() if k.startswith("gcn."))


def _encode(model, g, node_lists):
    a, x = g.adjacency, g.features
    samples = {kind: [(a[np.ix_(ids, ids)], x[ids]) for ids in lists]
               for kind, lists in node_lists.items()}
    return model.embed([graph_input(g.id, samples, model.config)])[0]


def fixed_node_lists(model, g, variant, q=10, seed=0):
    if variant == "whole":
        return {kind: [list(range(g.n))] for kind in model.config.kinds}
    return {kind: sample_pattern_set(g, kind, q, pattern_seed(seed, g.id, kind)).node_id_lists
            for kind in model.config.kinds}


def bound_inputs_for(model, g, p):
    a = g.adjacency.astype(np.float64)
    return BoundInputs(
        beta_A=spectral_norm(a), beta_X=float(np.linalg.norm(g.features)),
        beta_W=model_beta_W(model), alpha=float(a.sum(axis=1).min()),
        rho=ACTIVATIONS[model.config.activation][2], L=model.config.n_layers, n=g.n,
        delta_A_norm=p.delta_A_norm, delta_X_norm=p.delta_X_norm,
        delta_D_norm=p.delta_D_norm, kappa=p.kappa)


def bound_dominance_trial(model, g, cfg=PerturbConfig(), trials=1, seed=0):
    """Perturb ``g`` ``trials`` times and compare ``|g~ - g|`` with the bound.

    Both encodings use identical node sets per channel: the whole graph for
    ``variant='whole'``, or the sample node lists drawn on the original
    graph for ``variant='sampled'``.
    """
    if model.config.activation not in ACTIVATIONS:
        raise InputError("the model activation has no known Lipschitz constant")
    lists = fixed_node_lists(model, g, cfg.variant, seed=seed)
    base = _encode(model, g, lists)
    rows = []
    for t in range(trials):
        p = perturb(g, cfg.edge_flips, cfg.feature_noise, derive_seed(seed, "trial", t))
        measured = float(np.linalg.norm(_encode(model, p.graph, lists) - base))
        bound = robustness_bound(bound_inputs_for(model, g, p))
        rows.append({"graph_id": g.id, "n": g.n, "edge_flips": cfg.edge_flips,
                     "feature_noise": cfg.feature_noise, "measured": measured,
                     "bound": bound, "delta_A": p.delta_A_norm, "delta_X": p.delta_X_norm,
                     "delta_D": p.delta_D_norm, "kappa": p.kappa})
    return rows


def summarize_trials(rows, rtol=0.0):
    violations = sum(r["measured"] > r["bound"] * (1 + rtol) for r in rows)
    ratios = [r["measured"] / r["bound"] for r in rows if r["bound"] > 0]
    return {"trials": rows, "violations": int(violations),
            "max_ratio": float(max(ratios)) if ratios else 0.0}


def random_graph(rng, n_min=4, n_max=12, d_max=10, graph_id=0):
    n = int(rng.integers(n_min, n_max + 1))
    p = rng.uniform(0.2, 0.6)
    a = np.triu((rng.random((n, n)) < p).astype(np.uint8), 1)
    a = a + a.T
    return Graph(a, degree_features(a, d_max), id=graph_id)


def dominance_suite(model, n_trials=100, seed=0, variant="whole", max_flips=3,
                    max_noise=0.1, n_max=12):
    """Seeded suite: trial 0 is unperturbed, later trials draw a random graph
    on at most ``n_max`` nodes, 1..``max_flips`` edge flips and feature
    noise up to ``max_noise``."""
    rows = []
    for t in range(n_trials):
        rng = make_rng(seed, "suite", t)
        g = random_graph(rng, n_max=n_max, d_max=model.config.in_dim - 1, graph_id=t)
        if t == 0:
            cfg = PerturbConfig(0, 0.0, variant)
        else:
            flips = int(rng.integers(1, max_flips + 1))
            cfg = PerturbConfig(min(flips, g.n * (g.n - 1) // 2),
                                float(rng.uniform(0, max_noise)), variant)
        rows.extend(bound_dominance_trial(model, g, cfg, 1, derive_seed(seed, "suite", t)))
    return summarize_trials(rows)


__all__ = ["spectral_norm", "perturb", "Perturbation", "BoundInputs", "robustness_bound",
           "StabilityInputs", "stability_eta", "generalization_bound", "PerturbConfig",
           "bound_dominance_trial", "dominance_suite", "summarize_trials", "PatternKind"]
