import math

import numpy as np
import pytest
from sklearn.base import clone

from pxgl.exceptions import InputError, NumericError
from pxgl.graph import Graph, induced_subgraph, relabel
from pxgl.gnn import (
    EnsembleModel, GcnStack, ModelConfig, PatternEnsembleGNN, TrainConfig,
    ce_loss, ensemble_representation, explain, gaussian_kl_loss, gcn_forward,
    graph_input, make_batch, median_bandwidth, pattern_representation, train,
)
from pxgl.gnn.train import batch_loss, fit_model, sample_inputs
from pxgl.patterns import PatternKind, PatternSampleSet, sample_pattern_set, wl_hash

from conftest import make_graph, random_graph
from oracles import central_difference, relative_error

KINDS = tuple(k.label for k in PatternKind)


def small_config(**kw):
    base = dict(in_dim=3, n_classes=3, n_layers=2, hidden=4, out_dim=3,
                clf_layers=2, clf_hidden=4)
    base.update(kw)
    return ModelConfig(**base)


def random_inputs(cfg, n_graphs, seed, with_labels=True):
    rng = np.random.default_rng(seed)
    out = []
    for b in range(n_graphs):
        samples = {}
        for kind in cfg.kinds:
            k = int(rng.integers(0, 3))
            samples[kind] = []
            for _ in range(k):
                n = int(rng.integers(1, 5))
                a = np.triu((rng.random((n, n)) < 0.6).astype(np.uint8), 1)
                samples[kind].append((a + a.T, rng.normal(size=(n, cfg.in_dim))))
        label = int(rng.integers(0, cfg.n_classes)) if with_labels else None
        out.append(graph_input(b, samples, cfg, label))
    return out


# -- layers ----------------------------------------------------------------

def test_single_node_identity_passthrough():
    s = Graph(np.zeros((1, 1)), [[0.5, 2.0]])
    stack = GcnStack(PatternKind.PATH, (np.eye(2), np.eye(2)))
    assert gcn_forward(s, stack)[1].tolist() == [0.5, 2.0]


def test_edge_one_layer_mean():
    s = Graph(np.array([[0, 1], [1, 0]]), [[1.0], [0.0]])
    stack = GcnStack(PatternKind.PATH, (np.array([[1.0]]),), "identity")
    assert gcn_forward(s, stack)[1][0] == pytest.approx(0.5, abs=1e-15)


def test_zero_features_pool_to_zero(triangle):
    s = Graph(triangle.adjacency, np.zeros((3, 2)))
    stack = GcnStack(PatternKind.CYCLE, (np.random.default_rng(0).normal(size=(2, 3)),))
    assert not gcn_forward(s, stack)[1].any()


def test_stack_shape_checks(triangle):
    with pytest.raises(InputError):
        GcnStack(PatternKind.PATH, (np.ones((2, 3)), np.ones((2, 2))))
    with pytest.raises(InputError):
        gcn_forward(triangle, GcnStack(PatternKind.PATH, (np.ones((5, 2)),)))


def test_pattern_representation_means():
    rng = np.random.default_rng(1)
    g = random_graph(rng, 8, 8, p=0.5)
    stack = GcnStack(PatternKind.GRAPHLET, (rng.normal(size=(g.features.shape[1], 3)),))
    a = induced_subgraph(g, [0, 1, 2])
    b = induced_subgraph(g, [3, 4, 5, 6])
    empty = PatternSampleSet(0, PatternKind.GRAPHLET, (), (), 3)
    assert pattern_representation(empty, stack).tolist() == [0, 0, 0]
    u, v = gcn_forward(a, stack)[1], gcn_forward(b, stack)[1]
    one = PatternSampleSet(0, PatternKind.GRAPHLET, (a,), (wl_hash(a),), 3)
    two = PatternSampleSet(0, PatternKind.GRAPHLET, (a, b), (wl_hash(a), wl_hash(b)), 3)
    assert np.array_equal(pattern_representation(one, stack), u)
    assert np.allclose(pattern_representation(two, stack), (u + v) / 2, atol=1e-15)


def test_pattern_representation_kind_mismatch():
    empty = PatternSampleSet(0, PatternKind.STAR, (), (), 3)
    with pytest.raises(InputError):
        pattern_representation(empty, GcnStack(PatternKind.PATH, (np.eye(2),)))


# -- ensemble and losses ---------------------------------------------------

def test_ensemble_representation_examples():
    rng = np.random.default_rng(2)
    z = rng.normal(size=(4, 3))
    assert np.array_equal(ensemble_representation(z[:1], [0.7]), z[0])
    v = np.tile(z[0], (4, 1))
    assert np.allclose(ensemble_representation(v, rng.normal(size=4)), z[0], atol=1e-15)
    assert np.allclose(ensemble_representation(z, [30, -30, -30, -30]), z[0], atol=1e-9)


def test_ce_uniform_logits():
    loss, _ = ce_loss(np.zeros((1, 4)), [2])
    assert loss == math.log(4)


def test_ce_saturated():
    assert ce_loss(np.array([[0.0, 30.0]]), [1])[0] < 1e-9


def test_ce_gradient():
    rng = np.random.default_rng(3)
    logits = rng.normal(size=(5, 3))
    y = rng.integers(0, 3, 5)
    _, d = ce_loss(logits, y)
    assert relative_error(d, central_difference(lambda: ce_loss(logits, y)[0], logits)) <= 1e-4


def test_ce_label_out_of_range():
    with pytest.raises(InputError):
        ce_loss(np.zeros((1, 2)), [2])


def test_gaussian_kl_examples():
    assert gaussian_kl_loss(np.ones((2, 3)), 1.0)[0] == 0.0
    rng = np.random.default_rng(4)
    g = rng.normal(size=(6, 3))
    assert gaussian_kl_loss(g, 0.5)[0] >= 0
    assert gaussian_kl_loss(g, 1e12)[0] < 1e-9


def test_gaussian_kl_gradient():
    rng = np.random.default_rng(5)
    g = rng.normal(size=(5, 3))
    _, d = gaussian_kl_loss(g, 2.0)
    fd = central_difference(lambda: gaussian_kl_loss(g, 2.0)[0], g)
    assert relative_error(d, fd) <= 1e-4


def test_gaussian_kl_argument_checks():
    with pytest.raises(InputError):
        gaussian_kl_loss(np.ones((1, 2)), 1.0)
    with pytest.raises(InputError):
        gaussian_kl_loss(np.ones((2, 2)), 0.0)


def test_median_bandwidth():
    assert median_bandwidth(np.array([[0.0], [1.0], [3.0]])) == 4.0
    assert median_bandwidth(np.zeros((3, 2))) == 1.0


# -- model -----------------------------------------------------------------

@pytest.mark.parametrize("objective", ["ce", "kl"])
@pytest.mark.parametrize("act", ["relu", "identity"])
def test_backward_matches_finite_differences(objective, act):
    cfg = small_config(activation=act)
    model = EnsembleModel.create(cfg, seed=7)
    model.params["w"] = np.random.default_rng(8).normal(size=len(cfg.kinds))
    batch = make_batch(random_inputs(cfg, 4, seed=9))
    _, grads = batch_loss(model, batch, objective, 1.5)
    for name, p in model.params.items():
        fd = central_difference(lambda: batch_loss(model, batch, objective, 1.5)[0], p, 1e-5)
        assert relative_error(grads[name], fd) <= 1e-4, name


def test_encoding_decomposes_and_zeroes_missing_channels():
    cfg = small_config()
    model = EnsembleModel.create(cfg, seed=1)
    model.params["w"] = np.arange(7.0) / 3
    inputs = random_inputs(cfg, 6, seed=2)
    for enc in model.encode(inputs):
        assert np.allclose(enc.g, model.lam @ enc.z, atol=1e-10)
        for m, c in enumerate(enc.sample_counts):
            if c == 0:
                assert not enc.z[m].any()


def test_batching_does_not_change_encodings():
    cfg = small_config()
    model = EnsembleModel.create(cfg, seed=1)
    inputs = random_inputs(cfg, 7, seed=3)
    whole = model.embed(inputs)
    single = np.vstack([model.embed([gi]) for gi in inputs])
    assert np.allclose(whole, single, atol=1e-12)


def test_encoding_matches_per_subgraph_reference():
    rng = np.random.default_rng(5)
    g = random_graph(rng, 9, 12, p=0.4)
    cfg = small_config(in_dim=g.features.shape[1], n_layers=3)
    model = EnsembleModel.create(cfg, seed=4)
    sets = {k: sample_pattern_set(g, k, q=4, seed=1) for k in cfg.kinds}
    gi = graph_input(0, {k: list(s.samples) for k, s in sets.items()}, cfg)
    enc = model.encode([gi])[0]
    for m, kind in enumerate(cfg.kinds):
        ref = pattern_representation(sets[kind], model.stack(kind))
        assert np.allclose(enc.z[m], ref, atol=1e-12)


def test_relabelled_samples_give_same_representation():
    cfg = small_config()
    model = EnsembleModel.create(cfg, seed=6)
    rng = np.random.default_rng(7)
    for _ in range(20):
        samples, permuted = {}, {}
        for kind in cfg.kinds:
            g = random_graph(rng, 1, 6)
            g = Graph(g.adjacency, rng.normal(size=(g.n, 3)))
            samples[kind] = [g]
            permuted[kind] = [relabel(g, rng.permutation(g.n))]
        a = model.encode([graph_input(0, samples, cfg)])[0]
        b = model.encode([graph_input(0, permuted, cfg)])[0]
        assert np.allclose(a.z, b.z, atol=1e-10)


def test_w_gradient_zero_when_channels_agree():
    cfg = small_config(kinds=("path", "tree", "cycle"))
    model = EnsembleModel.create(cfg, seed=0)
    for l in (1, 2):
        for kind in ("tree", "cycle"):
            model.params[f"gcn.{kind}.W{l}"] = model.params[f"gcn.path.W{l}"].copy()
    rng = np.random.default_rng(1)
    inputs = []
    for b in range(4):
        s = [(np.array([[0, 1], [1, 0]]), rng.normal(size=(2, 3)))]
        inputs.append(graph_input(b, {"path": s, "tree": s, "cycle": s}, cfg, b % 3))
    _, grads = batch_loss(model, make_batch(inputs), "ce", None)
    assert np.allclose(grads["w"], 0, atol=1e-15)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_gradient_names_parameter():
    cfg = small_config()
    model = EnsembleModel.create(cfg, seed=0)
    model.params["clf.W2"][0, 0] = np.inf
    batch = make_batch(random_inputs(cfg, 3, seed=0))
    with pytest.raises(NumericError, match=r"parameter (gcn|clf|w)"):
        batch_loss(model, batch, "ce", None)


def test_zero_learning_rate_keeps_loss():
    cfg = small_config()
    model = EnsembleModel.create(cfg, seed=0)
    inputs = random_inputs(cfg, 8, seed=1)
    before = batch_loss(model, make_batch(inputs), "ce", None)[0]
    train(model, inputs, TrainConfig(epochs=3, learning_rate=0.0, batch_size=3))
    assert batch_loss(model, make_batch(inputs), "ce", None)[0] == before


def test_training_is_deterministic_and_stays_on_simplex():
    cfg = small_config()
    inputs = random_inputs(cfg, 12, seed=2)
    runs = []
    for _ in range(2):
        model = EnsembleModel.create(cfg, seed=3)
        hist = train(model, inputs, TrainConfig(epochs=6, batch_size=5, learning_rate=0.05))
        runs.append((model.params["w"].copy(), hist.train_loss))
        for lam in hist.lam:
            assert abs(lam.sum() - 1) <= 1e-12 and (lam > 0).all()
    assert np.array_equal(runs[0][0], runs[1][0]) and runs[0][1] == runs[1][1]


def test_alternating_schedule_freezes_groups():
    cfg = small_config()
    inputs = random_inputs(cfg, 6, seed=4)
    model = EnsembleModel.create(cfg, seed=0)
    w0 = model.params["w"].copy()
    train(model, inputs, TrainConfig(epochs=1, alternate=True, learning_rate=0.1))
    assert np.array_equal(model.params["w"], w0)


def test_kl_training_sets_gamma():
    cfg = small_config()
    inputs = random_inputs(cfg, 8, seed=5, with_labels=False)
    model = EnsembleModel.create(cfg, seed=0)
    hist = train(model, inputs, TrainConfig(objective="kl", epochs=2, batch_size=4))
    assert hist.gamma > 0 and len(hist.train_loss) == 2


def test_empty_training_set():
    model = EnsembleModel.create(small_config(), seed=0)
    with pytest.raises(InputError):
        train(model, [], TrainConfig())


def test_explain_ties_and_saturation():
    model = EnsembleModel.create(small_config(), seed=0)
    assert [r["pattern"] for r in explain(model)] == list(KINDS)
    model.params["w"] = np.array([-30, -30, 30, -30, -30, -30, -30.0])
    top = explain(model, np.ones((3, 7)))[0]
    assert top["pattern"] == "graphlet" and top["lambda"] == pytest.approx(1.0)
    assert top["graphs_without_samples"] == 0


def test_checkpoint_round_trip(tmp_path):
    model = EnsembleModel.create(small_config(), seed=11)
    model.meta["note"] = "x"
    path = tmp_path / "ckpt.json"
    model.save(path)
    back = EnsembleModel.load(path)
    assert back.config == model.config and back.meta == model.meta
    for k, v in model.params.items():
        assert np.array_equal(back.params[k], v)


def test_missing_checkpoint():
    with pytest.raises(InputError):
        EnsembleModel.load("/nonexistent/ckpt.json")


def test_predict_ties_go_to_lowest_class():
    cfg = small_config()
    model = EnsembleModel.create(cfg, seed=0)
    model.params["clf.W2"][:] = 0
    assert (model.predict(random_inputs(cfg, 4, seed=0)) == 0).all()


# -- end to end ------------------------------------------------------------

def test_fit_model_and_sample_inputs_agree():
    rng = np.random.default_rng(6)
    graphs = [random_graph(rng, 5, 10, graph_id=i, label=i % 2) for i in range(8)]
    cfg = ModelConfig(in_dim=graphs[0].features.shape[1], hidden=4, out_dim=4, clf_hidden=4)
    tc = TrainConfig(epochs=2, q=3, batch_size=4)
    model, hist, inputs = fit_model(graphs, cfg, tc)
    again, _ = sample_inputs(graphs, cfg, 3, 0)
    assert [gi.counts for gi in inputs] == [gi.counts for gi in again]
    assert len(hist.train_loss) == 2


def test_estimator_api():
    rng = np.random.default_rng(7)
    graphs = [random_graph(rng, 5, 10, graph_id=i, label=i % 2) for i in range(10)]
    est = PatternEnsembleGNN(epochs=2, q=3, hidden=4, out_dim=4, clf_hidden=4)
    est.fit(graphs)
    assert est.predict(graphs).shape == (10,)
    assert est.transform(graphs).shape == (10, 4)
    assert len(est.explain()) == 7
    assert clone(est).get_params() == est.get_params()
    assert PatternEnsembleGNN.preset("deep").n_layers == 5
