import math

import numpy as np
import pytest

from conftest import numeric_grad, rel_err
from recongnn.errors import InvalidArgument, ShapeError
from recongnn.generators import cycle_graph, erdos_renyi, path_graph, star_graph
from recongnn.graph import Graph
from recongnn.nn import (MLP, AdamHyper, AdamState, DeepSetsHead, GCNLayer, GINLayer, GnnModel, GraphBatch, Linear,
                         Tensor, adam_step, cross_entropy, deepsets_apply, gcn_layer, gin_layer, mse, readout)
from recongnn.nn.core import standardize_backward, standardize_forward
from recongnn.nn.deepsets import set_pool_matrix

TOL = 1e-4


def check_module_grads(module, forward, x, seed=0):
    """Compare analytic and central-difference gradients of <forward(x), r>."""
    r = np.random.default_rng(seed).normal(size=forward(x).shape)

    def loss():
        return float(np.sum(forward(x) * r))

    module.zero_grad()
    forward(x)
    dx = module.backward(r)
    for name, p in module.named_params():
        assert rel_err(p.grad, numeric_grad(loss, p.data)) < TOL, name
    if dx is not None:
        # GnnModel returns the gradient of its widened input (features + degree one-hot)
        assert rel_err(dx[:, :x.shape[1]], numeric_grad(loss, x)) < TOL


def random_batch(rng, count=3, d=3):
    graphs = [erdos_renyi(int(rng.integers(3, 8)), 0.4, rng) for _ in range(count)]
    b = GraphBatch.from_graphs(graphs)
    return b, rng.normal(size=(b.num_nodes, d))


# -- gradients ------------------------------------------------------------


@pytest.mark.parametrize("seed", range(10))
def test_linear_and_mlp_grads(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(5, 4))
    lin = Linear(4, 3, rng)
    check_module_grads(lin, lin.forward, x, seed)
    mlp = MLP([4, 6, 2], rng)
    check_module_grads(mlp, mlp.forward, x, seed)


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("cls", [GINLayer, GCNLayer])
@pytest.mark.parametrize("standardize", [False, True])
def test_conv_layer_grads(seed, cls, standardize):
    rng = np.random.default_rng(seed)
    batch, x = random_batch(rng)
    layer = cls(3, 4, rng, standardize)
    check_module_grads(layer, lambda h: layer.forward(h, batch), x, seed)


@pytest.mark.parametrize("seed", range(10))
def test_standardize_grads(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(4, 5))
    r = rng.normal(size=(4, 5))
    _, cache = standardize_forward(x)
    dx = standardize_backward(r, cache)
    assert rel_err(dx, numeric_grad(lambda: float(np.sum(standardize_forward(x)[0] * r)), x)) < TOL


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("pooling", ["mean", "sum"])
def test_deepsets_grads(seed, pooling):
    rng = np.random.default_rng(seed)
    head = DeepSetsHead([3, 5], [5, 4, 2], pooling, rng)
    xs = rng.normal(size=(7, 3))
    pool = set_pool_matrix([3, 4], head.pool_weights([3, 4], [6, 10]))
    r = rng.normal(size=(2, 2))
    head.zero_grad()
    head.forward(xs, pool)
    dxs, _ = head.backward(r)

    def loss():
        return float(np.sum(head.forward(xs, pool) * r))

    for name, p in head.named_params():
        assert rel_err(p.grad, numeric_grad(loss, p.data)) < TOL, name
    assert rel_err(dxs, numeric_grad(loss, xs)) < TOL


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("conv", ["gin", "gcn"])
@pytest.mark.parametrize("jk", [False, True])
def test_gnn_model_grads(seed, conv, jk):
    rng = np.random.default_rng(seed)
    batch, x = random_batch(rng, d=2)
    batch.x = x
    model = GnnModel(2, 4, 2, conv, "mean" if jk else "sum", jk, seed % 2 == 1, rng, degree_features=2 * (seed % 2))
    check_module_grads(model, lambda _: model.forward(batch), x, seed)


def test_loss_grads(rng):
    logits = rng.normal(size=(4, 3))
    labels = np.array([0, 2, 1, 1])
    _, g = cross_entropy(logits, labels)
    assert rel_err(g, numeric_grad(lambda: cross_entropy(logits, labels)[0], logits)) < TOL
    pred, target = rng.normal(size=(4, 3)), rng.normal(size=(4, 3))
    _, g = mse(pred, target)
    assert rel_err(g, numeric_grad(lambda: mse(pred, target)[0], pred)) < TOL


# -- layer examples -------------------------------------------------------


def test_gin_zero_weights_zero_output(rng):
    layer = GINLayer(2, 3, rng)
    for p in layer.params():
        p.data[...] = 0.0
    out = gin_layer(rng.normal(size=(4, 2)), cycle_graph(4), layer)
    assert np.all(out == 0.0)


def test_gin_isolated_vertex_uses_own_features(rng):
    layer = GINLayer(2, 3, rng)
    h = rng.normal(size=(4, 2))
    g = Graph(4, [(0, 1), (1, 2)])
    out = gin_layer(h, g, layer)
    alone = gin_layer(h[3:], Graph(1), layer)
    assert np.allclose(out[3], alone[0])


def test_gcn_single_vertex(rng):
    layer = GCNLayer(2, 3, rng)
    h = rng.normal(size=(1, 2))
    expected = np.maximum(h @ layer.lin.w.data + layer.lin.b.data, 0.0)
    assert np.allclose(gcn_layer(h, Graph(1), layer), expected)


def test_gcn_regular_graph_uniform_coefficients():
    norm = GraphBatch.from_graphs([cycle_graph(6)]).gcn_norm().toarray()
    vals = norm[norm > 0]
    assert np.allclose(vals, 1.0 / 3.0)


def test_gcn_norm_matches_dense_formula():
    g = star_graph(3)
    a = np.zeros((4, 4))
    for u, v in g.edges:
        a[u, v] = a[v, u] = 1
    a += np.eye(4)
    d = a.sum(axis=1)
    expected = a / np.sqrt(np.outer(d, d))
    assert np.allclose(GraphBatch.from_graphs([g]).gcn_norm().toarray(), expected)


def test_shape_errors(rng):
    batch = GraphBatch.from_graphs([cycle_graph(3)])
    with pytest.raises(ShapeError):
        GINLayer(2, 3, rng).forward(np.ones((3, 1)), batch)
    with pytest.raises(ShapeError):
        GCNLayer(2, 3, rng).forward(np.ones((3, 1)), batch)
    with pytest.raises(ShapeError):
        Linear(2, 3, rng).forward(np.ones((3, 1)))


def test_bad_model_options():
    with pytest.raises(InvalidArgument):
        GnnModel(1, conv_kind="pna")
    with pytest.raises(InvalidArgument):
        GnnModel(1, readout="max")
    with pytest.raises(InvalidArgument):
        DeepSetsHead([2, 2], [2, 2], "max")


# -- readout --------------------------------------------------------------


def test_readout_sum_c3(rng):
    batch = GraphBatch.from_graphs([cycle_graph(3)])
    f = rng.normal(size=(1, 4))
    assert np.allclose(readout(np.repeat(f, 3, axis=0), batch, "sum"), 3 * f)


def test_readout_mean_duplication_invariant(rng):
    f = rng.normal(size=(3, 4))
    b1 = GraphBatch.from_graphs([Graph(3)])
    b2 = GraphBatch.from_graphs([Graph(6)])
    assert np.allclose(readout(f, b1, "mean"), readout(np.concatenate([f, f]), b2, "mean"))


def test_gnn_permutation_invariance_100_perms(rng):
    g = erdos_renyi(9, 0.4, rng)
    for conv in ("gin", "gcn"):
        model = GnnModel(1, 8, 3, conv, "sum", True, True, np.random.default_rng(1), degree_features=3)
        ref = model.forward(GraphBatch.from_graphs([g]))
        for _ in range(100):
            out = model.forward(GraphBatch.from_graphs([g.permute(rng.permutation(9).tolist())]))
            assert np.max(np.abs(out - ref)) <= 1e-9


def test_gin_sum_separates_star_and_path():
    separated = 0
    for seed in range(20):
        model = GnnModel(1, 16, 2, "gin", "sum", rng=np.random.default_rng(seed))
        out = model.forward(GraphBatch.from_graphs([star_graph(3), path_graph(4)]))
        separated += bool(np.max(np.abs(out[0] - out[1])) > 1e-6)
    assert separated >= 19


# -- deep sets ------------------------------------------------------------


def test_deepsets_permutation_invariant(rng):
    head = DeepSetsHead([3, 8], [8, 2], "sum", rng)
    xs = rng.normal(size=(6, 3))
    ref = deepsets_apply(head, xs)
    for _ in range(20):
        assert np.allclose(deepsets_apply(head, xs[rng.permutation(6)]), ref, atol=1e-12)


def test_deepsets_singleton_mean(rng):
    head = DeepSetsHead([3, 8], [8, 2], "mean", rng)
    x = rng.normal(size=(1, 3))
    assert np.allclose(deepsets_apply(head, x), head.rho.forward(head.phi.forward(x))[0])


def test_deepsets_empty():
    with pytest.raises(InvalidArgument):
        deepsets_apply(DeepSetsHead([3, 4], [4, 1]), np.zeros((0, 3)))


# -- losses and optimizer -------------------------------------------------


@pytest.mark.parametrize("classes", [2, 5, 10])
def test_cross_entropy_uniform(classes):
    loss, _ = cross_entropy(np.zeros((3, classes)), np.array([0, 1, 1]))
    assert loss == pytest.approx(math.log(classes))


def test_mse_zero(rng):
    x = rng.normal(size=(4, 3))
    assert mse(x, x)[0] == 0.0


def test_adam_first_step():
    # bias-corrected first step: m_hat = g, v_hat = g^2, so w moves by lr * g / (|g| + eps)
    w = Tensor(np.array([1.0]))
    w.grad = 2.0 * w.data
    adam_step([w], AdamState(), AdamHyper(lr=0.1))
    assert w.data[0] == pytest.approx(1.0 - 0.1 * 2.0 / (2.0 + 1e-8), rel=1e-12)


def test_adam_minimizes_quadratic():
    w = Tensor(np.array([3.0, -2.0]))
    state = AdamState()
    for _ in range(2000):
        w.grad = 2.0 * w.data
        adam_step([w], state, AdamHyper(lr=0.05))
    assert np.all(np.abs(w.data) < 1e-2)
