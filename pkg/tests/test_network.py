import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rebar.errors import DimensionError, ParseError, SchemaError
from rebar.network import (
    Activation,
    Layer,
    ReluNetwork,
    Stability,
    forward,
    interval_bounds,
    load_network,
    pre_activations,
    random_network,
    save_network,
    zero_network,
)

from .oracles import forward_loops


def test_constant_network_outputs_bias():
    net = zero_network(3, 2, (5,))
    layers = list(net.layers)
    layers[-1] = Layer(layers[-1].weights, [0.5, -2.0], Activation.LINEAR)
    net = ReluNetwork(layers)
    for x in np.random.default_rng(0).normal(size=(10, 3)):
        assert np.array_equal(forward(net, x), [0.5, -2.0])


def test_identity_linear_layer():
    net = ReluNetwork([Layer(np.eye(4), np.zeros(4), Activation.LINEAR)])
    x = np.array([1.0, -2.0, 3.5, 0.0])
    assert np.array_equal(forward(net, x), x)


def test_forward_matches_loop_reimplementation(rng):
    net = random_network(rng, [4, 8, 8, 2])
    xs = rng.normal(size=(100, 4)) * 3
    batch = forward(net, xs)
    for x, y in zip(xs, batch):
        assert np.max(np.abs(forward_loops(net, x) - y)) <= 1e-12
        assert np.max(np.abs(forward(net, x) - y)) <= 1e-12


def test_forward_dimension_error():
    net = zero_network(3, 2, (4,))
    with pytest.raises(DimensionError):
        forward(net, np.zeros(4))


def test_identity_bounds_are_pass_through():
    n = 3
    net = ReluNetwork([Layer(np.eye(n), np.zeros(n), Activation.RELU),
                       Layer(np.eye(n), np.zeros(n), Activation.LINEAR)])
    b = interval_bounds(net, -np.ones(n), np.ones(n))
    assert np.array_equal(b.lower[0], -np.ones(n)) and np.array_equal(b.upper[0], np.ones(n))
    assert np.all(b.tags[0] == Stability.UNSTABLE)
    lo, hi = b.post_bounds(0, Activation.RELU)
    assert np.array_equal(lo, np.zeros(n)) and np.array_equal(hi, np.ones(n))
    assert b.num_unstable == n


def test_stability_tags_follow_bounds(rng):
    net = random_network(rng, [3, 16, 16, 2])
    b = interval_bounds(net, -np.ones(3), np.ones(3))
    for k, layer in enumerate(net.layers[:-1]):
        lo, hi, tag = b.lower[k], b.upper[k], b.tags[k]
        assert np.all(lo <= hi)
        assert np.all(tag[hi <= 0] == Stability.INACTIVE)
        assert np.all(tag[(lo < 0) & (hi > 0)] == Stability.UNSTABLE)
        assert np.all(tag[(lo >= 0) & (hi > 0)] == Stability.ACTIVE)


def test_interval_bounds_sound_on_samples(rng):
    for sizes in ([4, 8, 8, 2], [6, 20, 20, 2], [2, 5, 3]):
        net = random_network(rng, sizes)
        lo = rng.uniform(-2, 0, sizes[0])
        hi = lo + rng.uniform(0, 3, sizes[0])
        b = interval_bounds(net, lo, hi)
        xs = rng.uniform(lo, hi, size=(100_000, sizes[0]))
        for k, z in enumerate(pre_activations(net, xs)):
            assert np.all(z >= b.lower[k] - 1e-12)
            assert np.all(z <= b.upper[k] + 1e-12)


@given(st.integers(0, 10_000), st.floats(0.0, 0.5), st.floats(0.0, 0.5))
def test_shrinking_box_never_widens(seed, s_lo, s_hi):
    rng = np.random.default_rng(seed)
    net = random_network(rng, [3, 6, 6, 2])
    lo, hi = -np.ones(3), np.ones(3)
    b = interval_bounds(net, lo, hi)
    lo2, hi2 = lo + s_lo, hi - s_hi
    b2 = interval_bounds(net, lo2, hi2)
    for k in range(len(net.layers)):
        assert np.all(b2.lower[k] >= b.lower[k] - 1e-12)
        assert np.all(b2.upper[k] <= b.upper[k] + 1e-12)


def test_stable_pattern_reproduces_forward(rng):
    # small input box so that most neurons are stable; force each per its tag
    net = random_network(rng, [3, 8, 8, 2])
    center = rng.normal(size=3)
    lo, hi = center - 1e-3, center + 1e-3
    b = interval_bounds(net, lo, hi)
    if b.num_unstable:
        pytest.skip("box not small enough to stabilize this network")
    for x in rng.uniform(lo, hi, size=(50, 3)):
        h = x
        for k, layer in enumerate(net.layers):
            z = layer.weights @ h + layer.bias
            if layer.activation is Activation.RELU:
                h = np.where(b.tags[k] == Stability.ACTIVE, z, 0.0)
            else:
                h = z
        assert np.allclose(h, forward(net, x), atol=1e-12)


def test_roundtrip(tmp_path, rng):
    net = random_network(rng, [6, 20, 20, 2])
    path = tmp_path / "net.json"
    save_network(net, path)
    again = load_network(path)
    assert again == net
    save_network(again, tmp_path / "net2.json")
    assert (tmp_path / "net2.json").read_text() == path.read_text()


def test_twenty_twenty_layout(tmp_path, rng):
    path = tmp_path / "net.json"
    save_network(random_network(rng, [6, 20, 20, 2]), path)
    net = load_network(path)
    assert net.hidden_sizes == [20, 20]
    assert sum(net.hidden_sizes) == 40


def test_bias_length_mismatch(tmp_path):
    data = {"layers": [{"weights": [[1, 0], [0, 1]], "bias": [0], "activation": "linear"}]}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    with pytest.raises(SchemaError):
        load_network(path)


def test_broken_chain_and_final_relu():
    with pytest.raises(SchemaError):
        ReluNetwork([Layer(np.ones((3, 2)), np.zeros(3), "relu"),
                     Layer(np.ones((2, 4)), np.zeros(2), "linear")])
    with pytest.raises(SchemaError):
        ReluNetwork([Layer(np.ones((3, 2)), np.zeros(3), "relu")])
    # a linear hidden layer is allowed
    ReluNetwork([Layer(np.ones((3, 2)), np.zeros(3), "linear"),
                 Layer(np.ones((2, 3)), np.zeros(2), "linear")])


def test_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{\"layers\": [")
    with pytest.raises(ParseError):
        load_network(path)


@pytest.mark.parametrize("token", ["NaN", "Infinity", "-Infinity"])
def test_non_finite_rejected(tmp_path, token):
    path = tmp_path / "bad.json"
    path.write_text('{"layers": [{"weights": [[%s]], "bias": [0], "activation": "linear"}]}' % token)
    with pytest.raises(ParseError):
        load_network(path)


def test_missing_layers_key():
    from rebar.network import network_from_dict
    with pytest.raises(SchemaError):
        network_from_dict({"weights": []})
