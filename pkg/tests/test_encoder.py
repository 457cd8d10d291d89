import numpy as np
import pytest

from rebar.dynamics import relative_position, step_pair
from rebar.encoder import build_facet_milp, controller_bounds, encode_relu
from rebar.errors import DimensionError, EmptyTarget
from rebar.lingeo import Polytope, facet_directions
from rebar.network import Layer, ReluNetwork, forward, interval_bounds, pre_activations, random_network
from rebar.opt import MilpModel, Sense, solve_lp, solve_milp, to_lp_text
from rebar.oracle import GridSpec, sample_predecessors
from rebar.testbeds import UNIT_SQUARE, random_pair, static_pair


def _model_with_inputs(lo, hi):
    m = MilpModel()
    x = m.add_vars(len(lo), lo, hi, name="in")
    return m, x


def test_all_active_network_needs_no_binaries():
    net = ReluNetwork([Layer(np.eye(2), [5.0, 5.0], "relu"), Layer(np.ones((1, 2)), [0.0], "linear")])
    lo, hi = -np.ones(2), np.ones(2)
    m, x = _model_with_inputs(lo, hi)
    nv = encode_relu(m, net, x, interval_bounds(net, lo, hi))
    assert nv.binaries == [] and not m.binaries


def test_single_unstable_neuron_rows():
    net = ReluNetwork([Layer([[1.0]], [0.0], "relu"), Layer([[1.0]], [0.0], "linear")])
    m, x = _model_with_inputs([-1.0], [1.0])
    before = m.num_constraints
    nv = encode_relu(m, net, x, interval_bounds(net, [-1.0], [1.0]))
    assert len(nv.binaries) == 1
    rows = m.constraints[before:]
    ineq = [r for r in rows if r.sense is not Sense.EQ]
    assert len(ineq) == 4
    assert all(nv.binaries[0] in r.coeffs for r in ineq[2:])


def test_bounds_shape_mismatch():
    net = random_network(np.random.default_rng(0), [2, 3, 1])
    other = random_network(np.random.default_rng(1), [2, 4, 1])
    m, x = _model_with_inputs(-np.ones(2), np.ones(2))
    with pytest.raises(DimensionError):
        encode_relu(m, net, x, interval_bounds(other, -np.ones(2), np.ones(2)))
    with pytest.raises(DimensionError):
        encode_relu(m, net, x[:1], interval_bounds(net, -np.ones(2), np.ones(2)))


def test_fixed_input_reproduces_forward(rng):
    for _ in range(50):
        sizes = [3, int(rng.integers(2, 8)), int(rng.integers(2, 8)), 2]
        net = random_network(rng, sizes)
        lo, hi = -2 * np.ones(3), 2 * np.ones(3)
        x0 = rng.uniform(lo, hi)
        m, x = _model_with_inputs(lo, hi)
        nv = encode_relu(m, net, x, interval_bounds(net, lo, hi))
        for v, val in zip(x, x0):
            m.add_constr({v: 1.0}, Sense.EQ, val)
        m.set_objective({nv.outputs[0]: 1.0})
        res = solve_milp(m)
        assert res.optimal
        assert np.max(np.abs(res.assignment[nv.outputs] - forward(net, x0))) <= 1e-6


def test_fixed_pattern_lp_reproduces_forward(rng):
    # fixing the binaries to a sample's activation pattern leaves an LP whose
    # solution at that input is the forward pass
    net = random_network(rng, [3, 6, 6, 2])
    lo, hi = -np.ones(3), np.ones(3)
    b = interval_bounds(net, lo, hi)
    m, x = _model_with_inputs(lo, hi)
    nv = encode_relu(m, net, x, b)
    for _ in range(20):
        x0 = rng.uniform(lo, hi)
        z = pre_activations(net, x0)
        lb, ub = np.array(m.lb), np.array(m.ub)
        lb[x] = ub[x] = x0
        k = 0
        for layer_idx, tags in enumerate(b.tags[:-1]):
            for r in np.flatnonzero(tags == 2):
                d = nv.binaries[k]
                lb[d] = ub[d] = float(z[layer_idx][r] > 0)
                k += 1
        res = solve_lp(m, lb, ub)
        assert res.optimal
        assert np.max(np.abs(res.assignment[nv.outputs] - forward(net, x0))) <= 1e-6


def test_static_facet_optimum():
    pair = static_pair()
    model, layout = build_facet_milp(pair, UNIT_SQUARE, (1.0, 0.0))
    res = solve_milp(model)
    assert res.objective_value == pytest.approx(-1.0, abs=1e-9)


def test_binary_count_matches_unstable_neurons(rng):
    for _ in range(5):
        pair = random_pair(rng, hidden=(8, 8))
        bi, bj = controller_bounds(pair)
        _, layout = build_facet_milp(pair, UNIT_SQUARE, (0.0, 1.0), (bi, bj))
        assert len(layout.binaries) == bi.num_unstable + bj.num_unstable


def test_layout_is_a_partition(rng):
    pair = random_pair(rng, hidden=(5, 5))
    model, layout = build_facet_milp(pair, UNIT_SQUARE, (1.0, 0.0))
    idx = layout.all_indices()
    assert len(set(idx)) == len(idx)
    assert set(idx) == set(range(model.num_vars)) == set(range(layout.num_vars))


def test_empty_target_rejected():
    with pytest.raises(EmptyTarget):
        build_facet_milp(static_pair(), Polytope.empty_set(2), (1.0, 0.0))


def test_facet_model_dump_is_deterministic(rng):
    seed = int(rng.integers(1 << 30))
    dumps = []
    for _ in range(2):
        pair = random_pair(np.random.default_rng(seed), hidden=(4, 4))
        model, _ = build_facet_milp(pair, UNIT_SQUARE, facet_directions(8)[3])
        dumps.append(to_lp_text(model))
    assert dumps[0] == dumps[1]


def test_facet_halfspace_sound_on_grid(rng):
    directions = facet_directions(8)
    for s in range(20):
        pair = random_pair(rng, hidden=(4, 4))
        a = directions[s % 8]
        model, _ = build_facet_milp(pair, UNIT_SQUARE, a)
        res = solve_milp(model)
        grid = GridSpec.over(pair, 4)
        X = sample_predecessors(pair, UNIT_SQUARE, grid)
        # the sampled predecessors really land in the target
        assert np.all(np.abs(relative_position(pair, step_pair(pair, X, warn=False))) <= 1 + 1e-7)
        if res.optimal:
            assert np.all(relative_position(pair, X) @ a >= res.bound - 1e-6)
        else:
            assert len(X) == 0
