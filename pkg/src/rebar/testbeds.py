"""Ready-made pair and multi-agent systems used by tests, benchmarks and the demo.

None of these controllers are trained. They are either random networks or
small hand-built networks with a known closed-loop behaviour.
"""

from __future__ import annotations

import numpy as np

from .dynamics import AgentModel, PairSystem, double_integrator, single_integrator
from .lingeo import Polytope
from .multiagent import MultiAgentSystem
from .network import ReluNetwork, random_network, zero_network

UNIT_SQUARE = Polytope.box([-1.0, -1.0], [1.0, 1.0])


def static_agent(half_width=3.0, hidden=(4,)) -> AgentModel:
    """Agent that never moves: A = I, B = 0 and an all-zero controller."""
    net = zero_network(2, 2, hidden)
    return AgentModel(np.eye(2), np.zeros((2, 2)), np.eye(2), net,
                      [-half_width] * 2, [half_width] * 2, "own_state", "static")


def static_pair(collision=UNIT_SQUARE) -> PairSystem:
    return PairSystem(static_agent(), static_agent(), collision)


def double_integrator_agent(net, pos=2.0, vel=1.0, dt=0.25, obs="own_plus_relative", name="",
                            zoh=True):
    A, B, S = double_integrator(dt, zoh)
    return AgentModel(A, B, S, net, [-pos, -pos, -vel, -vel], [pos, pos, vel, vel], obs, name)


def random_pair(rng, hidden=(8, 8), collision=UNIT_SQUARE, scale=1.0, pos=2.0, vel=1.0,
                zoh=True) -> PairSystem:
    """Two double integrators with independent random controllers."""
    agents = [
        double_integrator_agent(random_network(rng, [6, *hidden, 2], scale), pos, vel,
                                name=f"rand{k}", zoh=zoh)
        for k in range(2)
    ]
    return PairSystem(agents[0], agents[1], collision)


def relative_gain_network(gain) -> ReluNetwork:
    """``u = gain * (p_other - p_self)`` on own_plus_relative inputs, via ReLU pairs.

    Inputs are (px, py, rx, ry); hidden units are relu(r) and relu(-r).
    """
    W1 = np.zeros((4, 4))
    W1[0, 2] = W1[1, 3] = 1.0
    W1[2, 2] = W1[3, 3] = -1.0
    W2 = gain * np.array([[1.0, 0.0, -1.0, 0.0], [0.0, 1.0, 0.0, -1.0]])
    return ReluNetwork.from_weights([W1, W2], [np.zeros(4), np.zeros(2)])


def _single_agent(net, half_width, dt, name):
    A, B, S = single_integrator(dt)
    return AgentModel(A, B, S, net, [-half_width] * 2, [half_width] * 2, "own_plus_relative", name)


def gain_pair(gain, half_width=2.0, dt=0.25, collision=UNIT_SQUARE) -> PairSystem:
    """Single integrators steering along the relative position.

    Negative gain pushes the agents apart (relative position grows by
    ``1 - 2 gain dt`` per step), positive gain pulls them together.
    """
    net = relative_gain_network(gain)
    return PairSystem(_single_agent(net, half_width, dt, "a"), _single_agent(net, half_width, dt, "b"),
                      collision)


def repulsive_pair(**kw) -> PairSystem:
    return gain_pair(-1.0, **kw)


def attracting_pair(**kw) -> PairSystem:
    return gain_pair(1.0, **kw)


def constant_network(value, in_dim=4, hidden=(2,)) -> ReluNetwork:
    net = zero_network(in_dim, len(value), hidden)
    layers = list(net.layers)
    last = layers[-1]
    layers[-1] = type(last)(last.weights, np.asarray(value, dtype=float), last.activation)
    return ReluNetwork(layers)


def pushing_pair(thrust=12.0, half_width=2.0, dt=0.25, collision=UNIT_SQUARE) -> PairSystem:
    """Constant velocity commands moving j away from i faster than any closing.

    The relative position shifts by ``2 thrust dt`` along x each step, which
    for the default numbers carries every workspace state past the
    collision set: the backprojection is empty.
    """
    a = _single_agent(constant_network([-thrust, 0.0]), half_width, dt, "left")
    b = _single_agent(constant_network([thrust, 0.0]), half_width, dt, "right")
    return PairSystem(a, b, collision)


def random_system(n, rng, hidden=(4, 4), collision=UNIT_SQUARE, scale=1.0, zoh=True) -> MultiAgentSystem:
    agents = [
        double_integrator_agent(random_network(rng, [6, *hidden, 2], scale), name=f"agent{k}", zoh=zoh)
        for k in range(n)
    ]
    return MultiAgentSystem(agents, default_collision=collision)


def gain_system(gains, half_width=2.0, dt=0.25, collision=UNIT_SQUARE) -> MultiAgentSystem:
    """Single integrators, agent k steering with ``gains[k]`` (see :func:`gain_pair`)."""
    agents = [_single_agent(relative_gain_network(g), half_width, dt, f"agent{k}")
              for k, g in enumerate(gains)]
    return MultiAgentSystem(agents, default_collision=collision)
