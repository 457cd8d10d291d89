"""Feed-forward ReLU controllers: evaluation, interval bounds and JSON I/O."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, ParseError, SchemaError


class Activation(str, enum.Enum):
    RELU = "relu"
    LINEAR = "linear"


class Stability(enum.IntEnum):
    INACTIVE = 0
    ACTIVE = 1
    UNSTABLE = 2


@dataclass(frozen=True, eq=False)
class Layer:
    weights: np.ndarray
    bias: np.ndarray
    activation: Activation = Activation.RELU

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


class ReluNetwork:
    """An ordered list of affine layers, each followed by ReLU or nothing.

    The final layer must be LINEAR.
    """

    def __init__(self, layers):
        self.layers = tuple(
            Layer(np.array(l.weights, dtype=float, ndmin=2),
                  np.array(l.bias, dtype=float).ravel(),
                  Activation(l.activation))
            for l in layers
        )
        _check_layers(self.layers)
        for l in self.layers:
            l.weights.setflags(write=False)
            l.bias.setflags(write=False)

    @classmethod
    def from_weights(cls, weights, biases, hidden_activation="relu"):
        acts = [hidden_activation] * (len(weights) - 1) + ["linear"]
        return cls([Layer(w, b, a) for w, b, a in zip(weights, biases, acts)])

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def hidden_sizes(self) -> list[int]:
        return [l.out_dim for l in self.layers[:-1]]

    def __eq__(self, other):
        if not isinstance(other, ReluNetwork) or len(self.layers) != len(other.layers):
            return False
        return all(
            a.activation == b.activation
            and np.array_equal(a.weights, b.weights)
            and np.array_equal(a.bias, b.bias)
            for a, b in zip(self.layers, other.layers)
        )

    __hash__ = None

    def __call__(self, x):
        return forward(self, x)

    def to_dict(self) -> dict:
        return {
            "layers": [
                {"weights": l.weights.tolist(), "bias": l.bias.tolist(),
                 "activation": l.activation.value}
                for l in self.layers
            ]
        }


def _check_layers(layers):
    if not layers:
        raise SchemaError("network has no layers")
    for k, l in enumerate(layers):
        if l.weights.ndim != 2:
            raise SchemaError(f"layer {k}: weights must be a matrix")
        if l.weights.shape[0] != l.bias.size:
            raise SchemaError(
                f"layer {k}: {l.weights.shape[0]} weight rows but bias of length {l.bias.size}")
        if not (np.all(np.isfinite(l.weights)) and np.all(np.isfinite(l.bias))):
            raise SchemaError(f"layer {k}: non-finite parameters")
        if k and layers[k - 1].out_dim != l.in_dim:
            raise SchemaError(
                f"layer {k}: expects {l.in_dim} inputs, previous layer gives {layers[k - 1].out_dim}")
    if layers[-1].activation is not Activation.LINEAR:
        raise SchemaError("final layer must be linear")


def forward(net: ReluNetwork, x) -> np.ndarray:
    """Evaluate ``net``; ``x`` may be a single vector or a batch (rows)."""
    h = np.asarray(x, dtype=float)
    if h.shape[-1] != net.in_dim:
        raise DimensionError(f"network expects {net.in_dim} inputs, got {h.shape[-1]}")
    for l in net.layers:
        h = h @ l.weights.T + l.bias
        if l.activation is Activation.RELU:
            h = np.maximum(h, 0.0)
    return h


def pre_activations(net: ReluNetwork, x) -> list[np.ndarray]:
    """Pre-activation values of every layer for input (batch) ``x``."""
    h = np.asarray(x, dtype=float)
    out = []
    for l in net.layers:
        z = h @ l.weights.T + l.bias
        out.append(z)
        h = np.maximum(z, 0.0) if l.activation is Activation.RELU else z
    return out


@dataclass(frozen=True, eq=False)
class LayerBounds:
    """Pre-activation intervals for every layer plus per-neuron stability tags.

    ``lower[k]``/``upper[k]`` bound layer ``k``'s pre-activations; ``tags[k]``
    is only meaningful for RELU layers (LINEAR layers are tagged ACTIVE).
    """

    lower: tuple[np.ndarray, ...]
    upper: tuple[np.ndarray, ...]
    tags: tuple[np.ndarray, ...]

    @property
    def num_unstable(self) -> int:
        return int(sum(np.count_nonzero(t == Stability.UNSTABLE) for t in self.tags))

    def post_bounds(self, k, activation) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.lower[k], self.upper[k]
        if Activation(activation) is Activation.RELU:
            return np.maximum(lo, 0.0), np.maximum(hi, 0.0)
        return lo, hi


def affine_interval(W, b, lo, hi):
    """Tight interval image of the box [lo, hi] under ``x -> W x + b``."""
    W = np.asarray(W, dtype=float)
    Wp = np.maximum(W, 0.0)
    Wn = np.minimum(W, 0.0)
    return Wp @ lo + Wn @ hi + b, Wp @ hi + Wn @ lo + b


def interval_bounds(net: ReluNetwork, input_lo, input_hi) -> LayerBounds:
    lo = np.asarray(input_lo, dtype=float).ravel()
    hi = np.asarray(input_hi, dtype=float).ravel()
    if lo.size != net.in_dim or hi.size != net.in_dim:
        raise DimensionError("input box does not match network input size")
    if np.any(lo > hi):
        raise ValueError("input box has lower bound above upper bound")
    lowers, uppers, tags = [], [], []
    for l in net.layers:
        zl, zu = affine_interval(l.weights, l.bias, lo, hi)
        lowers.append(zl)
        uppers.append(zu)
        if l.activation is Activation.RELU:
            tag = np.full(zl.size, Stability.UNSTABLE, dtype=np.int8)
            tag[zl >= 0] = Stability.ACTIVE
            tag[zu <= 0] = Stability.INACTIVE
            lo, hi = np.maximum(zl, 0.0), np.maximum(zu, 0.0)
        else:
            tag = np.full(zl.size, Stability.ACTIVE, dtype=np.int8)
            lo, hi = zl, zu
        tags.append(tag)
    return LayerBounds(tuple(lowers), tuple(uppers), tuple(tags))


def _reject_constant(token):
    raise ParseError(f"non-finite number {token!r} in network file")


def network_from_dict(data) -> ReluNetwork:
    if not isinstance(data, dict) or not isinstance(data.get("layers"), list):
        raise SchemaError("network file must contain a 'layers' list")
    layers = []
    for k, entry in enumerate(data["layers"]):
        try:
            w = np.array(entry["weights"], dtype=float, ndmin=2)
            b = np.array(entry["bias"], dtype=float).ravel()
            act = Activation(str(entry.get("activation", "relu")).lower())
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"layer {k}: {exc}") from exc
        layers.append(Layer(w, b, act))
    return ReluNetwork(layers)


def load_network(path) -> ReluNetwork:
    text = Path(path).read_text()
    try:
        data = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return network_from_dict(data)


def save_network(net: ReluNetwork, path):
    Path(path).write_text(json.dumps(net.to_dict(), indent=1) + "\n")


def random_network(rng, sizes, scale=1.0) -> ReluNetwork:
    """Random network with layer widths ``sizes`` (input first, output last).

    Weights are Gaussian with variance ``scale**2 / fan_in``.
    """
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.normal(0.0, scale / math.sqrt(fan_in), size=(fan_out, fan_in)))
        biases.append(rng.normal(0.0, 0.1 * scale, size=fan_out))
    return ReluNetwork.from_weights(weights, biases)


def zero_network(in_dim, out_dim, hidden=()) -> ReluNetwork:
    sizes = [in_dim, *hidden, out_dim]
    return ReluNetwork.from_weights(
        [np.zeros((o, i)) for i, o in zip(sizes[:-1], sizes[1:])],
        [np.zeros(o) for o in sizes[1:]],
    )
