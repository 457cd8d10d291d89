"""MILP encoding of one facet problem: how far can the pre-image reach along ``a``?

For a pair system, a target set T and a direction ``a`` the model is::

    min  a . p_t
    s.t. X_t in workspace box
         u_i = pi_i(obs_i X_t),  u_j = pi_j(obs_j X_t)     (big-M ReLU rows)
         X_{t+1} = A X_t + B [u_i; u_j]
         p_t = R X_t,  p_{t+1} = R X_{t+1}
         p_{t+1} in T
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import PairSystem
from .errors import DimensionError, EmptyTarget
from .lingeo import HSense, Polytope
from .network import Activation, LayerBounds, ReluNetwork, Stability, affine_interval, interval_bounds
from .opt import MilpModel, Sense


@dataclass
class NetVars:
    pre: list[list[int]] = field(default_factory=list)
    post: list[list[int]] = field(default_factory=list)
    binaries: list[int] = field(default_factory=list)
    outputs: list[int] = field(default_factory=list)


@dataclass
class VarLayout:
    X_t: range
    net_i: NetVars
    net_j: NetVars
    u_i: list[int]
    u_j: list[int]
    X_next: range
    p_t: range
    p_next: range
    num_vars: int

    @property
    def binaries(self) -> list[int]:
        return self.net_i.binaries + self.net_j.binaries

    def all_indices(self) -> list[int]:
        idx = list(self.X_t) + list(self.X_next) + list(self.p_t) + list(self.p_next)
        for nv in (self.net_i, self.net_j):
            for pre, post in zip(nv.pre, nv.post):
                idx.extend(pre)
                if post is not pre:  # linear layers reuse their pre-activations
                    idx.extend(post)
            idx.extend(nv.binaries)
        return idx


def encode_relu(model: MilpModel, net: ReluNetwork, input_vars, bounds: LayerBounds,
                input_map=None, name="net") -> NetVars:
    """Add an exact big-M encoding of ``net`` to ``model``.

    The network input is ``input_map @ x[input_vars]`` (identity when
    ``input_map`` is None). ``bounds`` must be valid for every input the model
    admits. Each UNSTABLE neuron gets one binary and four rows; stable
    neurons are pinned by an equality (ACTIVE) or a zero bound (INACTIVE).
    """
    input_vars = list(input_vars)
    if input_map is None:
        input_map = np.eye(len(input_vars))
    input_map = np.asarray(input_map, dtype=float)
    if input_map.shape != (net.in_dim, len(input_vars)):
        raise DimensionError(
            f"input map {input_map.shape} does not connect {len(input_vars)} variables "
            f"to a {net.in_dim}-input network")
    if len(bounds.lower) != len(net.layers):
        raise DimensionError("layer bounds do not match the network depth")

    out = NetVars()
    h_vars, h_map = input_vars, input_map
    for k, layer in enumerate(net.layers):
        lo, hi = bounds.lower[k], bounds.upper[k]
        if lo.size != layer.out_dim:
            raise DimensionError(f"layer {k}: bounds for {lo.size} neurons, layer has {layer.out_dim}")
        W = layer.weights @ h_map
        z = model.add_vars(layer.out_dim, lo, hi, name=f"{name}.z{k}")
        for r in range(layer.out_dim):
            coeffs = {z[r]: 1.0}
            for col, v in zip(h_vars, -W[r]):
                if v != 0.0:
                    coeffs[col] = coeffs.get(col, 0.0) + v
            model.add_constr(coeffs, Sense.EQ, layer.bias[r], name=f"{name}.aff{k}[{r}]")
        out.pre.append(z)
        if layer.activation is Activation.LINEAR:
            out.post.append(z)
            h_vars, h_map = z, np.eye(layer.out_dim)
            continue
        y = []
        tags = bounds.tags[k]
        for r in range(layer.out_dim):
            l, u = float(lo[r]), float(hi[r])
            tag = Stability(tags[r])
            if tag is Stability.INACTIVE:
                y.append(model.add_var(0.0, 0.0, name=f"{name}.y{k}[{r}]"))
            elif tag is Stability.ACTIVE:
                yr = model.add_var(max(l, 0.0), max(u, 0.0), name=f"{name}.y{k}[{r}]")
                model.add_constr({yr: 1.0, z[r]: -1.0}, Sense.EQ, 0.0, name=f"{name}.act{k}[{r}]")
                y.append(yr)
            else:
                yr = model.add_var(0.0, u, name=f"{name}.y{k}[{r}]")
                d = model.add_var(name=f"{name}.d{k}[{r}]", binary=True)
                model.add_constr({yr: 1.0}, Sense.GE, 0.0, name=f"{name}.nonneg{k}[{r}]")
                model.add_constr({yr: 1.0, z[r]: -1.0}, Sense.GE, 0.0, name=f"{name}.above{k}[{r}]")
                # y <= z - l (1 - d)
                model.add_constr({yr: 1.0, z[r]: -1.0, d: -l}, Sense.LE, -l, name=f"{name}.upz{k}[{r}]")
                # y <= u d
                model.add_constr({yr: 1.0, d: -u}, Sense.LE, 0.0, name=f"{name}.upd{k}[{r}]")
                out.binaries.append(d)
                y.append(yr)
        out.post.append(y)
        h_vars, h_map = y, np.eye(layer.out_dim)
    out.outputs = list(h_vars)
    return out


def controller_bounds(pair: PairSystem):
    """Interval bounds of both controllers over the workspace box."""
    lo, hi = pair.state_lo, pair.state_hi
    zero = np.zeros(pair.obs_i.shape[0])
    in_lo_i, in_hi_i = affine_interval(pair.obs_i, zero, lo, hi)
    zero = np.zeros(pair.obs_j.shape[0])
    in_lo_j, in_hi_j = affine_interval(pair.obs_j, zero, lo, hi)
    return (interval_bounds(pair.agent_i.controller, in_lo_i, in_hi_i),
            interval_bounds(pair.agent_j.controller, in_lo_j, in_hi_j))


def build_facet_milp(pair: PairSystem, target: Polytope, a, bounds=None,
                     workspace_rows=()) -> tuple[MilpModel, VarLayout]:
    """Model whose optimum ``b`` gives the half-space ``a . p >= b``.

    ``bounds`` may carry precomputed :func:`controller_bounds`; they depend only
    on the pair, so callers solving many facets compute them once.
    ``workspace_rows`` are extra ``(coeffs over X_t, sense, rhs)`` rows.
    """
    if target.empty:
        raise EmptyTarget("target set is empty")
    if target.dim != 2:
        raise DimensionError("target must be 2-D")
    a = np.asarray(a, dtype=float).ravel()
    if a.size != 2:
        raise DimensionError("facet direction must be 2-D")
    if bounds is None:
        bounds = controller_bounds(pair)
    bounds_i, bounds_j = bounds

    model = MilpModel()
    X = model.add_vars(pair.nx, pair.state_lo, pair.state_hi, name="X")
    for coeffs, sense, rhs in workspace_rows:
        coeffs = np.asarray(coeffs, dtype=float)
        model.add_row(X, coeffs, sense, rhs, name="workspace")

    net_i = encode_relu(model, pair.agent_i.controller, X, bounds_i, pair.obs_i, name="ctrl_i")
    net_j = encode_relu(model, pair.agent_j.controller, X, bounds_j, pair.obs_j, name="ctrl_j")
    u = net_i.outputs + net_j.outputs

    A, B = pair.dynamics_matrices()
    u_lo = np.concatenate([bounds_i.lower[-1], bounds_j.lower[-1]])
    u_hi = np.concatenate([bounds_i.upper[-1], bounds_j.upper[-1]])
    AB = np.hstack([A, B])
    nx_lo, nx_hi = affine_interval(AB, np.zeros(pair.nx), np.concatenate([pair.state_lo, u_lo]),
                                   np.concatenate([pair.state_hi, u_hi]))
    Xn = model.add_vars(pair.nx, nx_lo, nx_hi, name="Xnext")
    for r in range(pair.nx):
        row = {Xn[r]: 1.0}
        for col, v in zip(X + u, -AB[r]):
            if v != 0.0:
                row[col] = row.get(col, 0.0) + v
        model.add_constr(row, Sense.EQ, 0.0, name=f"dyn[{r}]")

    R = pair.relpos_matrix
    p_lo, p_hi = affine_interval(R, np.zeros(2), pair.state_lo, pair.state_hi)
    p = model.add_vars(2, p_lo, p_hi, name="p")
    pn_lo, pn_hi = affine_interval(R, np.zeros(2), nx_lo, nx_hi)
    pn = model.add_vars(2, pn_lo, pn_hi, name="pnext")
    for r in range(2):
        model.add_row([p[r], *X], [1.0, *(-R[r])], Sense.EQ, 0.0, name=f"rel[{r}]")
        model.add_row([pn[r], *Xn], [1.0, *(-R[r])], Sense.EQ, 0.0, name=f"relnext[{r}]")

    for k, h in enumerate(target.halfspaces):
        sense = Sense.GE if h.sense is HSense.GE else Sense.LE
        model.add_row(pn, h.normal, sense, h.offset, name=f"target[{k}]")

    model.set_objective({p[0]: a[0], p[1]: a[1]})
    layout = VarLayout(
        X_t=range(X[0], X[-1] + 1),
        net_i=net_i,
        net_j=net_j,
        u_i=net_i.outputs,
        u_j=net_j.outputs,
        X_next=range(Xn[0], Xn[-1] + 1),
        p_t=range(p[0], p[-1] + 1),
        p_next=range(pn[0], pn[-1] + 1),
        num_vars=model.num_vars,
    )
    return model, layout
