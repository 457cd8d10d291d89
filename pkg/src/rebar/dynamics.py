"""Per-agent linear dynamics and the pairwise closed-loop map.

A pair state is the stack ``X = [x_i; x_j]``. Every controller observes the
pair state in *its own* ordering ``[x_self; x_other]`` through its
observation matrix, so one agent model can sit on either side of a pair.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, SchemaError
from .lingeo import Polytope
from .network import ReluNetwork, affine_interval, forward

log = logging.getLogger(__name__)

OWN_STATE = "own_state"
OWN_PLUS_RELATIVE = "own_plus_relative"
OBS_KINDS = (OWN_STATE, OWN_PLUS_RELATIVE)


def observation_matrix(kind, nx_self, pos_self, nx_other, pos_other) -> np.ndarray:
    """Observation matrix over ``[x_self; x_other]`` for a named layout.

    ``own_state`` sees only the own state; ``own_plus_relative`` appends the
    other agent's position minus the own position.
    """
    own = np.hstack([np.eye(nx_self), np.zeros((nx_self, nx_other))])
    if kind == OWN_STATE:
        return own
    if kind == OWN_PLUS_RELATIVE:
        rel = np.hstack([-pos_self, pos_other])
        return np.vstack([own, rel])
    raise SchemaError(f"unknown observation layout {kind!r}; expected one of {OBS_KINDS}")


@dataclass(frozen=True, eq=False)
class AgentModel:
    A: np.ndarray
    B: np.ndarray
    pos_select: np.ndarray
    controller: ReluNetwork
    state_lo: np.ndarray
    state_hi: np.ndarray
    # named layout or an explicit matrix over [x_self; x_other]
    obs_map: str | np.ndarray = OWN_STATE
    name: str = ""

    def __post_init__(self):
        for attr in ("A", "B", "pos_select", "state_lo", "state_hi"):
            object.__setattr__(self, attr, np.array(getattr(self, attr), dtype=float))
        if not isinstance(self.obs_map, str):
            object.__setattr__(self, "obs_map", np.array(self.obs_map, dtype=float, ndmin=2))
        A, B, S = self.A, self.B, self.pos_select
        nx = A.shape[0]
        if A.shape != (nx, nx):
            raise DimensionError(f"A must be square, got {A.shape}")
        if B.ndim != 2 or B.shape[0] != nx:
            raise DimensionError(f"B must have {nx} rows, got {B.shape}")
        if S.shape != (2, nx):
            raise DimensionError(f"pos_select must be 2x{nx}, got {S.shape}")
        if self.state_lo.shape != (nx,) or self.state_hi.shape != (nx,):
            raise DimensionError("state box must have one bound per state dimension")
        if not (np.all(np.isfinite(self.state_lo)) and np.all(np.isfinite(self.state_hi))):
            raise SchemaError("state box must be finite in every dimension")
        if np.any(self.state_lo > self.state_hi):
            raise SchemaError("state box has lower bound above upper bound")
        if self.controller.out_dim != B.shape[1]:
            raise DimensionError(
                f"controller outputs {self.controller.out_dim} values, B takes {B.shape[1]}")
        if isinstance(self.obs_map, str) and self.obs_map not in OBS_KINDS:
            raise SchemaError(f"unknown observation layout {self.obs_map!r}")

    @property
    def nx(self) -> int:
        return self.A.shape[0]

    @property
    def nu(self) -> int:
        return self.B.shape[1]

    def obs_matrix(self, other: AgentModel) -> np.ndarray:
        if isinstance(self.obs_map, str):
            M = observation_matrix(self.obs_map, self.nx, self.pos_select, other.nx, other.pos_select)
        else:
            M = self.obs_map
            if M.shape[1] != self.nx + other.nx:
                raise DimensionError(
                    f"obs_map has {M.shape[1]} columns, pair state has {self.nx + other.nx}")
        if M.shape[0] != self.controller.in_dim:
            raise DimensionError(
                f"observation has {M.shape[0]} entries, controller expects {self.controller.in_dim}")
        return M


@dataclass(frozen=True, eq=False)
class PairSystem:
    agent_i: AgentModel
    agent_j: AgentModel
    collision_set: Polytope
    label: tuple[int, int] = (0, 1)
    # observation matrices over the stacked pair state X = [x_i; x_j]
    obs_i: np.ndarray = field(init=False, repr=False)
    obs_j: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.collision_set.dim != 2:
            raise DimensionError("collision set must live in 2-D relative-position space")
        if self.collision_set.empty:
            raise SchemaError("collision set must be nonempty")
        ni, nj = self.agent_i.nx, self.agent_j.nx
        obs_i = self.agent_i.obs_matrix(self.agent_j)
        # agent j sees [x_j; x_i]; permute its columns into [x_i; x_j] order
        own_j = self.agent_j.obs_matrix(self.agent_i)
        obs_j = np.hstack([own_j[:, nj:], own_j[:, :nj]])
        object.__setattr__(self, "obs_i", obs_i)
        object.__setattr__(self, "obs_j", obs_j)

    @property
    def nx(self) -> int:
        return self.agent_i.nx + self.agent_j.nx

    def split(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.nx:
            raise DimensionError(f"pair state must have length {self.nx}, got {X.shape[-1]}")
        ni = self.agent_i.nx
        return X[..., :ni], X[..., ni:]

    @property
    def state_lo(self) -> np.ndarray:
        return np.concatenate([self.agent_i.state_lo, self.agent_j.state_lo])

    @property
    def state_hi(self) -> np.ndarray:
        return np.concatenate([self.agent_i.state_hi, self.agent_j.state_hi])

    @property
    def relpos_matrix(self) -> np.ndarray:
        """2 x nx matrix with ``relpos_matrix @ X == relative_position(X)``."""
        return np.hstack([-self.agent_i.pos_select, self.agent_j.pos_select])

    def relpos_box(self):
        """Range of the relative position over the workspace (interval image)."""
        return affine_interval(self.relpos_matrix, np.zeros(2), self.state_lo, self.state_hi)

    def dynamics_matrices(self):
        """Block-diagonal ``(A, B)`` of the pair, ``X+ = A X + B [u_i; u_j]``."""
        ai, aj = self.agent_i, self.agent_j
        A = np.zeros((self.nx, self.nx))
        B = np.zeros((self.nx, ai.nu + aj.nu))
        A[:ai.nx, :ai.nx] = ai.A
        A[ai.nx:, ai.nx:] = aj.A
        B[:ai.nx, :ai.nu] = ai.B
        B[ai.nx:, ai.nu:] = aj.B
        return A, B

    def swapped(self) -> PairSystem:
        """The same pair seen from agent j; the collision set is mirrored."""
        mirrored = Polytope(2, tuple(
            type(h)(tuple(-v for v in h.normal), h.offset, h.sense)
            for h in self.collision_set.halfspaces))
        return PairSystem(self.agent_j, self.agent_i, mirrored, self.label[::-1])

    def in_workspace(self, X, tol=0.0) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.all((X >= self.state_lo - tol) & (X <= self.state_hi + tol), axis=-1)


def relative_position(pair: PairSystem, X) -> np.ndarray:
    """Position of agent j minus position of agent i (works on batches)."""
    xi, xj = pair.split(X)
    return xj @ pair.agent_j.pos_select.T - xi @ pair.agent_i.pos_select.T


def controls(pair: PairSystem, X):
    X = np.asarray(X, dtype=float)
    u_i = forward(pair.agent_i.controller, X @ pair.obs_i.T)
    u_j = forward(pair.agent_j.controller, X @ pair.obs_j.T)
    return u_i, u_j


def step_pair(pair: PairSystem, X, warn=True) -> np.ndarray:
    """One closed-loop step of both agents. ``X`` may be a batch of rows."""
    X = np.asarray(X, dtype=float)
    xi, xj = pair.split(X)
    if warn and X.ndim == 1 and not pair.in_workspace(X, 1e-9):
        log.warning("step_pair called with a state outside the workspace")
    u_i, u_j = controls(pair, X)
    ai, aj = pair.agent_i, pair.agent_j
    nxt_i = xi @ ai.A.T + u_i @ ai.B.T
    nxt_j = xj @ aj.A.T + u_j @ aj.B.T
    return np.concatenate([nxt_i, nxt_j], axis=-1)


def rollout(pair: PairSystem, X, steps) -> np.ndarray:
    """States ``X_0 .. X_steps`` stacked along a new leading axis."""
    out = [np.asarray(X, dtype=float)]
    for _ in range(steps):
        out.append(step_pair(pair, out[-1], warn=False))
    return np.stack(out)


def double_integrator(dt=0.25, zoh=False):
    """Planar double integrator, state (px, py, vx, vy).

    Euler-discretized by default, so the input reaches the position one step
    late. ``zoh=True`` uses the exact zero-order-hold input matrix, whose
    position rows carry ``dt**2 / 2``.
    """
    A = np.eye(4)
    A[0, 2] = A[1, 3] = dt
    B = np.zeros((4, 2))
    B[2, 0] = B[3, 1] = dt
    if zoh:
        B[0, 0] = B[1, 1] = 0.5 * dt * dt
    S = np.hstack([np.eye(2), np.zeros((2, 2))])
    return A, B, S


def single_integrator(dt=0.25):
    """Planar single integrator, state (px, py), input is a velocity."""
    return np.eye(2), dt * np.eye(2), np.eye(2)
