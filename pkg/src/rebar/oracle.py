"""Independent ground truth: grid-sampled backprojections and brute-force MILP solving.

Nothing here touches the facet MILPs, so it can be used to check them.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from . import config
from .dynamics import PairSystem, relative_position, step_pair
from .errors import ResourceExhausted
from .lingeo import Polytope, contains_points
from .opt import MilpModel, SolveResult, SolveStats, Status, solve_arrays

ENUM_CAP = 16


@dataclass(frozen=True, eq=False)
class GridSpec:
    lo: np.ndarray
    hi: np.ndarray
    counts: tuple[int, ...]
    cap: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if not (self.lo.size == self.hi.size == len(self.counts)):
            raise ValueError("grid bounds and counts disagree in dimension")
        if any(c < 2 for c in self.counts):
            raise ValueError("a grid needs at least 2 samples per dimension")

    @classmethod
    def over(cls, pair: PairSystem, per_dim, cap=None) -> GridSpec:
        counts = (per_dim,) * pair.nx if np.isscalar(per_dim) else tuple(per_dim)
        return cls(pair.state_lo, pair.state_hi, counts, cap)

    @property
    def size(self) -> int:
        return int(np.prod(self.counts, dtype=np.int64))

    def axes(self):
        return [np.linspace(l, h, c) for l, h, c in zip(self.lo, self.hi, self.counts)]

    def chunks(self, chunk=200_000):
        """Yield the grid points in row blocks without building the whole grid."""
        cap = config.GRID_CAP if self.cap is None else self.cap
        if self.size > cap:
            raise ResourceExhausted(f"grid of {self.size} points exceeds cap {cap}")
        axes = self.axes()
        total = self.size
        for start in range(0, total, chunk):
            idx = np.arange(start, min(start + chunk, total))
            sub = np.unravel_index(idx, self.counts)
            yield np.stack([ax[s] for ax, s in zip(axes, sub)], axis=1)


def _landing_mask(pair, X, target, steps):
    """States whose ``steps``-step rollout lands in ``target``.

    Intermediate states must stay in the workspace, since every
    over-approximation step only covers predecessors inside it.
    """
    ok = np.ones(len(X), dtype=bool)
    cur = X
    for k in range(steps):
        cur = step_pair(pair, cur, warn=False)
        if k < steps - 1:
            ok &= pair.in_workspace(cur)
    return ok & contains_points(target, relative_position(pair, cur))


def sample_predecessors(pair: PairSystem, target: Polytope, grid: GridSpec, steps=1):
    """Grid states (not projected) that reach ``target`` in ``steps`` steps."""
    if target.empty:
        return np.zeros((0, pair.nx))
    hits = []
    for X in grid.chunks():
        mask = _landing_mask(pair, X, target, steps)
        if mask.any():
            hits.append(X[mask])
    return np.concatenate(hits) if hits else np.zeros((0, pair.nx))


def sample_rbpua(pair: PairSystem, target: Polytope, grid: GridSpec, steps=1, refine=None):
    """Relative positions of grid states whose successor lands in ``target``.

    Every returned point is a true predecessor, so the set under-approximates
    the relative backprojection at grid resolution. With ``refine`` (samples
    per dimension) a second, finer grid is laid over the box spanned by the
    first pass's hits, padded by one coarse cell.
    """
    X = sample_predecessors(pair, target, grid, steps)
    if refine and len(X):
        cell = (grid.hi - grid.lo) / (np.array(grid.counts) - 1)
        lo = np.maximum(X.min(axis=0) - cell, grid.lo)
        hi = np.minimum(X.max(axis=0) + cell, grid.hi)
        counts = refine if not np.isscalar(refine) else (refine,) * pair.nx
        fine = GridSpec(lo, hi, counts, grid.cap)
        X = np.concatenate([X, sample_predecessors(pair, target, fine, steps)])
    return relative_position(pair, X)


def enumerate_milp_oracle(model: MilpModel) -> SolveResult:
    """Solve ``model`` by fixing every binary assignment and solving the LPs."""
    t0 = time.perf_counter()
    binaries = sorted(model.binaries)
    if len(binaries) > ENUM_CAP:
        raise ResourceExhausted(f"{len(binaries)} binaries exceed the enumeration cap {ENUM_CAP}")
    A, rlo, rhi, c, lb0, ub0 = model.dense()
    stats = SolveStats()
    best = None
    saw_unbounded = False
    for bits in itertools.product((0.0, 1.0), repeat=len(binaries)):
        lb, ub = lb0.copy(), ub0.copy()
        lb[binaries] = ub[binaries] = bits
        res = solve_arrays(A, rlo, rhi, c, lb, ub, stats=stats)
        stats.nodes += 1
        if res.status is Status.UNBOUNDED:
            saw_unbounded = True
        elif res.status is Status.OPTIMAL and (best is None or res.objective_value < best.objective_value):
            best = res
    stats.wall_time = time.perf_counter() - t0
    if saw_unbounded:
        return SolveResult(Status.UNBOUNDED, stats=stats)
    if best is None:
        return SolveResult(Status.INFEASIBLE, stats=stats)
    return SolveResult(Status.OPTIMAL, best.objective_value, best.assignment, stats, best.objective_value)


def rollout_violations(pair: PairSystem, starts, horizon, collision_set=None):
    """Count trajectories that step from outside into the collision set.

    A trajectory stops being followed once it leaves the workspace (the
    safety argument assumes the state stays inside). Returns the number of
    offending start states.
    """
    C = pair.collision_set if collision_set is None else collision_set
    cur = np.asarray(starts, dtype=float)
    alive = pair.in_workspace(cur) & ~contains_points(C, relative_position(pair, cur))
    bad = np.zeros(len(cur), dtype=bool)
    for _ in range(horizon):
        cur = step_pair(pair, cur, warn=False)
        hit = contains_points(C, relative_position(pair, cur))
        bad |= alive & hit
        alive &= ~hit & pair.in_workspace(cur)
        if not alive.any():
            break
    return int(bad.sum())

