"""Relative backprojection over-approximations and the safety checks built on them."""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .dynamics import PairSystem
from .encoder import build_facet_milp, controller_bounds
from .errors import DimensionError, ResourceExhausted
from .lingeo import HalfSpace, HSense, Polytope, facet_directions, polytope_subset
from .opt import Status, solve_arrays, solve_milp

log = logging.getLogger(__name__)


@dataclass
class FacetStat:
    direction: tuple[float, float]
    status: str
    offset: float | None = None
    nodes: int = 0
    lp_iterations: int = 0
    binaries: int = 0
    wall_time: float = 0.0

    def to_dict(self):
        return dict(self.__dict__, direction=list(self.direction))


def compute_rbpoa_with_stats(pair: PairSystem, target: Polytope, n_f: int,
                             node_limit=None, time_limit=None, workspace_rows=()):
    """Like :func:`compute_rbpoa` but also returns one :class:`FacetStat` per facet."""
    directions = facet_directions(n_f)
    if target.empty:
        return Polytope.empty_set(2), []
    bounds = controller_bounds(pair)
    result = Polytope.full(2)
    stats = []
    for a in directions:
        t0 = time.perf_counter()
        model, layout = build_facet_milp(pair, target, a, bounds, workspace_rows)
        stat = FacetStat(tuple(float(v) for v in a), "", binaries=len(layout.binaries))
        stats.append(stat)
        try:
            res = solve_milp(model, node_limit=node_limit, time_limit=time_limit)
        except ResourceExhausted as exc:
            # dropping the facet keeps a (looser) over-approximation
            log.warning("facet %s dropped: %s", stat.direction, exc)
            stat.status = "RESOURCE_EXHAUSTED"
            stat.wall_time = time.perf_counter() - t0
            continue
        stat.nodes = res.stats.nodes
        stat.lp_iterations = res.stats.lp_iterations
        stat.wall_time = time.perf_counter() - t0
        stat.status = res.status.value
        if res.status is Status.INFEASIBLE:
            # the feasible set does not depend on the direction: no predecessor at all
            return Polytope.empty_set(2), stats
        if res.status is Status.UNBOUNDED:
            log.warning("facet %s unbounded; dropped", stat.direction)
            continue
        stat.offset = res.bound
        result = result.intersect(HalfSpace(a, res.bound, HSense.GE))
    return result, stats


def compute_rbpoa(pair: PairSystem, target: Polytope, n_f: int, **kwargs) -> Polytope:
    """Polytope with ``n_f`` facets containing every state that steps into ``target``.

    For each facet direction ``a`` the facet MILP's proven lower bound ``b``
    yields the half-space ``a . p >= b``. An infeasible facet problem means
    the backprojection is empty. A facet whose solve exceeds its budget is
    dropped, so the result stays an over-approximation.
    """
    return compute_rbpoa_with_stats(pair, target, n_f, **kwargs)[0]


@dataclass
class RbpoaSequence:
    """``steps[0]`` is the collision set, ``steps[k]`` the k-step over-approximation."""

    steps: list[Polytope]
    facet_count: int
    stats: list[list[FacetStat]] = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return len(self.steps) - 1

    def to_dict(self):
        return {
            "facet_count": self.facet_count,
            "steps": [s.to_dict() for s in self.steps],
            "stats": [[f.to_dict() for f in step] for step in self.stats],
        }

    @classmethod
    def from_dict(cls, data):
        stats = [[FacetStat(**dict(f, direction=tuple(f["direction"]))) for f in step]
                 for step in data.get("stats", [])]
        return cls([Polytope.from_dict(s) for s in data["steps"]], int(data["facet_count"]), stats)


def compute_rbpoa_sequence(pair: PairSystem, tau: int, n_f: int, **kwargs) -> RbpoaSequence:
    """Backproject the collision set ``tau`` times, each step targeting the previous one."""
    if tau < 1:
        raise ValueError("horizon must be at least 1")
    seq = RbpoaSequence([pair.collision_set], n_f)
    for k in range(1, tau + 1):
        prev = seq.steps[-1]
        if prev.empty:
            seq.steps.append(prev)
            seq.stats.append([])
            continue
        poly, stats = compute_rbpoa_with_stats(pair, prev, n_f, **kwargs)
        log.info("step %d: %s", k, "empty" if poly.empty else f"{len(poly.halfspaces)} facets")
        seq.steps.append(poly)
        seq.stats.append(stats)
    return seq


def check_verified_safe(rbpoa: Polytope, collision_set: Polytope, relpos_box) -> bool:
    """True when the one-step over-approximation lies inside the collision set.

    Then no relative position outside the collision set can step into it.
    """
    return polytope_subset(rbpoa, collision_set, relpos_box)


class OnlineVerdict(str, enum.Enum):
    SAFE = "SAFE"
    UNKNOWN = "UNKNOWN"


@dataclass(frozen=True, eq=False)
class Workspace:
    """State box of a pair plus the map from pair state to relative position.

    This is everything the online check needs, so reports can carry it and
    skip re-reading the scenario.
    """

    state_lo: np.ndarray
    state_hi: np.ndarray
    relpos_matrix: np.ndarray
    # extra rows (coeffs over X, "LE"/"GE"/"EQ", rhs)
    rows: tuple = ()

    @classmethod
    def of(cls, pair: PairSystem, rows=()) -> Workspace:
        return cls(pair.state_lo, pair.state_hi, pair.relpos_matrix, tuple(rows))

    def to_dict(self):
        return {
            "state_lo": self.state_lo.tolist(),
            "state_hi": self.state_hi.tolist(),
            "relpos_matrix": self.relpos_matrix.tolist(),
            "rows": [[list(map(float, c)), s, float(r)] for c, s, r in self.rows],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(np.array(data["state_lo"], dtype=float), np.array(data["state_hi"], dtype=float),
                   np.array(data["relpos_matrix"], dtype=float),
                   tuple((c, s, r) for c, s, r in data.get("rows", [])))


def _feasibility_arrays(workspace: Workspace, uncertainty: Polytope):
    nx = workspace.state_lo.size
    R = workspace.relpos_matrix
    if R.shape != (2, nx):
        raise DimensionError("relative-position map does not match the state box")
    if uncertainty.dim != 2:
        raise DimensionError("uncertainty polytope must be 2-D")
    # variables [X (nx), p (2)]
    rows, lo, hi = [], [], []
    for r in range(2):
        row = np.zeros(nx + 2)
        row[:nx] = -R[r]
        row[nx + r] = 1.0
        rows.append(row)
        lo.append(0.0)
        hi.append(0.0)
    for coeffs, sense, rhs in workspace.rows:
        row = np.zeros(nx + 2)
        row[:nx] = coeffs
        rows.append(row)
        lo.append(-np.inf if sense == "LE" else rhs)
        hi.append(np.inf if sense == "GE" else rhs)
    Au, bu = uncertainty.le_form()
    for a, b in zip(Au, bu):
        row = np.zeros(nx + 2)
        row[nx:] = a
        rows.append(row)
        lo.append(-np.inf)
        hi.append(b)
    return np.array(rows), np.array(lo), np.array(hi)


def online_check(rbpoa_steps, uncertainty: Polytope, workspace: Workspace) -> OnlineVerdict:
    """Decide whether every state consistent with the measurement is certified safe.

    ``uncertainty`` is the measured region of the relative position, given
    as ``A p <= b`` rows. For each over-approximation step one feasibility LP
    asks whether some workspace state inside the uncertainty region falls in
    that step's set. All infeasible gives SAFE; otherwise UNKNOWN, which is
    not a collision claim.
    """
    steps = list(rbpoa_steps)
    if not steps:
        raise ValueError("need at least one over-approximation step")
    if uncertainty.empty:
        return OnlineVerdict.SAFE
    base_A, base_lo, base_hi = _feasibility_arrays(workspace, uncertainty)
    nx = workspace.state_lo.size
    lb = np.concatenate([workspace.state_lo, [-np.inf, -np.inf]])
    ub = np.concatenate([workspace.state_hi, [np.inf, np.inf]])
    c = np.zeros(nx + 2)
    for step in steps:
        if step.dim != 2:
            raise DimensionError("over-approximation steps must be 2-D")
        if step.empty:
            continue
        Ap, bp = step.le_form()
        extra = np.zeros((len(bp), nx + 2))
        extra[:, nx:] = Ap
        A = np.vstack([base_A, extra])
        lo = np.concatenate([base_lo, np.full(len(bp), -np.inf)])
        hi = np.concatenate([base_hi, bp])
        res = solve_arrays(A, lo, hi, c, lb, ub)
        if res.status is not Status.INFEASIBLE:
            return OnlineVerdict.UNKNOWN
    return OnlineVerdict.SAFE


def uncertainty_box(center, radius) -> Polytope:
    center = np.asarray(center, dtype=float)
    r = np.broadcast_to(np.asarray(radius, dtype=float), center.shape)
    return Polytope.box(center - r, center + r)

