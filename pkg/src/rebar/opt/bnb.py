"""Depth-first branch-and-bound over LP relaxations."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from .. import config
from ..errors import ResourceExhausted
from .model import MilpModel, SolveResult, SolveStats, Status
from .simplex import solve_arrays

log = logging.getLogger(__name__)


@dataclass
class _Node:
    lb: np.ndarray
    ub: np.ndarray
    result: SolveResult
    depth: int


def _most_fractional(x, binaries):
    frac = np.abs(x[binaries] - np.round(x[binaries]))
    k = int(np.argmax(frac))
    if frac[k] <= config.EPS_INT:
        return None
    # argmax returns the first maximum, i.e. the smallest variable index on ties
    return int(binaries[k])


def solve_milp(model: MilpModel, node_limit=None, time_limit=None) -> SolveResult:
    """Solve ``model`` to optimality within an absolute gap of ``config.DELTA_GAP``.

    Nodes are explored depth-first. When a node is branched both children are
    solved immediately and the child with the better (lower) relaxation bound
    is explored first. ``SolveResult.bound`` is a proven lower bound on the
    optimum, never more than the gap below ``objective_value``.

    Raises ResourceExhausted when ``node_limit`` nodes (default
    ``config.NODE_LIMIT``) or ``time_limit`` seconds are exceeded.
    """
    t0 = time.perf_counter()
    node_limit = config.NODE_LIMIT if node_limit is None else node_limit
    model.validate()
    A, rlo, rhi, c, lb0, ub0 = model.dense()
    binaries = np.array(sorted(model.binaries), dtype=int)
    stats = SolveStats()

    def relax(lb, ub):
        return solve_arrays(A, rlo, rhi, c, lb, ub, stats=stats)

    def finish(result):
        stats.wall_time = time.perf_counter() - t0
        result.stats = stats
        return result

    root = relax(lb0, ub0)
    stats.nodes = 1
    if root.status is not Status.OPTIMAL or binaries.size == 0:
        return finish(root)

    gap = config.DELTA_GAP
    incumbent = math.inf
    best_x = None
    # smallest relaxation bound among subtrees discarded by the gap test
    pruned_bound = math.inf
    stack = [_Node(lb0.copy(), ub0.copy(), root, 0)]

    while stack:
        node = stack.pop()
        bound = node.result.objective_value
        if bound >= incumbent - gap:
            pruned_bound = min(pruned_bound, bound)
            continue
        x = node.result.assignment
        k = _most_fractional(x, binaries)
        if k is None:
            incumbent = bound
            best_x = x.copy()
            best_x[binaries] = np.round(best_x[binaries])
            continue

        children = []
        for fix in (0.0, 1.0):
            lb, ub = node.lb.copy(), node.ub.copy()
            lb[k] = ub[k] = fix
            if stats.nodes >= node_limit:
                raise ResourceExhausted(f"branch-and-bound node limit {node_limit} exceeded")
            if time_limit is not None and time.perf_counter() - t0 > time_limit:
                raise ResourceExhausted(f"branch-and-bound time limit {time_limit}s exceeded")
            res = relax(lb, ub)
            stats.nodes += 1
            if res.status is Status.OPTIMAL:
                children.append(_Node(lb, ub, res, node.depth + 1))
        # worse child first so the better one is popped next
        children.sort(key=lambda nd: -nd.result.objective_value)
        stack.extend(children)

    if best_x is None:
        return finish(SolveResult(Status.INFEASIBLE))
    log.debug("B&B done: %d nodes, %d LP iterations", stats.nodes, stats.lp_iterations)
    lower = min(incumbent, pruned_bound)
    return finish(SolveResult(Status.OPTIMAL, incumbent, best_x, bound=lower))
