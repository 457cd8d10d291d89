"""Dense bounded-variable primal simplex.

The problem solved is::

    min  c'x
    s.t. row_lo <= A x <= row_hi
         lb <= x <= ub

Every row gets a logical variable ``s = A x`` carrying the row bounds, so the
constraint matrix becomes ``[A | -I] (x, s) = 0`` and all constraints are
simple bounds. Phase 1 adds one artificial per row whose logical starts out of
bounds and minimizes their sum. Pricing is Dantzig's rule with a fallback to
Bland's rule when the objective stalls, which rules out cycling. The ratio
test is Harris' two-pass test.

The iteration loop is compiled with numba; the tableau only holds columns
that can move (fixed nonbasic columns enter the basic values only).
"""

from __future__ import annotations

import time

import numba
import numpy as np

from .. import config
from ..errors import NumericalError
from .model import MilpModel, SolveResult, SolveStats, Status

PIVOT_TOL = 1e-9
DUAL_TOL = 1e-9
PRIMAL_TOL = 1e-9
HARRIS_TOL = 1e-10
STALL_LIMIT = 30
REFACTOR_EVERY = 150

_OPTIMAL, _INFEASIBLE, _UNBOUNDED, _ITER_LIMIT, _SINGULAR = 0, 1, 2, 3, 4


@numba.njit(cache=True)
def _basic_values(M, basis, is_basic, x):
    """Recompute basic variable values from the nonbasic ones."""
    m = M.shape[0]
    B = np.empty((m, m))
    for r in range(m):
        B[:, r] = M[:, basis[r]]
    rhs = np.zeros(m)
    for j in range(M.shape[1]):
        if not is_basic[j] and x[j] != 0.0:
            rhs -= M[:, j] * x[j]
    xb = np.linalg.solve(B, rhs)
    for r in range(m):
        x[basis[r]] = xb[r]
    return B


@numba.njit(cache=True)
def _refactor(M, basis, cols, is_basic, x):
    B = _basic_values(M, basis, is_basic, x)
    m = M.shape[0]
    Mc = np.empty((m, cols.size))
    for k in range(cols.size):
        Mc[:, k] = M[:, cols[k]]
    return np.linalg.solve(B, Mc)


@numba.njit(cache=True)
def _reduced_costs(T, cost, basis, cols):
    m = T.shape[0]
    d = np.empty(cols.size)
    for k in range(cols.size):
        d[k] = cost[cols[k]]
    for r in range(m):
        cb = cost[basis[r]]
        if cb != 0.0:
            d -= cb * T[r]
    return d


@numba.njit(cache=True)
def _pivot(T, d, r, q, pos):
    m, ncol = T.shape
    piv = T[r, q]
    nzc = 0
    for k in range(ncol):
        if T[r, k] != 0.0:
            T[r, k] /= piv
            pos[nzc] = k
            nzc += 1
    T[r, q] = 1.0
    for i in range(m):
        if i == r:
            continue
        f = T[i, q]
        if f == 0.0:
            continue
        for t in range(nzc):
            k = pos[t]
            T[i, k] -= f * T[r, k]
        T[i, q] = 0.0
    f = d[q]
    if f != 0.0:
        for t in range(nzc):
            k = pos[t]
            d[k] -= f * T[r, k]
        d[q] = 0.0


@numba.njit(cache=True)
def _run(T, M, x, lo, hi, basis, is_basic, cols, cost, max_iter, counters):
    """Primal simplex from a primal feasible basis; returns a status code.

    ``counters`` = [iterations, pivots] is updated in place. ``T`` may be
    replaced on refactorization, so the caller reads it back from ``out``.
    """
    m = T.shape[0]
    ncol = cols.size
    d = _reduced_costs(T, cost, basis, cols)
    pos = np.empty(ncol, dtype=np.int64)
    lo_c = np.empty(ncol)
    hi_c = np.empty(ncol)
    for k in range(ncol):
        lo_c[k] = lo[cols[k]]
        hi_c[k] = hi[cols[k]]
    alpha = np.empty(m)
    bland = False
    stall = 0
    best_obj = 0.0
    for j in range(x.size):
        best_obj += cost[j] * x[j]
    for _ in range(max_iter):
        # pricing
        q = -1
        best = DUAL_TOL
        for k in range(ncol):
            j = cols[k]
            if is_basic[j] or lo_c[k] == hi_c[k]:
                continue
            xj = x[j]
            dk = d[k]
            if xj <= lo_c[k]:
                g = -dk
            elif xj >= hi_c[k]:
                g = dk
            else:
                g = abs(dk)
            if g > DUAL_TOL:
                if bland:
                    q = k
                    break
                if g > best:
                    best = g
                    q = k
        if q < 0:
            return _OPTIMAL, T
        j = cols[q]
        direction = 1.0 if d[q] < 0.0 else -1.0
        for i in range(m):
            alpha[i] = -direction * T[i, q]

        # ratio test
        r = -1
        theta = np.inf
        if bland:
            for i in range(m):
                a = alpha[i]
                b = basis[i]
                if a > PIVOT_TOL:
                    t = (hi[b] - x[b]) / a
                elif a < -PIVOT_TOL:
                    t = (lo[b] - x[b]) / a
                else:
                    continue
                if t < theta:
                    theta = t
            if theta < 0.0:
                theta = 0.0
            if theta < np.inf:
                for i in range(m):
                    a = alpha[i]
                    b = basis[i]
                    if a > PIVOT_TOL:
                        t = (hi[b] - x[b]) / a
                    elif a < -PIVOT_TOL:
                        t = (lo[b] - x[b]) / a
                    else:
                        continue
                    if t <= theta + HARRIS_TOL and (r < 0 or b < basis[r]):
                        r = i
        else:
            theta_max = np.inf
            for i in range(m):
                a = alpha[i]
                b = basis[i]
                if a > PIVOT_TOL:
                    t = (hi[b] + HARRIS_TOL - x[b]) / a
                elif a < -PIVOT_TOL:
                    t = (lo[b] - HARRIS_TOL - x[b]) / a
                else:
                    continue
                if t < theta_max:
                    theta_max = t
            if theta_max < np.inf:
                big = 0.0
                for i in range(m):
                    a = alpha[i]
                    b = basis[i]
                    if a > PIVOT_TOL:
                        t = (hi[b] - x[b]) / a
                    elif a < -PIVOT_TOL:
                        t = (lo[b] - x[b]) / a
                    else:
                        continue
                    if t <= theta_max and abs(a) > big:
                        big = abs(a)
                        r = i
                        theta = t if t > 0.0 else 0.0

        if direction > 0.0:
            span = hi[j] - x[j]
        else:
            span = x[j] - lo[j]
        counters[0] += 1
        if span <= theta:
            if span == np.inf:
                return _UNBOUNDED, T
            for i in range(m):
                x[basis[i]] += alpha[i] * span
            x[j] = hi[j] if direction > 0.0 else lo[j]
        else:
            if r < 0:
                return _UNBOUNDED, T
            for i in range(m):
                x[basis[i]] += alpha[i] * theta
            x[j] += direction * theta
            leave = basis[r]
            if alpha[r] > 0.0:
                x[leave] = hi[leave]
            else:
                x[leave] = lo[leave]
            _pivot(T, d, r, q, pos)
            basis[r] = j
            is_basic[leave] = False
            is_basic[j] = True
            counters[1] += 1
            if counters[1] % REFACTOR_EVERY == 0:
                T = _refactor(M, basis, cols, is_basic, x)
                d = _reduced_costs(T, cost, basis, cols)
        obj = 0.0
        for jj in range(x.size):
            obj += cost[jj] * x[jj]
        if obj < best_obj - 1e-12 * max(1.0, abs(best_obj)):
            best_obj = obj
            stall = 0
            bland = False
        else:
            stall += 1
            if stall >= STALL_LIMIT:
                bland = True
    return _ITER_LIMIT, T


@numba.njit(cache=True)
def _drive_out(T, basis, is_basic, cols, lo, hi, first_art, pos):
    m = T.shape[0]
    dummy = np.zeros(cols.size)
    for r in range(m):
        if basis[r] < first_art:
            continue
        q = -1
        big = 1e-7
        for k in range(cols.size):
            j = cols[k]
            if is_basic[j] or j >= first_art or lo[j] == hi[j]:
                continue
            if abs(T[r, k]) > big:
                big = abs(T[r, k])
                q = k
        if q < 0:
            continue
        leave = basis[r]
        _pivot(T, dummy, r, q, pos)
        basis[r] = cols[q]
        is_basic[leave] = False
        is_basic[cols[q]] = True


@numba.njit(cache=True)
def _solve(A, rlo, rhi, c, lb, ub, max_iter):
    m, n = A.shape
    counters = np.zeros(2, dtype=np.int64)
    xs = np.empty(n)
    for j in range(n):
        if np.isfinite(lb[j]):
            xs[j] = lb[j]
        elif np.isfinite(ub[j]):
            xs[j] = ub[j]
        else:
            xs[j] = 0.0
    v = A @ xs
    bad = np.zeros(m, dtype=np.bool_)
    target = np.empty(m)
    n_art = 0
    for r in range(m):
        if v[r] < rlo[r] - PRIMAL_TOL:
            bad[r] = True
            target[r] = rlo[r]
            n_art += 1
        elif v[r] > rhi[r] + PRIMAL_TOL:
            bad[r] = True
            target[r] = rhi[r]
            n_art += 1
    N = n + m + n_art
    lo = np.empty(N)
    hi = np.empty(N)
    x = np.zeros(N)
    lo[:n] = lb
    hi[:n] = ub
    lo[n:n + m] = rlo
    hi[n:n + m] = rhi
    lo[n + m:] = 0.0
    hi[n + m:] = np.inf
    x[:n] = xs
    M = np.zeros((m, N))
    M[:, :n] = A
    basis = np.empty(m, dtype=np.int64)
    diag = np.empty(m)
    a_idx = 0
    for r in range(m):
        M[r, n + r] = -1.0
        if bad[r]:
            sig = 1.0 if target[r] > v[r] else -1.0
            col = n + m + a_idx
            M[r, col] = sig
            x[n + r] = target[r]
            x[col] = abs(target[r] - v[r])
            basis[r] = col
            diag[r] = sig
            a_idx += 1
        else:
            x[n + r] = v[r]
            basis[r] = n + r
            diag[r] = -1.0
    is_basic = np.zeros(N, dtype=np.bool_)
    for r in range(m):
        is_basic[basis[r]] = True
    ncols = 0
    for j in range(N):
        if lo[j] < hi[j] or is_basic[j]:
            ncols += 1
    cols = np.empty(ncols, dtype=np.int64)
    k = 0
    for j in range(N):
        if lo[j] < hi[j] or is_basic[j]:
            cols[k] = j
            k += 1
    T = np.empty((m, ncols))
    for k in range(ncols):
        for r in range(m):
            T[r, k] = M[r, cols[k]] / diag[r]

    if n_art > 0:
        cost1 = np.zeros(N)
        cost1[n + m:] = 1.0
        status, T = _run(T, M, x, lo, hi, basis, is_basic, cols, cost1, max_iter, counters)
        if status != _OPTIMAL:
            return status, x[:n].copy(), counters
        _basic_values(M, basis, is_basic, x)
        infeas = 0.0
        scale = 1.0
        for j in range(n + m, N):
            infeas += x[j]
        for r in range(m):
            val = abs(x[n + r])
            if np.isfinite(val) and val > scale:
                scale = val
        if infeas > 1e-9 * scale:
            return _INFEASIBLE, x[:n].copy(), counters
        for j in range(n + m, N):
            hi[j] = 0.0
            x[j] = 0.0
        pos = np.empty(ncols, dtype=np.int64)
        _drive_out(T, basis, is_basic, cols, lo, hi, n + m, pos)
    cost = np.zeros(N)
    cost[:n] = c
    status, T = _run(T, M, x, lo, hi, basis, is_basic, cols, cost, max_iter, counters)
    if status == _OPTIMAL:
        _basic_values(M, basis, is_basic, x)
    return status, x[:n].copy(), counters


def solve_arrays(A, rlo, rhi, c, lb, ub, stats=None, max_iter=None) -> SolveResult:
    """Solve an LP given in dense array form."""
    t0 = time.perf_counter()
    stats = stats if stats is not None else SolveStats()
    A = np.ascontiguousarray(A, dtype=float)
    rlo, rhi, c, lb, ub = (np.ascontiguousarray(v, dtype=float) for v in (rlo, rhi, c, lb, ub))
    m, n = A.shape
    try:
        if np.any(lb > ub) or np.any(rlo > rhi):
            return SolveResult(Status.INFEASIBLE, stats=stats)
        if m == 0:
            return _solve_bounds_only(c, lb, ub, stats)
        max_iter = max_iter or 50 * (m + n) + 1000
        try:
            code, x, counters = _solve(A, rlo, rhi, c, lb, ub, max_iter)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("singular basis", {"m": m, "n": n}) from exc
        stats.lp_iterations += int(counters[0])
        if code == _INFEASIBLE:
            return SolveResult(Status.INFEASIBLE, stats=stats)
        if code == _UNBOUNDED:
            return SolveResult(Status.UNBOUNDED, stats=stats)
        if code == _ITER_LIMIT:
            raise NumericalError("simplex iteration limit reached",
                                 {"iterations": int(counters[0]), "m": m, "n": n})
        viol = _violation(A, rlo, rhi, lb, ub, x)
        if not np.isfinite(viol) or viol > config.EPS_FEAS:
            raise NumericalError("primal infeasibility after solve",
                                 {"violation": float(viol), "m": m, "n": n})
        x = np.clip(x, lb, ub)
        obj = float(c @ x)
        return SolveResult(Status.OPTIMAL, obj, x, stats, obj)
    finally:
        stats.lp_solves += 1
        stats.wall_time += time.perf_counter() - t0


def _solve_bounds_only(c, lb, ub, stats):
    x = np.where(c > 0, lb, np.where(c < 0, ub, np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))))
    if not np.all(np.isfinite(x)):
        return SolveResult(Status.UNBOUNDED, stats=stats)
    obj = float(c @ x)
    return SolveResult(Status.OPTIMAL, obj, x, stats, obj)


def _violation(A, rlo, rhi, lb, ub, x):
    ax = A @ x
    parts = [
        np.maximum(rlo - ax, 0.0),
        np.maximum(ax - rhi, 0.0),
        np.maximum(lb - x, 0.0),
        np.maximum(x - ub, 0.0),
    ]
    return max(p.max(initial=0.0) for p in parts)


def solve_lp(model: MilpModel, lb=None, ub=None, stats=None) -> SolveResult:
    """Solve the LP relaxation of ``model`` (binaries relaxed to [0, 1]).

    ``lb``/``ub`` optionally override the model's variable bounds, which is
    how branch-and-bound fixes binaries without copying the model.
    """
    A, rlo, rhi, c, mlb, mub = model.dense()
    lb = mlb if lb is None else np.asarray(lb, float)
    ub = mub if ub is None else np.asarray(ub, float)
    return solve_arrays(A, rlo, rhi, c, lb, ub, stats=stats)
