"""Acceptance criteria, one test each.

Every test prints a single ``[ACCEPTANCE n] ...: PASS|FAIL`` line (visible
even without ``-s``) and then asserts the criterion. Run with::

    pytest tests/test_acceptance.py -v
"""

import os
import time

import numpy as np
import pytest

from rebar.backproject import (
    OnlineVerdict,
    Workspace,
    check_verified_safe,
    compute_rbpoa,
    compute_rbpoa_sequence,
    compute_rbpoa_with_stats,
    online_check,
    uncertainty_box,
)
from rebar.encoder import build_facet_milp
from rebar.lingeo import Polytope, contains_points, facet_directions, violations
from rebar.multiagent import verify_multiagent
from rebar.opt import Status, solve_milp
from rebar.oracle import GridSpec, enumerate_milp_oracle, rollout_violations, sample_rbpua
from rebar.testbeds import (
    UNIT_SQUARE,
    gain_pair,
    gain_system,
    pushing_pair,
    random_pair,
    random_system,
    repulsive_pair,
    static_pair,
)

from .oracles import random_milp

SLACK = 1e-6
SOUNDNESS_GRID = 7  # points per state dimension: 7^8 ~ 5.8M grid states per pair


@pytest.fixture
def record(capsys):
    def emit(n, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n[ACCEPTANCE {n}] {title}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else ""))
    return emit


def _soundness_pairs():
    """The randomized pair scenarios: two double integrators, two hidden layers of 2..5 units."""
    rng = np.random.default_rng(20240607)
    out = []
    for _ in range(50):
        hidden = tuple(int(h) for h in rng.integers(2, 6, size=2))
        out.append(random_pair(rng, hidden=hidden, scale=float(rng.uniform(0.5, 1.5))))
    return out


@pytest.fixture(scope="module")
def soundness_runs():
    runs = []
    for pair in _soundness_pairs():
        t0 = time.perf_counter()
        P = compute_rbpoa(pair, pair.collision_set, 8)
        pts = sample_rbpua(pair, pair.collision_set, GridSpec.over(pair, SOUNDNESS_GRID))
        runs.append((pair, P, pts, time.perf_counter() - t0))
    return runs


def test_1_soundness_suite(soundness_runs, record):
    worst, failures, sampled = 0.0, 0, 0
    for _, P, pts, _ in soundness_runs:
        v = violations(P, pts)
        sampled += len(pts)
        if len(v):
            worst = max(worst, float(v.max()))
            failures += bool(v.max() > SLACK)
    elapsed = sum(r[3] for r in soundness_runs)
    ok = failures == 0 and elapsed <= 15 * 60
    record(1, "soundness suite, 50 random pairs, n_f=8", ok,
           f"{failures} failing scenarios, {sampled} sampled predecessors, max violation {worst:.2g}, "
           f"{elapsed:.0f}s")
    assert failures == 0
    assert elapsed <= 15 * 60


def _facet_milps(rng, count):
    """Facet problems of small random pairs (at most 12 ReLU binaries)."""
    out = []
    while len(out) < count:
        pair = random_pair(rng, hidden=(3, 3))
        for a in facet_directions(8)[: int(rng.integers(1, 4))]:
            model, layout = build_facet_milp(pair, pair.collision_set, a)
            if len(layout.binaries) <= 12:
                out.append(model)
    return out[:count]


def test_2_milp_correctness(record):
    rng = np.random.default_rng(7)
    models = [random_milp(rng, int(rng.integers(1, 13))) for _ in range(70)] + _facet_milps(rng, 30)
    t0 = time.perf_counter()
    mismatches, statuses = [], {}
    for k, m in enumerate(models):
        got, ref = solve_milp(m), enumerate_milp_oracle(m)
        statuses[ref.status.value] = statuses.get(ref.status.value, 0) + 1
        if got.status != ref.status:
            mismatches.append((k, "status"))
        elif ref.status is Status.OPTIMAL and abs(got.objective_value - ref.objective_value) > 1e-6:
            mismatches.append((k, got.objective_value - ref.objective_value))
    elapsed = time.perf_counter() - t0
    ok = not mismatches and elapsed <= 300
    record(2, "MILP vs enumeration, 100 instances", ok, f"statuses {statuses}, {len(mismatches)} mismatches, {elapsed:.1f}s")
    assert not mismatches
    assert elapsed <= 300


def test_3_static_exactness(record):
    t0 = time.perf_counter()
    pair = static_pair()
    P = compute_rbpoa(pair, UNIT_SQUARE, 4)
    offsets = np.array([h.offset for h in P.halfspaces])
    exact = np.allclose(offsets, -1.0, atol=1e-6, rtol=0)
    safe = check_verified_safe(P, UNIT_SQUARE, pair.relpos_box())
    seq = compute_rbpoa_sequence(pair, 5, 4)
    squares = len(seq.steps) == 6 and all(
        np.allclose([h.offset for h in s.halfspaces], -1.0, atol=1e-6, rtol=0) for s in seq.steps[1:])
    elapsed = time.perf_counter() - t0
    ok = exact and safe and squares and elapsed <= 1.0
    record(3, "static exactness fixture", ok, f"offsets {offsets.round(9).tolist()}, {elapsed * 1e3:.0f} ms")
    assert exact and safe and squares
    assert elapsed <= 1.0


def test_4_multistep_soundness(record):
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    failures, counts = 0, []
    for s in range(20):
        pair = random_pair(rng, hidden=(4, 4))
        seq = compute_rbpoa_sequence(pair, 3, 8)
        grid = GridSpec.over(pair, 6)
        for k in (1, 2, 3):
            pts = sample_rbpua(pair, pair.collision_set, grid, steps=k)
            counts.append(len(pts))
            v = violations(seq.steps[k], pts)
            failures += bool(len(v) and v.max() > SLACK)
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and elapsed <= 600
    record(4, "multi-step soundness, 20 pairs, k<=3", ok,
           f"{failures} failing (scenario, k), {sum(counts)} sampled predecessors, {elapsed:.0f}s")
    assert failures == 0
    assert elapsed <= 600


def test_5_online_check(record):
    pair = repulsive_pair()
    seq = compute_rbpoa_sequence(pair, 8, 8)
    steps = seq.steps[1:]
    total = sum(len(s.halfspaces) for s in steps)
    ws = Workspace.of(pair)
    rng = np.random.default_rng(5)
    lo, hi = pair.relpos_box()
    lat, safe_cases = [], []
    for _ in range(1000):
        c, r = rng.uniform(lo, hi), float(rng.uniform(0.02, 0.5))
        U = uncertainty_box(c, r)
        t0 = time.perf_counter()
        verdict = online_check(steps, U, ws)
        lat.append(time.perf_counter() - t0)
        if verdict is OnlineVerdict.SAFE:
            safe_cases.append((U, c, r))
    # brute force: relative positions reachable from the workspace box form the relpos box here
    contradicted = 0
    for U, c, r in safe_cases[:50]:
        pts = rng.uniform(c - r, c + r, size=(10_000, 2))
        pts = pts[contains_points(U, pts) & np.all((pts >= lo) & (pts <= hi), axis=1)]
        contradicted += sum(int(contains_points(S, pts).any()) for S in steps)
    med = float(np.median(lat)) * 1e3
    ok = total <= 64 and med <= 10.0 and contradicted == 0 and len(safe_cases) > 0
    record(5, "online check latency and one-sidedness", ok,
           f"{total} half-spaces, median {med:.2f} ms, p99 {np.percentile(lat, 99) * 1e3:.2f} ms, "
           f"{len(safe_cases)} SAFE verdicts, {contradicted} contradicted")
    assert total <= 64 and len(safe_cases) > 0
    assert med <= 10.0
    assert contradicted == 0


@pytest.mark.slow
def test_6_offline_runtime_20x20(record):
    pair = random_pair(np.random.default_rng(0), hidden=(20, 20), zoh=False)
    t0 = time.perf_counter()
    P, stats = compute_rbpoa_with_stats(pair, pair.collision_set, 8, time_limit=225.0)
    elapsed = time.perf_counter() - t0
    done = sum(s.status == Status.OPTIMAL.value for s in stats)
    pts = sample_rbpua(pair, pair.collision_set, GridSpec.over(pair, SOUNDNESS_GRID))
    v = violations(P, pts)
    worst = float(v.max()) if len(v) else 0.0
    ok = done >= 6 and elapsed <= 1800 and worst <= SLACK
    record(6, "[20,20] random pair offline", ok,
           f"{done}/8 facets solved, slowest {max(s.wall_time for s in stats):.1f}s, total {elapsed:.0f}s, "
           f"{len(pts)} sampled predecessors, max violation {worst:.2g}")
    assert done >= 6
    assert elapsed <= 1800
    assert worst <= SLACK


@pytest.mark.slow
def test_7_multiagent_scaling(record):
    system = random_system(10, np.random.default_rng(10), hidden=(4, 4))
    t0 = time.perf_counter()
    one = verify_multiagent(system, n_f=8, workers=1)
    t1 = time.perf_counter()
    four = verify_multiagent(system, n_f=8, workers=4)
    t2 = time.perf_counter()
    ratio = (t2 - t1) / (t1 - t0)
    # compare results, not the per-facet timings stored next to them
    same = one.verdict == four.verdict and [(p.i, p.j, p.verified, p.to_dict()["rbpoa"]["steps"]) for p in one.pairs] == \
        [(p.i, p.j, p.verified, p.to_dict()["rbpoa"]["steps"]) for p in four.pairs]
    jobs = len(one.pairs)
    ok = jobs == 45 and same and ratio <= 0.6
    record(7, "10-agent scaling", ok,
           f"{jobs} pair jobs, 1 worker {t1 - t0:.1f}s, 4 workers {t2 - t1:.1f}s, ratio {ratio:.2f}, "
           f"identical verdict {same}, {os.cpu_count()} CPU(s)")
    assert jobs == 45 and same
    assert ratio <= 0.6


def _verified_fixture_pairs():
    pairs = [("static", static_pair()), ("repulsive", repulsive_pair()), ("pushing", pushing_pair()),
             ("repulsive-weak", gain_pair(-0.5))]
    system = gain_system([-3.0, 1.0, 1.0])
    pairs += [(f"gain3 {i}{j}", system.pair(i, j)) for i, j in ((0, 1), (0, 2))]
    return pairs


def _non_colliding_starts(pair, rng, n):
    out = np.zeros((0, pair.nx))
    while len(out) < n:
        X = rng.uniform(pair.state_lo, pair.state_hi, size=(2 * n, pair.nx))
        p = X @ pair.relpos_matrix.T
        out = np.concatenate([out, X[~contains_points(pair.collision_set, p)]])
    return out[:n]


def test_8_verified_safe_rollouts(soundness_runs, record):
    rng = np.random.default_rng(8)
    candidates = [(f"random {k}", pair, P) for k, (pair, P, _, _) in enumerate(soundness_runs)]
    candidates += [(name, pair, compute_rbpoa(pair, pair.collision_set, 8)) for name, pair in _verified_fixture_pairs()]
    checked, hits = [], 0
    for name, pair, P in candidates:
        if not check_verified_safe(P, pair.collision_set, pair.relpos_box()):
            continue
        starts = _non_colliding_starts(pair, rng, 10_000)
        bad = rollout_violations(pair, starts, 100)
        hits += bad
        checked.append(name)
    ok = hits == 0 and len(checked) > 0
    record(8, "verified-safe rollouts", ok,
           f"{len(checked)} verified-safe scenarios x 10^4 starts x 100 steps, {hits} violations; "
           f"scenarios: {', '.join(checked)}")
    assert checked
    assert hits == 0
