"""Command-line entry point: ``rebar verify|check|plot|oracle|bench|demo``.

Exit codes: 0 safe or success, 1 not verified / unknown / soundness
violation, 2 usage, input or internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from .backproject import OnlineVerdict, compute_rbpoa_sequence, compute_rbpoa_with_stats, online_check
from .encoder import build_facet_milp
from .errors import RebarError
from .lingeo import Polytope, facet_directions, violations
from .multiagent import SafetyReport, SystemVerdict, verify_multiagent
from .network import affine_interval
from .oracle import ENUM_CAP, GridSpec, enumerate_milp_oracle, sample_rbpua
from .opt import Status, solve_milp
from .plot import render_svg, view_for
from .scenario import Scenario, load_scenario, save_scenario
from .testbeds import UNIT_SQUARE, gain_system, random_pair

log = logging.getLogger("rebar")

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2
LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}
SOUNDNESS_SLACK = 1e-6


class UsageError(RebarError):
    pass


def _setup_logging():
    level = os.environ.get("REBAR_LOG", "warn").lower()
    logging.basicConfig(level=LOG_LEVELS.get(level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: not valid JSON ({exc})") from exc


def _load_report(path) -> SafetyReport:
    data = _read_json(path)
    try:
        return SafetyReport.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: not a safety report ({exc})") from exc


def _selected_pairs(report: SafetyReport, pair):
    if pair is None:
        return list(report.pairs)
    try:
        return [report.pair(*pair)]
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc


# -- verify -------------------------------------------------------------------

def cmd_verify(args) -> int:
    scen = load_scenario(args.scenario)
    tau = args.tau or scen.tau
    n_f = args.facets or scen.n_f
    report = verify_multiagent(scen.system, tau=tau, n_f=n_f, workers=args.workers,
                               node_limit=args.node_limit, time_limit=args.time_limit)
    for p in report.pairs:
        state = "ERROR" if p.error else ("VERIFIED_SAFE" if p.verified else "NOT_VERIFIED")
        print(f"pair {p.i} {p.j}: {state} ({p.wall_time:.2f}s)")
        if p.error:
            print(f"  {p.error.splitlines()[0]}", file=sys.stderr)
    print(f"{len(report.pairs)} pair jobs, {report.total_time:.2f}s on {args.workers} worker(s)")
    print(f"verdict: {report.verdict.value}")
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_dict(), indent=1) + "\n")
    if any(p.error for p in report.pairs):
        return EXIT_ERROR
    return EXIT_OK if report.verdict is SystemVerdict.VERIFIED_SAFE else EXIT_FAIL


# -- check --------------------------------------------------------------------

def _uncertainty_for(data, i, j) -> Polytope:
    """An uncertainty file is either one polytope or ``{"pairs": [{"pair", "polytope"}]}``."""
    if "pairs" not in data:
        return Polytope.from_dict(data)
    for entry in data["pairs"]:
        if tuple(entry["pair"]) == (i, j):
            return Polytope.from_dict(entry["polytope"])
    raise UsageError(f"no uncertainty polytope for pair {(i, j)}")


def cmd_check(args) -> int:
    report = _load_report(args.report)
    unc = _read_json(args.uncertainty)
    pairs = _selected_pairs(report, args.pair)
    all_safe = True
    latencies = []
    for p in pairs:
        if p.sequence is None or p.workspace is None:
            raise UsageError(f"report has no over-approximation for pair {(p.i, p.j)}")
        U = _uncertainty_for(unc, p.i, p.j)
        steps = p.sequence.steps[1:]
        per_step = [online_check([s], U, p.workspace) for s in steps]
        for _ in range(args.trials):
            t0 = time.perf_counter()
            verdict = online_check(steps, U, p.workspace)
            latencies.append(time.perf_counter() - t0)
        if not args.trials:
            verdict = online_check(steps, U, p.workspace)
        all_safe &= verdict is OnlineVerdict.SAFE
        detail = " ".join(f"k={k}:{v.value}" for k, v in enumerate(per_step, start=1))
        print(f"pair {p.i} {p.j}: {verdict.value} [{detail}]")
    if latencies:
        ms = np.array(latencies) * 1e3
        q = np.percentile(ms, [50, 90, 99])
        print(f"latency over {len(ms)} checks: p50 {q[0]:.3f} ms, p90 {q[1]:.3f} ms, "
              f"p99 {q[2]:.3f} ms, max {ms.max():.3f} ms")
    return EXIT_OK if all_safe else EXIT_FAIL


# -- plot ---------------------------------------------------------------------

def _read_points(path):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)  # header-only file
        pts = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if pts.size and pts.shape[1] != 2:
        raise UsageError(f"{path}: expected two columns px,py")
    return pts.reshape(-1, 2)


def write_points(path, pts):
    np.savetxt(path, np.asarray(pts).reshape(-1, 2), delimiter=",", header="px,py",
               comments="", fmt="%.9g")


def cmd_plot(args) -> int:
    report = _load_report(args.report)
    if not report.pairs:
        raise UsageError("report contains no pairs")
    p = _selected_pairs(report, args.pair or (report.pairs[0].i, report.pairs[0].j))[0]
    if p.sequence is None:
        raise UsageError(f"report has no over-approximation for pair {(p.i, p.j)}")
    pts = _read_points(args.rbpua) if args.rbpua else np.zeros((0, 2))
    box = None
    if p.workspace is not None:
        box = affine_interval(p.workspace.relpos_matrix, np.zeros(2),
                              p.workspace.state_lo, p.workspace.state_hi)
    steps = p.sequence.steps
    view = view_for(steps, pts, box)
    svg = render_svg(steps[0], steps[1:], pts, view, title=f"pair {p.i} {p.j}")
    Path(args.out).write_text(svg)
    print(f"wrote {args.out}")
    return EXIT_OK


# -- oracle -------------------------------------------------------------------

def cmd_oracle(args) -> int:
    scen = load_scenario(args.scenario)
    i, j = args.pair or (0, 1)
    pair = scen.system.pair(i, j)
    tau = args.tau or scen.tau
    n_f = scen.n_f
    per_dim = args.per_dim or scen.grid.get("per_dim", 5)
    refine = args.refine or scen.grid.get("refine")
    grid = GridSpec.over(pair, per_dim, scen.grid.get("cap"))
    seq = compute_rbpoa_sequence(pair, tau, n_f, workspace_rows=scen.system.workspace_rows)
    ok = True
    first = None
    for k in range(1, tau + 1):
        pts = sample_rbpua(pair, pair.collision_set, grid, steps=k, refine=refine)
        v = violations(seq.steps[k], pts)
        viol = float(v.max()) if len(v) else 0.0
        bad = int(np.sum(v > SOUNDNESS_SLACK))
        ok &= bad == 0
        print(f"step {k}: {len(pts)} sampled predecessors, {bad} outside the over-approximation "
              f"(max violation {viol:.3g})")
        if k == 1:
            first = pts
    if args.rbpua_out:
        write_points(args.rbpua_out, first)
    # MILP solver against brute force on the first facet problem
    model, layout = build_facet_milp(pair, pair.collision_set, facet_directions(n_f)[0],
                                     workspace_rows=scen.system.workspace_rows)
    nb = len(layout.binaries)
    if nb <= ENUM_CAP:
        got, ref = solve_milp(model), enumerate_milp_oracle(model)
        agree = got.status == ref.status and (
            got.status is not Status.OPTIMAL
            or abs(got.objective_value - ref.objective_value) <= 1e-6 * max(1.0, abs(ref.objective_value)))
        ok &= agree
        print(f"facet MILP ({nb} binaries): branch-and-bound {got.status.value} "
              f"{got.objective_value}, enumeration {ref.status.value} {ref.objective_value}: "
              f"{'agree' if agree else 'DISAGREE'}")
    else:
        print(f"facet MILP has {nb} binaries; enumeration skipped (cap {ENUM_CAP})")
    print("oracle: " + ("PASS" if ok else "FAIL"))
    return EXIT_OK if ok else EXIT_FAIL


# -- bench / demo -------------------------------------------------------------

def cmd_bench(args) -> int:
    rng = np.random.default_rng(args.seed)
    pair = random_pair(rng, hidden=tuple(args.hidden))
    poly, stats = compute_rbpoa_with_stats(pair, pair.collision_set, args.facets,
                                           time_limit=args.time_limit)
    for s in stats:
        print(f"facet ({s.direction[0]:+.3f},{s.direction[1]:+.3f}): {s.status} "
              f"offset {s.offset} nodes {s.nodes} binaries {s.binaries} {s.wall_time:.2f}s")
    done = sum(s.status == Status.OPTIMAL.value for s in stats)
    print(f"{done}/{len(stats)} facets solved, total {sum(s.wall_time for s in stats):.1f}s")
    return EXIT_OK if done == len(stats) else EXIT_FAIL


def demo_scenario() -> Scenario:
    """Two single integrators that steer apart; safe, with shrinking backprojections."""
    return Scenario(gain_system([-1.0, -1.0], collision=UNIT_SQUARE), n_f=8, tau=2,
                    grid={"per_dim": 17})


def cmd_demo(args) -> int:
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    save_scenario(demo_scenario(), out / "scenario.json")
    print(f"wrote {out / 'scenario.json'}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def _pair(parser):
    parser.add_argument("--pair", nargs=2, type=int, metavar=("I", "J"), default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rebar", description=(
        "Pairwise collision-safety verification of agents with ReLU network controllers."))
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="over-approximate every pair's backprojection and decide safety")
    p.add_argument("scenario")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--tau", type=int, default=None, help="horizon (default: scenario's)")
    p.add_argument("--facets", type=int, default=None, help="facet count (default: scenario's)")
    p.add_argument("--node-limit", type=int, default=None)
    p.add_argument("--time-limit", type=float, default=None, help="seconds per facet MILP")
    p.add_argument("--out", default=None, help="write the safety report JSON here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("check", help="online check of measured relative positions against a report")
    p.add_argument("report")
    p.add_argument("--uncertainty", required=True, help="JSON polytope (or per-pair list)")
    _pair(p)
    p.add_argument("--trials", type=int, default=1, help="repeat each check to time it")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("plot", help="SVG of collision set, over-approximations and samples")
    p.add_argument("report")
    p.add_argument("--rbpua", default=None, help="CSV of sampled relative positions")
    _pair(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("oracle", help="compare against grid sampling and brute-force MILP solving")
    p.add_argument("scenario")
    _pair(p)
    p.add_argument("--tau", type=int, default=None)
    p.add_argument("--per-dim", type=int, default=None, help="grid points per state dimension")
    p.add_argument("--refine", type=int, default=None, help="second-pass points per dimension")
    p.add_argument("--rbpua-out", default=None, help="write one-step samples as CSV")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="time the facet problems of a random pair")
    p.add_argument("--hidden", type=int, nargs="+", default=[20, 20])
    p.add_argument("--facets", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--time-limit", type=float, default=225.0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("demo", help="write the bundled demo scenario")
    p.add_argument("outdir")
    p.set_defaults(func=cmd_demo)
    return ap


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RebarError, OSError, ValueError, KeyError) as exc:
        print(f"rebar {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
