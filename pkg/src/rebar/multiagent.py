"""Pairwise verification of n-agent systems, run in parallel across pairs."""

from __future__ import annotations

import enum
import logging
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

from .backproject import RbpoaSequence, Workspace, check_verified_safe, compute_rbpoa_sequence
from .dynamics import AgentModel, PairSystem
from .lingeo import Polytope

log = logging.getLogger(__name__)

ASSUMPTION = ("Safety verdicts assume every agent's state stays inside its workspace box; "
              "workspace invariance is not itself verified.")


class SystemVerdict(str, enum.Enum):
    VERIFIED_SAFE = "VERIFIED_SAFE"
    NOT_VERIFIED = "NOT_VERIFIED"


@dataclass
class MultiAgentSystem:
    """Agents plus a collision set per unordered pair ``(i, j)``, ``i < j``.

    ``default_collision`` is used for pairs without an explicit entry.
    """

    agents: list[AgentModel]
    collision_sets: dict[tuple[int, int], Polytope] = field(default_factory=dict)
    default_collision: Polytope | None = None
    workspace_rows: tuple = ()

    @property
    def n(self) -> int:
        return len(self.agents)

    def pairs(self) -> list[tuple[int, int]]:
        return list(combinations(range(self.n), 2))

    def collision_set(self, i, j) -> Polytope:
        if (i, j) in self.collision_sets:
            return self.collision_sets[(i, j)]
        if (j, i) in self.collision_sets:
            # the set of j seen from i mirrors the set of i seen from j
            return PairSystem(self.agents[j], self.agents[i], self.collision_sets[(j, i)]).swapped().collision_set
        if self.default_collision is None:
            raise KeyError(f"no collision set for pair {(i, j)}")
        return self.default_collision

    def pair(self, i, j) -> PairSystem:
        return PairSystem(self.agents[i], self.agents[j], self.collision_set(i, j), (i, j))


@dataclass
class PairReport:
    i: int
    j: int
    sequence: RbpoaSequence | None
    verified: bool
    wall_time: float
    workspace: Workspace | None = None
    error: str | None = None

    def to_dict(self):
        return {
            "pair": [self.i, self.j],
            "verified": self.verified,
            "wall_time": self.wall_time,
            "error": self.error,
            "rbpoa": None if self.sequence is None else self.sequence.to_dict(),
            "workspace": None if self.workspace is None else self.workspace.to_dict(),
        }

    @classmethod
    def from_dict(cls, data):
        seq = data.get("rbpoa")
        ws = data.get("workspace")
        return cls(int(data["pair"][0]), int(data["pair"][1]),
                   None if seq is None else RbpoaSequence.from_dict(seq),
                   bool(data["verified"]), float(data.get("wall_time", 0.0)),
                   None if ws is None else Workspace.from_dict(ws), data.get("error"))


@dataclass
class SafetyReport:
    n_agents: int
    pairs: list[PairReport]
    verdict: SystemVerdict
    total_time: float = 0.0
    workers: int = 1
    assumptions: tuple[str, ...] = (ASSUMPTION,)

    def pair(self, i, j) -> PairReport:
        for p in self.pairs:
            if (p.i, p.j) == (i, j) or (p.j, p.i) == (i, j):
                return p
        raise KeyError(f"no report for pair {(i, j)}")

    @property
    def unsafe_pairs(self) -> list[tuple[int, int]]:
        return [(p.i, p.j) for p in self.pairs if not p.verified]

    def to_dict(self):
        return {
            "verdict": self.verdict.value,
            "n_agents": self.n_agents,
            "total_time": self.total_time,
            "workers": self.workers,
            "assumptions": list(self.assumptions),
            "pairs": [p.to_dict() for p in self.pairs],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(int(data["n_agents"]), [PairReport.from_dict(p) for p in data["pairs"]],
                   SystemVerdict(data["verdict"]), float(data.get("total_time", 0.0)),
                   int(data.get("workers", 1)), tuple(data.get("assumptions", ())))


def verify_pair(pair: PairSystem, tau: int, n_f: int, workspace_rows=(), **solve_kwargs) -> PairReport:
    """Backproject one pair ``tau`` steps and test the one-step containment."""
    t0 = time.perf_counter()
    i, j = pair.label
    try:
        seq = compute_rbpoa_sequence(pair, tau, n_f, workspace_rows=workspace_rows, **solve_kwargs)
        ok = check_verified_safe(seq.steps[1], pair.collision_set, pair.relpos_box())
        return PairReport(i, j, seq, ok, time.perf_counter() - t0, Workspace.of(pair, workspace_rows))
    except Exception as exc:  # noqa: BLE001 - a failed pair must not sink the others
        log.error("pair %s failed: %s", (i, j), exc)
        return PairReport(i, j, None, False, time.perf_counter() - t0,
                          Workspace.of(pair, workspace_rows),
                          f"{type(exc).__name__}: {exc}\n{traceback.format_exc(limit=3)}")


def _job(system, i, j, tau, n_f, solve_kwargs):
    return verify_pair(system.pair(i, j), tau, n_f, system.workspace_rows, **solve_kwargs)


def verify_multiagent(system: MultiAgentSystem, tau=1, n_f=8, workers=1, order=None,
                      **solve_kwargs) -> SafetyReport:
    """Verify every pair of agents; the system is safe iff every pair is.

    Pair jobs are independent, so with ``workers > 1`` they run in a process
    pool. ``order`` optionally permutes the submission order; results are
    always reported sorted by pair.
    """
    t0 = time.perf_counter()
    jobs = system.pairs()
    if order is not None:
        jobs = [jobs[k] for k in order]
    log.info("verifying %d agents: %d pair jobs on %d workers", system.n, len(jobs), workers)
    if workers <= 1 or len(jobs) <= 1:
        results = [_job(system, i, j, tau, n_f, solve_kwargs) for i, j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_job, system, i, j, tau, n_f, solve_kwargs) for i, j in jobs]
            results = [f.result() for f in futures]
    results.sort(key=lambda r: (r.i, r.j))
    verdict = (SystemVerdict.VERIFIED_SAFE if all(r.verified for r in results)
               else SystemVerdict.NOT_VERIFIED)
    return SafetyReport(system.n, results, verdict, time.perf_counter() - t0, workers)
