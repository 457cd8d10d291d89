"""Solver-facing model representation shared by the LP and MILP solvers."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ModelError


class Sense(str, enum.Enum):
    LE = "LE"
    GE = "GE"
    EQ = "EQ"

    @classmethod
    def _missing_(cls, value):
        # also accept the operator spellings used in LP files
        return {"<=": cls.LE, ">=": cls.GE, "=": cls.EQ, "==": cls.EQ}.get(value)


class Status(str, enum.Enum):
    OPTIMAL = "OPTIMAL"
    INFEASIBLE = "INFEASIBLE"
    UNBOUNDED = "UNBOUNDED"


@dataclass
class Constraint:
    coeffs: dict[int, float]
    sense: Sense
    rhs: float
    name: str = ""


@dataclass
class SolveStats:
    nodes: int = 0
    lp_solves: int = 0
    lp_iterations: int = 0
    wall_time: float = 0.0


@dataclass
class SolveResult:
    status: Status
    objective_value: float | None = None
    assignment: np.ndarray | None = None
    stats: SolveStats = field(default_factory=SolveStats)
    # proven lower bound on the optimum (MIN sense); equals objective_value for LPs
    bound: float | None = None

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


class MilpModel:
    """Minimization model with bounded variables, linear rows and binaries.

    Variables are added with :meth:`add_var`, rows with :meth:`add_constr`.
    Solvers never mutate a model; bound changes made during branch-and-bound
    are passed to :func:`solve_lp` as override arrays.
    """

    def __init__(self):
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.var_names: list[str] = []
        self.constraints: list[Constraint] = []
        self.binaries: set[int] = set()
        self.objective: dict[int, float] = {}
        self._dense = None

    @property
    def num_vars(self) -> int:
        return len(self.lb)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def add_var(self, lb=-math.inf, ub=math.inf, name="", binary=False) -> int:
        if binary:
            lb, ub = 0.0, 1.0
        lb, ub = float(lb), float(ub)
        if math.isnan(lb) or math.isnan(ub):
            raise ModelError(f"NaN bound on variable {name!r}")
        if lb > ub:
            raise ModelError(f"variable {name!r} has lb {lb} > ub {ub}")
        idx = len(self.lb)
        self.lb.append(lb)
        self.ub.append(ub)
        self.var_names.append(name or f"x{idx}")
        if binary:
            self.binaries.add(idx)
        self._dense = None
        return idx

    def add_vars(self, count, lb=-math.inf, ub=math.inf, name="x", binary=False) -> list[int]:
        lbs = np.broadcast_to(np.asarray(lb, dtype=float), (count,))
        ubs = np.broadcast_to(np.asarray(ub, dtype=float), (count,))
        return [
            self.add_var(lbs[k], ubs[k], f"{name}[{k}]", binary=binary)
            for k in range(count)
        ]

    def add_constr(self, coeffs, sense, rhs, name="") -> int:
        sense = Sense(sense)
        row: dict[int, float] = {}
        for var, val in dict(coeffs).items():
            val = float(val)
            if not math.isfinite(val):
                raise ModelError(f"non-finite coefficient in row {name!r}")
            if not 0 <= var < self.num_vars:
                raise ModelError(f"row {name!r} references unknown variable {var}")
            if val != 0.0:
                row[int(var)] = row.get(int(var), 0.0) + val
        rhs = float(rhs)
        if not math.isfinite(rhs):
            raise ModelError(f"non-finite rhs in row {name!r}")
        self.constraints.append(Constraint(row, sense, rhs, name or f"c{len(self.constraints)}"))
        self._dense = None
        return len(self.constraints) - 1

    def add_row(self, variables, coeffs, sense, rhs, name="") -> int:
        return self.add_constr(dict(zip(variables, coeffs)), sense, rhs, name)

    def set_objective(self, coeffs):
        self.objective = {int(k): float(v) for k, v in dict(coeffs).items() if v != 0.0}
        self._dense = None

    def dense(self):
        """Return ``(A, row_lo, row_hi, c, lb, ub)`` as numpy arrays (cached)."""
        if self._dense is None:
            n, m = self.num_vars, self.num_constraints
            A = np.zeros((m, n))
            rlo = np.full(m, -np.inf)
            rhi = np.full(m, np.inf)
            for r, con in enumerate(self.constraints):
                for j, v in con.coeffs.items():
                    A[r, j] += v
                if con.sense is not Sense.GE:
                    rhi[r] = con.rhs
                if con.sense is not Sense.LE:
                    rlo[r] = con.rhs
            c = np.zeros(n)
            for j, v in self.objective.items():
                c[j] = v
            self._dense = (A, rlo, rhi, c, np.array(self.lb), np.array(self.ub))
        return self._dense

    def validate(self):
        """Check the invariants the solvers rely on.

        Binary variables must carry [0, 1] bounds and every variable must be
        bounded on both sides, either directly or through an equality row in
        which all other variables are bounded.
        """
        for j in self.binaries:
            if self.lb[j] != 0.0 or self.ub[j] != 1.0:
                raise ModelError(f"binary {self.var_names[j]} must have bounds [0, 1]")
        for j, v in self.objective.items():
            if not math.isfinite(v):
                raise ModelError("non-finite objective coefficient")
        lb = np.array(self.lb, dtype=float)
        ub = np.array(self.ub, dtype=float)
        # propagate bounds through EQ rows until a fixed point
        changed = True
        while changed:
            changed = False
            for con in self.constraints:
                if con.sense is not Sense.EQ:
                    continue
                open_vars = [j for j in con.coeffs if not (np.isfinite(lb[j]) and np.isfinite(ub[j]))]
                if len(open_vars) != 1:
                    continue
                j = open_vars[0]
                a_j = con.coeffs[j]
                lo = hi = con.rhs
                for k, a in con.coeffs.items():
                    if k == j:
                        continue
                    lo -= max(a * lb[k], a * ub[k])
                    hi -= min(a * lb[k], a * ub[k])
                lo, hi = sorted((lo / a_j, hi / a_j))
                lb[j] = max(lb[j], lo)
                ub[j] = min(ub[j], hi)
                changed = True
        unbounded = [self.var_names[j] for j in range(self.num_vars)
                     if not (np.isfinite(lb[j]) and np.isfinite(ub[j]))]
        if unbounded:
            raise ModelError(f"variables without finite bounds: {unbounded[:5]}")

    def copy(self) -> MilpModel:
        other = MilpModel()
        other.lb = list(self.lb)
        other.ub = list(self.ub)
        other.var_names = list(self.var_names)
        other.constraints = [Constraint(dict(c.coeffs), c.sense, c.rhs, c.name) for c in self.constraints]
        other.binaries = set(self.binaries)
        other.objective = dict(self.objective)
        return other
