"""Numerical tolerances used throughout the package.

All of them are module-level so a scenario file can override them once at
load time (see :func:`rebar.scenario.apply_tolerances`).
"""

# a point meets a half-space if it violates it by at most this much
EPS_FEAS = 1e-7
# a binary is integral if within this distance of 0 or 1
EPS_INT = 1e-6
# absolute optimality gap used for pruning in branch-and-bound
DELTA_GAP = 1e-6
# default branch-and-bound node budget
NODE_LIMIT = 1_000_000
# grid oracle default cap on the number of evaluated states
GRID_CAP = 10_000_000


def override(**values):
    """Replace tolerances by name, e.g. ``override(EPS_FEAS=1e-8)``."""
    g = globals()
    for key, val in values.items():
        key = key.upper()
        if key not in ("EPS_FEAS", "EPS_INT", "DELTA_GAP", "NODE_LIMIT", "GRID_CAP"):
            raise KeyError(f"unknown tolerance {key!r}")
        g[key] = type(g[key])(val)
