"""Scenario files: agents, controllers, collision sets and run settings as JSON.

Layout::

    {
      "agents": [
        {"name": "a0", "A": [[...]], "B": [[...]], "pos_select": [[...]],
         "obs_map": "own_plus_relative" | [[...]],
         "state_box": {"lo": [...], "hi": [...]},
         "controller": "nets/a0.json"}
      ],
      "collision_sets": [{"pair": [0, 1], "polytope": {...}}],
      "default_collision_set": {...},
      "workspace_rows": [{"coeffs": [...], "sense": "LE", "rhs": 0.0}],
      "n_f": 8, "tau": 1,
      "grid": {"per_dim": 5, "refine": null, "cap": 10000000},
      "tolerances": {"eps_feas": 1e-7}
    }

Controller paths are resolved relative to the scenario file. Instead of
``A``/``B``/``pos_select`` an agent may give ``"model": {"kind":
"double_integrator", "dt": 0.25}`` (optionally ``"zoh": true``) or
``single_integrator``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import config
from .dynamics import AgentModel, double_integrator, single_integrator
from .errors import ParseError, SchemaError
from .lingeo import Polytope
from .multiagent import MultiAgentSystem
from .network import load_network, save_network

_MODELS = {"double_integrator": double_integrator, "single_integrator": single_integrator}


@dataclass
class Scenario:
    system: MultiAgentSystem
    n_f: int = 8
    tau: int = 1
    grid: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)


def apply_tolerances(tolerances: dict):
    config.override(**{k: v for k, v in tolerances.items()})


def _agent_from_dict(entry, base: Path, k: int) -> AgentModel:
    try:
        if "model" in entry:
            spec = entry["model"]
            kind = spec.get("kind")
            if kind not in _MODELS:
                raise SchemaError(f"agent {k}: unknown model kind {kind!r}")
            dt = float(spec.get("dt", 0.25))
            if kind == "double_integrator":
                A, B, S = double_integrator(dt, bool(spec.get("zoh", False)))
            else:
                A, B, S = _MODELS[kind](dt)
        else:
            A, B, S = entry["A"], entry["B"], entry["pos_select"]
        ctrl_path = base / entry["controller"]
        if not ctrl_path.exists():
            raise SchemaError(f"agent {k}: controller file {ctrl_path} not found")
        box = entry["state_box"]
        obs = entry.get("obs_map", "own_state")
        return AgentModel(A, B, S, load_network(ctrl_path), box["lo"], box["hi"], obs,
                          entry.get("name", f"agent{k}"))
    except KeyError as exc:
        raise SchemaError(f"agent {k}: missing field {exc}") from exc


def scenario_from_dict(data: dict, base=".") -> Scenario:
    base = Path(base)
    if not isinstance(data, dict) or not isinstance(data.get("agents"), list) or not data["agents"]:
        raise SchemaError("scenario must contain a non-empty 'agents' list")
    agents = [_agent_from_dict(e, base, k) for k, e in enumerate(data["agents"])]
    sets = {}
    for entry in data.get("collision_sets", []):
        i, j = (int(v) for v in entry["pair"])
        if not (0 <= i < len(agents) and 0 <= j < len(agents)) or i == j:
            raise SchemaError(f"collision set refers to invalid pair {(i, j)}")
        sets[(i, j)] = Polytope.from_dict(entry["polytope"])
    default = data.get("default_collision_set")
    default = None if default is None else Polytope.from_dict(default)
    rows = tuple((np.asarray(r["coeffs"], dtype=float), r["sense"], float(r["rhs"]))
                 for r in data.get("workspace_rows", []))
    system = MultiAgentSystem(agents, sets, default, rows)
    for i, j in system.pairs():
        try:
            system.collision_set(i, j)
        except KeyError as exc:
            raise SchemaError(str(exc)) from exc
    scen = Scenario(system, int(data.get("n_f", 8)), int(data.get("tau", 1)),
                    dict(data.get("grid", {})), dict(data.get("tolerances", {})))
    if scen.tau < 1:
        raise SchemaError("tau must be at least 1")
    return scen


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    scen = scenario_from_dict(data, path.parent)
    if scen.tolerances:
        apply_tolerances(scen.tolerances)
    return scen


def save_scenario(scen: Scenario, path, controller_dir="controllers"):
    """Write ``scen`` and one JSON file per controller next to it."""
    path = Path(path)
    ctrl_dir = path.parent / controller_dir
    ctrl_dir.mkdir(parents=True, exist_ok=True)
    agents = []
    for k, ag in enumerate(scen.system.agents):
        rel = f"{controller_dir}/agent{k}.json"
        save_network(ag.controller, path.parent / rel)
        obs = ag.obs_map if isinstance(ag.obs_map, str) else ag.obs_map.tolist()
        agents.append({
            "name": ag.name or f"agent{k}",
            "A": ag.A.tolist(), "B": ag.B.tolist(), "pos_select": ag.pos_select.tolist(),
            "obs_map": obs,
            "state_box": {"lo": ag.state_lo.tolist(), "hi": ag.state_hi.tolist()},
            "controller": rel,
        })
    system = scen.system
    data = {
        "agents": agents,
        "collision_sets": [{"pair": list(k), "polytope": v.to_dict()}
                           for k, v in sorted(system.collision_sets.items())],
        "n_f": scen.n_f,
        "tau": scen.tau,
    }
    if system.default_collision is not None:
        data["default_collision_set"] = system.default_collision.to_dict()
    if system.workspace_rows:
        data["workspace_rows"] = [{"coeffs": list(map(float, c)), "sense": s, "rhs": r}
                                  for c, s, r in system.workspace_rows]
    if scen.grid:
        data["grid"] = scen.grid
    if scen.tolerances:
        data["tolerances"] = scen.tolerances
    path.write_text(json.dumps(data, indent=1) + "\n")
