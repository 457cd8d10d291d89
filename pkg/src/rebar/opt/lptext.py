"""CPLEX-LP style text dump of a :class:`MilpModel` for cross-checking."""

from __future__ import annotations

import math

from .model import MilpModel, Sense

_OPS = {Sense.LE: "<=", Sense.GE: ">=", Sense.EQ: "="}


def _num(v: float) -> str:
    return repr(float(v))


def _expr(coeffs, names) -> str:
    if not coeffs:
        return "0 " + names[0] if names else "0"
    parts = []
    for j in sorted(coeffs):
        v = coeffs[j]
        sign = "-" if v < 0 else "+"
        parts.append(f"{sign} {_num(abs(v))} {names[j]}")
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def _safe_names(model: MilpModel):
    out = []
    for j, name in enumerate(model.var_names):
        clean = "".join(ch if ch.isalnum() or ch in "_." else "_" for ch in name)
        out.append(f"{clean}_{j}")
    return out


def to_lp_text(model: MilpModel) -> str:
    """Render ``model`` in LP file format. Output is byte-stable for equal models."""
    names = _safe_names(model)
    lines = ["\\ generated by rebar", "Minimize", " obj: " + _expr(model.objective, names), "Subject To"]
    for r, con in enumerate(model.constraints):
        lines.append(f" r{r}: {_expr(con.coeffs, names)} {_OPS[con.sense]} {_num(con.rhs)}")
    lines.append("Bounds")
    for j in range(model.num_vars):
        if j in model.binaries:
            continue
        lo, hi = model.lb[j], model.ub[j]
        if math.isinf(lo) and math.isinf(hi):
            lines.append(f" {names[j]} free")
            continue
        lo_s = "-inf" if math.isinf(lo) else _num(lo)
        hi_s = "+inf" if math.isinf(hi) else _num(hi)
        lines.append(f" {lo_s} <= {names[j]} <= {hi_s}")
    if model.binaries:
        lines.append("Binaries")
        lines.append(" " + " ".join(names[j] for j in sorted(model.binaries)))
    lines.append("End")
    return "\n".join(lines) + "\n"
