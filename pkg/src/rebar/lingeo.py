"""Half-spaces and H-polytopes in relative-position space."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import config
from .errors import DimensionError, InvalidFacetCount, SchemaError, UnboundedError
from .opt import Status, solve_arrays


class HSense(str, enum.Enum):
    GE = "GE"
    LE = "LE"


@dataclass(frozen=True)
class HalfSpace:
    """``normal . p >= offset`` (GE) or ``normal . p <= offset`` (LE)."""

    normal: tuple[float, ...]
    offset: float
    sense: HSense = HSense.LE

    def __post_init__(self):
        normal = tuple(float(v) for v in np.asarray(self.normal, dtype=float).ravel())
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "sense", HSense(self.sense))
        if not all(math.isfinite(v) for v in normal) or not any(normal):
            raise ValueError(f"half-space normal must be finite and nonzero, got {normal}")
        if not math.isfinite(self.offset):
            raise ValueError("half-space offset must be finite")

    def as_le(self) -> tuple[np.ndarray, float]:
        """The same half-space written as ``a . p <= b``."""
        a = np.array(self.normal)
        if self.sense is HSense.GE:
            return -a, -self.offset
        return a, self.offset

    def violation(self, p) -> float:
        a, b = self.as_le()
        return float(a @ np.asarray(p, dtype=float) - b)


@dataclass(frozen=True)
class Polytope:
    """Intersection of half-spaces. No half-spaces means the whole space.

    The empty set is represented explicitly with ``empty=True`` (see
    :meth:`Polytope.empty_set`) rather than through contradictory rows.
    """

    dim: int
    halfspaces: tuple[HalfSpace, ...] = ()
    empty: bool = False

    def __post_init__(self):
        object.__setattr__(self, "halfspaces", tuple(self.halfspaces))
        if self.dim < 1:
            raise DimensionError("polytope dimension must be positive")
        for h in self.halfspaces:
            if len(h.normal) != self.dim:
                raise DimensionError(
                    f"half-space normal of length {len(h.normal)} in a {self.dim}-D polytope")

    @classmethod
    def full(cls, dim=2) -> Polytope:
        return cls(dim)

    @classmethod
    def empty_set(cls, dim=2) -> Polytope:
        return cls(dim, (), True)

    @classmethod
    def box(cls, lo, hi) -> Polytope:
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        dim = lo.size
        rows = []
        for k in range(dim):
            e = np.zeros(dim)
            e[k] = 1.0
            rows.append(HalfSpace(e, hi[k], HSense.LE))
            rows.append(HalfSpace(e, lo[k], HSense.GE))
        return cls(dim, tuple(rows))

    def intersect(self, h: HalfSpace) -> Polytope:
        if self.empty:
            return self
        return Polytope(self.dim, self.halfspaces + (h,))

    def le_form(self) -> tuple[np.ndarray, np.ndarray]:
        """Stack all half-spaces as ``A p <= b``."""
        if not self.halfspaces:
            return np.zeros((0, self.dim)), np.zeros(0)
        pairs = [h.as_le() for h in self.halfspaces]
        return np.array([a for a, _ in pairs]), np.array([b for _, b in pairs])

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "halfspaces": [
                {"normal": list(h.normal), "offset": h.offset, "sense": h.sense.value}
                for h in self.halfspaces
            ],
            "empty": self.empty,
        }

    @classmethod
    def from_dict(cls, data: dict) -> Polytope:
        try:
            hs = tuple(
                HalfSpace(h["normal"], h["offset"], h.get("sense", "LE"))
                for h in data.get("halfspaces", [])
            )
            return cls(int(data["dim"]), hs, bool(data.get("empty", False)))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, DimensionError):
                raise
            raise SchemaError(f"malformed polytope: {exc}") from exc


def facet_directions(n_f: int) -> list[np.ndarray]:
    """``n_f`` unit vectors spaced uniformly counter-clockwise from angle 0."""
    if n_f < 3:
        raise InvalidFacetCount(f"need at least 3 facets to bound a 2-D set, got {n_f}")
    out = []
    for m in range(n_f):
        ang = 2.0 * math.pi * m / n_f
        out.append(np.array([math.cos(ang), math.sin(ang)]))
    return out


def contains_point(P: Polytope, p) -> bool:
    p = np.asarray(p, dtype=float).ravel()
    if p.size != P.dim:
        raise DimensionError(f"point of length {p.size} for a {P.dim}-D polytope")
    if P.empty:
        return False
    A, b = P.le_form()
    return bool(np.all(A @ p - b <= config.EPS_FEAS))


def contains_points(P: Polytope, pts) -> np.ndarray:
    """Vectorized :func:`contains_point` over the rows of ``pts``."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if pts.shape[1] != P.dim:
        raise DimensionError(f"points of width {pts.shape[1]} for a {P.dim}-D polytope")
    if P.empty:
        return np.zeros(len(pts), dtype=bool)
    A, b = P.le_form()
    return np.all(pts @ A.T - b <= config.EPS_FEAS, axis=1)


def violations(P: Polytope, pts) -> np.ndarray:
    """Per point, the largest half-space violation (0 inside, inf for an empty ``P``)."""
    pts = np.asarray(pts, dtype=float).reshape(-1, P.dim)
    if P.empty:
        return np.full(len(pts), np.inf)
    A, b = P.le_form()
    if not len(b):
        return np.zeros(len(pts))
    return np.maximum((pts @ A.T - b).max(axis=1), 0.0)


def support(P: Polytope, direction, workspace_box) -> float | None:
    """max ``direction . p`` over ``P`` clipped to ``workspace_box``; None if empty."""
    lo, hi = _check_box(workspace_box, P.dim)
    if P.empty:
        return None
    A, b = P.le_form()
    res = solve_arrays(A, np.full(len(b), -np.inf), b, -np.asarray(direction, dtype=float), lo, hi)
    if res.status is Status.INFEASIBLE:
        return None
    if res.status is Status.UNBOUNDED:
        raise UnboundedError("support LP unbounded")
    return -res.objective_value


def polytope_subset(P: Polytope, Q: Polytope, workspace_box) -> bool:
    """Whether ``P`` (restricted to ``workspace_box``) lies inside ``Q``.

    One LP per half-space of ``Q``: the extreme value of its normal over ``P``
    must not cross the offset by more than ``config.EPS_FEAS``.
    """
    if P.dim != Q.dim:
        raise DimensionError(f"dimension mismatch {P.dim} vs {Q.dim}")
    if workspace_box is None:
        raise UnboundedError("containment needs a bounding workspace box")
    _check_box(workspace_box, P.dim)
    if P.empty:
        return True
    if Q.empty:
        return support(P, np.ones(P.dim), workspace_box) is None
    for h in Q.halfspaces:
        a, b = h.as_le()
        top = support(P, a, workspace_box)
        if top is None:
            return True
        if top > b + config.EPS_FEAS:
            return False
    return True


def _check_box(box, dim):
    if box is None:
        raise UnboundedError("workspace box is required")
    lo, hi = (np.asarray(v, dtype=float).ravel() for v in box)
    if lo.size != dim or hi.size != dim:
        raise DimensionError("workspace box dimension mismatch")
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise UnboundedError("workspace box must be finite")
    return lo, hi

