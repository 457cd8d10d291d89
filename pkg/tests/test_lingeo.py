import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rebar import config
from rebar.errors import DimensionError, InvalidFacetCount, SchemaError, UnboundedError
from rebar.lingeo import (
    HalfSpace,
    HSense,
    Polytope,
    contains_point,
    contains_points,
    facet_directions,
    polytope_subset,
    support,
    violations,
)

SQUARE = Polytope.box([-1, -1], [1, 1])
BIG_BOX = ([-10, -10], [10, 10])


def test_facet_directions_four():
    got = facet_directions(4)
    want = [(1, 0), (0, 1), (-1, 0), (0, -1)]
    assert np.allclose(got, want, atol=1e-15)


def test_facet_directions_eight_diagonal():
    got = facet_directions(8)
    assert len(got) == 8
    assert np.allclose(got[1], [0.70711, 0.70711], atol=1e-5)


@pytest.mark.parametrize("n", [2, 1, 0, -3])
def test_facet_directions_too_few(n):
    with pytest.raises(InvalidFacetCount):
        facet_directions(n)


@given(st.integers(3, 200))
def test_facet_directions_unit_and_evenly_spaced(n):
    dirs = np.array(facet_directions(n))
    assert np.all(np.abs(np.linalg.norm(dirs, axis=1) - 1.0) <= 1e-12)
    ang = np.unwrap(np.arctan2(dirs[:, 1], dirs[:, 0]))
    assert abs(ang[0]) <= 1e-12
    assert np.all(np.abs(np.diff(ang) - 2 * math.pi / n) <= 1e-12)


def test_contains_point_examples():
    assert contains_point(SQUARE, (0, 0))
    assert not contains_point(SQUARE, (2, 0))
    assert contains_point(SQUARE, (1 + 1e-8, 0))
    assert not contains_point(SQUARE, (1 + 1e-6, 0))


def test_contains_point_empty_and_full():
    assert not contains_point(Polytope.empty_set(2), (0, 0))
    assert contains_point(Polytope.full(2), (1e9, -1e9))


def test_contains_point_dimension_mismatch():
    with pytest.raises(DimensionError):
        contains_point(SQUARE, (0, 0, 0))


def test_contains_point_matches_direct_evaluation(rng):
    agree = 0
    for _ in range(1000):
        k = rng.integers(1, 6)
        hs = []
        for _ in range(k):
            normal = rng.normal(size=2)
            sense = HSense.GE if rng.random() < 0.5 else HSense.LE
            hs.append(HalfSpace(normal, rng.normal(), sense))
        P = Polytope(2, tuple(hs))
        p = rng.normal(size=2) * 2
        direct = all(
            (h.normal @ p >= h.offset - config.EPS_FEAS) if h.sense is HSense.GE
            else (h.normal @ p <= h.offset + config.EPS_FEAS)
            for h in P.halfspaces)
        agree += contains_point(P, p) == direct
    assert agree == 1000


def test_contains_points_matches_scalar(rng):
    pts = rng.uniform(-2, 2, size=(500, 2))
    vec = contains_points(SQUARE, pts)
    assert list(vec) == [contains_point(SQUARE, p) for p in pts]


def test_halfspace_validation():
    with pytest.raises(ValueError):
        HalfSpace((0.0, 0.0), 1.0)
    with pytest.raises(ValueError):
        HalfSpace((np.nan, 1.0), 1.0)
    with pytest.raises(DimensionError):
        Polytope(3, (HalfSpace((1.0, 0.0), 1.0),))


def test_sense_is_stored_not_normalized():
    h = HalfSpace((1.0, 0.0), -1.0, HSense.GE)
    assert h.sense is HSense.GE and h.offset == -1.0
    a, b = h.as_le()
    assert np.allclose(a, [-1.0, 0.0]) and b == 1.0


def test_subset_examples():
    assert polytope_subset(Polytope.box([-0.5, -0.5], [0.5, 0.5]), SQUARE, BIG_BOX)
    assert not polytope_subset(Polytope.box([-2, -2], [2, 2]), SQUARE, BIG_BOX)
    assert polytope_subset(Polytope.empty_set(2), SQUARE, BIG_BOX)
    assert polytope_subset(SQUARE, SQUARE, BIG_BOX)


def test_subset_needs_bounded_box():
    with pytest.raises(UnboundedError):
        polytope_subset(SQUARE, SQUARE, None)
    with pytest.raises(UnboundedError):
        polytope_subset(SQUARE, SQUARE, ([-np.inf, -1], [1, 1]))


def test_subset_of_full_space_and_infeasible_p():
    assert polytope_subset(SQUARE, Polytope.full(2), BIG_BOX)
    # half-spaces that cannot hold together inside the box
    P = Polytope(2, (HalfSpace((1, 0), 5.0, HSense.GE), HalfSpace((1, 0), 4.0, HSense.LE)))
    assert polytope_subset(P, SQUARE, BIG_BOX)


@given(
    lo=st.tuples(st.floats(-5, 0), st.floats(-5, 0)),
    size=st.tuples(st.floats(0.1, 5), st.floats(0.1, 5)),
    shrink=st.tuples(st.floats(0, 0.49), st.floats(0, 0.49), st.floats(0, 0.49), st.floats(0, 0.49)),
    shift=st.floats(1e-5, 3),
    axis=st.integers(0, 1),
)
def test_subset_shrink_and_translate(lo, size, shrink, shift, axis):
    lo = np.array(lo)
    hi = lo + np.array(size)
    B = Polytope.box(lo, hi)
    w = hi - lo
    a_lo = lo + np.array(shrink[:2]) * w
    a_hi = hi - np.array(shrink[2:]) * w
    assert polytope_subset(Polytope.box(a_lo, a_hi), B, BIG_BOX)
    # slide the shrunk box past the far face of B
    d = np.zeros(2)
    d[axis] = hi[axis] - a_lo[axis] + shift
    moved = Polytope.box(a_lo + d, a_hi + d)
    assert not polytope_subset(moved, B, (np.array(BIG_BOX[0]) * 2, np.array(BIG_BOX[1]) * 2))


def test_support_values():
    assert support(SQUARE, (1, 0), BIG_BOX) == pytest.approx(1.0)
    assert support(SQUARE, (1, 1), BIG_BOX) == pytest.approx(2.0)
    assert support(Polytope.full(2), (0, 1), BIG_BOX) == pytest.approx(10.0)
    assert support(Polytope.empty_set(2), (0, 1), BIG_BOX) is None


def test_violations():
    v = violations(SQUARE, [[0, 0], [1.5, 0], [-3, 2]])
    assert np.allclose(v, [0, 0.5, 2.0])
    assert np.all(np.isinf(violations(Polytope.empty_set(2), [[0, 0]])))


def test_json_roundtrip_and_schema():
    P = SQUARE.intersect(HalfSpace((1, 1), -0.5, HSense.GE))
    text = json.dumps(P.to_dict())
    Q = Polytope.from_dict(json.loads(text))
    assert Q.to_dict() == P.to_dict()
    E = Polytope.from_dict(Polytope.empty_set(2).to_dict())
    assert E.empty
    assert set(P.to_dict()) == {"dim", "halfspaces", "empty"}
    with pytest.raises(SchemaError):
        Polytope.from_dict({"dim": 2, "halfspaces": [{"normal": [1, 0], "offset": 1, "sense": "EQ"}]})
    with pytest.raises(SchemaError):
        Polytope.from_dict({"halfspaces": []})


def test_intersect_of_empty_stays_empty():
    E = Polytope.empty_set(2).intersect(HalfSpace((1, 0), 0.0))
    assert E.empty
