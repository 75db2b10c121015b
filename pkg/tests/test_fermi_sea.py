import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _seas import HALF, random_interval_sea
from fermisea.errors import GridSnapError
from fermisea.fermi_sea import (
    Grid,
    IntervalUnion,
    Product,
    canonical_angle,
    classify_directions,
    lambda_measure,
    linear_bound_probe,
    measure,
    overlap,
    torus_vector,
    translate,
)

PI = math.pi
UNIT = IntervalUnion.from_pairs([(0.0, 1.0)])
SQUARE = Product((IntervalUnion.from_pairs([(0.0, PI)]),) * 2)


@st.composite
def interval_seas(draw, max_intervals=5):
    seed = draw(st.integers(0, 2 ** 32 - 1))
    return random_interval_sea(np.random.default_rng(seed), max_intervals)


angles = st.floats(-3 * PI, 3 * PI, allow_nan=False)


# -- measure / translate / overlap examples ----------------------------------

def test_measure_examples():
    assert measure(IntervalUnion.full()) == 2 * PI
    assert measure(HALF) == pytest.approx(PI, abs=1e-15)
    assert measure(SQUARE) == pytest.approx(PI ** 2, rel=1e-15)
    assert measure(IntervalUnion.empty()) == 0.0


def test_translate_examples():
    assert translate(UNIT, 0.0).intervals == UNIT.intervals
    shifted = translate(UNIT, 0.3)
    assert shifted.intervals[0] == pytest.approx((0.3, 1.3))
    arc = IntervalUnion.from_pairs([(PI - 0.5, PI - 0.1)])
    wrapped = translate(arc, 1.0)
    assert len(wrapped.intervals) == 1
    assert wrapped.measure() == pytest.approx(0.4, abs=1e-14)
    assert wrapped.intervals[0][0] == pytest.approx(PI - 0.5 + 1.0 - 2 * PI)


def test_overlap_examples():
    assert overlap(UNIT, 0.0) == 1.0
    assert overlap(UNIT, 0.3) == pytest.approx(0.7, abs=1e-15)
    assert overlap(UNIT, 2.0) == 0.0


def test_lambda_examples():
    assert lambda_measure(UNIT, 0.0) == 0.0
    assert lambda_measure(UNIT, 0.3) == pytest.approx(0.3, abs=1e-15)
    assert lambda_measure(SQUARE, [0.1, 0.0]) == pytest.approx(0.1 * PI, abs=1e-14)


def test_interval_union_rejects_overlap_and_merges_touching():
    with pytest.raises(ValueError, match="overlaps"):
        IntervalUnion.from_pairs([(0.0, 1.0), (0.5, 2.0)])
    merged = IntervalUnion.from_pairs([(0.0, 1.0), (1.0, 2.0)])
    assert merged.intervals == ((0.0, 2.0),)
    with pytest.raises(ValueError):
        IntervalUnion.from_pairs([(1.0, 1.0)])


def test_wrapping_interval_is_split_at_seam():
    M = IntervalUnion.from_pairs([(3.0, 3.5)])
    assert len(M.intervals) == 2
    assert M.measure() == pytest.approx(0.5, abs=1e-15)


# -- canonical angles ---------------------------------------------------------

@given(angles)
def test_canonical_angle_range_and_idempotence(x):
    y = canonical_angle(x)
    assert -PI <= y < PI
    assert canonical_angle(y) == y
    assert math.isclose(math.cos(x), math.cos(y), abs_tol=1e-9)


def test_torus_vector_checks_dimension():
    assert torus_vector([4.0, 0.0], 2)[0] == pytest.approx(4.0 - 2 * PI)
    with pytest.raises(ValueError):
        torus_vector([0.0], 2)


# -- Lambda invariants --------------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(interval_seas(), angles, angles)
def test_lambda_symmetry_subadditivity_bounds(M, a, b):
    la, lb = lambda_measure(M, a), lambda_measure(M, b)
    assert abs(la - lambda_measure(M, -a)) <= 1e-12
    assert lambda_measure(M, a + b) <= la + lb + 1e-9
    m = M.measure()
    assert 0.0 <= la <= min(m, 2 * PI - m) + 1e-12
    assert lambda_measure(M, 0.0) == 0.0


@settings(max_examples=200, deadline=None)
@given(interval_seas(), angles, st.floats(-0.5, 0.5))
def test_lambda_lipschitz(M, a, h):
    n = len(M.intervals)
    assert abs(lambda_measure(M, a + h) - lambda_measure(M, a)) <= 2 * n * abs(h) + 1e-12


@settings(max_examples=100, deadline=None)
@given(interval_seas(), angles)
def test_overlap_matches_explicit_intersection(M, a):
    moved = translate(M, a)
    total = 0.0
    for lo, hi in M.intervals:
        for lo2, hi2 in moved.intervals:
            total += max(0.0, min(hi, hi2) - max(lo, lo2))
    assert overlap(M, a) == pytest.approx(total, abs=1e-12)


def test_single_arc_closed_form():
    ell = 2.0
    M = IntervalUnion.from_pairs([(-1.0, 1.0)])
    for a in np.linspace(-PI, PI, 41):
        c = max(0.0, ell - abs(a)) + max(0.0, ell - (2 * PI - abs(a)))
        assert lambda_measure(M, a) == pytest.approx(ell - c, abs=1e-14)


def test_batch_shifts_match_scalar_calls():
    a = np.linspace(-3, 3, 7)
    batch = lambda_measure(HALF, a)
    assert batch.shape == (7,)
    assert np.allclose(batch, [lambda_measure(HALF, float(x)) for x in a], atol=0)


# -- products and grids -------------------------------------------------------

def test_product_law():
    A = IntervalUnion.from_pairs([(-1.0, 0.5)])
    B = IntervalUnion.from_pairs([(0.2, 2.0), (2.5, 3.0)])
    P = Product((A, B))
    for a, b in [(0.1, 0.0), (0.4, -0.7), (-2.0, 1.3)]:
        expected = A.measure() * B.measure() - overlap(A, a) * overlap(B, b)
        assert lambda_measure(P, [a, b]) == pytest.approx(expected, abs=1e-13)


def _square_grid(n):
    cells = np.zeros((n, n), dtype=bool)
    cells[n // 2:, n // 2:] = True  # [0, pi) x [0, pi)
    return cells


def test_grid_matches_product_on_lattice_shifts():
    n = 16
    G = Grid(2, n, _square_grid(n))
    h = 2 * PI / n
    assert G.measure() == pytest.approx(SQUARE.measure(), rel=1e-14)
    for i, j in [(0, 0), (1, 0), (3, -2), (8, 5)]:
        a = [i * h, j * h]
        assert lambda_measure(G, a) == pytest.approx(lambda_measure(SQUARE, a), abs=1e-12)


def test_grid_exact_mode_interpolates_fractional_shifts():
    n = 16
    G = Grid(2, n, _square_grid(n), exact=True)
    for a in ([0.1, 0.0], [0.37, -0.21], [1.3, 2.2]):
        assert lambda_measure(G, a) == pytest.approx(lambda_measure(SQUARE, a), abs=1e-12)


def test_grid_snapping_error_is_one_cell():
    n = 64
    G = Grid(2, n, _square_grid(n))
    h = 2 * PI / n
    a = [0.1, 0.05]
    # snapping moves each component by at most h/2; Lambda is pi-Lipschitz per axis here
    assert abs(lambda_measure(G, a) - lambda_measure(SQUARE, a)) <= 2 * PI * h / 2 + 1e-12


def test_grid_snap_disabled_raises():
    G = Grid(1, 8, np.array([1, 1, 0, 0, 1, 0, 0, 0], dtype=bool))
    with pytest.raises(GridSnapError):
        translate(G, [0.1], snap=False)
    with pytest.raises(GridSnapError):
        lambda_measure(G, 0.1, snap=False)
    moved = translate(G, [2 * PI / 8], snap=False)
    assert moved.cells.tolist() == np.roll(G.cells, 1).tolist()


# -- directions and linear probe ----------------------------------------------

def test_classify_directions():
    M = Product((IntervalUnion.full(), IntervalUnion.from_pairs([(0.0, PI)])))
    r = classify_directions(M)
    assert [x.relevant for x in r] == [False, True]
    assert lambda_measure(M, [0.0, 0.1]) == pytest.approx(2 * PI * 0.1, abs=1e-13)


def test_linear_bound_probe_examples():
    grid = np.linspace(0.01, 0.5, 50)
    assert linear_bound_probe(HALF, [1.0], grid).c_est == pytest.approx(1.0, abs=1e-12)
    assert linear_bound_probe(IntervalUnion.full(), [1.0], grid).c_est == 0.0
    assert linear_bound_probe(SQUARE, [1.0, 0.0], grid).c_est == pytest.approx(PI, abs=1e-12)


def test_linear_bound_probe_validity_radius():
    grid = np.linspace(0.05, 3.0, 60)
    probe = linear_bound_probe(HALF, [1.0], grid, slope=1.0)
    # Lambda(lam) = lam only up to lam = |M| = pi; on this grid it holds throughout
    assert probe.eps_est == pytest.approx(3.0)
    narrow = IntervalUnion.from_pairs([(0.0, 0.5)])
    probe = linear_bound_probe(narrow, [1.0], grid, slope=1.0)
    assert probe.eps_est <= 0.5
