import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _seas import HALF, seeded_seas
from fermisea.bounds import (
    SERIES_SWITCH,
    bound_report,
    fejer_kernel,
    fejer_normalisation,
    fhm_bound_exact,
    fhm_bound_quadrature,
    kernel_integral_constants,
    quadrature_grid,
)
from fermisea.errors import MissingCoefficient, QuadratureResolutionError
from fermisea.fermi_sea import Grid, IntervalUnion, Product, lambda_measure
from fermisea.spectrum import trace_purity_bound
from fermisea.symbol import coefficient_table, restricted_symbol

PI = math.pi


def _direct_kernel(L, a):
    return math.sin(L * a / 2) ** 2 / math.sin(a / 2) ** 2


def test_fejer_examples():
    for L in (1, 2, 7, 100):
        assert fejer_kernel(L, 0.0) == L ** 2
    assert np.allclose(fejer_kernel(1, np.linspace(-PI, PI, 33)), 1.0, atol=1e-15)
    assert fejer_kernel(2, PI) == pytest.approx(0.0, abs=1e-30)


@settings(max_examples=200)
@given(st.integers(1, 200), st.floats(1e-3, PI))
def test_fejer_matches_direct_formula_and_sum_of_characters(L, a):
    direct = _direct_kernel(L, a)
    assert fejer_kernel(L, a) == pytest.approx(direct, rel=1e-9, abs=1e-12)
    chars = sum((L - abs(n)) * math.cos(n * a) for n in range(-L + 1, L))
    assert fejer_kernel(L, a) == pytest.approx(chars, rel=1e-8, abs=1e-8 * L)


def test_fejer_series_branch_is_continuous():
    for L in (3, 50, 512):
        below = fejer_kernel(L, SERIES_SWITCH * (1 - 1e-9))
        above = fejer_kernel(L, SERIES_SWITCH * (1 + 1e-9))
        assert below == pytest.approx(above, rel=1e-10)


def test_fejer_normalisation_and_lower_bound():
    for L in range(1, 65):
        assert fejer_normalisation(L) == pytest.approx(L, abs=1e-8)
        b = np.linspace(0, PI / L, 129)
        assert np.all(fejer_kernel(L, b) >= 4 * L ** 2 / PI ** 2 * (1 - 1e-12))


def test_exact_bound_examples():
    assert fhm_bound_exact(HALF, 1) == pytest.approx(0.25, abs=1e-15)
    assert fhm_bound_exact(HALF, 2) == pytest.approx(0.5 - 2 / PI ** 2, abs=1e-15)
    for L in (1, 5, 12):
        assert fhm_bound_exact(IntervalUnion.full(), L) == 0.0
    with pytest.raises(MissingCoefficient):
        fhm_bound_exact(HALF, 5, coefficient_table(HALF, 3))


def test_quadrature_examples():
    assert fhm_bound_quadrature(HALF, 1) == pytest.approx(0.25, abs=1e-12)
    M = IntervalUnion.from_pairs([(0.0, 1.0)])
    assert fhm_bound_quadrature(M, 4) == pytest.approx(fhm_bound_exact(M, 4), rel=1e-6)
    assert fhm_bound_quadrature(IntervalUnion.empty(), 7) == 0.0


def test_quadrature_resolution_error():
    with pytest.raises(QuadratureResolutionError):
        fhm_bound_quadrature(HALF, 10, grid=quadrature_grid(10, panels_per_L=4))
    with pytest.raises(QuadratureResolutionError):
        fhm_bound_quadrature(HALF, 10, panels_per_L=2)


@pytest.mark.parametrize("M", seeded_seas(20, seed=20240601))
def test_exact_identity(M):
    table = coefficient_table(M, 32)
    for L in range(1, 33):
        trace = trace_purity_bound(restricted_symbol(M, L))
        assert fhm_bound_exact(M, L, table) == pytest.approx(trace, rel=1e-10, abs=1e-14)


def test_quadrature_convergence_under_panel_halving():
    """Low-order rule so the convergence is visible above the roundoff floor."""
    floor = 1e-10
    for M in seeded_seas(20, seed=41):
        for L in (3, 7, 16):
            exact = fhm_bound_exact(M, L)
            errs = [
                abs(fhm_bound_quadrature(M, L, grid=quadrature_grid(L, p, order=2, breakpoints=M.kinks())) - exact) / exact
                for p in (32, 64, 128, 256)
            ]
            for coarse, fine in zip(errs, errs[1:]):
                if coarse > floor:
                    assert coarse / fine >= 3.0


def test_product_and_grid_quadrature_paths():
    A, B = seeded_seas(2, seed=43)
    P = Product((A, B))
    for L in (1, 3, 6):
        assert fhm_bound_quadrature(P, L) == pytest.approx(fhm_bound_exact(P, L), rel=1e-9)
    n = 8
    cells = np.zeros((n, n), dtype=bool)
    cells[n // 2:, n // 2:] = True
    G = Grid(2, n, cells)
    for L in (1, 2, 4):
        assert fhm_bound_quadrature(G, L) == pytest.approx(fhm_bound_exact(G, L), rel=1e-8)


def test_bound_is_nonnegative_and_vanishes_only_without_translation_defect():
    for M in seeded_seas(10, seed=47) + [IntervalUnion.full(), IntervalUnion.empty()]:
        lam = lambda_measure(M, np.linspace(-PI, PI, 257))
        for L in (2, 9):
            b = fhm_bound_exact(M, L)
            assert b >= -1e-14
            assert (abs(b) < 1e-13) == bool(np.all(lam < 1e-13))


def test_bound_report_fields():
    r = bound_report(HALF, 6, trace_purity_bound(restricted_symbol(HALF, 6)))
    assert r.relative_gap < 1e-12
    assert r.fhm_exact == pytest.approx(r.trace_bound, rel=1e-12)


def test_kernel_constants():
    kc = kernel_integral_constants([16, 32, 64, 128], 0.1)
    assert kc.c1_est > 0 and kc.c2_est > 0
    # pi L minus the mass on [0, delta] is the tail, about cot(delta/2)
    assert PI * 128 - kc.mass[-1] == pytest.approx(1 / math.tan(0.05), rel=0.02)
    with pytest.raises(ValueError):
        kernel_integral_constants([1, 4], 0.1)
    with pytest.raises(ValueError):
        kernel_integral_constants([4], 4.0)


def test_grid_1d_quadrature_uses_true_overlap():
    cells = np.random.default_rng(1).random(32) < 0.5
    G = Grid(1, 32, cells)
    for L in (1, 3, 9):
        assert fhm_bound_quadrature(G, L) == pytest.approx(fhm_bound_exact(G, L), rel=1e-10)
