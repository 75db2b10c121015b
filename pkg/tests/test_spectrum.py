import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from _seas import HALF, random_interval_sea, seeded_seas
from fermisea.errors import DomainError, NotHermitian
from fermisea.fermi_sea import IntervalUnion, Product
from fermisea.spectrum import (
    TOL_EIG,
    binary_entropy_eta,
    eigenvalues,
    entropy_of_state,
    trace_purity_bound,
)
from fermisea.symbol import restricted_symbol

PI = math.pi
Q2 = np.array([[0.5, 1 / PI], [1 / PI, 0.5]])


def _logm_entropy(Q: np.ndarray) -> float:
    """Independent oracle: -Tr(Q ln Q + (1-Q) ln(1-Q)) via matrix logarithms."""
    eye = np.eye(Q.shape[0])
    val = -np.trace(Q @ scipy.linalg.logm(Q)) - np.trace((eye - Q) @ scipy.linalg.logm(eye - Q))
    return float(val.real)


def test_eigenvalue_examples():
    w = eigenvalues(Q2).eigenvalues
    assert w == pytest.approx([0.5 - 1 / PI, 0.5 + 1 / PI], abs=1e-15)
    assert eigenvalues(np.array([[0.3]])).eigenvalues[0] == 0.3
    full = restricted_symbol(IntervalUnion.full(), 6)
    assert np.allclose(eigenvalues(full).eigenvalues, 1.0, atol=1e-15)


def test_eigenvalues_rejects_non_hermitian_and_cap():
    with pytest.raises(NotHermitian):
        eigenvalues(np.array([[0.5, 0.1], [0.2, 0.5]]))
    with pytest.raises(NotHermitian):
        eigenvalues(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        eigenvalues(np.eye(5), cap=4)


def test_eta_examples():
    assert binary_entropy_eta(0.5) == pytest.approx(math.log(2), abs=1e-16)
    assert binary_entropy_eta(0.0) == 0.0
    assert binary_entropy_eta(1.0) == 0.0
    x = 0.81831
    series = sum((1 - x) ** n / n for n in range(1, 400)) * x - (1 - x) * math.log(1 - x)
    assert binary_entropy_eta(x) == pytest.approx(series, abs=1e-12)
    assert binary_entropy_eta(x) == pytest.approx(0.47395, abs=1e-5)
    # tiny roundoff outside [0, 1] is clamped
    assert binary_entropy_eta(-0.5 * TOL_EIG) == 0.0
    with pytest.raises(DomainError):
        binary_entropy_eta(1.1)
    with pytest.raises(DomainError):
        binary_entropy_eta(np.array([0.2, -1e-6]))


def test_eta_dominates_quadratic():
    x = np.linspace(0.0, 1.0, 10_000)
    assert np.all(binary_entropy_eta(x) >= x * (1 - x))


def test_trace_purity_examples():
    assert trace_purity_bound(np.array([[0.5]])) == 0.25
    assert trace_purity_bound(Q2) == pytest.approx(0.5 - 2 / PI ** 2, abs=1e-15)
    assert trace_purity_bound(np.eye(4)) == 0.0


def test_entropy_examples():
    r1, r2 = entropy_of_state(HALF, 1), entropy_of_state(HALF, 2)
    assert r1.entropy_nats == pytest.approx(math.log(2), abs=1e-15)
    assert r1.trace_bound == pytest.approx(0.25, abs=1e-15)
    eta = lambda p: -p * math.log(p) - (1 - p) * math.log(1 - p)  # noqa: E731
    assert r2.entropy_nats == pytest.approx(2 * eta(0.5 + 1 / PI), abs=1e-12)
    assert r2.trace_bound == pytest.approx(0.5 - 2 / PI ** 2, abs=1e-15)
    for L in (1, 4, 9):
        assert entropy_of_state(IntervalUnion.empty(), L).entropy_nats == 0.0
        assert entropy_of_state(IntervalUnion.full(), L).entropy_nats == 0.0


@pytest.mark.parametrize("M", [HALF] + seeded_seas(4, seed=23))
def test_entropy_matches_matrix_log_oracle(M):
    for L in range(1, 7):
        Q = restricted_symbol(M, L).matrix
        w = np.linalg.eigvalsh(Q)
        if w.min() < 1e-8 or w.max() > 1 - 1e-8:
            continue  # logm is ill-conditioned at the spectrum edges
        assert entropy_of_state(M, L).entropy_nats == pytest.approx(_logm_entropy(Q), abs=1e-6)


def test_entropy_of_product_is_sum_over_kronecker_spectrum():
    A, B = seeded_seas(2, seed=29)
    L = 5
    wa = np.linalg.eigvalsh(restricted_symbol(A, L).matrix)
    wb = np.linalg.eigvalsh(restricted_symbol(B, L).matrix)
    expected = float(np.sum(binary_entropy_eta(np.clip(np.multiply.outer(wa, wb).ravel(), 0, 1))))
    assert entropy_of_state(Product((A, B)), L).entropy_nats == pytest.approx(expected, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 24))
def test_bound_chain_and_range(seed, L):
    M = random_interval_sea(np.random.default_rng(seed))
    rec = entropy_of_state(M, L)
    assert rec.entropy_nats >= rec.trace_bound - 1e-9
    assert rec.trace_bound >= -1e-12
    assert rec.eig_residual <= TOL_EIG
    assert rec.trace_bound == pytest.approx(trace_purity_bound(restricted_symbol(M, L)), rel=1e-10, abs=1e-13)


def test_entropy_cap():
    with pytest.raises(ValueError):
        entropy_of_state(Product((HALF, HALF)), 10, cap=64)
