"""
Spectra of restricted symbols and the entropy functional.

For a pure quasi-free state restricted to the cube, the von Neumann entropy
is ``S_L = sum_i eta(lambda_i)`` over the eigenvalues of ``Q_L``, with the
binary entropy ``eta(x) = -x ln x - (1-x) ln(1-x)`` in nats.  Since
``eta(x) >= x(1-x)``, ``S_L >= Tr Q_L(1 - Q_L)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import entr

from .errors import ConvergenceFailure, DomainError, NotHermitian
from .fermi_sea import FermiSea
from .symbol import RestrictedSymbol, SymbolCoefficients, build_restricted, coefficient_table

TOL_EIG = 1e-9
HERMITIAN_TOL = 1e-12
DEFAULT_CAP = 4096
# eigenpairs sampled for the residual spot check
RESIDUAL_SAMPLES = 8


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    residual: float
    range_excess: float

    @property
    def size(self) -> int:
        return self.eigenvalues.size


@dataclass(frozen=True)
class EntropyRecord:
    L: int
    dim: int
    entropy_nats: float
    trace_bound: float
    eig_residual: float


def _matrix(Q) -> np.ndarray:
    return Q.matrix if isinstance(Q, RestrictedSymbol) else np.asarray(Q)


def _check_hermitian(m: np.ndarray) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotHermitian(f"matrix of shape {m.shape} is not square")
    if m.size == 0:
        return
    scale = max(1.0, float(np.max(np.abs(m))))
    defect = float(np.max(np.abs(m - m.conj().T)))
    if defect > HERMITIAN_TOL * scale:
        raise NotHermitian(f"max |Q - Q^H| = {defect:.3e}")


def eigenvalues(Q, cap: int = DEFAULT_CAP, check_residual: bool = True) -> Spectrum:
    """Full real spectrum of a Hermitian ``Q_L``, ascending.

    With ``check_residual`` a handful of eigenpairs is verified against
    ``||Qv - lambda v|| <= 1e-8 ||Q||``.
    """
    m = _matrix(Q)
    _check_hermitian(m)
    n = m.shape[0]
    if n > cap:
        raise ValueError(f"matrix dimension {n} exceeds the eigensolve cap {cap}")
    try:
        if check_residual:
            w, v = scipy.linalg.eigh(m, check_finite=True)
        else:
            w = scipy.linalg.eigvalsh(m, check_finite=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise ConvergenceFailure(str(exc)) from exc
    w = np.sort(np.asarray(w, dtype=float))
    residual = 0.0
    if check_residual and n:
        cols = np.unique(np.linspace(0, n - 1, min(n, RESIDUAL_SAMPLES)).astype(int))
        r = m @ v[:, cols] - v[:, cols] * w[cols]
        norm = max(float(np.linalg.norm(m, 2)) if n <= 64 else float(np.abs(w).max()), 1e-300)
        residual = float(np.max(np.linalg.norm(r, axis=0))) / norm
        if residual > 1e-8:
            raise ConvergenceFailure(f"eigenpair residual {residual:.3e} exceeds 1e-8")
    excess = float(max(0.0, -w[0], w[-1] - 1.0)) if n else 0.0
    return Spectrum(eigenvalues=w, residual=residual, range_excess=excess)


def binary_entropy_eta(x):
    """``eta(x) = -x ln x - (1-x) ln(1-x)`` with ``eta(0) = eta(1) = 0``.

    Inputs within ``TOL_EIG`` outside [0, 1] are clamped; anything further
    raises ``DomainError``.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr < -TOL_EIG) or np.any(arr > 1.0 + TOL_EIG) or np.any(np.isnan(arr)):
        raise DomainError("eta is defined on [0, 1]")
    arr = np.clip(arr, 0.0, 1.0)
    out = entr(arr) + entr(1.0 - arr)
    return float(out) if out.ndim == 0 else out


def entropy_from_spectrum(spec: Spectrum) -> float:
    return float(np.sum(binary_entropy_eta(spec.eigenvalues)))


def trace_purity_bound(Q) -> float:
    """``Tr Q - Tr Q^2`` straight from the entries (no eigensolve)."""
    m = _matrix(Q)
    _check_hermitian(m)
    return float(np.trace(m).real - np.sum(np.abs(m) ** 2))


def entropy_of_state(
    M: FermiSea,
    L: int,
    table: SymbolCoefficients | None = None,
    cap: int = DEFAULT_CAP,
    check_residual: bool = True,
) -> EntropyRecord:
    """Entropy and trace bound of the cube of edge ``L``.

    ``table`` may be any coefficient table of radius >= L-1 (e.g. one built
    for the largest L of a sweep).
    """
    if L < 1:
        raise ValueError("L must be a positive integer")
    if L ** M.dim > cap:
        raise ValueError(f"L = {L} in d = {M.dim} exceeds the eigensolve cap {cap}")
    if table is None:
        table = coefficient_table(M, L)
    Q = build_restricted(table.restrict(L - 1), L)
    spec = eigenvalues(Q, cap=cap, check_residual=check_residual)
    w = np.clip(spec.eigenvalues, 0.0, 1.0) if spec.range_excess <= TOL_EIG else spec.eigenvalues
    entropy = float(np.sum(binary_entropy_eta(w)))
    bound = float(np.sum(w * (1.0 - w)))
    return EntropyRecord(L=L, dim=M.dim, entropy_nats=entropy, trace_bound=bound, eig_residual=spec.range_excess)
