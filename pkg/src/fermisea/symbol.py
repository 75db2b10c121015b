"""
Fourier coefficients of a Fermi sea indicator and the restricted symbol Q_L.

For a sea ``M`` the two-point matrix of the pure state is

    Q[k, l] = qhat(l - k),   qhat(delta) = (2 pi)^-d  int_M exp(-i delta.a) da.

``Q_L`` keeps the rows and columns of the cube {1..L}^d; lattice point ``k``
maps to row ``sum_i (k_i - 1) L^(i-1)`` (axis 1 varies fastest).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import MissingCoefficient
from .fermi_sea import TWO_PI, FermiSea, Grid, IntervalUnion, Product


def _interval_coefficients(M: IntervalUnion, deltas: np.ndarray) -> np.ndarray:
    """Closed form per arc [u, v]: (len/2pi) exp(-i delta c) sinc(delta len / 2pi)."""
    if not M.intervals:
        return np.zeros(deltas.shape, dtype=complex)
    if M.is_full():
        # characters are orthogonal; the sinc form only gets this to roundoff
        return (deltas == 0).astype(complex)
    centre = 0.5 * (M.lo + M.hi)
    length = M.lengths
    d = deltas[:, None].astype(float)
    terms = (length / TWO_PI) * np.exp(-1j * d * centre) * np.sinc(d * length / TWO_PI)
    out = terms.sum(axis=1)
    out[deltas == 0] = M.measure() / TWO_PI
    return out


def _grid_coefficients(M: Grid, radius: int) -> np.ndarray:
    """Exact coefficients of a cell union via one FFT.

    Each cell contributes ``phi(delta) exp(-i delta c_j)`` with ``c_j`` the cell's
    lower corner; the lattice sum is a DFT of the occupancy up to a sign.
    """
    n = M.resolution
    h = M.cell_width
    deltas = np.arange(-radius, radius + 1)
    phi = (h / TWO_PI) * np.exp(-0.5j * deltas * h) * np.sinc(deltas * h / TWO_PI)
    sign = np.where(deltas % 2 == 0, 1.0, -1.0)
    spectrum = np.fft.fftn(M.cells.astype(float))
    idx = np.mod(deltas, n)
    table = spectrum[np.ix_(*([idx] * M.dim))]
    for axis in range(M.dim):
        shape = [1] * M.dim
        shape[axis] = deltas.size
        table = table * (phi * sign).reshape(shape)
    centre = (radius,) * M.dim
    table[centre] = M.measure() / TWO_PI ** M.dim
    return table


def _table_values(M: FermiSea, radius: int) -> tuple[np.ndarray, str]:
    if isinstance(M, IntervalUnion):
        return _interval_coefficients(M, np.arange(-radius, radius + 1)), "closed-form"
    if isinstance(M, Product):
        values, methods = None, []
        for f in M.factors:
            v, m = _table_values(f, radius)
            values = v if values is None else np.multiply.outer(values, v)
            methods.append(m)
        method = "closed-form" if all(m == "closed-form" for m in methods) else "grid-fft"
        return values, method
    if isinstance(M, Grid):
        return _grid_coefficients(M, radius), "grid-fft"
    raise TypeError(f"unsupported sea type {type(M).__name__}")


@dataclass(frozen=True, eq=False)
class SymbolCoefficients:
    """Table of ``qhat(delta)`` for every ``|delta_i| <= radius``.

    ``values[delta_1 + radius, ..., delta_d + radius]`` holds ``qhat(delta)``.
    """

    dim: int
    radius: int
    values: np.ndarray
    method: str

    def __call__(self, delta) -> complex:
        delta = np.atleast_1d(np.asarray(delta, dtype=int))
        if delta.size != self.dim:
            raise ValueError("difference index and table dimensions differ")
        if np.any(np.abs(delta) > self.radius):
            raise MissingCoefficient(f"delta {delta.tolist()} outside table radius {self.radius}")
        return complex(self.values[tuple(delta + self.radius)])

    def restrict(self, radius: int) -> "SymbolCoefficients":
        """Centre slice covering ``|delta_i| <= radius``."""
        if radius > self.radius:
            raise MissingCoefficient(f"radius {radius} exceeds table radius {self.radius}")
        cut = self.radius - radius
        sl = tuple(slice(cut, cut + 2 * radius + 1) for _ in range(self.dim))
        return SymbolCoefficients(self.dim, radius, self.values[sl], self.method)


def fourier_coefficient(M: FermiSea, delta) -> complex:
    """Single coefficient ``qhat(delta)``."""
    delta = np.atleast_1d(np.asarray(delta, dtype=int))
    if delta.size != M.dim:
        raise ValueError("difference index and sea dimensions differ")
    radius = int(np.max(np.abs(delta)))
    return coefficient_table(M, radius + 1)(delta)


@lru_cache(maxsize=32)
def _cached_table(M: FermiSea, radius: int) -> SymbolCoefficients:
    values, method = _table_values(M, radius)
    values = np.asarray(values, dtype=complex)
    values.setflags(write=False)
    return SymbolCoefficients(M.dim, radius, values, method)


def coefficient_table(M: FermiSea, L: int) -> SymbolCoefficients:
    """All coefficients needed for ``Q_L`` (``|delta_i| <= L - 1``).

    Tables are memoised per sea, so an L-sweep should request the largest L
    once and slice smaller ones with :meth:`SymbolCoefficients.restrict`.
    """
    if L < 1:
        raise ValueError("L must be a positive integer")
    return _cached_table(M, int(L) - 1)


@dataclass(frozen=True, eq=False)
class RestrictedSymbol:
    L: int
    dim: int
    matrix: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T))) if self.size else 0.0


def build_restricted(table: SymbolCoefficients, L: int) -> RestrictedSymbol:
    """Assemble ``Q_L`` from a coefficient table (block Toeplitz with Toeplitz blocks)."""
    if L < 1:
        raise ValueError("L must be a positive integer")
    if table.radius < L - 1:
        raise MissingCoefficient(f"table radius {table.radius} cannot serve L = {L}")
    d = table.dim
    r = table.radius
    # array axes (k_d..k_1, l_d..l_1) so that a C-order reshape yields row(k)
    index = []
    for axis in range(d):
        k_shape = [1] * (2 * d)
        l_shape = [1] * (2 * d)
        k_shape[d - 1 - axis] = L
        l_shape[2 * d - 1 - axis] = L
        k = np.arange(L).reshape(k_shape)
        l = np.arange(L).reshape(l_shape)
        index.append(l - k + r)
    blocks = table.values[tuple(index)]
    n = L ** d
    matrix = np.ascontiguousarray(blocks.reshape(n, n))
    return RestrictedSymbol(L=L, dim=d, matrix=matrix)


def restricted_symbol(M: FermiSea, L: int) -> RestrictedSymbol:
    return build_restricted(coefficient_table(M, L), L)


def lattice_row(k, L: int) -> int:
    """Row index of the lattice point ``k`` (1-based coordinates)."""
    k = np.asarray(k, dtype=int)
    return int(sum((int(ki) - 1) * L ** i for i, ki in enumerate(k)))


def write_matrix_csv(Q: RestrictedSymbol, path) -> None:
    """Dump ``Q_L`` row-major; each line holds ``re,im`` pairs for one row."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in Q.matrix:
            fh.write(",".join(f"{z.real!r},{z.imag!r}" for z in row.tolist()))
            fh.write("\n")
