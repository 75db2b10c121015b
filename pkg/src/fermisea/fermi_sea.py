"""
Measurable subsets of the d-torus and their translation geometry.

The torus is parametrised by [-pi, pi)^d.  Three exact or semi-exact
representations are supported:

``IntervalUnion``
    finite union of disjoint arcs on the circle (d = 1), stored as sorted,
    non-wrapping ``(lo, hi)`` pairs inside [-pi, pi].
``Product``
    Cartesian product of lower-dimensional seas; dimensions add up.
``Grid``
    union of cells of a uniform N^d grid (approximation tier).

The central functional is the set difference measure

    Lambda_M(a) = |M \\ (M + a)| = |M| - |M cap (M + a)|,

evaluated exactly for interval unions and products, and exactly at grid
resolution for grid seas.

Shifts are accepted as scalars (d = 1), length-d vectors or ``(n, d)``
batches.  For 1-dimensional seas a flat array is read as a batch of shifts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import GridSnapError

PI = math.pi
TWO_PI = 2.0 * math.pi

# gaps at or below this are closed when normalising interval lists
MERGE_TOL = 1e-12


def canonical_angle(x):
    """Reduce angles modulo 2*pi into [-pi, pi).

    Values already inside the range are returned untouched, so the map is
    idempotent bit for bit.
    """
    x = np.asarray(x, dtype=float)
    inside = (x >= -PI) & (x < PI)
    reduced = np.mod(x + PI, TWO_PI) - PI
    # np.mod can round up to exactly 2*pi
    reduced = np.where(reduced >= PI, -PI, reduced)
    out = np.where(inside, x, reduced)
    return float(out) if out.ndim == 0 else out


def torus_vector(components, dim: int | None = None) -> np.ndarray:
    """Canonical TorusVector: a float array of d angles in [-pi, pi)."""
    a = np.atleast_1d(np.asarray(components, dtype=float))
    if a.ndim != 1 or a.size < 1:
        raise ValueError("a torus vector needs at least one component")
    if dim is not None and a.size != dim:
        raise ValueError(f"expected a {dim}-component vector, got {a.size}")
    return np.atleast_1d(canonical_angle(a))


def _as_batch(a, dim: int) -> tuple[np.ndarray, bool]:
    """Shape shifts as (n, dim); flag whether the caller passed a single vector."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 0:
        if dim != 1:
            raise ValueError(f"scalar shift given for a {dim}-dimensional sea")
        return arr.reshape(1, 1), True
    if arr.ndim == 1:
        if dim == 1:
            return arr.reshape(-1, 1), arr.size == 1
        if arr.size != dim:
            raise ValueError(f"shift has {arr.size} components, sea has dimension {dim}")
        return arr.reshape(1, dim), True
    if arr.ndim == 2 and arr.shape[1] == dim:
        return arr, False
    raise ValueError(f"cannot interpret shift of shape {arr.shape} for dimension {dim}")


def _normalise_pairs(pairs: list[tuple[float, float]], strict: bool) -> tuple[tuple[float, float], ...]:
    """Canonicalise, split at the seam, sort and merge arcs.

    With ``strict`` an overlap of positive length raises ``ValueError``
    (touching arcs are still merged).
    """
    pieces: list[tuple[float, float, int]] = []
    for idx, pair in enumerate(pairs):
        lo, hi = (float(v) for v in pair)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError(f"interval {idx} has non-finite endpoints")
        length = hi - lo
        if length <= 0.0:
            raise ValueError(f"interval {idx} = [{lo}, {hi}] has non-positive length")
        if length >= TWO_PI:
            if strict and len(pairs) > 1:
                raise ValueError(f"interval {idx} covers the whole circle and overlaps the others")
            return ((-PI, PI),)
        start = canonical_angle(lo)
        end = start + length
        if end > PI:
            pieces.append((start, PI, idx))
            pieces.append((-PI, end - TWO_PI, idx))
        else:
            pieces.append((start, end, idx))
    pieces.sort()
    merged: list[list[float]] = []
    owners: list[int] = []
    for lo, hi, idx in pieces:
        if merged and lo <= merged[-1][1] + MERGE_TOL:
            if strict and lo < merged[-1][1] - MERGE_TOL and owners[-1] != idx:
                raise ValueError(
                    f"interval {idx} overlaps interval {owners[-1]} on "
                    f"[{lo:.17g}, {min(hi, merged[-1][1]):.17g}]"
                )
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
            owners.append(idx)
    # an arc split at the seam may rejoin across -pi/pi only if it covers it all
    if len(merged) == 1 and merged[0][0] <= -PI + MERGE_TOL and merged[0][1] >= PI - MERGE_TOL:
        return ((-PI, PI),)
    return tuple((lo, hi) for lo, hi in merged)


@dataclass(frozen=True)
class IntervalUnion:
    """Finite union of disjoint arcs of the circle.

    ``intervals`` holds sorted, non-wrapping pairs with strictly positive
    gaps.  Use :meth:`from_pairs` to build one from raw (possibly wrapping)
    endpoints.
    """

    intervals: tuple[tuple[float, float], ...]

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]], strict: bool = True) -> "IntervalUnion":
        pairs = [tuple(p) for p in pairs]
        return cls(_normalise_pairs(pairs, strict=strict))

    @classmethod
    def empty(cls) -> "IntervalUnion":
        return cls(())

    @classmethod
    def full(cls) -> "IntervalUnion":
        return cls(((-PI, PI),))

    @property
    def dim(self) -> int:
        return 1

    @property
    def lo(self) -> np.ndarray:
        return np.array([p[0] for p in self.intervals], dtype=float)

    @property
    def hi(self) -> np.ndarray:
        return np.array([p[1] for p in self.intervals], dtype=float)

    @property
    def lengths(self) -> np.ndarray:
        return self.hi - self.lo

    def measure(self) -> float:
        return float(sum(hi - lo for lo, hi in self.intervals))

    def is_full(self) -> bool:
        return len(self.intervals) == 1 and self.intervals[0] == (-PI, PI)

    def translate(self, a) -> "IntervalUnion":
        shift = float(torus_vector(a, 1)[0])
        if shift == 0.0 or not self.intervals or self.is_full():
            return self
        return IntervalUnion.from_pairs(((lo + shift, hi + shift) for lo, hi in self.intervals), strict=False)

    def _cumulative(self, x: np.ndarray) -> np.ndarray:
        """|M cap [-pi, x]| for x in [-pi, pi]."""
        lo, lengths = self.lo, self.lengths
        cum = np.concatenate(([0.0], np.cumsum(lengths)))
        idx = np.searchsorted(lo, x, side="right") - 1
        safe = np.clip(idx, 0, len(lo) - 1)
        partial = np.clip(x - lo[safe], 0.0, lengths[safe])
        return np.where(idx < 0, 0.0, cum[safe] + partial)

    def _arc_overlap(self, start: np.ndarray, length: np.ndarray) -> np.ndarray:
        """|M cap arc| for arcs starting at canonical ``start``."""
        end = start + length
        wraps = end > PI
        first = self._cumulative(np.minimum(end, PI)) - self._cumulative(start)
        tail = np.where(wraps, self._cumulative(np.where(wraps, end - TWO_PI, -PI)), 0.0)
        return first + tail

    def overlap_batch(self, shifts: np.ndarray) -> np.ndarray:
        """|M cap (M + a)| for a column of shifts, shape (n, 1) -> (n,)."""
        s = np.asarray(canonical_angle(np.asarray(shifts, dtype=float).reshape(-1)), dtype=float).reshape(-1)
        if not self.intervals:
            return np.zeros_like(s)
        m = self.measure()
        if self.is_full():
            return np.full_like(s, m)
        starts = canonical_angle(self.lo[None, :] + s[:, None])
        starts = np.asarray(starts, dtype=float).reshape(s.size, -1)
        lengths = np.broadcast_to(self.lengths, starts.shape)
        out = self._arc_overlap(starts, lengths).sum(axis=1)
        out = np.clip(out, 0.0, m)
        return np.where(s == 0.0, m, out)

    def kinks(self) -> np.ndarray:
        """Shifts at which the overlap function changes slope (canonical, sorted)."""
        if not self.intervals or self.is_full():
            return np.array([], dtype=float)
        ends = np.concatenate((self.lo, self.hi))
        diffs = canonical_angle((ends[:, None] - ends[None, :]).ravel())
        return np.unique(np.round(np.asarray(diffs, dtype=float), 15))


@dataclass(frozen=True)
class Product:
    """Cartesian product of seas; the first factor owns the first axes."""

    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise ValueError("a product sea needs at least one factor")

    @property
    def dim(self) -> int:
        return sum(f.dim for f in self.factors)

    def measure(self) -> float:
        return float(np.prod([f.measure() for f in self.factors]))

    def _split(self, shifts: np.ndarray) -> list[np.ndarray]:
        out, offset = [], 0
        for f in self.factors:
            out.append(shifts[:, offset:offset + f.dim])
            offset += f.dim
        return out

    def translate(self, a) -> "Product":
        a = torus_vector(a, self.dim)
        parts = self._split(a.reshape(1, -1))
        return Product(tuple(f.translate(p[0] if f.dim > 1 else p[0, 0]) for f, p in zip(self.factors, parts)))

    def overlap_batch(self, shifts: np.ndarray) -> np.ndarray:
        shifts = np.asarray(shifts, dtype=float).reshape(-1, self.dim)
        result = np.ones(shifts.shape[0])
        for f, part in zip(self.factors, self._split(shifts)):
            result = result * f.overlap_batch(part)
        return result


@dataclass(frozen=True, eq=False)
class Grid:
    """Union of cells of the uniform N^d grid on [-pi, pi)^d.

    Cell ``j`` along an axis covers ``[-pi + j*h, -pi + (j+1)*h)`` with
    ``h = 2*pi/N``; ``cells[i_1, ..., i_d]`` is indexed axis 1 first.

    ``exact=False`` (default) snaps every shift to the nearest cell multiple.
    With ``exact=True`` overlaps at fractional shifts are evaluated exactly by
    multilinear interpolation of integer-shift overlaps (the autocorrelation
    of a union of cells is piecewise multilinear on the cell lattice).
    """

    dim_: int
    resolution: int
    cells: np.ndarray
    exact: bool = False
    _autocorr: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=bool)
        if cells.shape != (self.resolution,) * self.dim_:
            raise ValueError(f"cells must have shape {(self.resolution,) * self.dim_}, got {cells.shape}")
        cells = cells.copy()
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        spectrum = np.fft.fftn(cells.astype(float))
        auto = np.rint(np.fft.ifftn(np.abs(spectrum) ** 2).real).astype(np.int64)
        auto.setflags(write=False)
        object.__setattr__(self, "_autocorr", auto)

    @property
    def dim(self) -> int:
        return self.dim_

    @property
    def cell_width(self) -> float:
        return TWO_PI / self.resolution

    def __eq__(self, other):
        return (
            isinstance(other, Grid)
            and other.dim_ == self.dim_
            and other.resolution == self.resolution
            and other.exact == self.exact
            and np.array_equal(other.cells, self.cells)
        )

    def __hash__(self):
        return hash((self.dim_, self.resolution, self.exact, self.cells.tobytes()))

    def measure(self) -> float:
        return int(self.cells.sum()) * self.cell_width ** self.dim_

    def cell_shift(self, a, snap: bool = True) -> np.ndarray:
        """Express a shift in cells; raise GridSnapError off-lattice when ``snap`` is off."""
        s = np.asarray(a, dtype=float).reshape(-1) / self.cell_width
        m = np.rint(s)
        if not snap and np.any(np.abs(s - m) > 1e-9):
            raise GridSnapError(f"shift {np.asarray(a).tolist()} is not a multiple of 2*pi/{self.resolution}")
        return m.astype(np.int64)

    def translate(self, a, snap: bool = True) -> "Grid":
        m = self.cell_shift(torus_vector(a, self.dim_), snap=snap)
        moved = np.roll(self.cells, tuple(int(v) for v in m), axis=tuple(range(self.dim_)))
        return Grid(self.dim_, self.resolution, moved, self.exact)

    def _integer_overlap(self, m: np.ndarray) -> np.ndarray:
        idx = tuple(np.mod(m[:, i], self.resolution) for i in range(self.dim_))
        return self._autocorr[idx].astype(float)

    def overlap_batch(self, shifts: np.ndarray) -> np.ndarray:
        shifts = np.asarray(shifts, dtype=float).reshape(-1, self.dim_)
        vol = self.cell_width ** self.dim_
        s = shifts / self.cell_width
        if not self.exact:
            return self._integer_overlap(np.rint(s).astype(np.int64)) * vol
        base = np.floor(s)
        frac = s - base
        base = base.astype(np.int64)
        total = np.zeros(shifts.shape[0])
        for corner in np.ndindex(*(2,) * self.dim_):
            c = np.asarray(corner)
            weight = np.prod(np.where(c == 1, frac, 1.0 - frac), axis=1)
            total += weight * self._integer_overlap(base + c)
        return total * vol


FermiSea = Union[IntervalUnion, Product, Grid]


def measure(M: FermiSea) -> float:
    """Lebesgue measure of the sea."""
    return M.measure()


def translate(M: FermiSea, a, snap: bool = True) -> FermiSea:
    """Image ``M + a``; grid seas snap to the cell lattice unless ``snap`` is False."""
    if isinstance(M, Grid):
        return M.translate(a, snap=snap)
    return M.translate(a)


def _checked_overlap(M: FermiSea, batch: np.ndarray, snap: bool) -> np.ndarray:
    if isinstance(M, Grid) and not snap and not M.exact:
        for row in batch:
            M.cell_shift(row, snap=False)
    return M.overlap_batch(batch)


def overlap(M: FermiSea, a, snap: bool = True):
    """Overlap autocorrelation ``|M cap (M + a)|``."""
    batch, single = _as_batch(a, M.dim)
    out = _checked_overlap(M, batch, snap)
    return float(out[0]) if single else out


def lambda_measure(M: FermiSea, a, snap: bool = True):
    """Set difference measure ``Lambda_M(a) = |M \\ (M + a)|``, clipped to [0, |M|]."""
    batch, single = _as_batch(a, M.dim)
    m = M.measure()
    c = _checked_overlap(M, batch, snap)
    lam = np.clip(m - c, 0.0, m)
    lam = np.where(np.all(np.asarray(canonical_angle(batch)).reshape(batch.shape) == 0.0, axis=1), 0.0, lam)
    return float(lam[0]) if single else lam


@dataclass(frozen=True)
class DirectionReport:
    axis: int
    relevant: bool
    max_lambda: float


def classify_directions(M: FermiSea, samples: int = 64, tol: float = 1e-9) -> list[DirectionReport]:
    """Mark each principal direction relevant or irrelevant.

    Axis ``i`` is irrelevant when ``Lambda_M(kappa e_i) < tol`` on the grid
    ``kappa = j*pi/samples``, ``j = 1..samples``.  Since Lambda is even and
    2*pi periodic, kappa in (0, pi] covers every translation along the axis.
    """
    if samples < 8:
        raise ValueError("samples must be at least 8")
    kappa = np.arange(1, samples + 1) * PI / samples
    reports = []
    for axis in range(M.dim):
        shifts = np.zeros((samples, M.dim))
        shifts[:, axis] = kappa
        worst = float(np.max(lambda_measure(M, shifts)))
        reports.append(DirectionReport(axis=axis, relevant=worst >= tol, max_lambda=worst))
    return reports


@dataclass(frozen=True)
class LinearBoundProbe:
    c_est: float
    eps_est: float
    ratios: np.ndarray = field(repr=False)


def linear_bound_probe(M: FermiSea, v, lam_grid, slope: float | None = None) -> LinearBoundProbe:
    """Numerical estimate of a linear lower bound ``Lambda_M(lam v) >= c lam``.

    ``c_est`` is the minimum of ``Lambda(lam v)/lam`` over the grid.  ``eps_est``
    is the largest grid value up to which ``Lambda(lam v) >= slope*lam`` holds
    on the whole prefix; ``slope`` defaults to ``c_est``, pass a smaller value
    to probe the validity radius of a strictly weaker slope.
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != M.dim:
        raise ValueError("direction and sea dimensions differ")
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ValueError("direction must have unit Euclidean norm")
    lam = np.asarray(lam_grid, dtype=float).reshape(-1)
    if lam.size == 0 or np.any(lam <= 0) or np.any(np.diff(lam) < 0):
        raise ValueError("lambda grid must be positive and sorted")
    values = np.atleast_1d(lambda_measure(M, lam[:, None] * v[None, :]))
    ratios = values / lam
    c_est = float(ratios.min())
    s = c_est if slope is None else float(slope)
    holds = values >= s * lam * (1.0 - 1e-12)
    if holds.all():
        eps = float(lam[-1])
    else:
        first_bad = int(np.argmin(holds))
        eps = float(lam[first_bad - 1]) if first_bad > 0 else 0.0
    return LinearBoundProbe(c_est=c_est, eps_est=eps, ratios=ratios)
