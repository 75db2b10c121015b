"""
Fejer-kernel lower bound on the entropy.

The trace bound admits the integral representation

    Tr Q_L(1 - Q_L) = (2 pi)^(-2d) int_{T^d} prod_i k_L(a_i) Lambda_M(a) da,

with ``k_L(a) = sin^2(L a/2) / sin^2(a/2)``.  Expanding ``k_L`` in characters
turns the right-hand side into the coefficient sum

    L^d qhat(0) - sum_{|delta_i| < L} prod_i (L - |delta_i|) |qhat(delta)|^2,

which is what :func:`fhm_bound_exact` evaluates.  :func:`fhm_bound_quadrature`
evaluates the integral itself with composite Gauss-Legendre rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MissingCoefficient, QuadratureResolutionError
from .fermi_sea import PI, TWO_PI, FermiSea, Grid, IntervalUnion, Product, canonical_angle
from .symbol import SymbolCoefficients, coefficient_table

# below this |a| the denominator uses its Taylor series
SERIES_SWITCH = 1e-4
PANELS_PER_L = 8
GAUSS_ORDER = 12


def fejer_kernel(L: int, a):
    """``k_L(a) = sin^2(La/2)/sin^2(a/2)`` with ``k_L(2 pi n) = L^2``."""
    if L < 1:
        raise ValueError("L must be a positive integer")
    x = np.asarray(canonical_angle(a), dtype=float)
    half = 0.5 * x
    small = np.abs(x) < SERIES_SWITCH
    safe = np.where(small, 1.0, half)
    # (a/2)/sin(a/2) = 1 + x^2/6 + 7x^4/360 + ...
    ratio = np.where(small, 1.0 + half ** 2 / 6.0 + 7.0 * half ** 4 / 360.0, safe / np.sin(safe))
    # sin(L a/2)/(a/2) = L sinc(L a / 2pi) in numpy's normalised sinc
    core = L * np.sinc(L * x / TWO_PI) * ratio
    out = core * core
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Composite Gauss-Legendre rule on one axis of [-pi, pi]."""

    panels: int
    order: int
    nodes: np.ndarray
    weights: np.ndarray
    L: int


def quadrature_grid(
    L: int,
    panels_per_L: int = PANELS_PER_L,
    order: int = GAUSS_ORDER,
    breakpoints=(),
    lo: float = -PI,
    hi: float = PI,
) -> QuadratureGrid:
    """Panels of width at most ``(hi - lo) / (panels_per_L * L)`` between breakpoints.

    Breakpoints should be the kinks of the integrand.  Each segment between
    consecutive breakpoints is split into equal panels, so the integrand is
    smooth inside every panel and Gauss-Legendre converges at its full order.
    """
    if L < 1:
        raise ValueError("L must be a positive integer")
    h = (hi - lo) / (panels_per_L * L)
    extra = np.asarray(breakpoints, dtype=float).reshape(-1)
    extra = extra[(extra > lo) & (extra < hi)]
    cuts = np.unique(np.concatenate(([lo, hi], extra)))
    # merge near-duplicate breakpoints
    cuts = cuts[np.concatenate(([True], np.diff(cuts) > 1e-14))]
    cuts[-1] = hi
    pieces = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        n = max(1, math.ceil((b - a) / h * (1.0 - 1e-12)))
        pieces.append(np.linspace(a, b, n + 1)[:-1])
    edges = np.concatenate(pieces + [[hi]])
    x, w = np.polynomial.legendre.leggauss(order)
    left, right = edges[:-1], edges[1:]
    half = 0.5 * (right - left)
    mid = 0.5 * (right + left)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return QuadratureGrid(panels=left.size, order=order, nodes=nodes, weights=weights, L=L)


def fejer_normalisation(L: int, grid: QuadratureGrid | None = None) -> float:
    """``(1/2pi) int k_L``; equals ``L`` exactly."""
    grid = grid or quadrature_grid(L)
    return float(np.dot(grid.weights, fejer_kernel(L, grid.nodes)) / TWO_PI)


def fhm_bound_exact(M: FermiSea, L: int, table: SymbolCoefficients | None = None) -> float:
    """Kernel bound through the coefficient identity; equals ``Tr Q_L(1-Q_L)``."""
    if L < 1:
        raise ValueError("L must be a positive integer")
    if table is None:
        table = coefficient_table(M, L)
    if table.radius < L - 1:
        raise MissingCoefficient(f"table radius {table.radius} cannot serve L = {L}")
    t = table.restrict(L - 1)
    d = t.dim
    weights = L - np.abs(np.arange(-(L - 1), L))
    w = np.ones((1,) * d)
    for axis in range(d):
        shape = [1] * d
        shape[axis] = weights.size
        w = w * weights.reshape(shape)
    q0 = float(t.values[(L - 1,) * d].real)
    return float(L ** d * q0 - np.sum(w * np.abs(t.values) ** 2))


def _kinks_1d(M: FermiSea) -> np.ndarray:
    if isinstance(M, IntervalUnion):
        return M.kinks()
    if isinstance(M, Grid):
        # the cell autocorrelation bends at every multiple of the cell width
        m = np.arange(-(M.resolution // 2) - 1, M.resolution // 2 + 2)
        return M.cell_width * m
    return np.array([])


def _overlap_integral(M: FermiSea, L: int, panels_per_L: int, order: int) -> float:
    """``int prod_i k_L(a_i) C_M(a) da`` over the factor's own axes."""
    if isinstance(M, Product):
        return float(np.prod([_overlap_integral(f, L, panels_per_L, order) for f in M.factors]))
    if isinstance(M, Grid) and not M.exact:
        M = Grid(M.dim, M.resolution, M.cells, exact=True)
    g = quadrature_grid(L, panels_per_L, order, breakpoints=_kinks_1d(M))
    if M.dim == 1:
        return float(np.dot(g.weights * fejer_kernel(L, g.nodes), M.overlap_batch(g.nodes[:, None])))
    # tensor rule for multi-dimensional grid seas
    mesh = np.stack(np.meshgrid(*([g.nodes] * M.dim), indexing="ij"), axis=-1).reshape(-1, M.dim)
    w = np.ones(1)
    kw = g.weights * fejer_kernel(L, g.nodes)
    for _ in range(M.dim):
        w = np.multiply.outer(w, kw).ravel()
    return float(np.dot(w[: mesh.shape[0]], M.overlap_batch(mesh)))


def fhm_bound_quadrature(
    M: FermiSea,
    L: int,
    grid: QuadratureGrid | None = None,
    panels_per_L: int = PANELS_PER_L,
    order: int = GAUSS_ORDER,
) -> float:
    """Kernel bound ``(2pi)^-2d int prod k_L Lambda_M`` by quadrature.

    One-dimensional interval seas integrate ``Lambda`` directly on a rule
    refined at its kinks.  Other seas use the separated form
    ``|M| (2 pi L)^d - int prod k_L C_M``, which factorises over products.
    A prebuilt ``grid`` is only accepted for 1-dimensional seas.
    """
    if L < 1:
        raise ValueError("L must be a positive integer")
    d = M.dim
    if grid is not None:
        if d != 1:
            raise ValueError("an explicit grid is only supported for 1-dimensional seas")
        if grid.panels < PANELS_PER_L * L:
            raise QuadratureResolutionError(f"{grid.panels} panels < {PANELS_PER_L}L = {PANELS_PER_L * L}")
    elif panels_per_L < PANELS_PER_L:
        raise QuadratureResolutionError(f"panels_per_L = {panels_per_L} < {PANELS_PER_L}")
    m = M.measure()
    if m == 0.0:
        return 0.0
    # integrate the true overlap of the cell union, not its lattice snapshot
    if isinstance(M, Grid) and not M.exact:
        M = Grid(M.dim, M.resolution, M.cells, exact=True)
    if d == 1 and not isinstance(M, Product):
        g = grid or quadrature_grid(L, panels_per_L, order, breakpoints=_kinks_1d(M))
        lam = np.clip(m - M.overlap_batch(g.nodes[:, None]), 0.0, m)
        return float(np.dot(g.weights * fejer_kernel(L, g.nodes), lam) / TWO_PI ** 2)
    total = m * (TWO_PI * L) ** d - _overlap_integral(M, L, panels_per_L, order)
    return float(total / TWO_PI ** (2 * d))


@dataclass(frozen=True)
class BoundReport:
    L: int
    fhm_quadrature: float
    fhm_exact: float
    trace_bound: float
    relative_gap: float


def bound_report(M: FermiSea, L: int, trace_bound: float, table: SymbolCoefficients | None = None) -> BoundReport:
    exact = fhm_bound_exact(M, L, table)
    quad = fhm_bound_quadrature(M, L)
    scale = max(abs(exact), 1e-300)
    return BoundReport(L=L, fhm_quadrature=quad, fhm_exact=exact, trace_bound=trace_bound,
                       relative_gap=abs(quad - exact) / scale)


@dataclass(frozen=True)
class KernelConstants:
    c1_est: float
    c2_est: float
    L_values: tuple
    mass: tuple
    first_moment: tuple


def kernel_integral_constants(L_list, delta: float, order: int = GAUSS_ORDER) -> KernelConstants:
    """Estimate ``c1, c2`` in ``int_0^delta k_L >= c1 L`` and ``int_0^delta a k_L >= c2 ln L``."""
    if not 0.0 < delta <= PI:
        raise ValueError("delta must lie in (0, pi]")
    Ls = [int(L) for L in L_list]
    if not Ls or min(Ls) <= 1:
        raise ValueError("all L must exceed 1")
    mass, moment = [], []
    for L in Ls:
        panels = max(PANELS_PER_L * L, 16)
        edges = np.linspace(0.0, delta, panels + 1)
        x, w = np.polynomial.legendre.leggauss(order)
        half = 0.5 * np.diff(edges)
        nodes = ((edges[:-1] + half)[:, None] + half[:, None] * x).ravel()
        weights = (half[:, None] * w).ravel()
        k = fejer_kernel(L, nodes)
        mass.append(float(np.dot(weights, k)))
        moment.append(float(np.dot(weights, nodes * k)))
    c1 = min(m / L for m, L in zip(mass, Ls))
    c2 = min(m / math.log(L) for m, L in zip(moment, Ls))
    return KernelConstants(c1_est=c1, c2_est=c2, L_values=tuple(Ls), mass=tuple(mass), first_moment=tuple(moment))
