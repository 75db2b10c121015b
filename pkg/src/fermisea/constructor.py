"""
Exotic Fermi seas with prescribed sub-volume entropy growth.

Pipeline, for a target ``F_L`` with ``F_L / L^d -> 0``:

1. ``f_L = F_L / L^d`` and a profile ``g`` with
   ``(2/pi^2) g(pi/L) >= safety * f_L``; then ``h = (x g(x))'``.
2. A dyadic ladder of arcs (lengths = gaps = ``a_k = a0 2^-k``) whose
   set-difference measure dominates ``h`` on ``[a_K, a0]``.  Blocks of
   different scales sit ``a0`` apart, so for ``a <= a0`` every arc of length
   ``>= a`` contributes exactly ``a`` to ``Lambda_M(a)``.  The count rule is
   therefore cumulative: ``sum_{j<=k} N_j >= max h(a)/a`` over
   ``[a_{k+1}, a_k]``.
3. Exact verification of ``Lambda_M >= h`` and an entropy sweep that reports
   the smallest ``L`` beyond which ``S_L >= F_L`` on the sampled range.

The chain ``S_L >= (2 L^d / pi^3) g(pi/L)`` (exact prefactors, both signs of
``b`` integrated) only certifies ``S_L >= F_L`` for ``safety >= pi``, which
exceeds the circle's measure budget at any desk-scale ``a0``.  Smaller safety
factors keep the ladder's shape and are certified empirically instead.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BudgetExceeded, NotSubVolume, VerificationFailed
from .fermi_sea import PI, TWO_PI, FermiSea, IntervalUnion, Product, lambda_measure
from .spectrum import entropy_of_state
from .symbol import coefficient_table
from .bounds import fhm_bound_exact

log = logging.getLogger(__name__)

DEFAULT_SAFETY = 0.25
DEFAULT_A0 = 0.125
DEFAULT_K = 7
DEFAULT_MARGIN = 0.05
FAMILIES = ("power", "log_suppressed", "loglog_suppressed", "table")


@dataclass(frozen=True)
class GrowthTarget:
    """Entropy growth target.

    ``power``:              F_L = scale * L^(d - alpha)
    ``log_suppressed``:     F_L = scale * L^d / ln L
    ``loglog_suppressed``:  F_L = scale * L^d / ln ln L
    ``table``:              explicit ``(L, F_L)`` pairs
    """

    family: str
    d: int = 1
    alpha: float = 0.5
    scale: float = 1.0
    table: tuple = ()

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown growth family {self.family!r}")
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if self.family == "table":
            pairs = tuple(sorted((int(L), float(F)) for L, F in self.table))
            if len(pairs) < 2:
                raise ValueError("a table target needs at least two points")
            object.__setattr__(self, "table", pairs)

    def value(self, L: float) -> float:
        L = float(L)
        if self.family == "power":
            return self.scale * L ** (self.d - self.alpha)
        if self.family == "log_suppressed":
            return self.scale * L ** self.d / math.log(L)
        if self.family == "loglog_suppressed":
            return self.scale * L ** self.d / math.log(math.log(L))
        Ls = [p[0] for p in self.table]
        Fs = [p[1] for p in self.table]
        return float(np.interp(L, Ls, Fs))

    def density(self, L: float) -> float:
        """``f_L = F_L / L^d``."""
        return self.value(L) / float(L) ** self.d

    def min_L(self) -> int:
        if self.family == "log_suppressed":
            return 2
        if self.family == "loglog_suppressed":
            return 3
        if self.family == "table":
            return self.table[0][0]
        return 1

    def to_dict(self) -> dict:
        out = {"family": self.family, "d": self.d, "scale": self.scale}
        if self.family == "power":
            out["alpha"] = self.alpha
        if self.family == "table":
            out["table"] = [list(p) for p in self.table]
        return out


@dataclass(frozen=True, eq=False)
class GrowthProfile:
    target: GrowthTarget
    f: Callable[[float], float]
    g: Callable
    h: Callable
    safety: float
    epsilon: float

    def condition_ratio(self, L: float) -> float:
        """``(2/pi^2) g(pi/L) / f_L``; at least ``safety`` on the working range."""
        return (2.0 / PI ** 2) * float(self.g(PI / L)) / self.f(L)


def _closed_form(target: GrowthTarget, c: float):
    """(g, h, epsilon) with ``c = safety * (pi^2/2) * scale``.

    Derivations (u = ln(pi/x), w = ln u):
      power:    g = c (x/pi)^alpha,  h = c (1+alpha) (x/pi)^alpha
      log:      g = c / u,           h = c (1/u + 1/u^2)
      loglog:   g = c / w,           h = c (1/w + 1/(u w^2))
    """
    fam = target.family
    if fam == "power":
        al = target.alpha

        def g(x):
            return c * (np.asarray(x, dtype=float) / PI) ** al

        def h(x):
            return c * (1.0 + al) * (np.asarray(x, dtype=float) / PI) ** al

        return g, h, 1.0
    if fam == "log_suppressed":

        def g(x):
            return c / np.log(PI / np.asarray(x, dtype=float))

        def h(x):
            u = np.log(PI / np.asarray(x, dtype=float))
            return c * (1.0 / u + 1.0 / u ** 2)

        return g, h, 1.0

    def g(x):
        return c / np.log(np.log(PI / np.asarray(x, dtype=float)))

    def h(x):
        u = np.log(PI / np.asarray(x, dtype=float))
        w = np.log(u)
        return c * (1.0 / w + 1.0 / (u * w ** 2))

    return g, h, PI / math.e ** 2


def _table_profile(target: GrowthTarget, safety: float):
    """Piecewise-linear increasing ``h`` whose running mean ``g`` meets the targets.

    Knots sit at ``x_j = pi/L_j``.  The required primitive at ``x_j`` is
    ``x_j * safety * (pi^2/2) * sup_{L' >= L_j} f_{L'}``; each knot value of
    ``h`` is the smallest one that reaches it while keeping ``h`` strictly
    increasing.  ``g(x) = (1/x) int_0^x h`` exactly, so ``h = (x g)'``.
    """
    Ls = np.array([p[0] for p in target.table], dtype=float)
    dens = np.array([target.density(L) for L in Ls])
    envelope = np.maximum.accumulate(dens[::-1])[::-1]
    x = PI / Ls[::-1]
    need = x * safety * (PI ** 2 / 2.0) * envelope[::-1]
    knots_x = np.concatenate(([0.0], x))
    knots_h = [0.0]
    prim = [0.0]
    for j in range(1, knots_x.size):
        dx = knots_x[j] - knots_x[j - 1]
        hj = 2.0 * (need[j - 1] - prim[-1]) / dx - knots_h[-1]
        hj = max(hj, knots_h[-1] * (1.0 + 1e-9) + 1e-15)
        prim.append(prim[-1] + 0.5 * dx * (knots_h[-1] + hj))
        knots_h.append(hj)
    kx = knots_x
    kh = np.array(knots_h)
    kp = np.array(prim)
    slope_tail = (kh[-1] - kh[-2]) / (kx[-1] - kx[-2])

    def h(xq):
        xq = np.asarray(xq, dtype=float)
        inside = np.interp(xq, kx, kh)
        return np.where(xq > kx[-1], kh[-1] + slope_tail * (xq - kx[-1]), inside)

    def primitive(xq):
        xq = np.asarray(xq, dtype=float)
        idx = np.clip(np.searchsorted(kx, xq, side="right") - 1, 0, kx.size - 1)
        hx = h(xq)
        return kp[idx] + 0.5 * (xq - kx[idx]) * (kh[idx] + hx)

    def g(xq):
        xq = np.asarray(xq, dtype=float)
        return primitive(xq) / xq

    return g, h, float(PI / Ls[0])


def growth_profile(target: GrowthTarget, safety: float = DEFAULT_SAFETY) -> GrowthProfile:
    """Derive ``(f, g, h)`` and check the profile invariants on the working range."""
    if safety <= 0:
        raise ValueError("safety must be positive")
    if target.family == "power" and target.alpha <= 0:
        raise NotSubVolume(f"F_L = L^(d - {target.alpha}) does not grow slower than L^{target.d}")
    if target.family == "table":
        Ls = [p[0] for p in target.table]
        dens = [target.density(L) for L in Ls]
        if any(F <= 0 for _, F in target.table):
            raise NotSubVolume("table values must be positive")
        tail = dens[len(dens) // 2:]
        if len(tail) < 2 or any(b >= a for a, b in zip(tail, tail[1:])):
            raise NotSubVolume("F_L / L^d is not strictly decreasing on the tail of the table")
        g, h, eps = _table_profile(target, safety)
    else:
        g, h, eps = _closed_form(target, safety * (PI ** 2 / 2.0) * target.scale)
    profile = GrowthProfile(target=target, f=target.density, g=g, h=h, safety=safety, epsilon=eps)
    _check_profile(profile)
    return profile


def _check_profile(p: GrowthProfile) -> None:
    lo = max(p.target.min_L(), PI / p.epsilon)
    Ls = np.unique(np.geomspace(max(lo, 2.0), max(lo, 2.0) * 1e4, 200).astype(int))
    Ls = Ls[PI / Ls <= p.epsilon]
    if p.target.family == "table":
        Ls = np.array([L for L, _ in p.target.table if PI / L <= p.epsilon])
    ratios = np.array([p.condition_ratio(L) for L in Ls])
    if np.any(ratios < p.safety * (1.0 - 1e-9)):
        raise NotSubVolume(f"g-condition fails: min ratio {ratios.min():.6g} < safety {p.safety}")
    xs = np.geomspace(p.epsilon * 1e-6, p.epsilon, 2000)
    hv = np.asarray(p.h(xs), dtype=float)
    if np.any(np.diff(hv) <= 0) or np.any(hv <= 0):
        raise NotSubVolume("h is not positive and strictly increasing on (0, epsilon]")
    # h must be the derivative of x g(x)
    step = xs * 1e-6
    mid = xs[1:-1]
    st = step[1:-1]
    fd = (mid + st) * p.g(mid + st) - (mid - st) * p.g(mid - st)
    fd = fd / (2.0 * st)
    hm = np.asarray(p.h(mid), dtype=float)
    if p.target.family != "table" and np.max(np.abs(fd - hm) / hm) > 1e-5:
        raise NotSubVolume("h does not match d/dx (x g(x))")


@dataclass(frozen=True)
class MinorantReport:
    ok: bool
    worst_margin: float
    worst_a: float
    points: int


def verify_lambda_minorant(M: FermiSea, h: Callable, a_grid: Sequence[float]) -> MinorantReport:
    """Check ``Lambda_M(a) >= h(a)`` on every grid point."""
    a = np.asarray(a_grid, dtype=float).reshape(-1)
    if a.size == 0 or np.any(a <= 0) or np.any(np.diff(a) < 0):
        raise ValueError("a_grid must be positive and sorted")
    if M.dim != 1:
        shifts = np.zeros((a.size, M.dim))
        shifts[:, -1] = a
        lam = np.atleast_1d(lambda_measure(M, shifts))
    else:
        lam = np.atleast_1d(lambda_measure(M, a))
    margin = lam - np.asarray(h(a), dtype=float)
    i = int(np.argmin(margin))
    return MinorantReport(ok=bool(margin[i] >= 0.0), worst_margin=float(margin[i]), worst_a=float(a[i]), points=a.size)


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Ladder:
    a0: float
    K: int
    scales: tuple
    counts: tuple
    span: float


def ladder_counts(h: Callable, a0: float, K: int, samples: int = 512) -> list[int]:
    """Per-scale counts from the cumulative rule ``sum_{j<=k} N_j >= max h(a)/a``."""
    scales = a0 * 2.0 ** -np.arange(K + 1)
    cumulative = []
    for k in range(K):
        xs = np.geomspace(scales[k + 1], scales[k], samples)
        need = float(np.max(np.asarray(h(xs), dtype=float) / xs))
        cumulative.append(math.ceil(need * (1.0 + 1e-9)))
    cumulative = np.maximum.accumulate(np.asarray(cumulative, dtype=int)) if cumulative else np.array([], int)
    counts = np.diff(np.concatenate(([0], cumulative))).tolist() + [0]
    return [int(c) for c in counts]


def layout_ladder(counts: Sequence[int], a0: float) -> tuple[list[tuple[float, float]], float]:
    """Place blocks left to right from -pi; each block ends with a gap of ``a0``."""
    pairs = []
    x = -PI
    for k, n in enumerate(counts):
        if n <= 0:
            continue
        ak = a0 * 2.0 ** -k
        for _ in range(n):
            pairs.append((x, x + ak))
            x += 2.0 * ak
        x += a0 - ak
    return pairs, x + PI


def minorant_grid(a0: float, K: int, M: IntervalUnion | None = None, points: int = 2048) -> np.ndarray:
    """Geometric grid on ``[a0 2^-K, a0]`` plus the dyadic scales and any kinks of ``Lambda_M``."""
    lo = a0 * 2.0 ** -K
    parts = [np.geomspace(lo, a0, points), a0 * 2.0 ** -np.arange(K + 1)]
    if M is not None and isinstance(M, IntervalUnion):
        kinks = np.abs(M.kinks())
        parts.append(kinks[(kinks >= lo) & (kinks <= a0)])
    return np.unique(np.concatenate(parts))


@dataclass(frozen=True, eq=False)
class ExoticSea:
    sea: IntervalUnion
    ladder: Ladder
    profile: GrowthProfile
    verification: MinorantReport
    metadata: dict = field(default_factory=dict)


def build_exotic_sea(
    profile: GrowthProfile,
    K: int = DEFAULT_K,
    a0: float = DEFAULT_A0,
    margin: float = DEFAULT_MARGIN,
) -> ExoticSea:
    """Dyadic ladder sea whose ``Lambda`` dominates ``profile.h`` on ``[a0 2^-K, a0]``.

    Raises ``BudgetExceeded`` when the ladder does not fit into
    ``2 pi - margin`` and ``VerificationFailed`` when the exact check fails.
    """
    if K < 2:
        raise ValueError("K must be at least 2")
    if not 0.0 < margin < TWO_PI:
        raise ValueError("margin must lie in (0, 2 pi)")
    if not 0.0 < a0 <= profile.epsilon:
        raise ValueError(f"a0 = {a0} must lie in (0, epsilon = {profile.epsilon}]")
    counts = ladder_counts(profile.h, a0, K)
    if sum(counts) == 0:
        pairs, span = [(0.0, 1.0)], 1.0
    else:
        pairs, span = layout_ladder(counts, a0)
    if span > TWO_PI - margin:
        raise BudgetExceeded(f"ladder spans {span:.6g} > 2 pi - margin = {TWO_PI - margin:.6g} (counts {counts})")
    sea = IntervalUnion.from_pairs(pairs)
    grid = minorant_grid(a0, K, sea)
    report = verify_lambda_minorant(sea, profile.h, grid)
    if not report.ok:
        raise VerificationFailed(
            f"Lambda - h = {report.worst_margin:.3e} < 0 at a = {report.worst_a:.6g}"
        )
    scales = tuple(float(a0 * 2.0 ** -k) for k in range(K + 1))
    ladder = Ladder(a0=a0, K=K, scales=scales, counts=tuple(counts), span=span)
    metadata = {
        "target": profile.target.to_dict(),
        "safety": profile.safety,
        "K": K,
        "a0": a0,
        "verified_range": [scales[-1], a0],
    }
    return ExoticSea(sea=sea, ladder=ladder, profile=profile, verification=report, metadata=metadata)


def trivial_sea() -> IntervalUnion:
    """Any nontrivial sea dominates the zero minorant; this is the canonical one."""
    return IntervalUnion.from_pairs([(0.0, 1.0)])


def lift_to_dimension(M1: FermiSea, d: int) -> FermiSea:
    """``[-pi, pi)^(d-1) x M1``; the first ``d-1`` axes are irrelevant."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if M1.dim != 1:
        raise ValueError("only 1-dimensional seas can be lifted")
    if d == 1:
        return M1
    return Product(tuple(IntervalUnion.full() for _ in range(d - 1)) + (M1,))


@dataclass(frozen=True)
class TargetRow:
    L: int
    entropy_nats: float
    target: float
    ratio: float
    chain_value: float


@dataclass(frozen=True)
class TargetReport:
    L_star: int | None
    rows: tuple

    @property
    def reached(self) -> bool:
        return self.L_star is not None


def verify_entropy_target(M: FermiSea, target: GrowthTarget, L_values: Sequence[int], cap: int = 4096) -> TargetReport:
    """Entropy sweep against ``F_L``.

    ``L_star`` is the least sampled ``L`` from which ``S_L >= F_L`` holds for
    every larger sampled ``L``; ``None`` when the largest sample misses.
    ``chain_value`` is the kernel bound ``Tr Q_L (1 - Q_L)``.
    """
    Ls = sorted({int(L) for L in L_values})
    if not Ls:
        raise ValueError("no L values given")
    if M.dim != target.d:
        raise ValueError("sea and target dimensions differ")
    table = coefficient_table(M, Ls[-1])
    rows = []
    for L in Ls:
        rec = entropy_of_state(M, L, table=table, cap=cap, check_residual=False)
        F = target.value(L)
        rows.append(TargetRow(L=L, entropy_nats=rec.entropy_nats, target=F,
                              ratio=rec.entropy_nats / F, chain_value=fhm_bound_exact(M, L, table)))
    L_star = None
    for row in reversed(rows):
        if row.entropy_nats >= row.target:
            L_star = row.L
        else:
            break
    return TargetReport(L_star=L_star, rows=tuple(rows))


@dataclass(frozen=True, eq=False)
class Construction:
    exotic: ExoticSea
    report: TargetReport
    doublings: int


def construct_for_target(
    target: GrowthTarget,
    L_values: Sequence[int],
    safety: float = DEFAULT_SAFETY,
    K: int = DEFAULT_K,
    a0: float = DEFAULT_A0,
    margin: float = DEFAULT_MARGIN,
    max_doublings: int = 1,
    cap: int = 4096,
) -> Construction:
    """Build, verify and sweep; if ``L_star`` is not reached, double the safety factor.

    At most ``max_doublings`` reruns are made; the last attempt is returned
    whether or not it reaches the target.  Only 1-dimensional constructions
    are swept here; lift the sea afterwards for ``d > 1``.
    """
    target_1d = target if target.d == 1 else GrowthTarget(
        target.family, 1, target.alpha, target.scale, target.table)
    for attempt in range(max_doublings + 1):
        profile = growth_profile(target_1d, safety * 2 ** attempt)
        exotic = build_exotic_sea(profile, K=K, a0=a0, margin=margin)
        report = verify_entropy_target(exotic.sea, target_1d, L_values, cap=cap)
        if report.reached or attempt == max_doublings:
            return Construction(exotic=exotic, report=report, doublings=attempt)
        log.info("L_star not reached at safety %g; doubling", profile.safety)
    raise AssertionError("unreachable")
