"""Toroidal cube discrepancy over grid centres and grid half-sizes.

Cubes are Q(s) = [-s, s)^d + Z^d translated to x = j/M, with s = r/M for
r = 1..M/2-1.  With z = floor(M p), a point lies in x + Q(r/M) exactly
when z - j is in [-r, r-1] mod M, so every count is a cyclic window sum
of the point histogram.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from . import bounds
from .bounds import BoundReport, Constant
from .errors import PreconditionError
from .geometry import TOROIDAL, GridSpec, PointSet, SnappedSet, snap_corner
from .spectral import SpectralTable, exp_sums, histogram, radius_weight, radius_weight_table


def _check_torus(points: PointSet, grid: GridSpec) -> None:
    grid.require(points)
    if grid.kind != "torus":
        raise PreconditionError("cube discrepancy needs a torus grid (M even)")
    if points.mode != TOROIDAL:
        raise PreconditionError(f"torus grid needs a toroidal point set, got {points.mode}")


def cube_disc(points: PointSet, x: Sequence, s) -> Fraction:
    """#{n : p_n in x + Q(s)} - N (2s)^d, with wrapped half-open sides [x_i - s, x_i + s)."""
    s = Fraction(s)
    x = [Fraction(v) for v in x]
    if len(x) != points.d:
        raise PreconditionError("centre dimension differs from the point set")
    if not 0 < s < Fraction(1, 2):
        raise PreconditionError("half-size must lie in (0, 1/2)")
    count = 0
    for row in points.ratios:
        if all((Fraction(n, den) - xi + s) % 1 < 2 * s for (n, den), xi in zip(row, x)):
            count += 1
    return count - points.N * (2 * s) ** points.d


def cube_disc_grid(points: PointSet, grid: GridSpec, j: Sequence[int], s) -> Fraction:
    """cube_disc at the grid centre j/M, with s required to lie in S_M."""
    s = Fraction(s)
    if s not in grid.radii:
        raise PreconditionError(f"half-size {s} is not in S_M for M={grid.M}")
    return cube_disc(points, [Fraction(int(v), grid.M) for v in j], s)


def window_counts(H: np.ndarray, r: int) -> np.ndarray:
    """C[j] = sum of H over the cyclic window [j - r, j + r - 1] on every axis."""
    M = H.shape[0]
    out = H
    for axis in range(H.ndim):
        ext = np.concatenate([out, out, out], axis=axis)
        cs = np.cumsum(ext, axis=axis)
        zero = np.zeros_like(np.take(cs, [0], axis=axis))
        cs = np.concatenate([zero, cs], axis=axis)
        j = np.arange(M)
        hi = np.take(cs, j + r + M, axis=axis)
        lo = np.take(cs, j - r + M, axis=axis)
        out = hi - lo
    return out


@dataclass(eq=False)
class CubeDiscrepancyEnsemble:
    """D_N(j/M, r/M) for every residue j in (Z/M)^d and r = 1..M/2-1."""

    grid: GridSpec
    points: PointSet

    def __post_init__(self):
        _check_torus(self.points, self.grid)
        self.grid.check_cap()

    @cached_property
    def snapped(self) -> SnappedSet:
        return snap_corner(self.points, self.grid)

    @cached_property
    def histogram(self) -> np.ndarray:
        return histogram(self.snapped)

    def counts(self, r: int) -> np.ndarray:
        """Integer counts at half-size r/M, indexed by j mod M."""
        if not 1 <= r <= self.grid.M // 2 - 1:
            raise PreconditionError(f"radius index {r} outside 1..M/2-1")
        return window_counts(self.histogram, r)

    def sum_sq(self, r: int) -> Fraction:
        """sum_j D(j/M, r/M)^2 = sum_j c_j^2 - N^2 (2r)^(2d)/M^d, exactly."""
        c = self.counts(r)
        N, d, M = self.points.N, self.grid.d, self.grid.M
        return int((c * c).sum()) - Fraction(N * N * (2 * r) ** (2 * d), M**d)

    def l2_sq(self) -> Fraction:
        M, d = self.grid.M, self.grid.d
        total = sum((self.sum_sq(r) for r in range(1, M // 2)), Fraction(0))
        return total / (M**d * (M // 2 - 1))

    def rows(self):
        """Yield (j_1, ..., j_d, s, D) with j in J_M^d."""
        M, d, N = self.grid.M, self.grid.d, self.points.N
        J = list(range(-(M // 2), M - M // 2))
        for r in range(1, M // 2):
            c = self.counts(r)
            s = Fraction(r, M)
            for j in itertools.product(J, repeat=d):
                yield tuple(j) + (s, int(c[tuple(v % M for v in j)]) - N * (2 * s) ** d)


def ensemble_l2_direct(points: PointSet, grid: GridSpec) -> Fraction:
    """Exact square of the cube ensemble l2 norm by window counting."""
    return CubeDiscrepancyEnsemble(grid, points).l2_sq()


def spectral_l2(table: SpectralTable) -> float:
    """(M^(2d) (M/2-1))^-1 sum_{k != 0} |W(k)|^2 radius_weight(k)."""
    M, d = table.M, table.d
    weight = radius_weight_table(M, d)
    power = table.power()
    power[(0,) * d] = 0.0
    total = math.fsum((power * weight).ravel().tolist()) if power.size <= 1 << 16 else float(
        np.sum(power * weight, dtype=np.float64)
    )
    return total / (float(M) ** (2 * d) * (M // 2 - 1))


def ensemble_l2_spectral(points: PointSet, grid: GridSpec) -> float:
    _check_torus(points, grid)
    grid.check_cap()
    return spectral_l2(exp_sums(snap_corner(points, grid)))


def ensemble_l2(points: PointSet, grid: GridSpec, method: str = "spectral") -> float:
    """Cube ensemble l2 norm; ``method`` is 'spectral' or 'direct'."""
    if method == "direct":
        return math.sqrt(ensemble_l2_direct(points, grid))
    if method == "spectral":
        return math.sqrt(ensemble_l2_spectral(points, grid))
    raise PreconditionError(f"unknown method {method!r}")


# log boxes and auxiliary inequalities ------------------------------------------

def log_box_weight(k: Sequence[int], p: float, d: int | None = None) -> float:
    """(d-1)!^-1 (log_+ p / prod max(1, |k_u|))^(d-1)."""
    if d is None:
        d = len(k)
    if p < 1:
        raise PreconditionError("need p >= 1")
    denom = math.prod(max(1, abs(int(x))) for x in k)
    t = math.log(p / denom)
    if t <= 0:
        return 0.0 if d > 1 else 1.0
    return t ** (d - 1) / math.factorial(d - 1)


@dataclass(frozen=True)
class LogBox:
    """R_(x) = prod_{u<d} [-x_u, x_u] x [-p/(x_1...x_{d-1}), p/(x_1...x_{d-1})]."""

    p: float
    x: tuple[float, ...]

    @property
    def d(self) -> int:
        return len(self.x) + 1

    @property
    def half_widths(self) -> tuple[float, ...]:
        return tuple(self.x) + (self.p / math.prod(self.x),)

    def contains(self, k: Sequence[int]) -> bool:
        return all(abs(int(ku)) <= w for ku, w in zip(k, self.half_widths))

    def integer_bounds(self) -> tuple[int, ...]:
        return tuple(int(math.floor(w + 1e-12)) for w in self.half_widths)


def log_box_family(p: int, d: int, extra: Sequence[float] = ()) -> list[LogBox]:
    """Boxes R_(x) whose integer content changes: x_u ranges over the breakpoints j and p/j."""
    if d < 2:
        raise PreconditionError("the log-box family needs d >= 2")
    cuts = sorted({float(j) for j in range(1, p + 1)} | {p / j for j in range(1, p + 1)} | set(extra))
    boxes = []
    for xs in itertools.product(cuts, repeat=d - 1):
        if math.prod(xs) <= p and all(v >= 1 for v in xs):
            boxes.append(LogBox(float(p), tuple(xs)))
    return boxes


def cassels_montgomery_sum(table: SpectralTable, box: LogBox) -> float:
    """sum over k != 0 in the box of |W(k)|^2."""
    K = box.integer_bounds()
    if any(2 * b >= table.M for b in K):
        raise PreconditionError("box wraps around J_M; need p <= eps M")
    power = table.power()
    idx = np.ix_(*[np.arange(-b, b + 1) % table.M for b in K])
    total = float(power[idx].sum())
    return total - float(power[(0,) * table.d])


def cassels_montgomery_check(table: SpectralTable, box: LogBox) -> tuple[float, float]:
    """(sum, pN - N^2) for one box of the family."""
    N = table.N
    return cassels_montgomery_sum(table, box), box.p * N - N * N


def lemma_log_check(t: float, ell: int) -> bool:
    """t^2 >= (2e/ell)^ell (log_+ t)^ell."""
    if ell < 1:
        raise PreconditionError("need ell >= 1")
    lp = max(math.log(t), 0.0) if t > 0 else 0.0
    rhs = (2 * math.e / ell) ** ell * lp**ell
    return t * t >= rhs * (1 - 1e-12)


def proposition7_bound(k: Sequence[int], M: int, eps: float) -> float:
    """2 4^d eta_d(eps) pi^(-2d) (prod max(1,|k_u|))^-2 floor(M/4)^(2d+1)."""
    d = len(k)
    prod = math.prod(max(1, abs(int(x))) for x in k)
    return 2 * 4**d * bounds.eta(d, eps) / (math.pi ** (2 * d) * prod**2) * (M // 4) ** (2 * d + 1)


def proposition7_check(k: Sequence[int], M: int, eps: float) -> bool:
    """radius_weight(k) >= the proposition's lower bound, for admissible k."""
    d = len(k)
    if not 0 < eps < 1 / (8 * d):
        raise PreconditionError("need 0 < eps < 1/(8d)")
    if not any(k) or any(abs(x) > eps * M for x in k):
        raise PreconditionError("need k != 0 with |k_u| <= eps M")
    if any(not -(M // 2) <= x < M // 2 for x in k):
        raise PreconditionError("k must lie in J_M^d")
    return radius_weight(k, M) >= proposition7_bound(k, M, eps)


def admissible_frequencies(M: int, d: int, eps: float):
    """All k != 0 in J_M^d with |k_u| <= eps M."""
    K = int(math.floor(eps * M + 1e-12))
    for k in itertools.product(range(-K, K + 1), repeat=d):
        if any(k) and all(-(M // 2) <= x < M // 2 for x in k):
            yield k


# verification -------------------------------------------------------------------

def theorem2_verify(points: PointSet, M: int | None = None, method: str = "spectral", **meta) -> BoundReport:
    """Cube ensemble l2 at even M >= 18 d N against the explicit constant."""
    N, d = points.N, points.d
    if N < 1:
        raise PreconditionError("need at least one point")
    floor = bounds.halasz_min_M(N, d)
    if M is None:
        M = floor
    if M < 18 * d * N or M % 2:
        raise PreconditionError(f"need an even M >= 18 d N = {18 * d * N}, got M={M}")
    grid = GridSpec.torus(d, M)
    if method == "direct":
        lhs_sq = ensemble_l2_direct(points, grid)
    else:
        lhs_sq = ensemble_l2_spectral(points, grid)
    rhs_sq = bounds.halasz_rhs_sq(N, d)
    verdict, margin = bounds.compare(lhs_sq, rhs_sq)
    constants = [
        Constant("eta_d(1/9d)", bounds.eta(d, 1 / (9 * d)), bounds.EXPLICIT),
        Constant("c_halasz", bounds.halasz_constant(d), bounds.EXPLICIT),
    ]
    if d == 1:
        constants.append(Constant("(e/(d-1))^(d-1)", 1.0, bounds.CONVENTION))
        constants.append(Constant("(log 2N)^(d-1)", 1.0, bounds.CONVENTION))
    return BoundReport(
        theorem="cube-l2",
        lhs=math.sqrt(lhs_sq),
        rhs=math.sqrt(rhs_sq),
        lhs_sq=lhs_sq,
        rhs_sq=rhs_sq,
        constants=constants,
        verdict=verdict,
        margin=margin,
        input=bounds.report_input(N=N, d=d, M=M, method=method, **meta),
    )
