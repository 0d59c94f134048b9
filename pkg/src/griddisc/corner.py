"""Discrepancy with respect to anchored boxes [0, x_1) x ... x [0, x_d).

Grid quantities are computed from the histogram of z = floor(M p): the
number of points in [0, j/M) is the d-fold prefix sum of that histogram at
index j - 1.  All reductions are exact; only final square roots are floats.
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
from .errors import DimensionMismatchError, PreconditionError
from .geometry import CORNER, GridSpec, PointSet, ceil_scaled, floor_scaled, nu_for
from .haar import BAdicBox, BAdicInterval, HaarIndexSet, exact_dot

_LIMIT = 2**62
_LETTERS = "abcdefghijklmnop"


def exact_sum(arr: np.ndarray) -> int:
    """Exact integer sum of an int64 array, without overflow."""
    arr = np.asarray(arr)
    if arr.size == 0:
        return 0
    peak = int(np.abs(arr).max())
    if peak * arr.size < _LIMIT:
        return int(arr.sum())
    if arr.ndim > 1 and peak * arr.shape[-1] < _LIMIT:
        return sum(exact_sum(row) for row in arr.sum(axis=-1))
    return sum(int(v) for v in arr.ravel().tolist())


def _check_corner(points: PointSet, grid: GridSpec) -> None:
    grid.require(points)
    if grid.kind != "corner":
        raise PreconditionError("anchored-box discrepancy needs a corner grid")
    if points.mode != CORNER:
        raise PreconditionError(f"corner grid needs a corner point set, got {points.mode}")


def corner_disc(points: PointSet, x: Sequence) -> Fraction:
    """#{n : p_n in [0, x)} - N x_1 ... x_d, exactly.

    A coordinate equal to 0 is inside every anchored box with positive
    side, since the boxes are closed at the origin.
    """
    x = [Fraction(v) for v in x]
    if len(x) != points.d:
        raise DimensionMismatchError(points.d, len(x), "box corner")
    if any(not 0 < v <= 1 for v in x):
        raise PreconditionError("box corner components must lie in (0, 1]")
    count = 0
    for row in points.ratios:
        if all(Fraction(n, den) < xi for (n, den), xi in zip(row, x)):
            count += 1
    return count - points.N * math.prod(x)


@dataclass(frozen=True)
class GridNorms:
    """Exact grid l2 square plus the l-infinity norm and its argmax (1-based j)."""

    l2_sq: Fraction
    linf: Fraction
    argmax: tuple[int, ...]

    @property
    def l2(self) -> float:
        return math.sqrt(self.l2_sq)


@dataclass(eq=False)
class CornerDiscrepancyField:
    """Counts c(j) and scaled values M^d D(j/M) on {1..M}^d, built on demand."""

    grid: GridSpec
    points: PointSet

    def __post_init__(self):
        _check_corner(self.points, self.grid)
        self.grid.check_cap()
        if self.points.N * self.grid.M ** self.grid.d >= _LIMIT:
            raise PreconditionError("N M^d too large for exact int64 grid values")

    @property
    def d(self) -> int:
        return self.grid.d

    @property
    def M(self) -> int:
        return self.grid.M

    @cached_property
    def z(self) -> np.ndarray:
        return floor_scaled(self.points, self.M)

    @cached_property
    def counts(self) -> np.ndarray:
        """counts[j_1-1, ..., j_d-1] = #{n : p_n in [0, j/M)}."""
        M, d = self.M, self.d
        hist = np.zeros((M,) * d, dtype=np.int64)
        if self.points.N:
            np.add.at(hist, tuple(self.z.T), 1)
        for axis in range(d):
            np.cumsum(hist, axis=axis, out=hist)
        hist.setflags(write=False)
        return hist

    def _volume_slab(self, lo: int, hi: int) -> np.ndarray:
        """Prod_i j_i for first-axis indices j_1 - 1 in [lo, hi)."""
        j = np.arange(1, self.M + 1, dtype=np.int64)
        vol = np.arange(lo + 1, hi + 1, dtype=np.int64)
        for _ in range(self.d - 1):
            vol = np.multiply.outer(vol, j)
        return vol

    @cached_property
    def scaled(self) -> np.ndarray:
        """M^d D(j/M) = M^d c(j) - N prod j_i, an exact int64 array."""
        out = self.counts * self.M**self.d - self.points.N * self._volume_slab(0, self.M)
        out.setflags(write=False)
        return out

    def value(self, j: Sequence[int]) -> Fraction:
        return Fraction(int(self.scaled[tuple(k - 1 for k in j)]), self.M**self.d)

    def l2_sq(self) -> Fraction:
        """M^-d sum_j D(j/M)^2 via sum c^2, sum c prod j and (sum j^2)^d."""
        M, d, N = self.M, self.d, self.points.N
        c = self.counts
        s_cc = exact_sum(c * c)
        s_cp = 0
        step = max(1, (1 << 22) // M ** (d - 1))
        for lo in range(0, M, step):
            hi = min(M, lo + step)
            s_cp += exact_sum(c[lo:hi] * self._volume_slab(lo, hi))
        s_pp = (M * (M + 1) * (2 * M + 1) // 6) ** d
        total = M ** (2 * d) * s_cc - 2 * M**d * N * s_cp + N * N * s_pp
        return Fraction(total, M ** (3 * d))

    def linf(self) -> tuple[Fraction, tuple[int, ...]]:
        s = self.scaled
        flat = int(np.abs(s).argmax())
        idx = np.unravel_index(flat, s.shape)
        return Fraction(abs(int(s[idx])), self.M**self.d), tuple(int(i) + 1 for i in idx)

    def norms(self) -> GridNorms:
        linf, arg = self.linf()
        return GridNorms(self.l2_sq(), linf, arg)

    def rows(self):
        """Yield (j_1, ..., j_d, count, discrepancy) for field export."""
        denom = self.M**self.d
        for idx in itertools.product(range(self.M), repeat=self.d):
            yield tuple(i + 1 for i in idx) + (int(self.counts[idx]), Fraction(int(self.scaled[idx]), denom))


def grid_l2(points: PointSet, grid: GridSpec) -> GridNorms:
    """Exact grid l2 square, l-infinity norm and argmax on {j/M}^d."""
    return CornerDiscrepancyField(grid, points).norms()


def brute_grid_l2_sq(points: PointSet, grid: GridSpec) -> Fraction:
    """Direct recount at every grid corner; O(M^d N), for cross-checks only."""
    M = grid.M
    total = Fraction(0)
    for j in itertools.product(range(1, M + 1), repeat=grid.d):
        total += corner_disc(points, [Fraction(k, M) for k in j]) ** 2
    return total / M**grid.d


# Haar coefficients ------------------------------------------------------------

def _level_tables(points: PointSet, b: int, r: int, M: int, z: np.ndarray):
    """Suffix sums S[a, n] and weighted sums W[a] for every interval at level r."""
    S = np.empty((b**r, z.shape[0]), dtype=np.int64)
    W = np.empty(b**r, dtype=object)
    for a in range(b**r):
        I = BAdicInterval(b, r, a)
        S[a] = I.suffix_sums(z, M)
        W[a] = I.weighted_grid_sum(M)
    return S, W


def haar_coefficient(points: PointSet, box: BAdicBox, grid: GridSpec) -> Fraction:
    """<D_N, h_R> = M^-d sum_j D(j/M) h_R(j/M), exactly.

    The counting part factorises per point into products of suffix sums
    of h_I over j > floor(M p), so no grid is materialised.
    """
    _check_corner(points, grid)
    if box.d != grid.d:
        raise DimensionMismatchError(grid.d, box.d, "box")
    M, d, N = grid.M, grid.d, points.N
    z = floor_scaled(points, M)
    prod = np.ones(N, dtype=object)
    weighted = 1
    for i, I in enumerate(box.intervals):
        prod = prod * I.suffix_sums(z[:, i], M).astype(object)
        weighted *= I.weighted_grid_sum(M)
    count_part = int(sum(prod.tolist()))
    return Fraction(count_part * M**d - N * weighted, M ** (2 * d))


def level_coefficients(points: PointSet, r: Sequence[int], grid: GridSpec, z: np.ndarray | None = None):
    """All <D_N, h_R> for R in D_r^d at once, as an integer array over M^(2d).

    Returns (numerators, denominator); entry [a_1, ..., a_d] belongs to the
    box with offsets a.
    """
    b, M, d, N = grid.b, grid.M, grid.d, points.N
    if z is None:
        z = floor_scaled(points, M)
    tables = [_level_tables(points, b, ri, M, z[:, i]) for i, ri in enumerate(r)]
    letters = _LETTERS[:d]
    spec = ",".join(f"{c}z" for c in letters) + "->" + letters
    if N:
        T = np.einsum(spec, *(S for S, _ in tables)).astype(object)
    else:
        T = np.zeros(tuple(b**ri for ri in r), dtype=object)
    Wprod = np.ones((), dtype=object)
    for _, W in tables:
        Wprod = np.multiply.outer(Wprod, W)
    return T * M**d - N * Wprod, M ** (2 * d)


def box_occupancy(points: PointSet, b: int, r: Sequence[int]) -> np.ndarray:
    """Boolean array over D_r^d: True where the box (a/b^r, (a+1)/b^r] holds a point."""
    occ = np.zeros(tuple(b**ri for ri in r), dtype=bool)
    if points.N == 0:
        return occ
    idx = np.stack([ceil_scaled(points, b**ri)[:, i] - 1 for i, ri in enumerate(r)], axis=1)
    keep = (idx >= 0).all(axis=1)
    if keep.any():
        occ[tuple(idx[keep].T)] = True
    return occ


# test functions ---------------------------------------------------------------

def _require_window(points: PointSet, grid: GridSpec) -> int:
    _check_corner(points, grid)
    if grid.b is None:
        raise PreconditionError("test functions need a b-adic corner grid")
    nu = grid.nu
    if not grid.b ** (nu - 2) <= points.N < grid.b ** (nu - 1):
        raise PreconditionError(
            f"N={points.N} is outside b^(nu-2) <= N < b^(nu-1) for nu={nu}; "
            f"recompute nu (expected nu={nu_for(max(points.N, 1), grid.b)})"
        )
    return nu


@dataclass(eq=False)
class TestFunctionF:
    """F = sum_r f_r with f_r = -sum of h_R over empty boxes R in D_r^d."""

    grid: GridSpec
    empty: dict[tuple[int, ...], np.ndarray]
    pairings: dict[tuple[int, ...], Fraction]
    norms_sq: dict[tuple[int, ...], Fraction]
    empty_coefficients_ok: bool

    __test__ = False

    @property
    def nu(self) -> int:
        return self.grid.nu

    @property
    def b(self) -> int:
        return self.grid.b

    @property
    def d(self) -> int:
        return self.grid.d

    @property
    def card(self) -> int:
        return len(self.empty)

    @property
    def pairing(self) -> Fraction:
        return sum(self.pairings.values(), Fraction(0))

    @property
    def norm_sq(self) -> Fraction:
        return sum(self.norms_sq.values(), Fraction(0))

    def level_values(self, r: tuple[int, ...]) -> np.ndarray:
        """f_r on the grid {1..M}^d as an int64 array."""
        M, b = self.grid.M, self.b
        j = np.arange(1, M + 1, dtype=np.int64)
        owners, signs = [], 1
        for ri in r:
            # interval (a/b^r, (a+1)/b^r] holding j/M, and the Haar sign there
            owners.append((j * b**ri + M - 1) // M - 1)
            sign = np.zeros(M, dtype=np.int64)
            for a in range(b**ri):
                (lo1, hi1), (lo2, hi2) = BAdicInterval(b, ri, a).grid_ranges(M)
                sign[lo1 - 1:hi1] = -1
                sign[lo2 - 1:hi2] = 1
            signs = np.multiply.outer(signs, sign)
        return -self.empty[r][np.ix_(*owners)].astype(np.int64) * signs

    def grid_values(self) -> np.ndarray:
        self.grid.check_cap()
        return sum(self.level_values(r) for r in self.empty)

    def checks(self) -> dict[str, bool]:
        floor = bounds.haar_pairing_floor(self.b, self.d)
        return {
            "empty_coefficients": self.empty_coefficients_ok,
            "empty_count": all(int(e.sum()) >= self.b**self.nu - self.b ** (self.nu - 1) for e in self.empty.values()),
            "level_pairing": all(p >= floor for p in self.pairings.values()),
            "pairing": self.pairing >= self.card * floor,
            "norm": self.norm_sq <= self.card,
        }

    @property
    def verified(self) -> bool:
        return all(self.checks().values())



def build_F(points: PointSet, grid: GridSpec) -> TestFunctionF:
    """Assemble F and its exact pairing <D_N, F>.

    Each <D_N, f_r> is summed from the exact coefficients of the empty
    boxes, and each of those is checked against -N/b^(2d+2nu).
    """
    nu = _require_window(points, grid)
    b, d, M, N = grid.b, grid.d, grid.M, points.N
    z = floor_scaled(points, M)
    target = Fraction(-N, b ** (2 * d + 2 * nu))
    empty, pairings, norms_sq = {}, {}, {}
    ok = True
    for r in HaarIndexSet(nu, d):
        occ = box_occupancy(points, b, r)
        free = ~occ
        nums, den = level_coefficients(points, r, grid, z)
        coeffs = nums[free]
        if any(Fraction(int(c), den) != target for c in coeffs.tolist()):
            ok = False
        pairings[r] = -Fraction(int(sum(coeffs.tolist())), den)
        # supports of the h_R at one level are disjoint
        support = math.prod(
            sum(hi - lo + 1 for lo, hi in BAdicInterval(b, ri, 0).grid_ranges(M)) for ri in r
        )
        norms_sq[r] = Fraction(int(free.sum()) * support, M**d)
        empty[r] = free
    return TestFunctionF(grid, empty, pairings, norms_sq, ok)


def pairing_on_grid(field: CornerDiscrepancyField, values: np.ndarray) -> Fraction:
    """<D_N, g> = M^-d sum_j D(j/M) g(j/M) for integer grid values g."""
    return Fraction(exact_dot(field.scaled, values), field.M ** (2 * field.d))


@dataclass(eq=False)
class TestFunctionG:
    """G = prod_r (1 + kappa f_r) - 1 in d = 2, evaluated class by class.

    Each grid cell is classified by (number of levels with f_r = +1,
    number with f_r = -1), which determines G there exactly.
    """

    grid: GridSpec
    kappa: Fraction
    class_cells: dict[tuple[int, int], int]
    class_disc: dict[tuple[int, int], int]
    linf: Fraction

    __test__ = False

    @property
    def nu(self) -> int:
        return self.grid.nu

    def value(self, plus: int, minus: int) -> Fraction:
        k = self.kappa
        return (1 + k) ** plus * (1 - k) ** minus - 1

    @property
    def l1(self) -> Fraction:
        total = sum((n * abs(self.value(*c)) for c, n in self.class_cells.items()), Fraction(0))
        return total / self.grid.M**2

    @property
    def pairing(self) -> Fraction:
        total = sum((s * self.value(*c) for c, s in self.class_disc.items()), Fraction(0))
        return total / self.grid.M**4

    def elementary_sums(self) -> list[int]:
        """sum_j G_l(j/M) for l = 0..nu+1, G_l the l-th elementary symmetric term."""
        out = [0] * (self.nu + 2)
        for (p, m), n in self.class_cells.items():
            poly = np.polynomial.polynomial.polymul(
                np.polynomial.polynomial.polypow([1, 1], p), np.polynomial.polynomial.polypow([1, -1], m)
            )
            for ell, coef in enumerate(poly):
                out[ell] += n * int(round(coef))
        return out

    @property
    def bound(self) -> Fraction:
        return bounds.roth_linf_bound(self.kappa, self.nu, self.grid.b)

    def checks(self) -> dict[str, bool]:
        sums = self.elementary_sums()
        return {
            "l1": self.l1 <= 2,
            "higher_terms_vanish": all(s == 0 for s in sums[1:]),
            "pairing": self.pairing / 2 >= self.bound,
            "linf": self.linf >= self.bound,
        }

    @property
    def verified(self) -> bool:
        return all(self.checks().values())


def build_G(points: PointSet, grid: GridSpec, kappa=None) -> TestFunctionG:
    """The d = 2 product test function with its l1 norm and pairing."""
    if grid.d != 2:
        raise PreconditionError("the product test function is defined for d = 2 only")
    if kappa is None:
        kappa = bounds.kappa_opt(grid.b)
    kappa = Fraction(kappa).limit_denominator(10**12) if isinstance(kappa, float) else Fraction(kappa)
    if not 0 < kappa < 1:
        raise PreconditionError("kappa must lie in (0, 1)")
    F = build_F(points, grid)
    grid.check_cap()
    M, nu = grid.M, grid.nu
    plus = np.zeros((M, M), dtype=np.int16)
    minus = np.zeros((M, M), dtype=np.int16)
    for r in F.empty:
        f = F.level_values(r)
        plus += f > 0
        minus += f < 0
    cls = plus.astype(np.int64) * (nu + 2) + minus
    field = CornerDiscrepancyField(grid, points)
    n_cls = (nu + 2) ** 2
    cells = np.bincount(cls.ravel(), minlength=n_cls)
    disc = np.zeros(n_cls, dtype=np.int64)
    np.add.at(disc, cls.ravel(), field.scaled.ravel())
    class_cells, class_disc = {}, {}
    for c in np.nonzero(cells)[0].tolist():
        key = divmod(c, nu + 2)
        class_cells[key] = int(cells[c])
        class_disc[key] = int(disc[c])
    linf, _ = field.linf()
    return TestFunctionG(grid, kappa, class_cells, class_disc, linf)


# continuous oracle --------------------------------------------------------------

def continuous_l2_oracle(points: PointSet, exact: bool | None = None, cap: int = 10**5):
    """Integral of D(A(x))^2 over [0,1]^d by the pairwise product formula.

    Returns the square: a Fraction for exact point sets (or ``exact=True``),
    otherwise a float accumulated with math.fsum.
    """
    N, d = points.N, points.d
    if N > cap:
        raise PreconditionError(f"N={N} exceeds the oracle cap {cap}")
    if exact is None:
        exact = points.exact
    if exact:
        P = [[Fraction(n, den) for n, den in row] for row in points.ratios]
        pair = Fraction(0)
        for u in P:
            for v in P:
                pair += math.prod(1 - max(a, c) for a, c in zip(u, v))
        single = sum((math.prod((1 - a * a) / 2 for a in u) for u in P), Fraction(0))
        return pair - 2 * N * single + Fraction(N * N, 3**d)
    X = points.as_float()
    pair_terms = []
    for i in range(N):
        pair_terms.append(float(np.prod(1 - np.maximum(X[i], X), axis=1).sum()))
    pair = math.fsum(pair_terms)
    single = math.fsum(np.prod((1 - X * X) / 2, axis=1).tolist())
    return pair - 2 * N * single + N * N / 3**d


# verification -------------------------------------------------------------------

def theorem1_verify(points: PointSet, b: int = 2, tau: int = 1, cap: int | None = None, **meta) -> BoundReport:
    """Grid l2 on M = b^(nu+tau) against ((b-1)/b^(2d+3)) (log_b N)^((d-1)/2) / sqrt((d-1)!)."""
    N, d = points.N, points.d
    if N < b:
        raise PreconditionError(f"need N >= b, got N={N}, b={b}")
    kwargs = {} if cap is None else {"cap": cap}
    grid = GridSpec.for_points(N, d, b, tau, **kwargs)
    norms = grid_l2(points, grid)
    rhs_sq = bounds.roth_rhs_sq(N, b, d)
    verdict, margin = bounds.compare(norms.l2_sq, rhs_sq)
    constants = [Constant("c_roth", bounds.roth_constant(b, d), bounds.EXPLICIT)]
    if d == 1:
        constants.append(Constant("(d-1)!", 1, bounds.CONVENTION))
    return BoundReport(
        theorem="corner-l2",
        lhs=norms.l2,
        rhs=math.sqrt(rhs_sq),
        lhs_sq=norms.l2_sq,
        rhs_sq=rhs_sq,
        constants=constants,
        verdict=verdict,
        margin=margin,
        input=bounds.report_input(N=N, d=d, M=grid.M, b=b, tau=tau, nu=grid.nu, **meta),
        extra={"linf": float(norms.linf), "argmax": list(norms.argmax)},
    )


def theorem1_linf_verify(points: PointSet, b: int = 2, tau: int = 1, kappa=None, **meta) -> BoundReport:
    """d = 2 grid l-infinity against kappa (nu+1) [(b-1) b^-7 - kappa b^-5/(b-1-kappa)] / 2."""
    if points.d != 2:
        raise PreconditionError("the l-infinity bound is verified for d = 2 only")
    N = points.N
    if N < b:
        raise PreconditionError(f"need N >= b, got N={N}, b={b}")
    grid = GridSpec.for_points(N, 2, b, tau)
    G = build_G(points, grid, kappa)
    rhs = G.bound
    checks = G.checks()
    verdict = "pass" if G.linf >= rhs else "fail"
    return BoundReport(
        theorem="corner-linf",
        lhs=float(G.linf),
        rhs=float(rhs),
        lhs_sq=G.linf**2,
        rhs_sq=rhs**2,
        constants=[Constant("kappa", float(G.kappa), bounds.CONVENTION)],
        verdict=verdict,
        margin=float(G.linf / rhs) if rhs > 0 else math.inf,
        input=bounds.report_input(N=N, d=2, M=grid.M, b=b, tau=tau, nu=grid.nu, **meta),
        extra={"l1_G": float(G.l1), "pairing_G": float(G.pairing), "checks": checks},
    )
