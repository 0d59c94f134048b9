"""Toroidal ball discrepancy at two radii r and 2r over grid centres.

Membership is |p - x| < r in the nearest-image metric; for r < 1/2 at
most one image can lie inside.  Decisions are made in binary64 and
re-decided in exact rational arithmetic whenever a squared distance falls
within a relative 1e-9 of r^2.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import bounds
from .bounds import BoundReport, Constant
from .errors import HypothesisRefusal, PreconditionError
from .geometry import TOROIDAL, GridSpec, PointSet, ball_volume, snap_nearest

_GUARD = 1e-9


def _check(points: PointSet, grid: GridSpec, r) -> None:
    grid.require(points)
    if grid.kind != "torus":
        raise PreconditionError("ball discrepancy needs a torus grid (M even)")
    if points.mode != TOROIDAL:
        raise PreconditionError(f"torus grid needs a toroidal point set, got {points.mode}")
    if not 0 < float(r) < 0.25:
        raise PreconditionError("ball radius must lie in (0, 1/4)")


def _wrap(delta):
    """Nearest-image representative of a coordinate difference, in [-1/2, 1/2)."""
    return delta - math.floor(delta + Fraction(1, 2)) if isinstance(delta, Fraction) else delta - np.floor(delta + 0.5)


def _inside_exact(p: Sequence, x: Sequence, r) -> bool:
    r = Fraction(r)
    s = sum(_wrap(Fraction(a) - Fraction(b)) ** 2 for a, b in zip(p, x))
    return s < r * r


def ball_count(points: PointSet, x: Sequence, r) -> int:
    """#{n : |p_n - x| < r} on the torus."""
    P = points.as_float()
    xf = np.array([float(v) for v in x])
    delta = _wrap(P - xf)
    dist = (delta * delta).sum(axis=1)
    lim = float(r) ** 2
    inside = dist < lim
    exact_rows = points.coords
    for n in np.nonzero(np.abs(dist - lim) <= _GUARD * lim)[0]:
        inside[n] = _inside_exact(exact_rows[n], x, r)
    return int(inside.sum())


def ball_disc(points: PointSet, x: Sequence, r) -> float:
    """#{n : p_n in x + B_r} - N |B_r| with the open ball."""
    if not 0 < float(r) < 0.25:
        raise PreconditionError("ball radius must lie in (0, 1/4)")
    if len(x) != points.d:
        raise PreconditionError("centre dimension differs from the point set")
    return ball_count(points, x, r) - points.N * ball_volume(points.d, float(r))


# count fields --------------------------------------------------------------------


def _point_rows(p: Sequence, M: int, r, limit: float = 0.5):
    """Rows of grid cells j (integers, unwrapped) with |j - M p| < r M.

    Returns (lead, lo, hi): for each admissible leading index vector
    j_1..j_{d-1}, the inclusive range lo..hi of j_d.
    """
    d = len(p)
    if not 0 < float(r) < limit:
        raise PreconditionError(f"radius must lie in (0, {limit})")
    Pf = np.array([float(v) * M for v in p])
    R = float(r) * M
    R2 = R * R
    if d == 1:
        lead = np.zeros((1, 0), dtype=np.int64)
        rem = np.array([R2])
    else:
        axes = [np.arange(math.floor(Pf[i] - R) - 1, math.ceil(Pf[i] + R) + 2, dtype=np.int64) for i in range(d - 1)]
        grids = np.meshgrid(*axes, indexing="ij")
        lead = np.stack([g.ravel() for g in grids], axis=1)
        rem = R2 - ((lead - Pf[: d - 1]) ** 2).sum(axis=1)
        keep = rem > -_GUARD * R2
        lead, rem = lead[keep], rem[keep]
    root = np.sqrt(np.clip(rem, 0, None))
    lo = np.floor(Pf[-1] - root).astype(np.int64)
    hi = np.ceil(Pf[-1] + root).astype(np.int64)

    exact_P = [Fraction(v) * M for v in p]
    exact_R2 = (Fraction(r) * M) ** 2
    base = ((lead - Pf[: d - 1]) ** 2).sum(axis=1) if d > 1 else np.zeros(len(lo))

    def inside(j: np.ndarray, rows: np.ndarray) -> np.ndarray:
        s = base[rows] + (j - Pf[-1]) ** 2
        out = s < R2
        for i in np.nonzero(np.abs(s - R2) <= _GUARD * R2)[0]:
            pt = [int(a) for a in lead[rows[i]]] + [int(j[i])]
            out[i] = sum((a - b) ** 2 for a, b in zip(pt, exact_P)) < exact_R2
        return out

    # the float interval is slightly generous; trim each end to the exact predicate
    for end, step in ((lo, 1), (hi, -1)):
        rows = np.arange(len(lo))
        while rows.size:
            rows = rows[lo[rows] <= hi[rows]]
            bad = ~inside(end[rows], rows)
            rows = rows[bad]
            end[rows] += step
    keep = lo <= hi
    return lead[keep], lo[keep], hi[keep]


def count_rows(points: PointSet, M: int, r, limit: float = 0.5):
    """Row intervals of every point, concatenated; see _point_rows."""
    leads, los, his = [], [], []
    for row in points.coords:
        lead, lo, hi = _point_rows(row, M, r, limit)
        leads.append(lead)
        los.append(lo)
        his.append(hi)
    d = points.d
    if not leads:
        return np.zeros((0, d - 1), dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(leads), np.concatenate(los), np.concatenate(his)


def _accumulate(shape_lead: tuple, M: int, lead, lo, hi) -> np.ndarray:
    """Materialise counts on (slab of leading axes) x M from row intervals."""
    diff = np.zeros(shape_lead + (M + 1,), dtype=np.int32)
    lo_m = np.mod(lo, M)
    length = hi - lo + 1
    end = lo_m + length  # may exceed M when the interval wraps
    plain = end <= M
    idx = tuple(lead.T)
    np.add.at(diff, idx + (lo_m,), 1)
    np.add.at(diff, tuple(a[plain] for a in idx) + (end[plain],), -1)
    wrap = ~plain
    if wrap.any():
        widx = tuple(a[wrap] for a in idx)
        np.add.at(diff, widx + (np.full(int(wrap.sum()), M),), -1)
        np.add.at(diff, widx + (np.zeros(int(wrap.sum()), dtype=np.int64),), 1)
        np.add.at(diff, widx + (end[wrap] - M,), -1)
    return np.cumsum(diff[..., :M], axis=-1, dtype=np.int64)


def ball_count_field(points: PointSet, M: int, r, limit: float = 0.5) -> np.ndarray:
    """counts[j mod M] = #{n : |p_n - j/M| < r}, over the whole grid."""
    d = points.d
    lead, lo, hi = count_rows(points, M, r, limit)
    lead = np.mod(lead, M)
    return _accumulate((M,) * (d - 1), M, lead, lo, hi)


def ball_count_field_brute(points: PointSet, M: int, r) -> np.ndarray:
    """The same field by testing every point against every centre j/M.

    Nearest-image distances are taken point by point over the whole grid;
    decisions within the guard band of the boundary are redone exactly.
    """
    d = points.d
    centres = np.stack(np.meshgrid(*([np.arange(M) / M] * d), indexing="ij"), axis=-1)
    lim = float(r) ** 2
    out = np.zeros((M,) * d, dtype=np.int64)
    for p, row in zip(points.as_float(), points.coords):
        delta = _wrap(centres - p)
        dist = (delta * delta).sum(axis=-1)
        inside = dist < lim
        for j in zip(*np.nonzero(np.abs(dist - lim) <= _GUARD * lim)):
            inside[j] = _inside_exact(row, [Fraction(int(v), M) for v in j], r)
        out += inside
    return out


def count_sums(points: PointSet, M: int, r, slab: int | None = None, limit: float = 0.5) -> tuple[int, int]:
    """(sum_j c_j, sum_j c_j^2), accumulated slab by slab along the first axis."""
    d = points.d
    lead, lo, hi = count_rows(points, M, r, limit)
    if d == 1:
        c = _accumulate((), M, lead, lo, hi)
        return int(c.sum()), int((c * c).sum())
    lead = np.mod(lead, M)
    if slab is None:
        slab = max(1, (1 << 24) // M ** (d - 1))
    s1 = s2 = 0
    for a in range(0, M, slab):
        b = min(M, a + slab)
        sel = (lead[:, 0] >= a) & (lead[:, 0] < b)
        sub = lead[sel].copy()
        sub[:, 0] -= a
        c = _accumulate((b - a,) + (M,) * (d - 2), M, sub, lo[sel], hi[sel])
        s1 += int(c.sum())
        s2 += int((c * c).sum())
    return s1, s2


def ball_sum_sq(points: PointSet, M: int, r, limit: float = 0.5) -> float:
    """sum_j D(j/M, r)^2 = sum c^2 - 2 N |B_r| sum c + M^d N^2 |B_r|^2."""
    N, d = points.N, points.d
    vol = ball_volume(d, float(r))
    s1, s2 = count_sums(points, M, r, limit=limit)
    return math.fsum([float(s2), -2.0 * N * vol * s1, float(M) ** d * N * N * vol * vol])


@dataclass(eq=False)
class BallDiscrepancyEnsemble:
    """D_N(j/M, r) and D_N(j/M, 2r) over the grid; fields are built on demand."""

    grid: GridSpec
    points: PointSet
    r: float

    def __post_init__(self):
        _check(self.points, self.grid, self.r)

    def field(self, which: int = 1) -> np.ndarray:
        """D at radius which*r as a float array indexed by j mod M."""
        self.grid.check_cap()
        rad = which * self.r
        counts = ball_count_field(self.points, self.grid.M, rad)
        return counts - self.points.N * ball_volume(self.grid.d, float(rad))

    def l2_sq(self) -> float:
        M, d = self.grid.M, self.grid.d
        total = ball_sum_sq(self.points, M, self.r) + ball_sum_sq(self.points, M, 2 * self.r)
        return total / float(M) ** d

    def rows(self):
        """Yield (j_1, ..., j_d, D_r, D_2r) with j in J_M^d."""
        M, d = self.grid.M, self.grid.d
        f1, f2 = self.field(1), self.field(2)
        J = list(range(-(M // 2), M - M // 2))
        for j in itertools.product(J, repeat=d):
            idx = tuple(v % M for v in j)
            yield tuple(j) + (float(f1[idx]), float(f2[idx]))


def two_radius_l2(points: PointSet, grid: GridSpec, r, method: str = "direct") -> float:
    """(M^-d sum_{k=1,2} sum_j |D(j/M, k r)|^2)^(1/2)."""
    if method == "direct":
        return math.sqrt(BallDiscrepancyEnsemble(grid, points, r).l2_sq())
    if method == "spectral":
        _check(points, grid, r)
        M, d = grid.M, grid.d
        total = 0.0
        for rad in (r, 2 * r):
            spec = ball_spectrum(points, grid, rad, limit=0.5)
            total += float((np.abs(spec) ** 2).sum()) / float(M) ** d
        return math.sqrt(total / float(M) ** d)
    raise PreconditionError(f"unknown method {method!r}")


# Fourier side --------------------------------------------------------------------

def _lattice_indicator(q: Sequence, M: int, r, limit: float) -> np.ndarray:
    """Indicator of M(-B_r + q) reduced mod M, i.e. integer m with |m/M - q| < r."""
    d = len(q)
    lead, lo, hi = _point_rows(list(q), M, r, limit)
    return _accumulate((M,) * (d - 1), M, np.mod(lead, M), lo, hi)


def ball_spectrum(points: PointSet, grid: GridSpec, r, limit: float = 0.25) -> np.ndarray:
    """sum_n exp(-2 pi i k.z_n/M) chi^_{-B_r+q_n}(k) - |B_r| N M^d delta_0, in FFT order.

    z_n and q_n come from nearest snapping p_n = z_n/M + q_n; each
    chi^_{-B_r+q_n} is the DFT of the lattice set of that residual.
    """
    M, d, N = grid.M, grid.d, points.N
    snapped = snap_nearest(points, grid)
    k = np.meshgrid(*([np.arange(M)] * d), indexing="ij")
    out = np.zeros((M,) * d, dtype=complex)
    for n in range(N):
        chi = np.fft.fftn(_lattice_indicator(snapped.q[n], M, r, limit).astype(np.float64))
        t = sum(kk * int(z) for kk, z in zip(k, snapped.z[n]))
        out += np.exp(-2j * np.pi * np.mod(t, M) / M) * chi
    out[(0,) * d] -= ball_volume(d, float(r)) * N * float(M) ** d
    return out


def ball_fourier_identity_check(points: PointSet, grid: GridSpec, r) -> float:
    """Max |DFT of the brute-force field - per-point formula| over the spectrum maximum."""
    _check(points, grid, r)
    grid.check_cap()
    M, d = grid.M, grid.d
    field_ = ball_count_field_brute(points, M, r) - points.N * ball_volume(d, float(r))
    direct = np.fft.fftn(field_)
    formula = ball_spectrum(points, grid, r)
    scale = max(float(np.abs(direct).max()), 1.0)
    return float(np.abs(direct - formula).max()) / scale


# cosine separation ---------------------------------------------------------------

def achievable_norms_sq(d: int, bound_sq: float) -> list[int]:
    """All n = |k|^2 > 0 with k in Z^d and n < bound_sq."""
    K = int(math.isqrt(max(int(bound_sq), 0))) + 1
    axis = np.arange(0, K + 1) ** 2
    sums = {0}
    for _ in range(d):
        sums = {s + a for s in sums for a in axis.tolist() if s + a < bound_sq}
    return sorted(s for s in sums if s > 0)


def separation_floor(d: int) -> float:
    """sin^2(pi/60), below which neither cosine can fall simultaneously for d != 1 mod 4."""
    return math.sin(math.pi / 60) ** 2


@dataclass(frozen=True)
class CosineSeparationWitness:
    k_norm: float
    r: float
    M: int
    d: int

    @property
    def omega1(self) -> float:
        return (2 * math.pi * self.r + 2 * math.pi * math.sqrt(self.d) / self.M) * self.k_norm - (self.d + 1) * math.pi / 4

    @property
    def omega2(self) -> float:
        return (4 * math.pi * self.r + 2 * math.pi * math.sqrt(self.d) / self.M) * self.k_norm - (self.d + 1) * math.pi / 4

    @property
    def value(self) -> float:
        return math.cos(self.omega1) ** 2 + math.cos(self.omega2) ** 2


def cosine_floor_scan(d: int, r: float, M: int, k_min: float = 0.0) -> tuple[float, CosineSeparationWitness]:
    """Minimum of cos^2 w1 + cos^2 w2 over achievable k_min < |k| < M/(10 sqrt d)."""
    if d % 4 == 1:
        raise HypothesisRefusal(
            "d != 1 mod 4",
            f"d={d} is congruent to 1 mod 4; the two cosines can vanish together",
        )
    bound_sq = M * M / (100 * d)
    best = None
    for n in achievable_norms_sq(d, bound_sq):
        kn = math.sqrt(n)
        if kn <= k_min:
            continue
        w = CosineSeparationWitness(kn, r, M, d)
        if best is None or w.value < best.value:
            best = w
    if best is None:
        raise PreconditionError("no admissible frequency in the scan range")
    return best.value, best


# verification --------------------------------------------------------------------

def theorem3_verify(points: PointSet, r: float, M: int | None = None, C: float | None = None,
                    c: float | None = None, method: str = "direct", **meta) -> BoundReport:
    """Two-radius ball l2 against c r^(d/2) N^(1/2 - 1/2d) with calibrated c."""
    N, d = points.N, points.d
    if d % 4 == 1:
        raise HypothesisRefusal("d != 1 mod 4", f"the two-radius bound excludes d={d}")
    if not 0 < r < 0.25:
        raise PreconditionError("ball radius must lie in (0, 1/4)")
    if C is None:
        C = bounds.ball_floor_factor()
    floor = bounds.ball_min_M(N, d, r, C)
    if M is None:
        M = floor
    if M % 2:
        raise PreconditionError(f"M must be even, got {M}")
    constant = bounds.ball_constant(d) if c is None else c
    grid = GridSpec.torus(d, M)
    lhs = two_radius_l2(points, grid, r, method)
    rhs = bounds.ball_rhs(N, d, r, constant)
    verdict, margin = bounds.compare(lhs * lhs, rhs * rhs)
    if M < floor:
        warnings.warn(f"M={M} is below the floor C N^(1+1/2d)/r = {floor}; verdict suppressed", stacklevel=2)
        verdict = "suppressed"
    return BoundReport(
        theorem="ball-l2",
        lhs=lhs,
        rhs=rhs,
        lhs_sq=lhs * lhs,
        rhs_sq=rhs * rhs,
        constants=[
            Constant("c_ball", constant, bounds.CALIBRATED),
            Constant("C_ball", C, bounds.CALIBRATED),
        ],
        verdict=verdict,
        margin=margin,
        input=bounds.report_input(N=N, d=d, M=M, r=r, method=method, **meta),
    )


def fit_exponent(Ns: Sequence[int], values: Sequence[float]) -> float:
    """Least-squares slope of log(values) against log(N)."""
    slope, _ = np.polyfit(np.log(np.asarray(Ns, dtype=float)), np.log(np.asarray(values, dtype=float)), 1)
    return float(slope)
