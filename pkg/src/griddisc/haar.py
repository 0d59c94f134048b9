"""b-adic intervals, boxes and Haar functions, in exact arithmetic.

A b-adic interval is I = (a/b^r, (a+1)/b^r].  Its Haar function is -1 on
the first child of width b^-(r+1), +1 on the second child and 0 elsewhere
(for b > 2 the remaining b - 2 children carry 0).

On the grid {j/M : j = 1..M} every Haar function is constant on runs of
consecutive j, so all grid sums below are computed from integer index
ranges rather than by materialising the grid.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import DimensionMismatchError, PreconditionError
from .geometry import GridSpec


def _range_count(lo: int, hi: int) -> int:
    return max(0, hi - lo + 1)


def _range_sum(lo: int, hi: int) -> int:
    """lo + (lo+1) + ... + hi, zero for an empty range."""
    if hi < lo:
        return 0
    return (lo + hi) * (hi - lo + 1) // 2


@dataclass(frozen=True)
class BAdicInterval:
    b: int
    r: int
    a: int

    def __post_init__(self):
        if self.b < 2 or self.r < 0 or not 0 <= self.a < self.b**self.r:
            raise PreconditionError(f"invalid b-adic interval b={self.b} r={self.r} a={self.a}")

    @property
    def left(self) -> Fraction:
        return Fraction(self.a, self.b**self.r)

    @property
    def right(self) -> Fraction:
        return Fraction(self.a + 1, self.b**self.r)

    @property
    def length(self) -> Fraction:
        return Fraction(1, self.b**self.r)

    def contains(self, x) -> bool:
        return self.left < x <= self.right

    def __call__(self, x) -> int:
        """h_I(x) in {-1, 0, 1}; x may be a Fraction, int or float."""
        t = Fraction(x) * self.b ** (self.r + 1) - self.a * self.b
        if 0 < t <= 1:
            return -1
        if 1 < t <= 2:
            return 1
        return 0

    def grid_ranges(self, M: int) -> tuple[tuple[int, int], tuple[int, int]]:
        """Inclusive index ranges of j in 1..M where h_I(j/M) is -1 and +1."""
        scale = self.b ** (self.r + 1)
        base = self.a * self.b
        e0 = (M * base) // scale
        e1 = (M * (base + 1)) // scale
        e2 = (M * (base + 2)) // scale
        return (e0 + 1, e1), (e1 + 1, e2)

    def grid_values(self, M: int) -> np.ndarray:
        """h_I(j/M) for j = 1..M (entry j-1)."""
        (lo1, hi1), (lo2, hi2) = self.grid_ranges(M)
        out = np.zeros(M, dtype=np.int8)
        out[lo1 - 1:hi1] = -1
        out[lo2 - 1:hi2] = 1
        return out

    def grid_sum(self, M: int) -> int:
        (lo1, hi1), (lo2, hi2) = self.grid_ranges(M)
        return _range_count(lo2, hi2) - _range_count(lo1, hi1)

    def weighted_grid_sum(self, M: int) -> int:
        """sum_{j=1}^{M} j h_I(j/M)."""
        (lo1, hi1), (lo2, hi2) = self.grid_ranges(M)
        return _range_sum(lo2, hi2) - _range_sum(lo1, hi1)

    def suffix_sums(self, z: np.ndarray, M: int) -> np.ndarray:
        """S(z) = sum_{j=z+1}^{M} h_I(j/M), vectorised over integer z in 0..M."""
        (lo1, hi1), (lo2, hi2) = self.grid_ranges(M)
        z = np.asarray(z, dtype=np.int64)
        neg = np.clip(hi1 - np.maximum(z + 1, lo1) + 1, 0, None)
        pos = np.clip(hi2 - np.maximum(z + 1, lo2) + 1, 0, None)
        return pos - neg


@dataclass(frozen=True)
class BAdicBox:
    """R = I_1 x ... x I_d, stored as resolutions ``r`` and offsets ``a``."""

    b: int
    r: tuple[int, ...]
    a: tuple[int, ...]

    def __post_init__(self):
        if len(self.r) != len(self.a):
            raise DimensionMismatchError(len(self.r), len(self.a), "offset vector")
        for ri, ai in zip(self.r, self.a):
            BAdicInterval(self.b, ri, ai)

    @classmethod
    def from_intervals(cls, intervals: Sequence[BAdicInterval]) -> "BAdicBox":
        bases = {I.b for I in intervals}
        if len(bases) != 1:
            raise PreconditionError("all intervals of a box share one base")
        return cls(bases.pop(), tuple(I.r for I in intervals), tuple(I.a for I in intervals))

    @property
    def d(self) -> int:
        return len(self.r)

    @property
    def intervals(self) -> tuple[BAdicInterval, ...]:
        return tuple(BAdicInterval(self.b, ri, ai) for ri, ai in zip(self.r, self.a))

    @property
    def volume(self) -> Fraction:
        return Fraction(1, self.b ** sum(self.r))

    def contains(self, x: Sequence) -> bool:
        return all(I.contains(xi) for I, xi in zip(self.intervals, x))

    def __call__(self, x: Sequence) -> int:
        if len(x) != self.d:
            raise DimensionMismatchError(self.d, len(x))
        value = 1
        for I, xi in zip(self.intervals, x):
            value *= I(xi)
            if value == 0:
                break
        return value

    def grid_values(self, M: int) -> np.ndarray:
        """h_R on the full grid {1..M}^d; only for small grids."""
        out = np.ones((1,) * 0, dtype=np.int8)
        for I in self.intervals:
            out = np.multiply.outer(out, I.grid_values(M))
        return out.astype(np.int8)


def haar_1d(interval: BAdicInterval, x) -> int:
    return interval(x)


def haar_box(box: BAdicBox, x: Sequence) -> int:
    return box(x)


def compositions(nu: int, d: int) -> Iterator[tuple[int, ...]]:
    """All r in N^d with r_1 + ... + r_d = nu, in lexicographic order."""
    if d == 1:
        yield (nu,)
        return
    for first in range(nu + 1):
        for rest in compositions(nu - first, d - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class HaarIndexSet:
    """H_nu^d, the resolution vectors of total order nu."""

    nu: int
    d: int

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return compositions(self.nu, self.d)

    def __len__(self) -> int:
        return math.comb(self.nu + self.d - 1, self.d - 1)

    @property
    def card(self) -> int:
        return len(self)


def enumerate_boxes(b: int, r: Sequence[int]) -> Iterator[BAdicBox]:
    """Lazily yield the b^(r_1+...+r_d) boxes of D_r^d."""
    r = tuple(r)
    for a in itertools.product(*(range(b**ri) for ri in r)):
        yield BAdicBox(b, r, a)


def haar_mean_zero_check(interval: BAdicInterval, grid: GridSpec) -> Fraction:
    """(1/M) sum_{j=1}^{M} h_I(j/M); exactly zero when M = b^(nu+tau), r <= nu."""
    if grid.nu is not None and interval.r > grid.nu:
        warnings.warn(
            f"resolution r={interval.r} exceeds nu={grid.nu}; the mean-zero identity is not guaranteed",
            stacklevel=2,
        )
    return Fraction(interval.grid_sum(grid.M), grid.M)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """A function on the corner grid {j/M : j = 1..M}^d, stored as values/scale.

    ``values[j_1-1, ..., j_d-1]`` holds the integer (or Fraction) numerator.
    """

    d: int
    M: int
    values: np.ndarray
    scale: int = 1

    def __post_init__(self):
        if self.values.shape != (self.M,) * self.d:
            raise DimensionMismatchError(self.d, self.values.ndim, "grid function")

    @classmethod
    def constant(cls, d: int, M: int, value: int = 1) -> "GridFunction":
        return cls(d, M, np.full((M,) * d, value, dtype=np.int64))

    @classmethod
    def haar(cls, box: BAdicBox, M: int) -> "GridFunction":
        return cls(box.d, M, box.grid_values(M).astype(np.int64))

    @classmethod
    def from_callable(cls, d: int, M: int, fn: Callable) -> "GridFunction":
        """Tabulate fn(j/M) with exact Fraction arguments."""
        vals = np.empty((M,) * d, dtype=object)
        for j in itertools.product(range(1, M + 1), repeat=d):
            vals[tuple(k - 1 for k in j)] = fn(tuple(Fraction(k, M) for k in j))
        return cls(d, M, vals)

    def __call__(self, j: Sequence[int]):
        return Fraction(self.values[tuple(k - 1 for k in j)]) / self.scale


def exact_dot(u: np.ndarray, v: np.ndarray):
    """sum(u * v) in exact integer (or Fraction) arithmetic."""
    u = np.asarray(u).ravel()
    v = np.asarray(v).ravel()
    if u.dtype != object and v.dtype != object:
        u = u.astype(np.int64)
        v = v.astype(np.int64)
        bound = int(np.abs(u).max(initial=0)) * int(np.abs(v).max(initial=0)) * u.size
        if bound < 2**62:
            return int(np.dot(u, v))
    return sum(int(x) * int(y) if not isinstance(x, Fraction) and not isinstance(y, Fraction) else x * y
               for x, y in zip(u.tolist(), v.tolist()))


def inner_product(f: GridFunction, g: GridFunction) -> Fraction:
    """<f, g> = M^-d sum_j f(j/M) g(j/M)."""
    if f.d != g.d or f.M != g.M:
        raise PreconditionError(f"grid functions live on different grids ({f.d},{f.M}) vs ({g.d},{g.M})")
    total = exact_dot(f.values, g.values)
    return Fraction(total) / (f.scale * g.scale * f.M**f.d)
