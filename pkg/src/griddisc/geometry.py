"""Point sets, grids, snapping and point-set generators.

Coordinates are kept either as binary64 floats or as exact ``Fraction``
objects.  Every grid operation (floor, nearest multiple of 1/M, b-adic
box membership) is carried out on the exact integer ratio of each
coordinate, so a float that lies exactly on a grid line is never
misclassified.
"""

from __future__ import annotations

import io
import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CapExceededError, DimensionMismatchError, PreconditionError

DEFAULT_CAP = 2**26

CORNER = "corner"
TOROIDAL = "toroidal"
_MODES = (CORNER, TOROIDAL)


def _as_coordinate(value) -> Fraction | float:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        value = value.strip()
        if "/" in value or value.lstrip("+-").isdigit():
            return Fraction(value)
        return float(value)
    return float(value)


@dataclass(frozen=True, eq=False)
class PointSet:
    """N points in [0,1)^d.

    ``coords`` is an (N, d) array; dtype float64 for binary64 input and
    dtype object (holding ``Fraction``) for exact input.
    """

    coords: np.ndarray
    mode: str = CORNER

    def __post_init__(self):
        coords = self.coords
        if not isinstance(coords, np.ndarray):
            raise TypeError("coords must be a numpy array; use PointSet.from_rows")
        coords = coords.copy()
        object.__setattr__(self, "coords", coords)
        if coords.ndim != 2 or coords.shape[0] < 1 or coords.shape[1] < 1:
            raise PreconditionError(f"need an (N, d) array with N, d >= 1, got {coords.shape}")
        if self.mode not in _MODES:
            raise PreconditionError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if coords.dtype == object:
            ok = all(isinstance(c, Fraction) and 0 <= c < 1 for c in coords.flat)
        else:
            coords = np.ascontiguousarray(coords, dtype=np.float64)
            object.__setattr__(self, "coords", coords)  # no-op for float64 input
            ok = bool(np.all((coords >= 0.0) & (coords < 1.0)))
        if not ok:
            raise PreconditionError("every coordinate must satisfy 0 <= c < 1")
        self.coords.flags.writeable = False

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence], mode: str = CORNER) -> "PointSet":
        parsed = [[_as_coordinate(v) for v in row] for row in rows]
        if not parsed:
            raise PreconditionError("a point set needs at least one point")
        d = len(parsed[0])
        for row in parsed:
            if len(row) != d:
                raise DimensionMismatchError(d, len(row))
        if all(isinstance(v, float) for row in parsed for v in row):
            return cls(np.array(parsed, dtype=np.float64), mode)
        arr = np.empty((len(parsed), d), dtype=object)
        for i, row in enumerate(parsed):
            for k, v in enumerate(row):
                arr[i, k] = v if isinstance(v, Fraction) else Fraction(v)
        return cls(arr, mode)

    @property
    def N(self) -> int:
        return self.coords.shape[0]

    @property
    def d(self) -> int:
        return self.coords.shape[1]

    @property
    def exact(self) -> bool:
        return self.coords.dtype == object

    @cached_property
    def ratios(self) -> list[list[tuple[int, int]]]:
        """Exact (numerator, denominator) of every coordinate."""
        return [[c.as_integer_ratio() for c in row] for row in self.coords.tolist()]

    def as_float(self) -> np.ndarray:
        if self.exact:
            return self.coords.astype(np.float64)
        return self.coords

    def with_mode(self, mode: str) -> "PointSet":
        return PointSet(self.coords, mode)

    def __len__(self) -> int:
        return self.N

    def __repr__(self) -> str:
        kind = "exact" if self.exact else "float"
        return f"PointSet(N={self.N}, d={self.d}, mode={self.mode}, {kind})"


@dataclass(frozen=True)
class GridSpec:
    """Grid of resolution M in dimension d.

    ``kind='corner'`` samples anchored boxes at j/M, j = 1..M; when ``b`` is
    given, M must equal b**(nu + tau) with tau >= 1.  ``kind='torus'``
    samples centres j/M, j in J_M, and radii in S_M; M must be even.
    """

    d: int
    M: int
    kind: str = "corner"
    b: int | None = None
    nu: int | None = None
    tau: int | None = None
    cap: int = field(default=DEFAULT_CAP, compare=False)

    def __post_init__(self):
        if self.d < 1:
            raise PreconditionError("dimension must be positive")
        if self.M < 1:
            raise PreconditionError("grid resolution must be positive")
        if self.kind == "corner":
            if self.b is not None:
                if self.b < 2 or self.nu is None or self.tau is None or self.tau < 1:
                    raise PreconditionError("b-adic corner grid needs b >= 2, nu and tau >= 1")
                if self.M != self.b ** (self.nu + self.tau):
                    raise PreconditionError(
                        f"corner grid needs M = b^(nu+tau) = {self.b ** (self.nu + self.tau)}, got {self.M}"
                    )
        elif self.kind == "torus":
            if self.M % 2:
                raise PreconditionError(f"torus grid needs M even, got {self.M}")
        else:
            raise PreconditionError(f"unknown grid kind {self.kind!r}")

    @classmethod
    def corner(cls, d: int, M: int, cap: int = DEFAULT_CAP) -> "GridSpec":
        return cls(d, M, "corner", cap=cap)

    @classmethod
    def badic(cls, d: int, b: int, nu: int, tau: int = 1, cap: int = DEFAULT_CAP) -> "GridSpec":
        return cls(d, b ** (nu + tau), "corner", b, nu, tau, cap=cap)

    @classmethod
    def for_points(cls, N: int, d: int, b: int, tau: int = 1, cap: int = DEFAULT_CAP) -> "GridSpec":
        """Corner grid of the discrete Roth bound: nu from b^(nu-2) <= N < b^(nu-1)."""
        return cls.badic(d, b, nu_for(N, b), tau, cap=cap)

    @classmethod
    def torus(cls, d: int, M: int, cap: int = DEFAULT_CAP) -> "GridSpec":
        return cls(d, M, "torus", cap=cap)

    @property
    def cells(self) -> int:
        return self.M**self.d

    def check_cap(self) -> None:
        if self.cells > self.cap:
            raise CapExceededError(self.cells, self.cap)

    @property
    def J(self) -> np.ndarray:
        """J_M = {-M/2, ..., M/2 - 1} (torus grids)."""
        return np.arange(-(self.M // 2), self.M - self.M // 2)

    @property
    def radii(self) -> list[Fraction]:
        """S_M = {1/M, ..., 1/2 - 1/M}."""
        return [Fraction(r, self.M) for r in range(1, self.M // 2)]

    def require(self, points: PointSet) -> None:
        if points.d != self.d:
            raise DimensionMismatchError(self.d, points.d)


def nu_for(N: int, b: int) -> int:
    """The integer nu with b^(nu-2) <= N < b^(nu-1)."""
    if N < 1 or b < 2:
        raise PreconditionError("need N >= 1 and b >= 2")
    nu = 2
    while b ** (nu - 1) <= N:
        nu += 1
    return nu


def centered(z: np.ndarray, M: int) -> np.ndarray:
    """Map residues mod M into J_M."""
    z = np.mod(z, M)
    return np.where(z >= M - M // 2, z - M, z)


@dataclass(frozen=True, eq=False)
class SnappedSet:
    """Grid representatives of a point set.

    ``z`` holds integer lattice vectors.  For floor snapping z = floor(M p)
    (re-centred into J_M on torus grids).  For nearest snapping z is taken
    mod M in {0..M-1}, ``q`` holds the exact residuals p - z/M (mod 1).
    """

    z: np.ndarray
    M: int
    origin: PointSet
    q: np.ndarray | None = None

    @property
    def N(self) -> int:
        return self.z.shape[0]

    @property
    def d(self) -> int:
        return self.z.shape[1]

    @property
    def residues(self) -> np.ndarray:
        """z mod M, the histogram index of each point."""
        return np.mod(self.z, self.M)

    def q_float(self) -> np.ndarray:
        if self.q is None:
            return np.zeros(self.z.shape)
        return self.q.astype(np.float64)


def floor_scaled(points: PointSet, M: int) -> np.ndarray:
    """floor(M p) componentwise, exactly."""
    if not points.exact and M & (M - 1) == 0:
        # scaling by a power of two is exact in binary64
        return np.floor(points.coords * M).astype(np.int64)
    out = [[(M * n) // den for n, den in row] for row in points.ratios]
    return np.array(out, dtype=np.int64)


def ceil_scaled(points: PointSet, K: int) -> np.ndarray:
    """ceil(K p) componentwise, exactly."""
    if not points.exact and K & (K - 1) == 0:
        return np.ceil(points.coords * K).astype(np.int64)
    out = [[-((-K * n) // den) for n, den in row] for row in points.ratios]
    return np.array(out, dtype=np.int64)


def _check_mode(points: PointSet, grid: GridSpec) -> None:
    grid.require(points)
    want = CORNER if grid.kind == "corner" else TOROIDAL
    if points.mode != want:
        raise PreconditionError(f"{grid.kind} grid needs a {want} point set, got {points.mode}")


def snap_corner(points: PointSet, grid: GridSpec) -> SnappedSet:
    """Floor snapping, z_n = floor(M p_n).

    On corner grids z stays in {0..M-1}; on torus grids it is re-centred
    into J_M.  Discrepancy at every grid argument is unchanged.
    """
    _check_mode(points, grid)
    if grid.M < 2:
        raise PreconditionError("snapping needs M >= 2")
    z = floor_scaled(points, grid.M)
    if grid.kind == "torus":
        z = centered(z, grid.M)
    return SnappedSet(z, grid.M, points)


def snap_nearest(points: PointSet, grid: GridSpec) -> SnappedSet:
    """Nearest snapping p = z/M + q with q in [-1/(2M), 1/(2M))^d.

    Ties (M p an integer plus 1/2) go to the upper grid point so that the
    residual lands on the closed end -1/(2M) of the interval.
    """
    grid.require(points)
    if grid.kind != "torus":
        raise PreconditionError("nearest snapping needs a torus grid")
    M = grid.M
    zs, qs = [], []
    for row in points.ratios:
        zrow, qrow = [], []
        for n, den in row:
            z = (2 * M * n + den) // (2 * den)
            zrow.append(z % M)
            qrow.append(Fraction(n, den) - Fraction(z, M))
        zs.append(zrow)
        qs.append(qrow)
    q = np.empty((points.N, points.d), dtype=object)
    for i, row in enumerate(qs):
        for k, v in enumerate(row):
            q[i, k] = v
    return SnappedSet(np.array(zs, dtype=np.int64), M, points, q)


# generators -----------------------------------------------------------------

def gen_lattice(K: int, d: int, mode: str = CORNER, cap: int = DEFAULT_CAP) -> PointSet:
    """The K^d points (j_1/K, ..., j_d/K), j_i in {0..K-1}."""
    if K < 1:
        raise PreconditionError("K must be positive")
    if K**d > cap:
        raise CapExceededError(K**d, cap)
    axis = [Fraction(j, K) for j in range(K)]
    return PointSet.from_rows(itertools.product(axis, repeat=d), mode)


def radical_inverse(n: int, b: int) -> Fraction:
    """phi_b(n): mirror the base-b digits of n about the radix point."""
    if b < 2 or n < 0:
        raise PreconditionError("need b >= 2 and n >= 0")
    num, den = 0, 1
    while n:
        n, digit = divmod(n, b)
        num = num * b + digit
        den *= b
    return Fraction(num, den)


def gen_van_der_corput(b: int, N: int, mode: str = CORNER) -> PointSet:
    return PointSet.from_rows([[radical_inverse(n, b)] for n in range(N)], mode)


def gen_hammersley(b: int, N: int, mode: str = CORNER) -> PointSet:
    """Two-dimensional Hammersley set (n/N, phi_b(n)), n = 0..N-1."""
    return PointSet.from_rows([[Fraction(n, N), radical_inverse(n, b)] for n in range(N)], mode)


def gen_uniform_random(N: int, d: int, seed: int, mode: str = CORNER) -> PointSet:
    rng = np.random.default_rng(seed)
    return PointSet(rng.random((N, d)), mode)


# point-set files ------------------------------------------------------------

_HEADER = re.compile(r"#\s*d\s*=\s*(\d+)\s+mode\s*=\s*(corner|toroidal)\s*$")


def format_coordinate(value) -> str:
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    return repr(float(value))


def dumps_points(points: PointSet) -> str:
    lines = [f"# d={points.d} mode={points.mode}"]
    for row in points.coords.tolist():
        lines.append(",".join(format_coordinate(v) for v in row))
    return "\n".join(lines) + "\n"


def loads_points(text: str) -> PointSet:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise PreconditionError("empty point-set file")
    m = _HEADER.match(lines[0].strip())
    if m is None:
        raise PreconditionError("first line must be '# d=<d> mode=<corner|toroidal>'")
    d, mode = int(m.group(1)), m.group(2)
    rows = []
    for ln in lines[1:]:
        fields = ln.split(",")
        if len(fields) != d:
            raise DimensionMismatchError(d, len(fields))
        rows.append(fields)
    return PointSet.from_rows(rows, mode)


def write_points(points: PointSet, path: str | Path | io.TextIOBase) -> None:
    text = dumps_points(points)
    if isinstance(path, (str, Path)):
        Path(path).write_text(text, encoding="utf-8")
    else:
        path.write(text)


def read_points(path: str | Path) -> PointSet:
    return loads_points(Path(path).read_text(encoding="utf-8"))


def torus_distance_sq(points: np.ndarray, centre: np.ndarray) -> np.ndarray:
    """Squared nearest-image distance on the unit torus."""
    delta = np.abs(points - centre) % 1.0
    delta = np.minimum(delta, 1.0 - delta)
    return np.sum(delta * delta, axis=-1)


def ball_volume(d: int, r: float) -> float:
    """Lebesgue measure pi^(d/2) r^d / Gamma(d/2 + 1)."""
    return math.pi ** (d / 2) * r**d / math.gamma(d / 2 + 1)
