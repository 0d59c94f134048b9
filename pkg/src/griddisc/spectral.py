"""Fourier machinery on J_M^d shared by the toroidal cube and ball engines.

Transforms follow F^(k) = sum_{m in J_M^d} F(m/M) exp(-2 pi i k.m/M), so
Plancherel reads sum_m |F(m/M)|^2 = M^-d sum_k |F^(k)|^2.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.special import jv

from .errors import PreconditionError
from .geometry import SnappedSet, ball_volume, centered

_REL_GUARD = 1e-9


@dataclass(frozen=True, eq=False)
class SpectralTable:
    """W(k) = sum_n exp(-2 pi i k.z_n/M), stored in FFT order (index k mod M)."""

    d: int
    M: int
    values: np.ndarray
    histogram: np.ndarray

    def __call__(self, k: Sequence[int]) -> complex:
        return complex(self.values[tuple(int(x) % self.M for x in k)])

    @property
    def N(self) -> int:
        return int(self.histogram.sum())

    def centered(self) -> np.ndarray:
        """Values reordered so that axis index i holds k = i - M/2."""
        return np.fft.fftshift(self.values)

    def power(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def rows(self):
        """Yield (k_1, ..., k_d, Re W, Im W) over J_M^d for spectral dumps."""
        J = range(-(self.M // 2), self.M - self.M // 2)
        for k in itertools.product(J, repeat=self.d):
            w = self(k)
            yield tuple(k) + (w.real, w.imag)


def histogram(snapped: SnappedSet) -> np.ndarray:
    """Point multiplicities per grid cell, indexed by z mod M."""
    H = np.zeros((snapped.M,) * snapped.d, dtype=np.int64)
    if snapped.N:
        np.add.at(H, tuple(snapped.residues.T), 1)
    return H


def exp_sums(snapped: SnappedSet, cap: int | None = None) -> SpectralTable:
    """Exponential sums of the snapped points by a d-dimensional FFT of the histogram."""
    cells = snapped.M**snapped.d
    if cap is not None and cells > cap:
        from .errors import CapExceededError

        raise CapExceededError(cells, cap)
    H = histogram(snapped)
    W = np.fft.fftn(H.astype(np.float64)) if snapped.d else H.astype(complex)
    W.setflags(write=False)
    H.setflags(write=False)
    return SpectralTable(snapped.d, snapped.M, W, H)


def direct_exp_sum(z: np.ndarray, k: Sequence[int], M: int) -> complex:
    """sum_n exp(-2 pi i k.z_n/M) by explicit phases, with exact reduction mod M."""
    t = np.mod(np.asarray(z, dtype=np.int64) @ np.asarray(k, dtype=np.int64), M)
    return complex(np.exp(-2j * np.pi * t / M).sum())


# cube transform -----------------------------------------------------------------

def _sin_pi_frac(num: np.ndarray, den: int) -> np.ndarray:
    """sin(pi num/den) with the integer argument reduced mod 2 den first."""
    num = np.mod(np.asarray(num, dtype=np.int64), 2 * den)
    out = np.sin(np.pi * num / den)
    # integer multiples of pi give exact zeros
    return np.where(num % den == 0, 0.0, out)


def phi(k, r: int, M: int) -> np.ndarray:
    """Phi_r(k) = exp(-pi i k/M) sin(2 pi k r/M)/sin(pi k/M), with Phi_r(0) = 2r.

    Periodic in k with period M, so k is first reduced into J_M.
    """
    k = centered(np.asarray(k, dtype=np.int64), M)
    num = _sin_pi_frac(2 * k * r, M)
    den = _sin_pi_frac(k, M)
    zero = k == 0
    ratio = np.where(zero, 2.0 * r, num / np.where(zero, 1.0, den))
    return np.exp(-1j * np.pi * k / M) * ratio


def phi_sq(k, r, M: int) -> np.ndarray:
    """|Phi_r(k)|^2, broadcasting over k and r."""
    k = centered(np.asarray(k, dtype=np.int64), M)
    r = np.asarray(r, dtype=np.int64)
    num = _sin_pi_frac(2 * k * r, M)
    den = _sin_pi_frac(k, M)
    zero = k == 0
    ratio = np.where(zero, 2.0 * r, num / np.where(zero, 1.0, den))
    return ratio * ratio


def cube_transform(k: Sequence[int], r: int, M: int) -> complex:
    """Transform of the indicator of -Q(r/M) on the grid: prod_u Phi_r(k_u)."""
    if not 1 <= r <= M // 2 - 1:
        raise PreconditionError(f"cube radius index r={r} outside 1..M/2-1")
    return complex(np.prod(phi(np.asarray(k), r, M)))


def cube_transform_direct(k: Sequence[int], r: int, M: int) -> complex:
    """Lattice sum over m in (-r, r]^d of exp(-2 pi i k.m/M)."""
    m = np.arange(-r + 1, r + 1)
    out = 1 + 0j
    for ku in k:
        out *= np.exp(-2j * np.pi * np.mod(ku * m, M) / M).sum()
    return complex(out)


def _cos_pi_frac(num: np.ndarray, den: int) -> np.ndarray:
    """cos(pi num/den) with exact reduction of the integer argument."""
    num = np.mod(np.asarray(num, dtype=np.int64), 2 * den)
    return np.cos(np.pi * num / den)


def radius_weight(k: Sequence[int], M: int, d: int | None = None) -> float:
    """sum_{r=1}^{M/2-1} |cube_transform(k, r)|^2 by the closed form.

    With h nonzero components:
    4^d / (2^(3h) prod sin^2(pi k_u/M)) sum_r r^(2d-2h) prod (1 - cos(4 pi k_u r/M)).
    """
    k = [int(x) for x in centered(np.asarray(k, dtype=np.int64), M)]
    if d is None:
        d = len(k)
    if len(k) != d:
        raise PreconditionError("frequency vector length differs from d")
    nz = [x for x in k if x != 0]
    if not nz:
        raise PreconditionError("radius_weight is defined for k != 0")
    h = len(nz)
    r = np.arange(1, M // 2, dtype=np.int64)
    terms = r.astype(np.float64) ** (2 * d - 2 * h)
    sines = 1.0
    for x in nz:
        terms = terms * (1 - _cos_pi_frac(4 * x * r, M))
        sines *= float(_sin_pi_frac(np.array(x), M)) ** 2
    return 4.0**d / (2.0 ** (3 * h) * sines) * math.fsum(terms.tolist())


def radius_weight_direct(k: Sequence[int], M: int) -> float:
    return math.fsum(
        float(np.prod(phi_sq(np.asarray(k), r, M))) for r in range(1, M // 2)
    )


def radius_weight_table(M: int, d: int) -> np.ndarray:
    """radius_weight(k) for every k in J_M^d in FFT order (entry at k=0 included, equal to sum (2r)^2d)."""
    A = phi_sq(np.arange(M)[:, None], np.arange(1, M // 2)[None, :], M)  # (M, M/2-1)
    if d == 1:
        return A.sum(axis=1)
    if d == 2:
        return A @ A.T
    letters = "abcdefgh"[:d]
    spec = ",".join(c + "r" for c in letters) + "->" + letters
    return np.einsum(spec, *([A] * d), optimize=True)


def cyclic_small_angle_count(k: int, M: int, eps) -> int:
    """#{r in 0..M/2-1 : 1 - cos(4 pi k r/M) <= 1 - cos(2 pi eps)}, exactly.

    For eps < 1/2 the condition says 2kr/M lies within eps of an integer.
    """
    eps = Fraction(eps)
    if M % 2:
        raise PreconditionError("M must be even")
    if not 0 < eps < Fraction(1, 2):
        raise PreconditionError("need 0 < eps < 1/2")
    if not 0 < abs(k) <= eps * M:
        raise PreconditionError(f"need 0 < |k| <= eps M, got k={k}")
    count = 0
    for r in range(M // 2):
        t = (2 * k * r) % M
        if min(t, M - t) <= eps * M:
            count += 1
    return count


def cyclic_small_angle_count_float(k: int, M: int, eps: float) -> int:
    """The same count by direct floating evaluation of the cosines."""
    r = np.arange(M // 2)
    lhs = 1 - _cos_pi_frac(4 * k * r, M)
    rhs = 1 - math.cos(2 * math.pi * float(eps))
    return int((lhs <= rhs + 1e-12).sum())


def sinc_product_G(xi) -> float:
    """prod_j sin(pi xi_j)/(pi xi_j), equal to 1 at xi_j = 0."""
    return float(np.prod(np.sinc(np.asarray(xi, dtype=np.float64))))


# ball transform -----------------------------------------------------------------

def _exact_inside(m: np.ndarray, M: int, q: Sequence, r) -> bool:
    rM = Fraction(r) * M
    s = sum((Fraction(int(mi)) - M * Fraction(qi)) ** 2 for mi, qi in zip(m, q))
    return s < rM * rM


def ball_lattice(r, M: int, q: Sequence, d: int | None = None) -> np.ndarray:
    """Integer m with |m/M - q| < r, i.e. M(-B_r + q), as an (n, d) array.

    Membership is strict.  Floating decisions within a relative 1e-9 of the
    boundary are re-decided in exact rational arithmetic.
    """
    r_f = float(r)
    if not 0 < r_f < 0.25:
        raise PreconditionError("ball radius must lie in (0, 1/4)")
    if d is None:
        d = len(q)
    q_f = np.array([float(v) for v in q], dtype=np.float64)
    R = int(math.ceil(r_f * M)) + 1
    axis = np.arange(-R, R + 1)
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    m = np.stack([g.ravel() for g in grids], axis=1)
    dist = ((m - M * q_f) ** 2).sum(axis=1)
    lim = (r_f * M) ** 2
    inside = dist < lim
    close = np.abs(dist - lim) <= _REL_GUARD * lim
    for idx in np.nonzero(close)[0]:
        inside[idx] = _exact_inside(m[idx], M, q, r)
    return m[inside]


def ball_transform(k: Sequence[int], r, M: int, q: Sequence) -> complex:
    """sum over m in M(-B_r + q) of exp(-2 pi i k.m/M)."""
    m = ball_lattice(r, M, q, len(k))
    t = np.mod(m @ np.asarray(k, dtype=np.int64), M)
    return complex(np.exp(-2j * np.pi * t / M).sum())


def bessel_j(order: float, w):
    """Bessel function of the first kind J_order(w)."""
    return jv(order, w)


def bessel_j_half_closed(n: int, w: float) -> float:
    """J_{n/2}(w) for odd n >= 1 by the spherical Bessel closed forms."""
    if n % 2 == 0 or n < 1:
        raise PreconditionError("closed form needs a half-integer order n/2, n odd")
    l = (n - 1) // 2
    # j_l(w) = sqrt(pi/(2w)) J_{l+1/2}(w), by upward recurrence from j_0, j_1
    j0 = math.sin(w) / w
    if l == 0:
        val = j0
    else:
        j1 = math.sin(w) / w**2 - math.cos(w) / w
        for i in range(1, l):
            j0, j1 = j1, (2 * i + 1) / w * j1 - j0
        val = j1
    return val * math.sqrt(2 * w / math.pi)


def bessel_main_term(k: Sequence[int], r: float, M: int, d: int | None = None) -> float:
    """I_{k,M}(r) = (rM + sqrt d)^(d/2) J_{d/2}(2 pi (rM + sqrt d)|k|/M) / (|k|/M)^(d/2)."""
    if d is None:
        d = len(k)
    norm = math.sqrt(sum(int(x) ** 2 for x in k))
    if norm == 0:
        raise PreconditionError("the Bessel main term is defined for k != 0")
    R = float(r) * M + math.sqrt(d)
    xi = norm / M
    return R ** (d / 2) * float(bessel_j(d / 2, 2 * math.pi * R * xi)) / xi ** (d / 2)


@dataclass(frozen=True)
class BallDecomposition:
    transform: complex
    main_term: float
    remainder: complex
    shell: float

    @property
    def holds(self) -> bool:
        return abs(self.remainder) <= self.shell * (1 + 1e-12) + 1e-9


def ball_decomposition_check(k: Sequence[int], r, M: int, q: Sequence) -> BallDecomposition:
    """R = chi^(k) G(k/M) - I_{k,M}(r) against |E| = vol(ball of radius rM + sqrt d) - lattice count."""
    d = len(k)
    m = ball_lattice(r, M, q, d)
    t = np.mod(m @ np.asarray(k, dtype=np.int64), M)
    chi = complex(np.exp(-2j * np.pi * t / M).sum())
    G = sinc_product_G(np.asarray(k, dtype=np.float64) / M)
    main = bessel_main_term(k, r, M, d)
    shell = ball_volume(d, float(r) * M + math.sqrt(d)) - len(m)
    return BallDecomposition(chi, main, chi * G - main, shell)


def shell_constant(r, M: int, d: int, q: Sequence | None = None) -> float:
    """|E| / (rM)^(d-1), the fitted constant of the shell estimate."""
    if q is None:
        q = [0] * d
    m = ball_lattice(r, M, q, d)
    shell = ball_volume(d, float(r) * M + math.sqrt(d)) - len(m)
    return shell / (float(r) * M) ** (d - 1)
