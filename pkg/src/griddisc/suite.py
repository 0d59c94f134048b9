"""Named point-set families used by the verification sweeps and the calibration run."""

from __future__ import annotations

import math

from .geometry import CORNER, TOROIDAL, PointSet, gen_hammersley, gen_lattice, gen_uniform_random, gen_van_der_corput


def _kth_root(N: int, d: int) -> int | None:
    K = round(N ** (1 / d))
    for cand in (K - 1, K, K + 1):
        if cand >= 1 and cand**d == N:
            return cand
    return None


def point_suite(N: int, d: int, seeds=range(3), b: int = 2, mode: str = CORNER) -> list[tuple[str, PointSet]]:
    """Random sets for each seed, plus the structured sets that exist for (N, d)."""
    out = [(f"random-{s}", gen_uniform_random(N, d, s, mode)) for s in seeds]
    if d == 1:
        out.append((f"vdc-{b}", gen_van_der_corput(b, N, mode)))
    if d == 2:
        out.append((f"hammersley-{b}", gen_hammersley(b, N, mode)))
    K = _kth_root(N, d)
    if K is not None:
        out.append((f"lattice-{K}", gen_lattice(K, d, mode)))
    return out


def torus_suite(N: int, d: int, seeds=range(3), b: int = 2) -> list[tuple[str, PointSet]]:
    return point_suite(N, d, seeds, b, TOROIDAL)


# sizes used by the acceptance sweeps; the d = 3 corner sizes keep M <= 2^8
CORNER_SIZES = {
    (2, 1): [2, 3, 5, 16, 50, 127, 200],
    (2, 2): [2, 4, 9, 16, 50, 100, 200],
    (2, 3): [2, 8, 27, 40, 63],
    (3, 1): [3, 5, 27, 81, 200],
    (3, 2): [3, 9, 25, 81, 200],
    (3, 3): [3, 8, 20, 26],
}

CUBE_SIZES = {1: [1, 2, 3, 5, 10, 20, 40, 60], 2: [1, 2, 4, 9, 16, 25, 40, 60]}

BALL_SIZES = [4, 8, 16, 32]
BALL_SEEDS = range(20)
BALL_RADIUS = 0.2


def ball_calibration_suite(d: int = 2) -> list[tuple[str, PointSet]]:
    """The frozen d = 2 suite: 20 random seeds per N in {4, 8, 16, 32}, plus Hammersley and square lattices."""
    out = []
    for N in BALL_SIZES:
        for tag, P in torus_suite(N, d, BALL_SEEDS):
            out.append((f"N{N}-{tag}", P))
    return out


def is_square(N: int) -> bool:
    return math.isqrt(N) ** 2 == N
