"""The seventeen acceptance criteria, one test (or a small group) per criterion.

Each test carries ``@pytest.mark.criterion(n)``; the conftest prints one
PASS/FAIL line per criterion at the end of the run.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest
from oracles import log_box_integral_quad

from griddisc import bounds
from griddisc.corner import (
    box_occupancy,
    build_F,
    build_G,
    continuous_l2_oracle,
    grid_l2,
    haar_coefficient,
    theorem1_linf_verify,
    theorem1_verify,
)
from griddisc.errors import HypothesisRefusal
from griddisc.geometry import TOROIDAL, GridSpec, gen_lattice, gen_uniform_random, snap_corner
from griddisc.haar import BAdicBox, BAdicInterval, HaarIndexSet
from griddisc.spectral import (
    ball_decomposition_check,
    bessel_j,
    bessel_j_half_closed,
    cyclic_small_angle_count,
    cyclic_small_angle_count_float,
    exp_sums,
    phi,
    radius_weight,
    radius_weight_table,
)
from griddisc.suite import BALL_RADIUS, BALL_SEEDS, BALL_SIZES, CORNER_SIZES, CUBE_SIZES, point_suite, torus_suite
from griddisc.torus_ball import ball_fourier_identity_check, cosine_floor_scan, fit_exponent, two_radius_l2
from griddisc.torus_cube import (
    admissible_frequencies,
    cassels_montgomery_check,
    ensemble_l2_direct,
    ensemble_l2_spectral,
    log_box_family,
    log_box_weight,
    proposition7_bound,
    theorem2_verify,
)

F = Fraction
criterion = pytest.mark.criterion


def corner_suite(b, d):
    for N in CORNER_SIZES[(b, d)]:
        for tag, P in point_suite(N, d, range(3), b):
            yield f"N{N}-{tag}", P


# 1 -----------------------------------------------------------------------------

@criterion(1)
def test_c01_haar_coefficient_identity():
    rng = np.random.default_rng(20240601)
    start = time.perf_counter()
    configs = checked = 0
    while configs < 1000:
        b = int(rng.choice([2, 3, 5]))
        d = int(rng.choice([1, 2, 3]))
        nu = int(rng.integers(2, 9))
        tau = int(rng.choice([1, 2]))
        N = int(rng.integers(b ** (nu - 2), b ** (nu - 1)))
        P = gen_uniform_random(N, d, int(rng.integers(2**31)))
        grid = GridSpec.badic(d, b, nu, tau)
        H = list(HaarIndexSet(nu, d))
        r = H[int(rng.integers(len(H)))]
        empty = np.argwhere(~box_occupancy(P, b, r))
        assert len(empty) >= b**nu - b ** (nu - 1)
        target = F(-N, b ** (2 * d + 2 * nu))
        for row in empty[rng.choice(len(empty), size=min(3, len(empty)), replace=False)]:
            box = BAdicBox(b, r, tuple(int(a) for a in row))
            assert haar_coefficient(P, box, grid) == target, (b, d, nu, tau, N, box)
            checked += 1
        configs += 1
    elapsed = time.perf_counter() - start
    assert checked >= 1000
    assert elapsed <= 60, f"{elapsed:.1f} s"


# 2 -----------------------------------------------------------------------------

def haar_grid_oracle(b, r, a, M):
    """h_I(j/M), j = 1..M, from the child index ceil(j b^(r+1)/M) - 1."""
    j = np.arange(1, M + 1)
    child = -((-j * b ** (r + 1)) // M) - 1
    return np.where(child == a * b, -1, np.where(child == a * b + 1, 1, 0))


@criterion(2)
def test_c02_weighted_haar_sum():
    grids = [(b, nu, tau) for b in (2, 3, 5) for nu in range(0, 9) for tau in (1, 2, 3)
             if b ** (nu + tau) <= 3**6]
    assert (3, 4, 2) in grids and (2, 8, 1) in grids
    for b, nu, tau in grids:
        M = b ** (nu + tau)
        j = np.arange(1, M + 1, dtype=object)
        for r in range(nu + 1):
            for a in range(b**r):
                h = haar_grid_oracle(b, r, a, M)
                direct = sum((F(int(x), M) * int(y) for x, y in zip(j, h) if y), F(0))
                expected = F(M, b**2) * F(1, b**r) ** 2
                assert direct == expected, (b, nu, tau, r, a)
                assert F(BAdicInterval(b, r, a).weighted_grid_sum(M), M) == expected


# 3 -----------------------------------------------------------------------------

@criterion(3)
@pytest.mark.parametrize("b,d", [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3)])
def test_c03_test_function_chain(b, d):
    floor = F(b - 1, b ** (2 * d + 3))
    for tag, P in corner_suite(b, d):
        assert P.N >= b
        grid = GridSpec.for_points(P.N, d, b)
        Fn = build_F(P, grid)
        assert Fn.empty_coefficients_ok, tag
        assert all(p >= floor for p in Fn.pairings.values()), tag
        assert Fn.pairing >= Fn.card * floor, tag
        assert Fn.card == HaarIndexSet(grid.nu, d).card
        assert Fn.norm_sq <= Fn.card, tag
        if d == 2:
            G = build_G(P, grid)
            assert G.l1 <= 2, tag
            assert all(s == 0 for s in G.elementary_sums()[1:]), tag


# 4 -----------------------------------------------------------------------------

@criterion(4)
def test_c04_corner_l2_bound():
    start = time.perf_counter()
    failures, count = [], 0
    for b in (2, 3):
        for d in (1, 2, 3):
            for tag, P in corner_suite(b, d):
                rep = theorem1_verify(P, b, 1, tag=tag)
                assert rep.input["M"] <= (2**12 if d <= 2 else 2**8)
                rhs_sq = F(b - 1, b ** (2 * d + 3)) ** 2 * (1 if d == 1 else math.log(P.N, b) ** (d - 1)) / math.factorial(d - 1)
                assert rep.rhs_sq == pytest.approx(float(rhs_sq), rel=1e-12)
                count += 1
                if rep.verdict != "pass":
                    failures.append((b, d, tag, rep.lhs, rep.rhs))
    assert count > 100
    assert not failures
    assert time.perf_counter() - start <= 300


# 5 -----------------------------------------------------------------------------

@criterion(5)
def test_c05_corner_linf_bound():
    kappa = bounds.kappa_opt(2)
    failures = []
    for tag, P in corner_suite(2, 2):
        rep = theorem1_linf_verify(P, 2, 1)
        nu = rep.input["nu"]
        expected = kappa * (nu + 1) * (1 / 2**7 - kappa / (2**5 * (1 - kappa))) / 2
        assert rep.rhs == pytest.approx(expected, rel=1e-9)
        if rep.verdict != "pass":
            failures.append((tag, rep.lhs, rep.rhs))
    assert not failures


# 6 -----------------------------------------------------------------------------

@criterion(6)
def test_c06_cube_identity_direct_vs_spectral():
    rng = np.random.default_rng(6)
    worst = 0.0
    for i in range(100):
        d = int(rng.integers(1, 3))
        M = int(rng.choice([4, 8, 16, 32, 64]))
        N = int(rng.integers(1, 21))
        P = gen_uniform_random(N, d, 1000 + i, TOROIDAL)
        g = GridSpec.torus(d, M)
        a = float(ensemble_l2_direct(P, g))
        b = ensemble_l2_spectral(P, g)
        worst = max(worst, abs(a - b) / a)
    assert worst <= 1e-9


# 7 -----------------------------------------------------------------------------

@criterion(7)
def test_c07_cube_transform_closed_form():
    worst = 0.0
    for d in (1, 2, 3):
        for M in (4, 8, 16, 32):
            k = np.arange(M)
            for r in range(1, M // 2):
                # brute-force DFT of the lattice indicator of (-r, r]^d
                ind = np.zeros((M,) * d)
                side = np.mod(np.arange(-r + 1, r + 1), M)
                ind[np.ix_(*[side] * d)] = 1.0
                ref = np.fft.fftn(ind)
                closed = phi(k, r, M)
                for _ in range(d - 1):
                    closed = np.multiply.outer(closed, phi(k, r, M))
                err = np.abs(closed - ref) / np.maximum(np.abs(ref), 1.0)
                worst = max(worst, float(err.max()))
    assert worst <= 1e-12


# 8 -----------------------------------------------------------------------------

@criterion(8)
def test_c08_small_angle_counts():
    violations = []
    for M in (16, 32, 64, 128):
        for eps in (F(1, 8), F(1, 16), F(1, 18)):
            kmax = math.floor(eps * M)
            for k in [v for v in range(-kmax, kmax + 1) if v]:
                n = cyclic_small_angle_count(k, M, eps)
                assert abs(cyclic_small_angle_count_float(k, M, float(eps)) - n) <= 1
                if n > 2 * eps * M:
                    violations.append((M, eps, k, n))
    assert not violations


# 9 -----------------------------------------------------------------------------

@criterion(9)
def test_c09_radius_weight_lower_bound():
    violations, count = [], 0
    for d in (1, 2):
        eps = 1 / (9 * d)
        for M in (32, 64):
            table = radius_weight_table(M, d)
            for k in admissible_frequencies(M, d, eps):
                w = radius_weight(k, M)
                assert w == pytest.approx(table[tuple(x % M for x in k)], rel=1e-10)
                count += 1
                if w < proposition7_bound(k, M, eps):
                    violations.append((d, M, k))
    assert count > 0 and not violations


# 10 ----------------------------------------------------------------------------

@criterion(10)
def test_c10_log_box_integral():
    rng = np.random.default_rng(10)
    for d in (2, 3):
        for _ in range(100):
            p = int(rng.integers(2, 65))
            k = tuple(int(v) for v in rng.integers(-p, p + 1, size=d))
            ref = log_box_integral_quad(k, p, d)
            got = log_box_weight(k, p)
            assert abs(got - ref) <= 1e-6 * max(abs(ref), 1e-3), (k, p, got, ref)


# 11 ----------------------------------------------------------------------------

@criterion(11)
def test_c11_cube_l2_bound():
    start = time.perf_counter()
    failures = []
    for d in (1, 2):
        for N in CUBE_SIZES[d]:
            for tag, P in torus_suite(N, d, range(3)):
                rep = theorem2_verify(P, method="spectral", tag=tag)
                assert rep.input["M"] == 18 * d * N
                c = math.sqrt(bounds.eta(d, 1 / (9 * d)) / (2 ** (3 * d + 4) * math.pi ** (2 * d))
                              * ((math.e / (d - 1)) ** (d - 1) if d > 1 else 1.0))
                assert rep.rhs == pytest.approx(c * math.log(2 * N) ** ((d - 1) / 2), rel=1e-12)
                if rep.verdict != "pass":
                    failures.append((d, N, tag, rep.lhs, rep.rhs))
    assert not failures
    assert time.perf_counter() - start <= 600


# 12 ----------------------------------------------------------------------------

@criterion(12)
def test_c12_ball_fourier_identity():
    worst = 0.0
    seed = 0
    for d in (2, 3):
        for M in (16, 32, 64):
            for r in (0.1, 0.2):
                for N in (1, 4, 10):
                    P = gen_uniform_random(N, d, seed, TOROIDAL)
                    seed += 1
                    worst = max(worst, ball_fourier_identity_check(P, GridSpec.torus(d, M), r))
    assert worst <= 1e-8


# 13 ----------------------------------------------------------------------------

@criterion(13)
def test_c13_ball_decomposition_and_bessel():
    import mpmath

    rng = np.random.default_rng(13)
    M, r = 64, 0.2
    violations, done = [], 0
    while done < 500:
        k = rng.integers(-M // 2, M // 2, size=2)
        if not k.any():
            continue
        q = rng.uniform(-1 / (2 * M), 1 / (2 * M), size=2)
        dec = ball_decomposition_check(k, r, M, q)
        if not dec.holds:
            violations.append((tuple(k), tuple(q), abs(dec.remainder), dec.shell))
        done += 1
    assert not violations
    for n in (1, 3, 5):
        for w in np.linspace(0.1, 200.0, 60):
            val = float(bessel_j(n / 2, w))
            assert abs(val - bessel_j_half_closed(n, w)) <= 1e-9
    for order in (1.0, 2.0):
        for w in np.linspace(0.1, 200.0, 60):
            assert abs(float(bessel_j(order, w)) - float(mpmath.besselj(order, w))) <= 1e-9


# 14 ----------------------------------------------------------------------------

@criterion(14)
def test_c14_cosine_separation():
    for d in (2, 3, 4):
        for r in (0.1, 0.15, 0.2):
            for M in (64, 128, 256):
                value, witness = cosine_floor_scan(d, r, M)
                assert value > 0, (d, r, M, witness)
    for d in (1, 5):
        with pytest.raises(HypothesisRefusal):
            cosine_floor_scan(d, 0.2, 64)


# 15 ----------------------------------------------------------------------------

def _ball_runs():
    d, r = 2, BALL_RADIUS
    c = bounds.ball_constant(d)
    out = {}
    for N in BALL_SIZES:
        M = bounds.ball_min_M(N, d, r)
        assert M % 2 == 0 and 8 * N**1.25 / r <= M < 8 * N**1.25 / r + 2
        g = GridSpec.torus(d, M)
        out[N] = [two_radius_l2(gen_uniform_random(N, d, s, TOROIDAL), g, r) for s in BALL_SEEDS]
    return c, out


@pytest.fixture(scope="module")
def ball_runs():
    return _ball_runs()


@criterion(15)
def test_c15_ball_lower_bound(ball_runs):
    c, runs = ball_runs
    failures = []
    for N, values in runs.items():
        rhs = bounds.ball_rhs(N, 2, BALL_RADIUS, c)
        failures += [(N, s, v, rhs) for s, v in zip(BALL_SEEDS, values) if v < rhs]
    assert not failures


@criterion(15)
def test_c15_ball_scaling_slope(ball_runs):
    _, runs = ball_runs
    Ns = sorted(runs)
    slope = fit_exponent(Ns, [float(np.mean(runs[N])) for N in Ns])
    assert 0.10 <= slope <= 0.40, f"fitted slope {slope:.3f}"


# 16 ----------------------------------------------------------------------------

@criterion(16)
@pytest.mark.parametrize("K,d", [(2, 1), (5, 1), (2, 2), (3, 2), (4, 2), (2, 3)])
def test_c16_zero_discrepancy_controls(K, d):
    L = gen_lattice(K, d)
    assert grid_l2(L, GridSpec.corner(d, K)).l2_sq == 0
    cont = math.sqrt(continuous_l2_oracle(L))
    gaps = [abs(grid_l2(L, GridSpec.corner(d, m * K)).l2 - cont) / cont for m in (1, 2, 4, 8, 16, 32, 64)]
    assert all(a > b for a, b in zip(gaps, gaps[1:])), gaps
    assert gaps[-1] <= 0.02


# 17 ----------------------------------------------------------------------------

@criterion(17)
def test_c17_cassels_montgomery():
    violations, boxes = [], 0
    for N in [n for n in CUBE_SIZES[2] if n <= 40]:
        M = 36 * N
        p = 2 * N
        assert p <= M / 18
        family = log_box_family(p, 2)
        for tag, P in torus_suite(N, 2, range(3)):
            T = exp_sums(snap_corner(P, GridSpec.torus(2, M)))
            for box in family:
                s, rhs = cassels_montgomery_check(T, box)
                boxes += 1
                if s < rhs - 1e-9 * max(1.0, abs(rhs)):
                    violations.append((N, tag, box.x, s, rhs))
    assert boxes > 0 and not violations
