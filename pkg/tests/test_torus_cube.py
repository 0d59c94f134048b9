import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import cube_ensemble_brute, log_box_integral_quad

from griddisc import bounds
from griddisc.errors import PreconditionError
from griddisc.geometry import TOROIDAL, GridSpec, PointSet, gen_lattice, gen_uniform_random, snap_corner
from griddisc.spectral import exp_sums
from griddisc.torus_cube import (
    CubeDiscrepancyEnsemble,
    LogBox,
    admissible_frequencies,
    cassels_montgomery_check,
    cube_disc,
    cube_disc_grid,
    ensemble_l2,
    ensemble_l2_direct,
    ensemble_l2_spectral,
    lemma_log_check,
    log_box_family,
    log_box_weight,
    proposition7_check,
    theorem2_verify,
    window_counts,
)

F = Fraction


def test_cube_disc_examples():
    P = PointSet.from_rows([[0]], TOROIDAL)
    assert cube_disc(P, [0], F(1, 8)) == F(3, 4)
    # wrap-around: a point near 1 belongs to the cube centred at 0
    Q = PointSet.from_rows([[F(15, 16)]], TOROIDAL)
    assert cube_disc(Q, [0], F(1, 8)) == F(3, 4)
    with pytest.raises(PreconditionError):
        cube_disc(P, [0], F(1, 2))
    with pytest.raises(PreconditionError):
        cube_disc_grid(P, GridSpec.torus(1, 8), [0], F(1, 3))


def test_translation_invariance():
    P = gen_uniform_random(5, 2, 1, TOROIDAL)
    shift = [F(3, 8), F(5, 8)]
    Q = PointSet.from_rows([[(F(n, den) + s) % 1 for (n, den), s in zip(row, shift)] for row in P.ratios], TOROIDAL)
    x = [F(1, 8), F(-2, 8)]
    y = [xi + si for xi, si in zip(x, shift)]
    assert cube_disc(P, x, F(1, 8)) == cube_disc(Q, y, F(1, 8))


def test_average_counting_term():
    P = gen_uniform_random(7, 2, 2, TOROIDAL)
    M = 12
    ens = CubeDiscrepancyEnsemble(GridSpec.torus(2, M), P)
    for r in range(1, M // 2):
        assert int(ens.counts(r).sum()) == 7 * (2 * r) ** 2


def test_window_counts_brute():
    rng = np.random.default_rng(0)
    H = rng.integers(0, 3, size=(8, 8))
    for r in range(1, 4):
        C = window_counts(H, r)
        for j in np.ndindex(8, 8):
            rows = [(j[0] + t) % 8 for t in range(-r, r)]
            cols = [(j[1] + t) % 8 for t in range(-r, r)]
            assert C[j] == H[np.ix_(rows, cols)].sum()


def test_single_point_hand_sum():
    # M = 4, d = 1: only s = 1/4; D = 1/2 on the two centres covering 0, -1/2 elsewhere
    P = PointSet.from_rows([[0]], TOROIDAL)
    assert ensemble_l2_direct(P, GridSpec.torus(1, 4)) == F(1, 4)


@pytest.mark.parametrize("N,d,M,seed", [(3, 1, 8, 0), (5, 1, 10, 1), (4, 2, 6, 2), (2, 2, 8, 3)])
def test_direct_matches_brute(N, d, M, seed):
    P = gen_uniform_random(N, d, seed, TOROIDAL)
    assert ensemble_l2_direct(P, GridSpec.torus(d, M)) == cube_ensemble_brute(P, M)


def test_grid_values_match_definition():
    P = gen_uniform_random(4, 2, 7, TOROIDAL)
    g = GridSpec.torus(2, 8)
    for j1, j2, s, D in list(CubeDiscrepancyEnsemble(g, P).rows())[::7]:
        assert D == cube_disc_grid(P, g, (j1, j2), s)


@settings(max_examples=30)
@given(st.integers(1, 20), st.integers(1, 2), st.sampled_from([4, 8, 16, 32]), st.integers(0, 10**6))
def test_spectral_identity(N, d, M, seed):
    P = gen_uniform_random(N, d, seed, TOROIDAL)
    g = GridSpec.torus(d, M)
    a = float(ensemble_l2_direct(P, g))
    b = ensemble_l2_spectral(P, g)
    assert b == pytest.approx(a, rel=1e-9)


def test_full_lattice_uniform_histogram():
    # N = M^d, every cell filled once: every window holds exactly (2r)^d points
    P = gen_lattice(8, 2, TOROIDAL)
    assert ensemble_l2(P, GridSpec.torus(2, 8), "direct") == 0
    assert ensemble_l2(P, GridSpec.torus(2, 8), "spectral") == pytest.approx(0, abs=1e-9)


def test_log_box_weight_examples():
    assert log_box_weight((1, 0), math.e) == pytest.approx(1.0)
    assert log_box_weight((4, 5), 20) == 0
    assert log_box_weight((3, 7), 20) == 0
    with pytest.raises(PreconditionError):
        log_box_weight((1, 1), 0.5)


@pytest.mark.parametrize("k,p", [((1, 0), math.e), ((3, 2), 40), ((0, 5), 64), ((2, 3, 1), 64), ((0, 0, 7), 30)])
def test_log_box_weight_quadrature(k, p):
    ref = log_box_integral_quad(k, p, len(k))
    assert log_box_weight(k, p) == pytest.approx(ref, rel=1e-6, abs=1e-9)


@given(st.floats(1e-6, 1e6), st.integers(1, 8))
def test_lemma_log(t, ell):
    assert lemma_log_check(t, ell)


def test_lemma_log_tight_at_minimum():
    # equality at log t = ell/2
    for ell in (1, 2, 5):
        t = math.exp(ell / 2)
        assert t * t == pytest.approx((2 * math.e / ell) ** ell * (ell / 2) ** ell)


def test_log_box_family_contents():
    fam = log_box_family(6, 2)
    assert all(box.p == 6 and len(box.x) == 1 for box in fam)
    assert LogBox(6.0, (2.0,)).integer_bounds() == (2, 3)
    assert LogBox(6.0, (2.0,)).contains((-2, 3)) and not LogBox(6.0, (2.0,)).contains((3, 0))


def test_cassels_montgomery_single_point():
    # one point: |W| = 1, so the sum over a box equals its nonzero lattice count
    P = PointSet.from_rows([[F(1, 5), F(2, 7)]], TOROIDAL)
    T = exp_sums(snap_corner(P, GridSpec.torus(2, 36)))
    for box in log_box_family(2, 2):
        s, rhs = cassels_montgomery_check(T, box)
        K = box.integer_bounds()
        assert s == pytest.approx(math.prod(2 * b + 1 for b in K) - 1)
        assert s >= rhs


def test_proposition7_small_grid():
    for d, M in ((1, 32), (2, 32)):
        eps = 1 / (9 * d)
        ks = list(admissible_frequencies(M, d, eps))
        assert ks and all(proposition7_check(k, M, eps) for k in ks)
    with pytest.raises(PreconditionError):
        proposition7_check((0,), 32, 1 / 9)


def test_theorem2_examples():
    rep = theorem2_verify(gen_uniform_random(5, 2, 0, TOROIDAL))
    assert rep.verdict == "pass" and rep.input["M"] == 180
    rep_direct = theorem2_verify(gen_uniform_random(5, 1, 0, TOROIDAL), method="direct")
    rep_spec = theorem2_verify(gen_uniform_random(5, 1, 0, TOROIDAL))
    assert rep_direct.lhs == pytest.approx(rep_spec.lhs, rel=1e-12)
    with pytest.raises(PreconditionError):
        theorem2_verify(gen_uniform_random(5, 2, 0, TOROIDAL), M=100)
    assert bounds.halasz_min_M(5, 1) == 90
