from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from griddisc.errors import CapExceededError, DimensionMismatchError, PreconditionError
from griddisc.geometry import (
    CORNER,
    TOROIDAL,
    GridSpec,
    PointSet,
    ball_volume,
    dumps_points,
    gen_hammersley,
    gen_lattice,
    gen_uniform_random,
    gen_van_der_corput,
    loads_points,
    nu_for,
    radical_inverse,
    snap_corner,
    snap_nearest,
)


def test_snap_corner_examples():
    g = GridSpec.corner(2, 8)
    assert snap_corner(PointSet.from_rows([[0, 0]]), g).z.tolist() == [[0, 0]]
    assert snap_corner(PointSet.from_rows([[0.37, 0.91]]), g).z.tolist() == [[2, 7]]
    # exact 3/10 sits on the grid line; binary64 0.3 lies strictly below it
    g10 = GridSpec.corner(1, 10)
    assert snap_corner(PointSet.from_rows([[Fraction(3, 10)]]), g10).z.tolist() == [[3]]
    assert snap_corner(PointSet.from_rows([[0.3]]), g10).z.tolist() == [[2]]


def test_snap_corner_torus_recentres():
    g = GridSpec.torus(1, 8)
    z = snap_corner(PointSet.from_rows([[0.9]], TOROIDAL), g).z
    assert z.tolist() == [[-1]]


def test_snap_nearest_examples():
    s = snap_nearest(PointSet.from_rows([[0.5]], TOROIDAL), GridSpec.torus(1, 4))
    assert s.z.tolist() == [[2]] and s.q[0, 0] == 0
    s = snap_nearest(PointSet.from_rows([["37/100"]], TOROIDAL), GridSpec.torus(1, 8))
    assert s.z.tolist() == [[3]] and s.q[0, 0] == Fraction(-5, 1000)
    s = snap_nearest(PointSet.from_rows([["9999/10000"]], TOROIDAL), GridSpec.torus(1, 8))
    assert s.z.tolist() == [[0]] and s.q[0, 0] == Fraction(-1, 10000)


def test_snap_nearest_tie_goes_up():
    s = snap_nearest(PointSet.from_rows([["1/16"]], TOROIDAL), GridSpec.torus(1, 8))
    assert s.z.tolist() == [[1]] and s.q[0, 0] == Fraction(-1, 16)


@given(st.lists(st.fractions(min_value=0, max_value=Fraction(999, 1000)), min_size=1, max_size=6),
       st.sampled_from([2, 4, 6, 8, 10, 64]))
def test_snap_nearest_reconstructs(vals, M):
    P = PointSet.from_rows([[v] for v in vals], TOROIDAL)
    s = snap_nearest(P, GridSpec.torus(1, M))
    for v, z, q in zip(vals, s.z[:, 0].tolist(), s.q[:, 0].tolist()):
        assert -Fraction(1, 2 * M) <= q < Fraction(1, 2 * M)
        assert (Fraction(z, M) + q - v) % 1 == 0


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        snap_corner(PointSet.from_rows([[0.1]]), GridSpec.corner(2, 4))


def test_grid_invariants():
    g = GridSpec.torus(2, 10)
    assert len(g.J) == 10 and len(g.radii) == 4
    with pytest.raises(PreconditionError):
        GridSpec.torus(1, 7)
    with pytest.raises(PreconditionError):
        GridSpec(1, 12, "corner", 2, 2, 1)
    assert GridSpec.badic(2, 3, 2, 2).M == 81


def test_nu_for():
    assert nu_for(2, 2) == 3  # 2 <= 2 < 4
    assert nu_for(3, 2) == 3
    assert nu_for(4, 2) == 4
    assert nu_for(200, 2) == 9
    assert nu_for(3, 3) == 3


def test_lattice():
    assert gen_lattice(1, 2).coords.tolist() == [[0, 0]]
    pts = {tuple(r) for r in gen_lattice(2, 2).coords.tolist()}
    assert pts == {(0, 0), (0, Fraction(1, 2)), (Fraction(1, 2), 0), (Fraction(1, 2), Fraction(1, 2))}
    assert gen_lattice(3, 1).coords[:, 0].tolist() == [0, Fraction(1, 3), Fraction(2, 3)]
    with pytest.raises(CapExceededError):
        gen_lattice(100, 3, cap=10**5)


def test_radical_inverse():
    assert gen_van_der_corput(2, 4).coords[:, 0].tolist() == [0, Fraction(1, 2), Fraction(1, 4), Fraction(3, 4)]
    assert radical_inverse(5, 3) == Fraction(7, 9)
    assert radical_inverse(0, 2) == 0
    H = gen_hammersley(2, 4)
    assert H.coords[:, 0].tolist() == [0, Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)]


def test_random_generator():
    a = gen_uniform_random(1, 1, 7)
    b = gen_uniform_random(1, 1, 7)
    assert np.array_equal(a.coords, b.coords)
    P = gen_uniform_random(100, 2, 0)
    assert P.coords.shape == (100, 2) and ((P.coords >= 0) & (P.coords < 1)).all()
    big = gen_uniform_random(500_000, 2, 1)
    assert abs(big.coords.mean() - 0.5) < 0.002


def test_point_validation():
    with pytest.raises(PreconditionError):
        PointSet.from_rows([[1.0]])
    with pytest.raises(PreconditionError):
        PointSet.from_rows([[-0.1]])


def test_file_round_trip():
    P = PointSet.from_rows([["1/3", 0.25], [0.5, "2/7"]], TOROIDAL)
    Q = loads_points(dumps_points(P))
    assert Q.mode == TOROIDAL and Q.coords.tolist() == P.coords.tolist()
    assert loads_points("# d=1 mode=corner\n0\n").coords.tolist() == [[0]]
    with pytest.raises(DimensionMismatchError):
        loads_points("# d=2 mode=corner\n0.1\n")


def test_mode_check():
    with pytest.raises(PreconditionError):
        snap_corner(PointSet.from_rows([[0.1]], CORNER), GridSpec.torus(1, 8))


def test_ball_volume():
    assert ball_volume(2, 1.0) == pytest.approx(np.pi)
    assert ball_volume(3, 1.0) == pytest.approx(4 * np.pi / 3)
    assert ball_volume(1, 0.5) == pytest.approx(1.0)
