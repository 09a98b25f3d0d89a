import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neckpinch.errors import BadDimensions, BoundaryMismatch, TargetMismatch, UnknownGenerator
from neckpinch.mobius import (IDENTITY, INF, GeodesicH3, MobiusMap, chordal, classify,
                              complex_length, loxodromic, pi_rotation, real_power)
from neckpinch.surface_rep import (SurfacePresentation, SurfaceRep, Word, amalgamate,
                                   default_third_axis, elementary_type, evaluate, lshape_rep, mirror,
                                   one_holed_torus_from_rotations, pants_from_rotations,
                                   relator_defect)
from support import random_conjugator

TORUS = SurfacePresentation(1, 1)


def _matrix_product(*ms):
    out = np.eye(2, dtype=complex)
    for m in ms:
        out = out @ m
    return out


def _torus(d=0.7, theta=0.4):
    r = GeodesicH3(-1, 1)
    q = GeodesicH3(-math.exp(d) * cmath.exp(1j * theta), math.exp(d) * cmath.exp(1j * theta))
    # slide the crossing axis along q so the boundary image is not trivial
    third = default_third_axis(q).moved_by(loxodromic(q, 0.5))
    return one_holed_torus_from_rotations(r, q, third=third)


def test_fixture_boundary_is_hyperbolic():
    assert classify(evaluate(_torus(), TORUS.boundary_word())).tag == "Hyperbolic"


def test_word_reduction_and_parsing():
    w = TORUS.word("a1 b1 b1^-1 a1^2")
    assert w.letters == ((0, 3),)
    assert len(TORUS.word("a1 b1^-2")) == 3
    assert (w * w.inverse()).letters == ()
    with pytest.raises(UnknownGenerator):
        TORUS.word("z9")


def test_evaluate_empty_and_cancelling_words():
    rep = _torus()
    assert evaluate(rep, Word()).dist_to_identity() == 0
    assert evaluate(rep, TORUS.word("a1 a1^-1")).dist_to_identity() == 0


def test_commutator_matches_direct_product():
    rep = _torus()
    a, b = rep.images[0].array(), rep.images[1].array()
    direct = _matrix_product(a, b, np.linalg.inv(a), np.linalg.inv(b))
    got = evaluate(rep, TORUS.word("a1 b1 a1^-1 b1^-1"))
    assert got.equals(MobiusMap.from_array(direct), 1e-12)


def test_abelian_translation_rep_has_zero_defect():
    rep = lshape_rep(2.5, 1.0, 1.2, 3.0)
    assert relator_defect(rep) < 1e-14


def test_defect_grows_linearly_under_perturbation():
    rep = _torus()
    assert relator_defect(rep) < 1e-12

    def bumped(eps):
        imgs = list(rep.images)
        imgs[0] = imgs[0] @ MobiusMap(1, eps, 0, 1)
        return relator_defect(SurfaceRep(rep.presentation, tuple(imgs)))

    d1, d2 = bumped(1e-4), bumped(2e-4)
    assert 0 < d1 < d2
    assert d2 / d1 == pytest.approx(2, rel=1e-3)


def test_lshape_rep_is_unipotent_with_trivial_peripheral():
    rep = lshape_rep(2, 1, 1, 2)
    for m in rep.images[:4]:
        assert classify(m).tag == "Parabolic"
        assert abs(m.tr2 - 4) == 0
    assert evaluate(rep, rep.presentation.peripheral()).dist_to_identity() == 0
    for i in range(4):
        for j in range(4):
            w = Word(((i, 1), (j, 1), (i, -1), (j, -1)))
            assert evaluate(rep, w).equals(IDENTITY, 1e-15)


@pytest.mark.parametrize("dims", [(1, 1, 1, 1), (2, 1, 2, 2), (2, 2, 1, 2), (0, 1, 1, 2)])
def test_lshape_rep_rejects_non_l(dims):
    with pytest.raises(BadDimensions):
        lshape_rep(*dims)


def test_pants_with_shared_endpoint_are_parabolic_at_that_point():
    rep = pants_from_rotations(GeodesicH3(0, INF), GeodesicH3(1, INF), GeodesicH3(2, INF))
    for m in rep.images:
        assert classify(m).tag in ("Parabolic", "Identity")
        assert chordal(m.apply(INF), INF) == 0


def test_pants_with_repeated_axis():
    g = GeodesicH3(0.3, -2 + 1j)
    rep = pants_from_rotations(g, g, GeodesicH3(1, 5j))
    assert rep.images[0].equals(IDENTITY, 1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=6, max_size=6))
def test_pants_boundary_product_telescopes(pts):
    zs = [complex(x, y) for x, y in pts]
    axes = []
    for p, q in zip(zs[::2], zs[1::2]):
        if chordal(p, q) < 0.05:
            q = p + 1
        axes.append(GeodesicH3(p, q))
    rep = pants_from_rotations(*axes)
    assert relator_defect(rep) < 1e-12 * max(1, max(np.abs(m.array()).max() for m in rep.images)) ** 3


def test_one_holed_torus_equal_axes():
    g = GeodesicH3(-1, 1)
    rep = one_holed_torus_from_rotations(g, g)
    assert rep.images[0].equals(IDENTITY, 1e-12)
    assert evaluate(rep, TORUS.peripheral()).equals(IDENTITY, 1e-12)


@pytest.mark.parametrize("theta", [0.2, 0.7, 1.3])
def test_one_holed_torus_crossing_axes_give_elliptic(theta):
    r = GeodesicH3(-1, 1)
    q = GeodesicH3(-cmath.exp(1j * theta), cmath.exp(1j * theta))
    a = one_holed_torus_from_rotations(r, q).images[0]
    c = classify(a)
    assert c.tag == "Elliptic" and c.angle == pytest.approx(2 * theta, abs=1e-12)


@pytest.mark.parametrize("d", [0.1, 0.5, 2.0])
def test_one_holed_torus_disjoint_axes_give_hyperbolic(d):
    r = GeodesicH3(-1, 1)
    q = GeodesicH3(-math.exp(d), math.exp(d))
    a = one_holed_torus_from_rotations(r, q).images[0]
    assert classify(a).tag == "Hyperbolic"
    assert complex_length(a).real == pytest.approx(2 * d, abs=1e-12)


def test_one_holed_torus_target_check():
    r, q = GeodesicH3(-1, 1), GeodesicH3(-2, 2)
    good = pi_rotation(r) @ pi_rotation(q)
    assert one_holed_torus_from_rotations(r, q, a_target=good).images[0].equals(good, 1e-12)
    with pytest.raises(TargetMismatch):
        one_holed_torus_from_rotations(r, q, a_target=MobiusMap(3, 0, 0, 1 / 3))


def test_torus_relator_holds():
    assert relator_defect(_torus()) < 1e-12


def test_double_with_identity_twist_is_exact():
    rep = _torus()
    double = amalgamate(rep, mirror(rep), IDENTITY)
    assert double.presentation.genus == 2
    assert relator_defect(double) < 1e-12


def _side_word(rng, offset, length=6):
    return Word(tuple((offset + int(rng.integers(0, 2)), int(rng.choice([-1, 1]))) for _ in range(length)))


def test_twisting_by_the_boundary_keeps_side_traces():
    rep = _torus()
    other = mirror(rep)
    bnd = evaluate(rep, TORUS.boundary_word())
    plain = amalgamate(rep, other, IDENTITY)
    twisted = amalgamate(rep, other, real_power(bnd, 1.0))
    rng = np.random.default_rng(3)
    for k in range(20):
        w = _side_word(rng, 0 if k % 2 else 2)
        assert abs(evaluate(plain, w).tr2 - evaluate(twisted, w).tr2) < 1e-9


def test_amalgamate_rejects_mismatched_boundaries():
    with pytest.raises(BoundaryMismatch):
        amalgamate(_torus(0.7), mirror(_torus(0.9)), IDENTITY)


def test_elementary_type_examples():
    paras = [MobiusMap(1, 1, 0, 1), MobiusMap(1, 2.5j, 0, 1), MobiusMap(1, -0.3, 0, 1)]
    t = elementary_type(paras)
    assert t.kind == "FixesPoint" and chordal(t.points[0], INF) == 0
    t = elementary_type([MobiusMap(2, 0, 0, 0.5), pi_rotation(GeodesicH3(-1, 1))])
    assert t.kind == "PreservesPair"
    assert sorted(chordal(z, 0) for z in t.points)[0] == 0
    assert sorted(chordal(z, INF) for z in t.points)[0] == 0
    mats = list(lshape_rep(2, 1, 1, 2).images[:4]) + [MobiusMap(2, 1, 1, 1)]
    assert elementary_type(mats).kind == "NonElementary"
    assert elementary_type([IDENTITY]).kind == "Bounded"


def test_elementary_type_is_conjugation_equivariant():
    rng = np.random.default_rng(11)
    families = [
        [MobiusMap(1, 1, 0, 1), MobiusMap(1, 2j, 0, 1)],
        [MobiusMap(2, 0, 0, 0.5), pi_rotation(GeodesicH3(-1, 1))],
        [MobiusMap(2, 1, 1, 1), MobiusMap(1, 1, 0, 1)],
    ]
    for k in range(200):
        mats = families[k % 3]
        n = random_conjugator(rng, bound=0.5, min_det=0.5)
        before = elementary_type(mats)
        after = elementary_type([m.conjugate_by(n) for m in mats], tol=1e-8)
        assert after.kind == before.kind
        for z in before.points:
            assert min(chordal(n.apply(z), w) for w in after.points) < 1e-7


def test_rep_json_round_trip():
    rep = _torus()
    back = SurfaceRep.from_json(rep.to_json())
    assert back.presentation == rep.presentation
    assert all(a.equals(b, 1e-15) for a, b in zip(back.images, rep.images))
