import random

import pytest

from cubeadams import multiindex as mi
from cubeadams.cubes import (
    BiChain,
    ChainElement,
    ComplexChain,
    CubeComplex,
    NotExact,
    arb_differential,
    bicomplex_differential,
    canonical_rebase,
    chain_of,
    chains_equal_tier,
    complex_chain_of,
    cube_as_complex,
    cube_degeneracy,
    cube_face,
    cube_from_sequence,
    cube_point,
    degenerate_reduce,
    differential,
    face_map,
    is_degenerate,
    normalized_project,
    simple_of_bicomplex,
    tensor_complex,
    tier_equal,
    validate_cube,
    zero_cube,
)
from cubeadams.exactalg import PolyMatrix
from cubeadams.generators import (
    AtomSource,
    random_bicomplex,
    random_cube,
    random_exact_cube_sequence,
    random_exact_module_sequence,
)
from cubeadams.objects import Atom, rank


def fresh(seed):
    return AtomSource(f"T{seed}_"), random.Random(seed)


def test_random_cube_is_valid():
    for n in (1, 2, 3):
        src, rng = fresh(40 + n)
        E = random_cube(src, rng, n, max_rank=2)
        validate_cube(E)


def test_face_of_one_cube_middle():
    src, rng = fresh(1)
    E = random_cube(src, rng, 1)
    F = cube_face(E, 1, 1)
    assert F.n == 0
    assert F.vertices[()] == E.vertices[(1,)]
    assert cube_face(E, 1, 3).is_zero()


def test_face_commutation_on_random_2cube():
    src, rng = fresh(2)
    E = random_cube(src, rng, 2)
    # faces in different directions: d_i^j d_r^k = d_{r-1}^k d_i^j for i < r
    for j in range(3):
        for k in range(3):
            assert cube_face(cube_face(E, 2, k), 1, j) == cube_face(cube_face(E, 1, j), 1, k)


def test_degeneracies_of_point():
    A = cube_point(Atom("pt", 2))
    up = cube_degeneracy(A, 1, 0)
    assert up.vertices[(0,)] == A.vertices[()]
    assert up.vertices[(1,)] == A.vertices[()]
    assert up.vertices[(2,)].key() == "Z"
    validate_cube(up)
    dn = cube_degeneracy(A, 1, 1)
    assert dn.vertices[(0,)].key() == "Z"
    validate_cube(dn)


def test_identities3_exhaustive():
    checked = 0
    for n in (1, 2, 3):
        src, rng = fresh(100 + n)
        E = random_cube(src, rng, n, max_rank=2)
        # face-face
        for i in range(1, n):
            for jdir in range(1, n + 1):
                for lvl in range(3):
                    for klvl in range(3):
                        if jdir <= i:
                            lhs = cube_face(cube_face(E, jdir, klvl), i, lvl)
                            rhs = cube_face(cube_face(E, i + 1, lvl), jdir, klvl)
                            assert lhs == rhs
                            checked += 1
        # face-degeneracy, same direction
        for i in range(1, n + 1):
            G = cube_face(E, i, 0)
            for j in (0, 1):
                S = cube_degeneracy(G, i, j)
                assert cube_face(S, i, j) == G
                assert cube_face(S, i, j + 1) == G
                assert cube_face(S, i, 2 * (1 - j)).is_zero()
                checked += 3
        # face-degeneracy, different directions
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                for u in (0, 1):
                    for lvl in range(3):
                        S = cube_degeneracy(E, j, u)
                        if j < i + 1:
                            lhs = cube_face(S, i + 1, lvl)
                            rhs = cube_degeneracy(cube_face(E, i, lvl), j, u)
                            assert lhs == rhs
                            checked += 1
        # degeneracy-degeneracy
        for i in range(1, n + 1):
            for j in range(i, n + 1):
                for u in (0, 1):
                    for v in (0, 1):
                        lhs = cube_degeneracy(cube_degeneracy(E, j, v), i, u)
                        rhs = cube_degeneracy(cube_degeneracy(E, i, u), j + 1, v)
                        assert lhs == rhs
                        checked += 1
    assert checked > 50


def test_differential_squares_to_zero():
    for n in (1, 2, 3):
        for seed in range(4):
            src, rng = fresh(7 * n + seed)
            E = random_cube(src, rng, n, max_rank=2)
            x = chain_of(E)
            assert differential(differential(x)).is_zero()


def test_differential_of_one_cube():
    src, rng = fresh(3)
    E = random_cube(src, rng, 1)
    d = differential(chain_of(E))
    want = ChainElement()
    want.add(-1, cube_face(E, 1, 0))
    want.add(1, cube_face(E, 1, 1))
    want.add(-1, cube_face(E, 1, 2))
    assert d == want


def test_cube_from_sequence_and_errors():
    src, rng = fresh(4)
    from cubeadams.objects import ZERO
    A = cube_point(Atom("sA", 1))
    ident = {(): PolyMatrix.identity(1)}
    zmap = {(): PolyMatrix.zero(0, 1)}
    E = cube_from_sequence([A, A, cube_point(ZERO)], [ident, zmap], 1)
    assert E == cube_degeneracy(A, 1, 0)
    with pytest.raises(NotExact):
        cube_from_sequence(
            [A, A, A], [ident, ident], 1
        )


def test_is_degenerate():
    src, rng = fresh(5)
    E = random_cube(src, rng, 1)
    S = cube_degeneracy(E, 2, 1)
    assert is_degenerate(S) == (2, 1)
    assert is_degenerate(zero_cube(2)) == (1, 0)
    F = random_cube(src, rng, 2)
    assert is_degenerate(F) is None


def test_degenerate_reduce_and_differential():
    src, rng = fresh(6)
    A = random_cube(src, rng, 1)
    S = cube_degeneracy(A, 1, 0)
    x = chain_of(S)
    assert degenerate_reduce(x).is_zero()
    # the differential of a degenerate chain reduces to zero
    assert degenerate_reduce(differential(x)).is_zero()


def test_normalized_project_conditions():
    for seed in range(8):
        src, rng = fresh(30 + seed)
        n = rng.choice([1, 2])
        E = random_cube(src, rng, n, max_rank=2)
        x = chain_of(E)
        p = normalized_project(x)
        for i in range(1, n + 1):
            assert face_map(p, i, 0).is_zero()
            assert face_map(p, i, 2).is_zero()
        assert normalized_project(p) == p
        diff = x - p
        for c, q in diff:
            assert is_degenerate(q) is not None
        # chain compatibility
        assert normalized_project(differential(x)) == differential(p) + \
            (normalized_project(differential(x)) - differential(p))
        lhs = differential(p)
        rhs = normalized_project(differential(x))
        assert normalized_project(lhs) == rhs


def test_normalized_project_chain_property():
    for seed in range(10):
        src, rng = fresh(60 + seed)
        n = rng.choice([1, 2])
        E = random_cube(src, rng, n, max_rank=2)
        x = chain_of(E)
        assert normalized_project(differential(normalized_project(x))) == \
            normalized_project(differential(x))


def test_degenerates_die_under_projection():
    src, rng = fresh(9)
    A = random_cube(src, rng, 1)
    assert normalized_project(chain_of(cube_degeneracy(A, 1, 0))).is_zero()
    assert normalized_project(chain_of(cube_degeneracy(A, 2, 1))).is_zero()


def test_projection_idempotent_on_image():
    src, rng = fresh(10)
    E = random_cube(src, rng, 2)
    p = normalized_project(chain_of(E))
    assert normalized_project(p) == p


def test_tier_comparator():
    src, rng = fresh(11)
    E = random_cube(src, rng, 2)
    assert tier_equal(E, E) == 1
    R = canonical_rebase(E)
    t = tier_equal(E, R)
    assert t in (1, 2)
    F = random_cube(src, rng, 2)
    assert tier_equal(E, F) == 0


def test_cube_complex_roundtrip_and_slices():
    src, rng = fresh(12)
    X = random_exact_cube_sequence(src, rng, 3, 1, max_rank=2)
    X.validate()
    assert X.term(0).n == 1
    Y = X.cube_face(1, 1)
    Y.validate(check_exact=False)


def test_arb_differential_squares_to_zero():
    for seed in range(4):
        src, rng = fresh(70 + seed)
        X = random_exact_cube_sequence(src, rng, 2, 1, max_rank=2)
        c = complex_chain_of(X)
        assert arb_differential(arb_differential(c)).is_zero()
        M = random_exact_module_sequence(src, rng, 3, max_rank=2)
        c2 = complex_chain_of(M)
        assert arb_differential(arb_differential(c2)).is_zero()


def test_cube_as_complex_consistency():
    src, rng = fresh(13)
    E = random_cube(src, rng, 2)
    X = cube_as_complex(E)
    X.validate()
    assert X.length == 2
    for p in range(3):
        assert X.term(p) == cube_face(E, 1, p)


def test_bicomplex_simple_and_differential():
    src, rng = fresh(14)
    B = random_bicomplex(src, rng, 1, 1, 0, max_rank=1)
    B.validate()
    S = simple_of_bicomplex(B)
    S.validate()
    assert S.length == 2
    assert rank(S.term(1).vertices[()]) == \
        B.entry(1, 0).vertex_rank(()) + B.entry(0, 1).vertex_rank(())
    x = BiChain([(1, random_bicomplex(src, rng, 1, 1, 1, max_rank=1))])
    assert bicomplex_differential(bicomplex_differential(x)).is_zero()


def test_tensor_complex_matches_square():
    src, rng = fresh(15)
    A = random_exact_module_sequence(src, rng, 1, max_rank=1)
    B2 = random_exact_module_sequence(src, rng, 1, max_rank=1)
    T = tensor_complex(A, B2)
    T.validate()
    assert T.l1 == 1 and T.l2 == 1
    S = simple_of_bicomplex(T)
    S.validate()
