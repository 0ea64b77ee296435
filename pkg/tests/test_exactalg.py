import random
from fractions import Fraction

import pytest

from cubeadams.exactalg import (
    CertificationFailed,
    NotAComplex,
    Poly,
    PolyMatrix,
    certification_points,
    exactness_profile,
    inverse_q,
    is_exact_sequence,
    kernel_basis_q,
    membership_solve,
    parse_poly,
    poly_kernel,
    rank_q,
    rref,
    solve_q,
)


def M(rows, nvars=0):
    return PolyMatrix.from_rational(rows, nvars)


def t(nvars=1, i=1):
    return Poly.var(i, nvars)


def test_rref_examples():
    _, _, r = rref(M([[1, 2], [2, 4]]))
    assert r == 1
    _, _, r = rref(PolyMatrix.identity(3))
    assert r == 3
    _, _, r = rref(M([[0]]))
    assert r == 0


def test_rref_idempotent_and_permutation_stable():
    rng = random.Random(5)
    for _ in range(20):
        rows = [[Fraction(rng.randint(-4, 4)) for _ in range(4)] for _ in range(3)]
        A = M(rows)
        R, _, r = rref(A)
        R2, _, r2 = rref(R)
        assert R == R2 and r == r2
        shuffled = rows[:]
        rng.shuffle(shuffled)
        assert rank_q(M(shuffled)) == r


def test_kernel_basis_q():
    K = kernel_basis_q(M([[1, 1]]))
    assert K == M([[-1], [1]])
    assert kernel_basis_q(M([[1, 1], [0, 1]])).ncols == 0
    assert kernel_basis_q(PolyMatrix.zero(2, 2)) == PolyMatrix.identity(2)


def test_solve_and_inverse():
    A = M([[2, 1], [1, 1]])
    X = solve_q(A, PolyMatrix.identity(2))
    assert A * X == PolyMatrix.identity(2)
    assert inverse_q(A) == X
    assert solve_q(M([[1], [1]]), M([[1], [2]])) is None


def test_poly_str_and_parse_roundtrip():
    p = Poly(2, {(2, 1): Fraction(3, 2), (0, 0): Fraction(-1)})
    assert str(p) == "3/2*t1^2*t2 - 1"
    assert parse_poly(str(p), 2) == p
    q = Poly(1, {(1,): Fraction(-1), (0,): Fraction(1)})
    assert str(q) == "-t1 + 1"
    assert parse_poly(str(q), 1) == q
    assert parse_poly("0", 3) == Poly(3)


def test_evaluate():
    tt = t()
    A = PolyMatrix(1, 1, 1, [[tt]])
    assert A.evaluate(1, 0) == M([[0]])
    B = PolyMatrix(1, 1, 1, [[tt - 1]])
    assert B.evaluate(1, 1) == M([[0]])
    C = PolyMatrix(1, 1, 1, [[tt + tt + Fraction(1, 2)]])
    assert C.evaluate(1, 1) == M([[Fraction(5, 2)]])


def test_evaluate_commutes_with_product():
    rng = random.Random(11)
    for _ in range(10):
        A = PolyMatrix(
            2, 3, 1,
            [[Poly(1, {(0,): rng.randint(-2, 2), (1,): rng.randint(-2, 2)})
              for _ in range(3)] for _ in range(2)],
        )
        B = PolyMatrix(
            3, 2, 1,
            [[Poly(1, {(0,): rng.randint(-2, 2), (1,): rng.randint(-2, 2)})
              for _ in range(2)] for _ in range(3)],
        )
        v = Fraction(rng.randint(-3, 3), rng.randint(1, 4))
        assert (A * B).evaluate(1, v) == A.evaluate(1, v) * B.evaluate(1, v)


def test_poly_kernel_line_example():
    tt = t()
    A = PolyMatrix(1, 2, 1, [[tt, tt - 1]])
    K = poly_kernel(A)
    assert K.ncols == 1
    assert (A * K).is_zero()
    # canonical scaling: graded-lex leading coefficient of first entry is 1
    assert K.rows[0][0] == tt - 1
    assert K.rows[1][0] == -tt + Poly.const(0, 1)


def test_poly_kernel_trivial_cases():
    A = PolyMatrix.identity(2).with_nvars(1)
    assert poly_kernel(A).ncols == 0
    Z = PolyMatrix.zero(1, 1, 1)
    K = poly_kernel(Z)
    assert K.ncols == 1 and K.rows[0][0] == Poly.const(1, 1)


def test_poly_kernel_certified_fibers():
    tt = t()
    A = PolyMatrix(1, 2, 1, [[tt, tt - 1]])
    K = poly_kernel(A, n_points=20)
    rng = random.Random(123)
    for p in certification_points(1, 20, rng):
        fiber = K.evaluate_all(p)
        assert rank_q(fiber) == 2 - rank_q(A.evaluate_all(p))


def test_membership_solve():
    tt = t()
    K = PolyMatrix(2, 1, 1, [[tt], [Poly.const(1, 1)]])
    V = PolyMatrix(2, 1, 1, [[tt + tt], [Poly.const(2, 1)]])
    X = membership_solve(K, V)
    assert X is not None and (K * X - V).is_zero()
    assert X.rows[0][0] == Poly.const(2, 1)
    bad = membership_solve(PolyMatrix(1, 1, 1, [[tt]]), PolyMatrix(1, 1, 1, [[Poly.const(1, 1)]]))
    assert bad is None
    I4 = PolyMatrix.identity(3).with_nvars(1)
    V = PolyMatrix(3, 1, 1, [[tt], [tt * tt], [Poly.const(5, 1)]])
    assert membership_solve(I4, V) == V


def test_exactness_profile():
    betti, ok = exactness_profile([1, 1], [M([[1]])])
    assert ok and betti == [0, 0]
    betti, ok = exactness_profile([1], [])
    assert not ok and betti == [1]
    # Koszul strand dims (1, 4, 3): rank d0 = 1, rank d1 = 3
    d0 = M([[1], [0], [0], [-1]])
    d1 = M([[0, 1, 0, 0], [0, 0, 1, 0], [1, 0, 0, 1]])
    betti, ok = exactness_profile([1, 4, 3], [d0, d1])
    assert ok
    with pytest.raises(NotAComplex):
        exactness_profile([1, 1, 1], [M([[1]]), M([[1]])])


def test_is_exact_sequence_poly():
    tt = t()
    one = Poly.const(1, 1)
    # 0 -> R --(1, t)^T--> R^2 --(-t, 1)--> R -> 0 is exact fiberwise
    f = PolyMatrix(2, 1, 1, [[one], [tt]])
    g = PolyMatrix(1, 2, 1, [[-tt, one]])
    assert is_exact_sequence([1, 2, 1], [f, g], nvars=1)
    assert not is_exact_sequence([1, 2, 1], [f, PolyMatrix.zero(1, 2, 1)], nvars=1)


def test_poly_kernel_nonflat_fails():
    # kernel dimension jumps at t = 2: (t-2) * x = 0
    tt = t()
    A = PolyMatrix(1, 1, 1, [[tt - 2]])
    with pytest.raises(CertificationFailed):
        poly_kernel(A, n_points=30, seed=5)
