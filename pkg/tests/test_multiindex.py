import itertools

import pytest

from cubeadams import multiindex as mi


def test_characteristic():
    assert mi.characteristic((0, 3, 1)) == (0, 1, 1)
    assert mi.characteristic((0, 0)) == (0, 0)
    assert mi.characteristic((5,)) == (1,)


def test_norm():
    assert mi.norm((2, 5, 7)) == 14
    assert mi.norm((2, 5, 7), upto=2) == 7
    assert mi.norm(()) == 0
    with pytest.raises(IndexError):
        mi.norm((1, 2), upto=5)


def test_face_degeneracy_substitution():
    assert mi.face((2, 5, 7), 2) == (2, 7)
    assert mi.degeneracy((2, 7), 2, 4) == (2, 4, 7)
    assert mi.substitution((2, 5, 7), 2, 0) == (2, 0, 7)
    with pytest.raises(IndexError):
        mi.face((1,), 2)
    assert mi.degeneracy((1,), 2, 9) == (1, 9)


def test_boolean_ops():
    assert mi.complement((1, 0, 1)) == (0, 1, 0)
    assert mi.meet((1, 0, 1), (1, 1, 0)) == (1, 0, 0)
    assert mi.join((1, 0, 1), (1, 1, 0)) == (1, 1, 1)
    with pytest.raises(ValueError):
        mi.complement((2, 0))
    assert mi.concat((1, 2), (3,)) == (1, 2, 3)


def test_orders():
    assert mi.lex_compare((0, 1), (1, 0)) == -1
    assert mi.pointwise_geq((2, 1), (1, 1))
    assert not mi.pointwise_geq((0, 2), (1, 0))
    assert mi.lex_compare((0, 2), (1, 0)) == -1


def test_ones_range_and_unit():
    assert mi.ones_range(2, 3, 4) == (0, 1, 1, 0)
    assert mi.ones_range(1, 1, 1) == (1,)
    assert mi.ones_range(1, 3, 3) == (1, 1, 1)
    assert mi.unit_index(4, 2, 3) == (0, 4, 0)
    with pytest.raises(ValueError):
        mi.ones_range(3, 2, 4)


def test_u_and_s():
    assert mi.u_and_s((1, 0, 2, 1)) == ((1, 4), 2)
    assert mi.u_and_s((0, 2)) == ((), 0)
    assert mi.u_and_s((1, 1)) == ((1, 2), 2)


def test_w_and_v():
    assert mi.w_and_v((1, 1), (1, 0), 2) == ((1,), (2,))
    assert mi.w_and_v((0, 2), (1, 0), 2) == ((), ())
    assert mi.w_and_v((1,), (2,), 3) == ((1,), ())


def test_J_set_and_i_of_j():
    assert mi.J_set(3, 1) == [(1, 2), (1, 3), (2, 3)]
    assert mi.J_set(2, 2) == [()]
    assert mi.i_of_j((2, 5), (1, 1)) == (2, 4)
    for n in range(5):
        for m in range(n + 1):
            count = len(mi.J_set(n, m))
            import math
            assert count == math.comb(n, n - m)


def test_lambda_set_examples():
    out = mi.lambda_set(2, 1, (1,))
    assert out == [mi.PartitionTuple((1, 1), ((0,), (1,)))]
    out = mi.lambda_set(2, 2, (1, 1))
    assert out == [
        mi.PartitionTuple((1, 1), ((0, 0), (1, 1))),
        mi.PartitionTuple((1, 1), ((0, 1), (1, 0))),
    ]
    assert mi.lambda_set(2, 1, (2,)) == [mi.PartitionTuple((2,), ((1,),))]


def _lambda_brute(k, n, m):
    out = set()
    ones = list(itertools.product((0, 1), repeat=n))
    for r in range(1, k + 1):
        for parts in mi.compositions(k, r):
            for comps in itertools.product(ones, repeat=r):
                if any(comps[i] >= comps[i + 1] for i in range(r - 1)):
                    continue
                total = tuple(
                    sum(parts[s] * comps[s][t] for s in range(r)) for t in range(n)
                )
                if total == tuple(m):
                    out.add((parts, comps))
    return out


def test_lambda_set_against_bruteforce():
    for k in range(1, 5):
        for n in range(0, 4):
            for m in itertools.product(range(k + 1), repeat=n):
                got = mi.lambda_set(k, n, m)
                assert len(set(got)) == len(got)
                for pt in got:
                    assert sum(pt.parts) == k
                    assert all(p >= 1 for p in pt.parts)
                    assert list(pt.companions) == sorted(pt.companions)
                    assert len(set(pt.companions)) == len(pt.companions)
                    total = tuple(
                        sum(ks * ns[t] for ks, ns in zip(pt.parts, pt.companions))
                        for t in range(n)
                    )
                    assert total == tuple(m)
                assert set((pt.parts, pt.companions) for pt in got) == _lambda_brute(k, n, m)


def test_face_commutation():
    x = (3, 1, 4, 1, 5)
    n = len(x)
    for r in range(1, n + 1):
        for i in range(1, r):
            assert mi.face(mi.face(x, r), i) == mi.face(mi.face(x, i), r - 1)
        if r < n:
            assert mi.face(mi.face(x, r), r) == mi.face(mi.face(x, r + 1), r)


def test_boolean_algebra_exhaustive():
    for n in range(0, 4):
        for i in mi.vertices(n, (0, 1)):
            assert mi.complement(mi.complement(i)) == i
            for j in mi.vertices(n, (0, 1)):
                assert mi.meet(i, j) == mi.meet(j, i)
                assert mi.join(i, j) == mi.join(j, i)
                assert mi.meet(i, i) == i
                assert mi.join(i, i) == i
                for k in mi.vertices(n, (0, 1)):
                    assert mi.meet(mi.meet(i, j), k) == mi.meet(i, mi.meet(j, k))
                    assert mi.join(mi.join(i, j), k) == mi.join(i, mi.join(j, k))


def test_index_box():
    assert list(mi.index_box((0, 0), (1, 1))) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert list(mi.index_box((), ())) == [()]
