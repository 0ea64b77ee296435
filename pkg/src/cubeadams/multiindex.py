"""Multi-index calculus and index-set enumeration.

Multi-indices are plain tuples of non-negative integers.  All positional
arguments (``l``, ``r1``, ``r2`` ...) are 1-based, matching the usual
face/degeneracy formulas; storage is 0-based internally.

The partition sets ``lambda_set(k, n, m)`` enumerate weighted partitions
(k_1, ..., k_r) of k together with strictly increasing 0/1 companion
multi-indices n^1 < ... < n^r such that sum k_s * n^s = m.  They drive the
direct-sum decompositions of Koszul complexes of sums.
"""

from __future__ import annotations

import itertools
from typing import Iterator, NamedTuple, Optional, Sequence

MultiIndex = tuple  # tuple[int, ...]


class PartitionTuple(NamedTuple):
    parts: tuple            # (k_1, ..., k_r), each >= 1
    companions: tuple       # (n^1, ..., n^r), each a 0/1 multi-index, strictly increasing


def _check_pos(i: MultiIndex, l: int, hi: int) -> None:
    if not 1 <= l <= hi:
        raise IndexError(f"position {l} out of range 1..{hi} for {i}")


def characteristic(i: MultiIndex) -> MultiIndex:
    """0/1 multi-index nu(i): entry 0 exactly where i vanishes."""
    return tuple(0 if x == 0 else 1 for x in i)


def norm(i: MultiIndex, upto: Optional[int] = None) -> int:
    """Sum of all entries, or of the first ``upto`` entries."""
    if upto is None:
        return sum(i)
    _check_pos(i, upto, len(i)) if upto != 0 else None
    if upto < 0 or upto > len(i):
        raise IndexError(f"upto={upto} out of range for {i}")
    return sum(i[:upto])


def face(i: MultiIndex, l: int) -> MultiIndex:
    """Delete entry l."""
    _check_pos(i, l, len(i))
    return i[: l - 1] + i[l:]


def degeneracy(i: MultiIndex, l: int, m: int) -> MultiIndex:
    """Insert m before position l (l may be len(i)+1: append)."""
    _check_pos(i, l, len(i) + 1)
    return i[: l - 1] + (m,) + i[l - 1 :]


def substitution(i: MultiIndex, l: int, m: int) -> MultiIndex:
    """Replace entry l by m (= degeneracy(face(i,l), l, m))."""
    _check_pos(i, l, len(i))
    return i[: l - 1] + (m,) + i[l:]


def multi_face(i: MultiIndex, ls: Sequence[int]) -> MultiIndex:
    """Delete the (1-based, strictly increasing) positions ``ls``."""
    drop = set(ls)
    return tuple(x for p, x in enumerate(i, start=1) if p not in drop)


def multi_substitution(i: MultiIndex, ls: Sequence[int], ms: Sequence[int]) -> MultiIndex:
    """Replace entry ls[t] by ms[t] for all t."""
    out = list(i)
    for l, m in zip(ls, ms):
        _check_pos(i, l, len(i))
        out[l - 1] = m
    return tuple(out)


def concat(i: MultiIndex, j: MultiIndex) -> MultiIndex:
    return tuple(i) + tuple(j)


def _check_01(i: MultiIndex) -> None:
    if any(x not in (0, 1) for x in i):
        raise ValueError(f"{i} is not a 0/1 multi-index")


def complement(i: MultiIndex) -> MultiIndex:
    _check_01(i)
    return tuple(1 - x for x in i)


def meet(i: MultiIndex, j: MultiIndex) -> MultiIndex:
    _check_01(i)
    _check_01(j)
    if len(i) != len(j):
        raise ValueError("length mismatch")
    return tuple(a * b for a, b in zip(i, j))


def join(i: MultiIndex, j: MultiIndex) -> MultiIndex:
    _check_01(i)
    _check_01(j)
    if len(i) != len(j):
        raise ValueError("length mismatch")
    return tuple(max(a, b) for a, b in zip(i, j))


def lex_compare(i: MultiIndex, j: MultiIndex) -> int:
    """-1, 0, 1 for i < j, i = j, i > j in the lexicographic order."""
    if len(i) != len(j):
        raise ValueError("length mismatch")
    if i == j:
        return 0
    return -1 if i < j else 1


def pointwise_geq(i: MultiIndex, j: MultiIndex) -> bool:
    if len(i) != len(j):
        raise ValueError("length mismatch")
    return all(a >= b for a, b in zip(i, j))


def ones_range(r1: int, r2: int, n: int) -> MultiIndex:
    """Multi-index of length n with ones exactly in positions r1..r2."""
    if not 1 <= r1 <= r2 <= n:
        raise ValueError(f"need 1 <= {r1} <= {r2} <= {n}")
    return tuple(1 if r1 <= p <= r2 else 0 for p in range(1, n + 1))


def unit_index(a: int, l: int, n: int) -> MultiIndex:
    """a_l: the length-n multi-index with single entry a in position l."""
    _check_pos((0,) * n, l, n)
    return tuple(a if p == l else 0 for p in range(1, n + 1))


def u_and_s(j: MultiIndex) -> tuple:
    """Positions carrying a 1 (ascending) and their count, for j over {0,1,2}."""
    u = tuple(p for p, x in enumerate(j, start=1) if x == 1)
    return u, len(u)


def w_and_v(j: MultiIndex, i: MultiIndex, k: int) -> tuple:
    """Split the 1-positions of j by whether i hits its ceiling k-1 there."""
    if len(i) != len(j):
        raise ValueError("length mismatch")
    w = tuple(p for p, x in enumerate(j, start=1) if x == 1 and i[p - 1] == k - 1)
    v = tuple(p for p, x in enumerate(j, start=1) if x == 1 and i[p - 1] != k - 1)
    return w, v


def J_set(n: int, m: int) -> list:
    """All strictly increasing (n-m)-tuples with entries in 1..n."""
    if not 0 <= m <= n:
        raise ValueError(f"need 0 <= m <= n, got m={m}, n={n}")
    return [tuple(c) for c in itertools.combinations(range(1, n + 1), n - m)]


def i_of_j(i: MultiIndex, j: MultiIndex) -> MultiIndex:
    """(i_{u_1}, i_{u_2}-1, ..., i_{u_l}-l+1, ...) over the 1-positions of j."""
    if len(i) != len(j):
        raise ValueError("length mismatch")
    u, _ = u_and_s(j)
    return tuple(i[ul - 1] - t for t, ul in enumerate(u))


def compositions(k: int, r: int) -> Iterator[tuple]:
    """All r-tuples of positive integers summing to k."""
    if r == 0:
        if k == 0:
            yield ()
        return
    for first in range(1, k - r + 2):
        for rest in compositions(k - first, r - 1):
            yield (first,) + rest


def lambda_set(k: int, n: int, m: MultiIndex) -> list:
    """All (parts, companions) with sum(parts) = k, companions strictly
    increasing 0/1 multi-indices of length n, and sum parts[s]*companions[s] = m.

    Output sorted by (r, parts, companions); deterministic.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(m) != n:
        raise ValueError("length of m must be n")
    out = []
    ones = sorted(itertools.product((0, 1), repeat=n))
    for r in range(1, k + 1):
        for parts in compositions(k, r):
            for comps in itertools.combinations(ones, r):
                total = [0] * n
                for ks, ns in zip(parts, comps):
                    for t in range(n):
                        total[t] += ks * ns[t]
                if tuple(total) == tuple(m):
                    out.append(PartitionTuple(parts, comps))
    out.sort(key=lambda pt: (len(pt.parts), pt.parts, pt.companions))
    return out


def index_box(lo: MultiIndex, hi: MultiIndex) -> Iterator[MultiIndex]:
    """All m with lo <= m <= hi pointwise, in lexicographic order."""
    if len(lo) != len(hi):
        raise ValueError("length mismatch")
    ranges = [range(a, b + 1) for a, b in zip(lo, hi)]
    for m in itertools.product(*ranges):
        yield m


def vertices(n: int, levels=(0, 1, 2)) -> list:
    """All length-n tuples over the given levels, lexicographically."""
    return [tuple(v) for v in itertools.product(levels, repeat=n)]


def corners(n: int) -> list:
    """The {0,2}^n tuples, lexicographically."""
    return vertices(n, levels=(0, 2))
