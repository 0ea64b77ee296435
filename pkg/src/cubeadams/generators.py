"""Seeded random factories for cubes, split cubes, and exact sequences.

Every generator is deterministic in its ``random.Random`` instance.  Cube
randomness comes from conjugating direct-sum skeletons by invertible
matrices; this produces generic commuting, exact data without having to
solve for commuting families.
"""

from __future__ import annotations

import random
from fractions import Fraction

from . import multiindex as mi
from .cubes import BiCubeComplex, Cube, CubeComplex, cube_from_sequence, cube_point
from .exactalg import Poly, PolyMatrix
from .objects import Atom, Tensor, rank
from .splitcubes import SplitCube, direct_sum_cube


class AtomSource:
    """Allocates fresh, deterministically named atoms."""

    def __init__(self, prefix: str = "E"):
        self.prefix = prefix
        self.counter = 0

    def fresh(self, rk: int) -> Atom:
        self.counter += 1
        return Atom(f"{self.prefix}{self.counter}", rk)


def random_invertible(rng: random.Random, n: int, nvars: int = 0) -> PolyMatrix:
    """Unit-determinant matrix with small integer entries (L times U)."""
    if n == 0:
        return PolyMatrix.identity(0, nvars)
    L = [[Fraction(1 if i == j else (rng.randint(-2, 2) if i > j else 0))
          for j in range(n)] for i in range(n)]
    U = [[Fraction(1 if i == j else (rng.randint(-2, 2) if i < j else 0))
          for j in range(n)] for i in range(n)]
    M = PolyMatrix.from_rational(L) * PolyMatrix.from_rational(U)
    return M.with_nvars(nvars) if nvars else M


def random_unimodular_poly(rng: random.Random, n: int, nvars: int) -> PolyMatrix:
    """I + (strictly upper nilpotent with polynomial entries); inverse is
    polynomial as well."""
    rows = [[Poly.const(1 if i == j else 0, nvars) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.7:
                expo = tuple(rng.randint(0, 1) for _ in range(nvars))
                rows[i][j] = rows[i][j] + Poly(nvars, {expo: rng.randint(-2, 2)})
    return PolyMatrix(n, n, nvars, rows)


def random_cube(src: AtomSource, rng: random.Random, n: int, max_rank: int = 2,
                nvars: int = 0) -> Cube:
    """Random exact n-cube: iterated conjugated extensions of random corners."""
    if n == 0:
        q = cube_point(src.fresh(rng.randint(1, max_rank)), nvars)
        return q
    A = random_cube(src, rng, n - 1, max_rank, nvars)
    C = random_cube(src, rng, n - 1, max_rank, nvars)
    mid_vertices = {}
    g = {}
    for w in mi.vertices(n - 1):
        r = A.vertex_rank(w) + C.vertex_rank(w)
        mid_vertices[w] = src.fresh(r)
        if nvars:
            g[w] = random_unimodular_poly(rng, r, nvars)
        else:
            g[w] = random_invertible(rng, r)
    from .objects import inverse_matrix
    edges = {}
    for w in mi.vertices(n - 1):
        for l in range(1, n):
            if w[l - 1] in (0, 1):
                tgt = mi.substitution(w, l, w[l - 1] + 1)
                block = PolyMatrix.direct_sum([A.edges[(l, w)], C.edges[(l, w)]])
                edges[(l, w)] = g[tgt] * block.with_nvars(nvars) * inverse_matrix(g[w])
    M = Cube(n - 1, nvars, mid_vertices, edges)
    fmaps = {}
    gmaps = {}
    for w in mi.vertices(n - 1):
        ra, rc = A.vertex_rank(w), C.vertex_rank(w)
        incl = PolyMatrix.from_rational(
            [[1 if i == j else 0 for j in range(ra)] for i in range(ra + rc)]
        ).with_nvars(nvars)
        proj = PolyMatrix.from_rational(
            [[1 if j == ra + i else 0 for j in range(ra + rc)] for i in range(rc)]
        ).with_nvars(nvars)
        fmaps[w] = g[w] * incl
        gmaps[w] = proj * inverse_matrix(g[w])
    return cube_from_sequence([A, M, C], [fmaps, gmaps], 1)


def random_split_cube(src: AtomSource, rng: random.Random, n: int,
                      max_rank: int = 2, nvars: int = 0) -> SplitCube:
    """Corners are fresh atoms; interior vertices are conjugated sums."""
    corners = {v: src.fresh(rng.randint(1, max_rank)) for v in mi.corners(n)}
    skeleton = direct_sum_cube(corners, nvars)
    verts = {}
    g = {}
    for v in mi.vertices(n):
        r = skeleton.vertex_rank(v)
        if all(x in (0, 2) for x in v):
            verts[v] = skeleton.vertices[v]
            g[v] = PolyMatrix.identity(r, nvars)
        else:
            verts[v] = src.fresh(r)
            if nvars:
                g[v] = random_unimodular_poly(rng, r, nvars)
            else:
                g[v] = random_invertible(rng, r)
    from .objects import inverse_matrix
    edges = {}
    for v in mi.vertices(n):
        for l in range(1, n + 1):
            if v[l - 1] in (0, 1):
                tgt = mi.substitution(v, l, v[l - 1] + 1)
                edges[(l, v)] = g[tgt] * skeleton.edges[(l, v)] * inverse_matrix(g[v])
    cube = Cube(n, nvars, verts, edges)
    return SplitCube(cube, g)


def random_canonical_kernel_sequence(src: AtomSource, rng: random.Random,
                                     max_rank: int = 2):
    """A short exact sequence whose first map is a standard-columns inclusion."""
    r0 = rng.randint(1, max_rank)
    extra = rng.randint(1, max_rank)
    r1 = r0 + extra
    cols = sorted(rng.sample(range(r1), r0))
    comp = [c for c in range(r1) if c not in cols]
    E0 = src.fresh(r0)
    E1 = src.fresh(r1)
    E2 = src.fresh(extra)
    f0 = PolyMatrix.from_rational(
        [[1 if (i in cols and cols.index(i) == j) else 0 for j in range(r0)]
         for i in range(r1)]
    )
    Z = random_invertible(rng, extra)
    pick = PolyMatrix.from_rational(
        [[1 if j == comp[i] else 0 for j in range(r1)] for i in range(extra)]
    )
    f1 = Z * pick
    return (E0, E1, E2), (f0, f1)


def random_canonical_kernel_cube(src: AtomSource, rng: random.Random, n: int,
                                 max_rank: int = 2) -> Cube:
    """Cube whose 0-edges in every direction are standard-columns inclusions."""
    if n == 0:
        return cube_point(src.fresh(rng.randint(1, max_rank)))
    if n == 1:
        (E0, E1, E2), (f0, f1) = random_canonical_kernel_sequence(src, rng, max_rank)
        return cube_from_sequence(
            [cube_point(E0), cube_point(E1), cube_point(E2)],
            [{(): f0}, {(): f1}], 1,
        )
    A = random_canonical_kernel_cube(src, rng, n - 1, max_rank)
    C = random_canonical_kernel_cube(src, rng, n - 1, max_rank)
    from .cubes import cube_direct_sum
    B = cube_direct_sum([A, C])
    fmaps = {}
    gmaps = {}
    for w in mi.vertices(n - 1):
        ra, rc = A.vertex_rank(w), C.vertex_rank(w)
        fmaps[w] = PolyMatrix.from_rational(
            [[1 if i == j else 0 for j in range(ra)] for i in range(ra + rc)]
        )
        gmaps[w] = PolyMatrix.from_rational(
            [[1 if j == ra + i else 0 for j in range(ra + rc)] for i in range(rc)]
        )
    return cube_from_sequence([A, B, C], [fmaps, gmaps], 1)


def random_exact_module_sequence(src: AtomSource, rng: random.Random,
                                 length: int, max_rank: int = 2,
                                 conjugate: bool = True) -> CubeComplex:
    """Exact complex of modules: conjugated sum of shifted contractibles."""
    ks = [0] + [rng.randint(1, max_rank) for _ in range(length)] + [0]
    terms = []
    for p in range(length + 1):
        terms.append(src.fresh(ks[p] + ks[p + 1]))
    U = [random_invertible(rng, rank(t)) if conjugate else PolyMatrix.identity(rank(t))
         for t in terms]
    from .objects import inverse_matrix
    maps = []
    for p in range(length):
        rows = ks[p + 1] + ks[p + 2]
        cols = ks[p] + ks[p + 1]
        base = [[Fraction(1 if j == ks[p] + i else 0) for j in range(cols)]
                for i in range(ks[p + 1])]
        base += [[Fraction(0)] * cols for _ in range(ks[p + 2])]
        mat = U[p + 1] * PolyMatrix.from_rational(base) * inverse_matrix(U[p])
        maps.append({(): mat})
    return CubeComplex(0, 0, [cube_point(t) for t in terms], maps)


def random_exact_cube_sequence(src: AtomSource, rng: random.Random, length: int,
                               n: int, max_rank: int = 2) -> CubeComplex:
    """Exact complex of n-cubes: scaled sum of shifted contractible pairs."""
    if n == 0:
        return random_exact_module_sequence(src, rng, length, max_rank)
    from .cubes import cube_direct_sum, zero_cube
    Ks = [zero_cube(n)] + [random_cube(src, rng, n, max_rank) for _ in range(length)] \
        + [zero_cube(n)]
    lam = [Fraction(rng.choice([1, -1, 2, 1, 3])) for _ in range(length + 2)]
    terms = [cube_direct_sum([Ks[p], Ks[p + 1]]) for p in range(length + 1)]
    maps = []
    for p in range(length):
        mp = {}
        for v in mi.vertices(n):
            ra = Ks[p].vertex_rank(v)
            rb = Ks[p + 1].vertex_rank(v)
            rc = Ks[p + 2].vertex_rank(v)
            rows = rb + rc
            cols = ra + rb
            mat = [[Fraction(0)] * cols for _ in range(rows)]
            for i in range(rb):
                mat[i][ra + i] = lam[p + 1]
            mp[v] = PolyMatrix.from_rational(mat)
        maps.append(mp)
    return CubeComplex(n, 0, terms, maps)


def random_bicomplex(src: AtomSource, rng: random.Random, l1: int, l2: int,
                     n: int, max_rank: int = 2) -> BiCubeComplex:
    """Acyclic bicomplex U (x) V (x) C with exact module rows and columns."""
    U = random_exact_module_sequence(src, rng, l1, max_rank)
    V = random_exact_module_sequence(src, rng, l2, max_rank)
    C = random_cube(src, rng, n, max_rank) if n > 0 else cube_point(
        src.fresh(rng.randint(1, max_rank)))
    cubes = {}
    hmaps = {}
    vmaps = {}
    for r in range(l1 + 1):
        for s in range(l2 + 1):
            verts = {
                v: Tensor([U.term(r).vertices[()], V.term(s).vertices[()],
                           C.vertices[v]])
                for v in mi.vertices(n)
            }
            edges = {}
            for v in mi.vertices(n):
                for l in range(1, n + 1):
                    if v[l - 1] in (0, 1):
                        edges[(l, v)] = PolyMatrix.identity(
                            rank(U.term(r).vertices[()]) * rank(V.term(s).vertices[()])
                        ).kron(C.edges[(l, v)])
            cubes[(r, s)] = Cube(n, 0, verts, edges)
    for r in range(l1):
        for s in range(l2 + 1):
            hmaps[(r, s)] = {
                v: U.maps[r][()].kron(PolyMatrix.identity(
                    rank(V.term(s).vertices[()]) * C.vertex_rank(v)))
                for v in mi.vertices(n)
            }
    for r in range(l1 + 1):
        for s in range(l2):
            vmaps[(r, s)] = {
                v: PolyMatrix.identity(rank(U.term(r).vertices[()])).kron(
                    V.maps[s][()].kron(PolyMatrix.identity(C.vertex_rank(v))))
                for v in mi.vertices(n)
            }
    return BiCubeComplex(n, 0, l1, l2, cubes, hmaps, vmaps)


def random_box_cube(src: AtomSource, rng: random.Random, n: int, nvars: int,
                    max_rank: int = 2) -> Cube:
    """Exact n-cube with polynomial edge matrices over Q[t1..tnvars]."""
    return random_cube(src, rng, n, max_rank, nvars=nvars)
