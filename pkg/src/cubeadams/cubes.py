"""Cubes, chains of cubes, and iterated cochain complexes of cubes.

An n-cube is a {0,1,2}^n-indexed family of based modules with commuting
edge maps, exact along every 1-dimensional strand.  Chains are integer
combinations of canonically keyed cubes; all-zero cubes are identified
with the group zero (they span a contractible subcomplex and every face
or degeneracy of one is again all-zero).

``CubeComplex`` carries a finite cochain complex of n-cubes: direction 1
has arbitrary finite length, the remaining directions have length 2.  A
single module is the degenerate length-0, dimension-0 case.  These are
also the generators of the larger complex that the kernel-splitting map
consumes.  ``BiCubeComplex`` is the 2-iterated analogue.
"""

from __future__ import annotations

import hashlib
from typing import Callable, Dict, Optional, Sequence, Tuple

from . import multiindex as mi
from .exactalg import Poly, PolyMatrix, is_exact_sequence
from .objects import (
    ZERO,
    Expr,
    Sum,
    inverse_matrix,
    normalize,
    rank,
)


class NotExact(Exception):
    """Data fed to a cube constructor fails componentwise exactness."""


# ---------------------------------------------------------------------------
# cubes


class Cube:
    __slots__ = ("n", "nvars", "vertices", "edges", "_key")

    def __init__(self, n: int, nvars: int, vertices: Dict[tuple, Expr], edges):
        self.n = n
        self.nvars = nvars
        self.vertices = dict(vertices)
        self.edges = dict(edges)
        self._key = None
        for v in mi.vertices(n):
            if v not in self.vertices:
                raise ValueError(f"missing vertex {v}")
        for v in mi.vertices(n):
            for l in range(1, n + 1):
                if v[l - 1] in (0, 1):
                    m = self.edges.get((l, v))
                    if m is None:
                        raise ValueError(f"missing edge ({l}, {v})")
                    tgt = mi.substitution(v, l, v[l - 1] + 1)
                    if m.nrows != rank(self.vertices[tgt]) or m.ncols != rank(self.vertices[v]):
                        raise ValueError(f"edge ({l}, {v}) has wrong shape")

    def vertex_rank(self, v: tuple) -> int:
        return rank(self.vertices[v])

    def is_zero(self) -> bool:
        return all(rank(e) == 0 for e in self.vertices.values())

    def key(self) -> str:
        if self._key is None:
            parts = [f"n={self.n};m={self.nvars}"]
            for v in mi.vertices(self.n):
                parts.append("".join(map(str, v)) + ":" + self.vertices[v].key())
            for v in mi.vertices(self.n):
                for l in range(1, self.n + 1):
                    if v[l - 1] in (0, 1):
                        parts.append(
                            f"e{l},{''.join(map(str, v))}:"
                            + self.edges[(l, v)].canonical_str()
                        )
            self._key = hashlib.sha256("|".join(parts).encode()).hexdigest()
        return self._key

    def __eq__(self, other):
        return isinstance(other, Cube) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"Cube(n={self.n}, key={self.key()[:10]})"


def cube_point(e: Expr, nvars: int = 0) -> Cube:
    return Cube(0, nvars, {(): e}, {})


def zero_cube(n: int, nvars: int = 0) -> Cube:
    verts = {v: ZERO for v in mi.vertices(n)}
    edges = {}
    for v in mi.vertices(n):
        for l in range(1, n + 1):
            if v[l - 1] in (0, 1):
                edges[(l, v)] = PolyMatrix.zero(0, 0, nvars)
    return Cube(n, nvars, verts, edges)


def cube_face(E: Cube, i: int, j: int) -> Cube:
    """Face in direction i at level j; beyond-length faces give zero cubes."""
    if not 1 <= i <= E.n:
        raise ValueError("direction out of range")
    if j > 2 or j < 0:
        return zero_cube(E.n - 1, E.nvars)
    verts = {}
    edges = {}
    for w in mi.vertices(E.n - 1):
        v = mi.degeneracy(w, i, j)
        verts[w] = E.vertices[v]
        for l in range(1, E.n):
            if w[l - 1] in (0, 1):
                ll = l if l < i else l + 1
                edges[(l, w)] = E.edges[(ll, v)]
    return Cube(E.n - 1, E.nvars, verts, edges)


def cube_degeneracy(E: Cube, i: int, j: int) -> Cube:
    """s_i^j for j in {0,1}: insert an identity edge at levels j -> j+1."""
    if j not in (0, 1):
        raise ValueError("degeneracy level must be 0 or 1")
    if not 1 <= i <= E.n + 1:
        raise ValueError("direction out of range")
    n = E.n + 1
    verts = {}
    edges = {}
    for v in mi.vertices(n):
        w = mi.face(v, i)
        verts[v] = E.vertices[w] if v[i - 1] in (j, j + 1) else ZERO
    for v in mi.vertices(n):
        for l in range(1, n + 1):
            if v[l - 1] not in (0, 1):
                continue
            tgt = mi.substitution(v, l, v[l - 1] + 1)
            rs, rt = rank(verts[v]), rank(verts[tgt])
            if rs == 0 or rt == 0:
                edges[(l, v)] = PolyMatrix.zero(rt, rs, E.nvars)
            elif l == i:
                edges[(l, v)] = PolyMatrix.identity(rs, E.nvars)
            else:
                ll = l if l < i else l - 1
                edges[(l, v)] = E.edges[(ll, mi.face(v, i))]
    return Cube(n, E.nvars, verts, edges)


def cube_from_sequence(components: Sequence[Cube], maps: Sequence[Dict[tuple, PolyMatrix]],
                       i: int) -> Cube:
    """Assemble an n-cube from a componentwise-exact sequence of three
    (n-1)-cubes along direction i."""
    A, B, C = components
    f, g = maps
    n = A.n + 1
    for w in mi.vertices(A.n):
        dims = [A.vertex_rank(w), B.vertex_rank(w), C.vertex_rank(w)]
        if not is_exact_sequence(dims, [f[w], g[w]], nvars=A.nvars):
            raise NotExact(f"sequence not exact at component {w}")
    verts = {}
    edges = {}
    by_level = {0: A, 1: B, 2: C}
    for v in mi.vertices(n):
        w = mi.face(v, i)
        verts[v] = by_level[v[i - 1]].vertices[w]
    for v in mi.vertices(n):
        for l in range(1, n + 1):
            if v[l - 1] not in (0, 1):
                continue
            w = mi.face(v, i)
            if l == i:
                edges[(l, v)] = f[w] if v[i - 1] == 0 else g[w]
            else:
                ll = l if l < i else l - 1
                edges[(l, v)] = by_level[v[i - 1]].edges[(ll, w)]
    return Cube(n, A.nvars, verts, edges)


def validate_cube(E: Cube, check_exact: bool = True) -> None:
    """Commuting squares plus exactness of every strand."""
    for v in mi.vertices(E.n):
        for l1 in range(1, E.n + 1):
            for l2 in range(l1 + 1, E.n + 1):
                if v[l1 - 1] in (0, 1) and v[l2 - 1] in (0, 1):
                    a = E.edges[(l2, mi.substitution(v, l1, v[l1 - 1] + 1))] * E.edges[(l1, v)]
                    b = E.edges[(l1, mi.substitution(v, l2, v[l2 - 1] + 1))] * E.edges[(l2, v)]
                    if a != b:
                        raise ValueError(f"square at {v} in directions {l1},{l2} does not commute")
    if not check_exact:
        return
    for l in range(1, E.n + 1):
        for w in mi.vertices(E.n - 1):
            v0 = mi.degeneracy(w, l, 0)
            v1 = mi.degeneracy(w, l, 1)
            dims = [E.vertex_rank(v0), E.vertex_rank(v1),
                    E.vertex_rank(mi.degeneracy(w, l, 2))]
            if not is_exact_sequence(
                dims, [E.edges[(l, v0)], E.edges[(l, v1)]], nvars=E.nvars
            ):
                raise NotExact(f"strand {w} in direction {l} is not exact")


def canonical_rebase(E: Cube) -> Cube:
    """Rewrite every vertex in normal form, conjugating the edges."""
    verts = {}
    isos = {}
    for v, e in E.vertices.items():
        nf, iso = normalize(e)
        verts[v] = nf
        isos[v] = iso
    edges = {}
    for (l, v), m in E.edges.items():
        tgt = mi.substitution(v, l, v[l - 1] + 1)
        edges[(l, v)] = isos[tgt].with_nvars(E.nvars) * m * inverse_matrix(
            isos[v]
        ).with_nvars(E.nvars) if E.nvars else isos[tgt] * m * inverse_matrix(isos[v])
    return Cube(E.n, E.nvars, verts, edges)


def is_degenerate(E: Cube) -> Optional[Tuple[int, int]]:
    """A witness (i, j) with E = s_i^j(face) under key equality, if any."""
    if E.is_zero() and E.n >= 1:
        return (1, 0)
    for i in range(1, E.n + 1):
        for j in (0, 1):
            G = cube_face(E, i, j)
            if cube_degeneracy(G, i, j) == E:
                return (i, j)
    return None


def tier_equal(a: Cube, b: Cube) -> int:
    """0: different; 1: equal keys; 2: equal after canonical rebase."""
    if a.key() == b.key():
        return 1
    if canonical_rebase(a).key() == canonical_rebase(b).key():
        return 2
    return 0


# ---------------------------------------------------------------------------
# chains of cubes


class ChainElement:
    """Integer formal combination of cubes, keyed canonically."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        if terms:
            for coeff, cube in terms:
                self.add(coeff, cube)

    def add(self, coeff: int, cube: Cube) -> "ChainElement":
        if coeff == 0 or cube.is_zero():
            return self
        k = cube.key()
        if k in self.terms:
            c = self.terms[k][0] + coeff
            if c == 0:
                del self.terms[k]
            else:
                self.terms[k] = (c, cube)
        else:
            self.terms[k] = (coeff, cube)
        return self

    def __add__(self, other: "ChainElement") -> "ChainElement":
        out = ChainElement()
        for c, q in self.terms.values():
            out.add(c, q)
        for c, q in other.terms.values():
            out.add(c, q)
        return out

    def scale(self, c: int) -> "ChainElement":
        out = ChainElement()
        for coeff, q in self.terms.values():
            out.add(c * coeff, q)
        return out

    def __sub__(self, other: "ChainElement") -> "ChainElement":
        return self + other.scale(-1)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, ChainElement):
            return NotImplemented
        return {k: c for k, (c, _) in self.terms.items()} == {
            k: c for k, (c, _) in other.terms.items()
        }

    def __iter__(self):
        return iter(sorted(self.terms.values(), key=lambda t: t[1].key()))

    def __len__(self):
        return len(self.terms)

    def map(self, fn: Callable[[Cube], Cube]) -> "ChainElement":
        out = ChainElement()
        for c, q in self.terms.values():
            out.add(c, fn(q))
        return out

    def degrees(self) -> set:
        return {q.n for _, q in self.terms.values()}

    def __repr__(self):
        bits = [f"{c:+d}*{q.key()[:8]}(n={q.n})" for c, q in self]
        return "Chain[" + " ".join(bits) + "]"


def chain_of(cube: Cube, coeff: int = 1) -> ChainElement:
    return ChainElement([(coeff, cube)])


def differential(x: ChainElement) -> ChainElement:
    out = ChainElement()
    for c, q in x.terms.values():
        for i in range(1, q.n + 1):
            for j in range(3):
                out.add(c * (-1) ** (i + j), cube_face(q, i, j))
    return out


def face_map(x: ChainElement, i: int, j: int) -> ChainElement:
    out = ChainElement()
    for c, q in x.terms.values():
        out.add(c, cube_face(q, i, j))
    return out


def degeneracy_map(x: ChainElement, i: int, j: int) -> ChainElement:
    out = ChainElement()
    for c, q in x.terms.values():
        out.add(c, cube_degeneracy(q, i, j))
    return out


def degenerate_reduce(x: ChainElement) -> ChainElement:
    out = ChainElement()
    for c, q in x.terms.values():
        if is_degenerate(q) is None:
            out.add(c, q)
    return out


def rebase_chain(x: ChainElement) -> ChainElement:
    return x.map(canonical_rebase)


def normalized_project(x: ChainElement) -> ChainElement:
    """Projection onto the normalized subcomplex killed by the outer faces.

    Applies prod_i (1 - s_i^1 d_i^2) prod_i (1 - s_i^0 d_i^0) degreewise.
    """
    out = ChainElement()
    for n in sorted(x.degrees()):
        y = ChainElement()
        for c, q in x.terms.values():
            if q.n == n:
                y.add(c, q)
        for i in range(n, 0, -1):
            y = y - degeneracy_map(face_map(y, i, 0), i, 0)
        for i in range(n, 0, -1):
            y = y - degeneracy_map(face_map(y, i, 2), i, 1)
        out = out + y
    return out


def chains_equal_tier(x: ChainElement, y: ChainElement) -> int:
    """0: different; 1: equal; 2: equal after per-vertex canonical rebase."""
    if x == y:
        return 1
    if rebase_chain(x) == rebase_chain(y):
        return 2
    return 0


# ---------------------------------------------------------------------------
# finite cochain complexes of cubes (direction 1 of arbitrary length)


class CubeComplex:
    """Length-L cochain complex of n-cubes with per-vertex connecting maps.

    The degenerate case L = 0, n = 0 is a single module.  Trailing all-zero
    cubes are trimmed on construction so equal supports get equal keys.
    """

    __slots__ = ("n", "nvars", "length", "cubes", "maps", "_key")

    def __init__(self, n: int, nvars: int, cubes: Sequence[Cube],
                 maps: Sequence[Dict[tuple, PolyMatrix]]):
        cubes = list(cubes)
        maps = list(maps)
        while len(cubes) > 1 and cubes[-1].is_zero():
            cubes.pop()
            maps.pop()
        self.n = n
        self.nvars = nvars
        self.cubes = tuple(cubes)
        self.maps = tuple(dict(m) for m in maps)
        self.length = len(self.cubes) - 1
        self._key = None
        if len(self.maps) != self.length:
            raise ValueError("need one map per consecutive pair")

    def is_zero(self) -> bool:
        return all(q.is_zero() for q in self.cubes)

    def key(self) -> str:
        if self._key is None:
            parts = [f"cc:n={self.n};m={self.nvars};L={self.length}"]
            parts += [q.key() for q in self.cubes]
            for p, mp in enumerate(self.maps):
                for v in mi.vertices(self.n):
                    parts.append(f"g{p},{''.join(map(str, v))}:" + mp[v].canonical_str())
            self._key = hashlib.sha256("|".join(parts).encode()).hexdigest()
        return self._key

    def __eq__(self, other):
        return isinstance(other, CubeComplex) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def term(self, p: int) -> Cube:
        if 0 <= p < len(self.cubes):
            return self.cubes[p]
        return zero_cube(self.n, self.nvars)

    def validate(self, check_exact: bool = True) -> None:
        for q in self.cubes:
            validate_cube(q, check_exact=check_exact)
        for p, mp in enumerate(self.maps):
            src, tgt = self.cubes[p], self.cubes[p + 1]
            for v in mi.vertices(self.n):
                m = mp[v]
                if m.nrows != tgt.vertex_rank(v) or m.ncols != src.vertex_rank(v):
                    raise ValueError(f"map {p} at {v} has wrong shape")
            for v in mi.vertices(self.n):
                for l in range(1, self.n + 1):
                    if v[l - 1] in (0, 1):
                        w = mi.substitution(v, l, v[l - 1] + 1)
                        if mp[w] * src.edges[(l, v)] != tgt.edges[(l, v)] * mp[v]:
                            raise ValueError(f"map {p} is not a cube morphism at {v}, dir {l}")
        if check_exact:
            for v in mi.vertices(self.n):
                dims = [q.vertex_rank(v) for q in self.cubes]
                seq = [mp[v] for mp in self.maps]
                if not is_exact_sequence(dims, seq, nvars=self.nvars):
                    raise NotExact(f"complex not acyclic at vertex {v}")

    def cube_face(self, l: int, j: int) -> "CubeComplex":
        cubes = [cube_face(q, l, j) for q in self.cubes]
        maps = []
        for p, mp in enumerate(self.maps):
            maps.append({w: mp[mi.degeneracy(w, l, j)] if 0 <= j <= 2 else
                         PolyMatrix.zero(0, 0, self.nvars)
                         for w in mi.vertices(self.n - 1)})
        return CubeComplex(self.n - 1, self.nvars, cubes, maps)

    def rebase(self) -> "CubeComplex":
        new_cubes = []
        isos = []
        for q in self.cubes:
            new_cubes.append(canonical_rebase(q))
            isos.append({v: normalize(q.vertices[v])[1] for v in mi.vertices(self.n)})
        maps = []
        for p, mp in enumerate(self.maps):
            maps.append({
                v: isos[p + 1][v].with_nvars(self.nvars) * mp[v]
                * inverse_matrix(isos[p][v]).with_nvars(self.nvars)
                for v in mi.vertices(self.n)
            })
        return CubeComplex(self.n, self.nvars, new_cubes, maps)

    def __repr__(self):
        return f"CubeComplex(n={self.n}, L={self.length}, key={self.key()[:10]})"


def cube_as_complex(E: Cube) -> CubeComplex:
    """Reinterpret an n-cube (n >= 1) as a length-2 complex of faces."""
    if E.n == 0:
        return CubeComplex(0, E.nvars, [E], [])
    cubes = [cube_face(E, 1, j) for j in range(3)]
    maps = []
    for p in (0, 1):
        maps.append({
            w: E.edges[(1, mi.degeneracy(w, 1, p))]
            for w in mi.vertices(E.n - 1)
        })
    return CubeComplex(E.n - 1, E.nvars, cubes, maps)


def complex_as_cube(X: CubeComplex) -> Cube:
    """Inverse of cube_as_complex for length <= 2 complexes."""
    n = X.n + 1
    comps = [X.term(p) for p in range(3)]
    fmaps = []
    for p in (0, 1):
        if p < len(X.maps):
            fmaps.append(dict(X.maps[p]))
        else:
            fmaps.append({
                w: PolyMatrix.zero(comps[p + 1].vertex_rank(w),
                                   comps[p].vertex_rank(w), X.nvars)
                for w in mi.vertices(X.n)
            })
    verts = {}
    edges = {}
    for v in mi.vertices(n):
        w = mi.face(v, 1)
        verts[v] = comps[v[0]].vertices[w]
    for v in mi.vertices(n):
        for l in range(1, n + 1):
            if v[l - 1] not in (0, 1):
                continue
            w = mi.face(v, 1)
            if l == 1:
                edges[(l, v)] = fmaps[v[0]][w]
            else:
                edges[(l, v)] = comps[v[0]].edges[(l - 1, w)]
    return Cube(n, X.nvars, verts, edges)


class ComplexChain:
    """Integer formal combination of CubeComplex generators."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        if terms:
            for coeff, x in terms:
                self.add(coeff, x)

    def add(self, coeff: int, x: CubeComplex) -> "ComplexChain":
        if coeff == 0 or x.is_zero():
            return self
        k = x.key()
        if k in self.terms:
            c = self.terms[k][0] + coeff
            if c == 0:
                del self.terms[k]
            else:
                self.terms[k] = (c, x)
        else:
            self.terms[k] = (coeff, x)
        return self

    def __add__(self, other: "ComplexChain") -> "ComplexChain":
        out = ComplexChain()
        for c, x in self.terms.values():
            out.add(c, x)
        for c, x in other.terms.values():
            out.add(c, x)
        return out

    def scale(self, c: int) -> "ComplexChain":
        out = ComplexChain()
        for coeff, x in self.terms.values():
            out.add(c * coeff, x)
        return out

    def __sub__(self, other):
        return self + other.scale(-1)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, ComplexChain):
            return NotImplemented
        return {k: c for k, (c, _) in self.terms.items()} == {
            k: c for k, (c, _) in other.terms.items()
        }

    def __iter__(self):
        return iter(sorted(self.terms.values(), key=lambda t: t[1].key()))

    def __len__(self):
        return len(self.terms)

    def rebase(self) -> "ComplexChain":
        out = ComplexChain()
        for c, x in self.terms.values():
            out.add(c, x.rebase())
        return out

    def __repr__(self):
        bits = [f"{c:+d}*{x!r}" for c, x in self]
        return "CChain[" + " ".join(bits) + "]"


def complex_chain_of(x: CubeComplex, coeff: int = 1) -> ComplexChain:
    return ComplexChain([(coeff, x)])


def arb_differential(x: ComplexChain) -> ComplexChain:
    """Differential of the complex of arbitrary-length sequences of cubes.

    Direction 1 contributes the signed slices, the cube directions the
    usual faces applied termwise.
    """
    out = ComplexChain()
    for c, X in x.terms.values():
        if X.length == 0 and X.n == 0:
            continue
        for p in range(X.length + 1):
            out.add(c * (-1) ** (1 + p), cube_as_complex(X.term(p)))
        for l in range(1, X.n + 1):
            for j in range(3):
                out.add(c * (-1) ** (l + 1 + j), X.cube_face(l, j))
    return out


# ---------------------------------------------------------------------------
# 2-iterated complexes of cubes


class BiCubeComplex:
    """Lengths (L1, L2) bicomplex of n-cubes with commuting differentials."""

    __slots__ = ("n", "nvars", "l1", "l2", "cubes", "hmaps", "vmaps", "_key")

    def __init__(self, n, nvars, l1, l2, cubes, hmaps, vmaps):
        self.n = n
        self.nvars = nvars
        self.l1 = l1
        self.l2 = l2
        self.cubes = dict(cubes)
        self.hmaps = dict(hmaps)
        self.vmaps = dict(vmaps)
        self._key = None
        for r in range(l1 + 1):
            for s in range(l2 + 1):
                if (r, s) not in self.cubes:
                    raise ValueError(f"missing entry {(r, s)}")

    def entry(self, r: int, s: int) -> Cube:
        if 0 <= r <= self.l1 and 0 <= s <= self.l2:
            return self.cubes[(r, s)]
        return zero_cube(self.n, self.nvars)

    def is_zero(self) -> bool:
        return all(q.is_zero() for q in self.cubes.values())

    def key(self) -> str:
        if self._key is None:
            parts = [f"bc:n={self.n};m={self.nvars};L={self.l1},{self.l2}"]
            for r in range(self.l1 + 1):
                for s in range(self.l2 + 1):
                    parts.append(self.cubes[(r, s)].key())
            for tag, mp in (("h", self.hmaps), ("v", self.vmaps)):
                for pos in sorted(mp):
                    for v in mi.vertices(self.n):
                        parts.append(f"{tag}{pos}{v}:" + mp[pos][v].canonical_str())
            self._key = hashlib.sha256("|".join(parts).encode()).hexdigest()
        return self._key

    def __eq__(self, other):
        return isinstance(other, BiCubeComplex) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def row(self, r: int) -> CubeComplex:
        cubes = [self.cubes[(r, s)] for s in range(self.l2 + 1)]
        maps = [self.vmaps[(r, s)] for s in range(self.l2)]
        return CubeComplex(self.n, self.nvars, cubes, maps)

    def column(self, s: int) -> CubeComplex:
        cubes = [self.cubes[(r, s)] for r in range(self.l1 + 1)]
        maps = [self.hmaps[(r, s)] for r in range(self.l1)]
        return CubeComplex(self.n, self.nvars, cubes, maps)

    def cube_face(self, l: int, j: int) -> "BiCubeComplex":
        cubes = {pos: cube_face(q, l, j) for pos, q in self.cubes.items()}
        hm = {pos: {w: m[mi.degeneracy(w, l, j)] for w in mi.vertices(self.n - 1)}
              for pos, m in self.hmaps.items()}
        vm = {pos: {w: m[mi.degeneracy(w, l, j)] for w in mi.vertices(self.n - 1)}
              for pos, m in self.vmaps.items()}
        return BiCubeComplex(self.n - 1, self.nvars, self.l1, self.l2, cubes, hm, vm)

    def validate(self, check_exact: bool = True) -> None:
        for r in range(self.l1 + 1):
            self.row(r).validate(check_exact=check_exact)
        for s in range(self.l2 + 1):
            self.column(s).validate(check_exact=check_exact)
        for r in range(self.l1):
            for s in range(self.l2):
                for v in mi.vertices(self.n):
                    a = self.hmaps[(r, s + 1)][v] * self.vmaps[(r, s)][v]
                    b = self.vmaps[(r + 1, s)][v] * self.hmaps[(r, s)][v]
                    if a != b:
                        raise ValueError(f"bicomplex square {(r, s)} fails at {v}")

    def rebase(self) -> "BiCubeComplex":
        isos = {pos: {v: normalize(q.vertices[v])[1] for v in mi.vertices(self.n)}
                for pos, q in self.cubes.items()}
        cubes = {pos: canonical_rebase(q) for pos, q in self.cubes.items()}

        def conj(mp, src, tgt):
            return {v: isos[tgt][v].with_nvars(self.nvars) * mp[v]
                    * inverse_matrix(isos[src][v]).with_nvars(self.nvars)
                    for v in mi.vertices(self.n)}

        hm = {(r, s): conj(m, (r, s), (r + 1, s)) for (r, s), m in self.hmaps.items()}
        vm = {(r, s): conj(m, (r, s), (r, s + 1)) for (r, s), m in self.vmaps.items()}
        return BiCubeComplex(self.n, self.nvars, self.l1, self.l2, cubes, hm, vm)

    def __repr__(self):
        return f"BiCubeComplex(n={self.n}, L=({self.l1},{self.l2}), key={self.key()[:10]})"


class BiChain:
    """Integer formal combination of BiCubeComplex generators."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        if terms:
            for coeff, x in terms:
                self.add(coeff, x)

    def add(self, coeff, x):
        if coeff == 0 or x.is_zero():
            return self
        k = x.key()
        if k in self.terms:
            c = self.terms[k][0] + coeff
            if c == 0:
                del self.terms[k]
            else:
                self.terms[k] = (c, x)
        else:
            self.terms[k] = (coeff, x)
        return self

    def __add__(self, other):
        out = BiChain()
        for c, x in self.terms.values():
            out.add(c, x)
        for c, x in other.terms.values():
            out.add(c, x)
        return out

    def scale(self, c):
        out = BiChain()
        for coeff, x in self.terms.values():
            out.add(c * coeff, x)
        return out

    def __sub__(self, other):
        return self + other.scale(-1)

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, BiChain):
            return NotImplemented
        return {k: c for k, (c, _) in self.terms.items()} == {
            k: c for k, (c, _) in other.terms.items()
        }

    def __iter__(self):
        return iter(sorted(self.terms.values(), key=lambda t: t[1].key()))

    def __len__(self):
        return len(self.terms)

    def rebase(self):
        out = BiChain()
        for c, x in self.terms.values():
            out.add(c, x.rebase())
        return out


def bicomplex_differential(x: BiChain) -> BiChain:
    out = BiChain()
    for c, B in x.terms.values():
        for l in range(1, B.n + 1):
            for j in range(3):
                out.add(c * (-1) ** (l + j), B.cube_face(l, j))
    return out


# ---------------------------------------------------------------------------
# sums, simple complexes and tensor products


def cube_direct_sum(cubes: Sequence[Cube]) -> Cube:
    """Vertexwise direct sum with block-diagonal edges."""
    cubes = list(cubes)
    if len(cubes) == 1:
        return cubes[0]
    n = cubes[0].n
    nvars = max(q.nvars for q in cubes)
    verts = {
        v: Sum([q.vertices[v] for q in cubes]) for v in mi.vertices(n)
    }
    edges = {}
    for v in mi.vertices(n):
        for l in range(1, n + 1):
            if v[l - 1] in (0, 1):
                edges[(l, v)] = PolyMatrix.direct_sum(
                    [q.edges[(l, v)].with_nvars(nvars) for q in cubes]
                )
    return Cube(n, nvars, verts, edges)


def simple_of_bicomplex(B: BiCubeComplex) -> CubeComplex:
    """Total complex: term j is the sum over the antidiagonal (ascending
    first index) with maps d1 + (-1)^{j1} d2."""
    L = B.l1 + B.l2
    terms = []
    layouts = []
    for j in range(L + 1):
        pairs = [(j1, j - j1) for j1 in range(max(0, j - B.l2), min(j, B.l1) + 1)]
        layouts.append(pairs)
        terms.append(cube_direct_sum([B.entry(r, s) for (r, s) in pairs]))
    maps = []
    for j in range(L):
        src_pairs = layouts[j]
        tgt_pairs = layouts[j + 1]
        mp = {}
        for v in mi.vertices(B.n):
            src_offsets = []
            pos = 0
            for (r, s) in src_pairs:
                src_offsets.append(pos)
                pos += B.entry(r, s).vertex_rank(v)
            src_total = pos
            tgt_offsets = []
            pos = 0
            for (r, s) in tgt_pairs:
                tgt_offsets.append(pos)
                pos += B.entry(r, s).vertex_rank(v)
            tgt_total = pos
            rows = [[Poly(B.nvars)] * src_total for _ in range(tgt_total)]

            def put(block, ro, co):
                for ii, rr in enumerate(block.rows):
                    for jj, xx in enumerate(rr):
                        rows[ro + ii][co + jj] = rows[ro + ii][co + jj] + xx

            for si, (r, s) in enumerate(src_pairs):
                if (r + 1, s) in tgt_pairs:
                    ti = tgt_pairs.index((r + 1, s))
                    put(B.hmaps[(r, s)][v].with_nvars(B.nvars), tgt_offsets[ti], src_offsets[si])
                if (r, s + 1) in tgt_pairs:
                    ti = tgt_pairs.index((r, s + 1))
                    blk = B.vmaps[(r, s)][v].with_nvars(B.nvars)
                    if r % 2 == 1:
                        blk = -blk
                    put(blk, tgt_offsets[ti], src_offsets[si])
            mp[v] = PolyMatrix(tgt_total, src_total, B.nvars, rows)
        maps.append(mp)
    return CubeComplex(B.n, B.nvars, terms, maps)


def tensor_complex(A: CubeComplex, B: CubeComplex) -> BiCubeComplex:
    """Tensor product of two complexes of 0-cubes as a bicomplex."""
    if A.n != 0 or B.n != 0:
        raise ValueError("tensor_complex expects complexes of single modules")
    from .objects import Tensor
    nvars = max(A.nvars, B.nvars)
    cubes = {}
    hmaps = {}
    vmaps = {}
    for r in range(A.length + 1):
        for s in range(B.length + 1):
            cubes[(r, s)] = cube_point(
                Tensor([A.term(r).vertices[()], B.term(s).vertices[()]]), nvars
            )
    for r in range(A.length):
        for s in range(B.length + 1):
            hmaps[(r, s)] = {(): A.maps[r][()].with_nvars(nvars).kron(
                PolyMatrix.identity(B.term(s).vertex_rank(()), nvars))}
    for r in range(A.length + 1):
        for s in range(B.length):
            vmaps[(r, s)] = {(): PolyMatrix.identity(
                A.term(r).vertex_rank(()), nvars).kron(B.maps[s][()].with_nvars(nvars))}
    return BiCubeComplex(0, nvars, A.length, B.length, cubes, hmaps, vmaps)
