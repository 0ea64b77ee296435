"""Direct-sum cubes, split cubes, and the splitting-transported middle face.

A split cube is a cube together with an isomorphism from its associated
direct-sum cube that is the identity on corners.  Outer faces restrict
splittings directly; the middle face transports the splitting through the
inverted components and a block-regrouping permutation.
"""

from __future__ import annotations

import hashlib
from typing import Callable, Dict

from . import multiindex as mi
from .cubes import ChainElement, Cube, cube_face
from .exactalg import PolyMatrix
from .objects import Expr, Sum, inverse_matrix, rank


def sum_blocks(corners: Dict[tuple, Expr], v: tuple):
    """Ordered corner list filling vertex v of the direct-sum cube."""
    u, s = mi.u_and_s(v)
    return [mi.multi_substitution(v, u, m) for m in mi.vertices(s, (0, 2))]


def direct_sum_cube(corners: Dict[tuple, Expr], nvars: int = 0) -> Cube:
    """Cube with the given corners and lexicographic direct sums inside."""
    n = len(next(iter(corners))) if corners else 0
    verts = {}
    layout = {}
    for v in mi.vertices(n):
        blocks = sum_blocks(corners, v)
        layout[v] = blocks
        if len(blocks) == 1:
            verts[v] = corners[blocks[0]]
        else:
            verts[v] = Sum([corners[b] for b in blocks])
    edges = {}
    for v in mi.vertices(n):
        lv = v
        for l in range(1, n + 1):
            if v[l - 1] not in (0, 1):
                continue
            tgt = mi.substitution(v, l, v[l - 1] + 1)
            src_blocks = layout[v]
            tgt_blocks = layout[tgt]
            rows = sum(rank(corners[b]) for b in tgt_blocks)
            cols = sum(rank(corners[b]) for b in src_blocks)
            from .exactalg import Poly
            mat = [[Poly(nvars)] * cols for _ in range(rows)]
            t_off = {}
            pos = 0
            for b in tgt_blocks:
                t_off[b] = pos
                pos += rank(corners[b])
            pos = 0
            for b in src_blocks:
                img = None
                if v[l - 1] == 0:
                    img = mi.substitution(b, l, 0)
                else:
                    img = b if b[l - 1] == 2 else None
                if img is not None and img in t_off:
                    for i in range(rank(corners[b])):
                        mat[t_off[img] + i][pos + i] = Poly.const(1, nvars)
                pos += rank(corners[b])
            edges[(l, lv)] = PolyMatrix(rows, cols, nvars, mat)
    return Cube(n, nvars, verts, edges)


def sp(E: Cube) -> Cube:
    """The direct-sum cube on E's corners."""
    corners = {v: E.vertices[v] for v in mi.corners(E.n)}
    return direct_sum_cube(corners, E.nvars)


class SplitCube:
    """A cube plus an isomorphism from its direct-sum cube, identity on corners."""

    __slots__ = ("cube", "splitting", "_key")

    def __init__(self, cube: Cube, splitting: Dict[tuple, PolyMatrix]):
        self.cube = cube
        self.splitting = dict(splitting)
        self._key = None
        for v in mi.vertices(cube.n):
            if v not in self.splitting:
                raise ValueError(f"missing splitting component at {v}")

    @property
    def n(self) -> int:
        return self.cube.n

    @property
    def nvars(self) -> int:
        return self.cube.nvars

    def is_zero(self) -> bool:
        return self.cube.is_zero()

    def key(self) -> str:
        if self._key is None:
            parts = [self.cube.key()]
            for v in mi.vertices(self.cube.n):
                parts.append(self.splitting[v].canonical_str())
            self._key = hashlib.sha256("|".join(parts).encode()).hexdigest()
        return self._key

    def __eq__(self, other):
        return isinstance(other, SplitCube) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"SplitCube(n={self.n}, key={self.key()[:10]})"


def validate_split(S: SplitCube) -> None:
    """Splitting commutes with edges, is invertible, identity on corners."""
    spc = sp(S.cube)
    n = S.n
    for v in mi.vertices(n):
        f = S.splitting[v]
        if f.nrows != S.cube.vertex_rank(v) or f.ncols != spc.vertex_rank(v):
            raise ValueError(f"splitting at {v} has wrong shape")
        inverse_matrix(f)  # raises when not invertible
        if all(x in (0, 2) for x in v):
            if f != PolyMatrix.identity(f.nrows, f.nvars):
                raise ValueError(f"splitting at corner {v} is not the identity")
    for v in mi.vertices(n):
        for l in range(1, n + 1):
            if v[l - 1] in (0, 1):
                tgt = mi.substitution(v, l, v[l - 1] + 1)
                lhs = S.cube.edges[(l, v)] * S.splitting[v]
                rhs = S.splitting[tgt] * spc.edges[(l, v)]
                if lhs != rhs:
                    raise ValueError(f"splitting does not commute at {v}, dir {l}")


def one_slot_splitting(S: SplitCube, a: tuple, l: int) -> PolyMatrix:
    """Canonical iso E^{a with 0 at l} + E^{a with 2 at l} -> E^a.

    ``a`` must have a 1 in slot l; composed from the inverted splitting
    components of the two neighbours and the full component at ``a``.
    """
    if a[l - 1] != 1:
        raise ValueError("slot must carry a 1")
    a0 = mi.substitution(a, l, 0)
    a2 = mi.substitution(a, l, 2)
    f0inv = inverse_matrix(S.splitting[a0])
    f2inv = inverse_matrix(S.splitting[a2])
    stacked = PolyMatrix.direct_sum([f0inv, f2inv])
    # regroup (c at slot l, m') blocks into the lexicographic layout at a
    u_a, s_a = mi.u_and_s(a)
    corners_a = [mi.multi_substitution(a, u_a, m) for m in mi.vertices(s_a, (0, 2))]
    src_blocks = []
    for c in (0, 2):
        base = mi.substitution(a, l, c)
        u_b, s_b = mi.u_and_s(base)
        for m in mi.vertices(s_b, (0, 2)):
            src_blocks.append(mi.multi_substitution(base, u_b, m))
    ranks = {b: S.cube.vertex_rank(b) for b in corners_a}
    t_off = {}
    pos = 0
    for b in corners_a:
        t_off[b] = pos
        pos += ranks[b]
    total = pos
    perm_rows = [[0] * total for _ in range(total)]
    pos = 0
    from fractions import Fraction
    for b in src_blocks:
        for i in range(ranks[b]):
            perm_rows[t_off[b] + i][pos + i] = Fraction(1)
        pos += ranks[b]
    merge = PolyMatrix.from_rational(perm_rows, 0).with_nvars(S.nvars) \
        if S.nvars else PolyMatrix.from_rational(perm_rows, 0)
    return S.splitting[a] * merge * stacked


def split_face(S: SplitCube, l: int, j: int) -> SplitCube:
    """Face of a split cube; the middle face transports the splitting."""
    if j in (0, 2):
        cube = cube_face(S.cube, l, j)
        splitting = {
            w: S.splitting[mi.degeneracy(w, l, j)] for w in mi.vertices(S.n - 1)
        }
        return SplitCube(cube, splitting)
    if j != 1:
        raise ValueError("face level must be 0, 1, or 2")
    cube = cube_face(S.cube, l, 1)
    splitting = {}
    for w in mi.vertices(S.n - 1):
        v = mi.degeneracy(w, l, 1)
        u_w, s_w = mi.u_and_s(w)
        # blocks of Sp(face)^w: substitute m into the 1-slots of w, then
        # reinsert the 1 at slot l to land at vertices of the original cube
        blocks = []
        for m in mi.vertices(s_w, (0, 2)):
            wsub = mi.multi_substitution(w, u_w, m)
            blocks.append(mi.degeneracy(wsub, l, 1))
        splitting[w] = _transported_component(S, blocks, v)
    return SplitCube(cube, splitting)


def _transported_component(S, blocks, v):
    """Compose blockwise isos with the final splitting component at v."""
    spc_v_blocks = []
    u_v, s_v = mi.u_and_s(v)
    for m in mi.vertices(s_v, (0, 2)):
        spc_v_blocks.append(mi.multi_substitution(v, u_v, m))
    # source of the assembled map: + over blocks of E^{block}; the final
    # component f^v eats Sp(E)^v, so route each block through its inverse
    # splitting and the lexicographic regrouping
    f0invs = []
    expanded = []
    for b in blocks:
        u_b, s_b = mi.u_and_s(b)
        f0invs.append(inverse_matrix(S.splitting[b]))
        for m in mi.vertices(s_b, (0, 2)):
            expanded.append(mi.multi_substitution(b, u_b, m))
    stacked = PolyMatrix.direct_sum(f0invs)
    ranks = {c: S.cube.vertex_rank(c) for c in spc_v_blocks}
    t_off = {}
    pos = 0
    for c in spc_v_blocks:
        t_off[c] = pos
        pos += ranks[c]
    total = pos
    from fractions import Fraction
    perm_rows = [[Fraction(0)] * total for _ in range(total)]
    pos = 0
    for c in expanded:
        for i in range(ranks[c]):
            perm_rows[t_off[c] + i][pos + i] = Fraction(1)
        pos += ranks[c]
    merge = PolyMatrix.from_rational(perm_rows, 0)
    if S.nvars:
        merge = merge.with_nvars(S.nvars)
    return S.splitting[v] * merge * stacked


class SplitChain:
    """Integer formal combination of split cubes."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        if terms:
            for coeff, s in terms:
                self.add(coeff, s)

    def add(self, coeff: int, s: SplitCube) -> "SplitChain":
        if coeff == 0 or s.is_zero():
            return self
        k = s.key()
        if k in self.terms:
            c = self.terms[k][0] + coeff
            if c == 0:
                del self.terms[k]
            else:
                self.terms[k] = (c, s)
        else:
            self.terms[k] = (coeff, s)
        return self

    def __add__(self, other):
        out = SplitChain()
        for c, s in self.terms.values():
            out.add(c, s)
        for c, s in other.terms.values():
            out.add(c, s)
        return out

    def scale(self, c):
        out = SplitChain()
        for coeff, s in self.terms.values():
            out.add(c * coeff, s)
        return out

    def __sub__(self, other):
        return self + other.scale(-1)

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, SplitChain):
            return NotImplemented
        return {k: c for k, (c, _) in self.terms.items()} == {
            k: c for k, (c, _) in other.terms.items()
        }

    def __iter__(self):
        return iter(sorted(self.terms.values(), key=lambda t: t[1].key()))

    def __len__(self):
        return len(self.terms)

    def map(self, fn: Callable):
        out = SplitChain()
        for c, s in self.terms.values():
            out.add(c, fn(s))
        return out


def split_chain_of(s: SplitCube, coeff: int = 1) -> SplitChain:
    return SplitChain([(coeff, s)])


def split_differential(x: SplitChain) -> SplitChain:
    out = SplitChain()
    for c, s in x.terms.values():
        for l in range(1, s.n + 1):
            for j in range(3):
                out.add(c * (-1) ** (j + l), split_face(s, l, j))
    return out


def forget_splitting(x: SplitChain) -> ChainElement:
    out = ChainElement()
    for c, s in x.terms.values():
        out.add(c, s.cube)
    return out
