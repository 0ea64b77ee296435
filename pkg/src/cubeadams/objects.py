"""Formal objects: based free modules and +/x/Sym/Ext/Ker expression trees.

Every module in play is free with an ordered, labelled basis.  Expressions
are normalized to a unique normal form (sums flattened and sorted, tensors
distributed over sums and sorted, powers pre-expanded on sums so that Sym
and Ext only ever apply to atoms), and ``normalize`` also returns the
change-of-basis isomorphism realizing the reordering.  These isos are
signed permutation matrices; the signs come from re-sorting wedge factors.

Kernels are first-class: ``kernel_object`` produces either a literal
sub-expression (when the canonical kernel basis is a block of standard
basis vectors) or a keyed kernel atom carrying its inclusion matrix.
"""

from __future__ import annotations

import hashlib
import itertools
from fractions import Fraction
from typing import Optional, Sequence

from .exactalg import (
    Poly,
    PolyMatrix,
    inverse_q,
    kernel_basis_q,
    membership_solve,
    poly_kernel,
)


class Expr:
    __slots__ = ("_key",)

    def key(self) -> str:
        if getattr(self, "_key", None) is None:
            self._key = self._make_key()
        return self._key

    def _make_key(self) -> str:
        raise NotImplementedError

    def __eq__(self, other):
        return isinstance(other, Expr) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return self.key()


class _Zero(Expr):
    __slots__ = ()

    def _make_key(self):
        return "Z"


class _Unit(Expr):
    __slots__ = ()

    def _make_key(self):
        return "U"


ZERO = _Zero()
UNIT = _Unit()


class Atom(Expr):
    __slots__ = ("name", "labels")

    def __init__(self, name: str, rank: Optional[int] = None, labels=None):
        self._key = None
        self.name = name
        if labels is None:
            labels = tuple(f"{name}.{i + 1}" for i in range(rank))
        self.labels = tuple(labels)
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("basis labels must be distinct")

    def _make_key(self):
        return f"A({self.name}:{len(self.labels)})"


class Sum(Expr):
    __slots__ = ("children",)

    def __init__(self, children: Sequence[Expr]):
        self._key = None
        self.children = tuple(children)

    def _make_key(self):
        return "S(" + ",".join(c.key() for c in self.children) + ")"


class Tensor(Expr):
    __slots__ = ("children",)

    def __init__(self, children: Sequence[Expr]):
        self._key = None
        self.children = tuple(children)

    def _make_key(self):
        return "T(" + ",".join(c.key() for c in self.children) + ")"


class SymPow(Expr):
    __slots__ = ("p", "child")

    def __init__(self, p: int, child: Expr):
        self._key = None
        if p < 0:
            raise ValueError("negative power")
        self.p = p
        self.child = child

    def _make_key(self):
        return f"P{self.p}({self.child.key()})"


class ExtPow(Expr):
    __slots__ = ("q", "child")

    def __init__(self, q: int, child: Expr):
        self._key = None
        if q < 0:
            raise ValueError("negative power")
        self.q = q
        self.child = child

    def _make_key(self):
        return f"E{self.q}({self.child.key()})"


class KernelAtom(Expr):
    __slots__ = ("ambient", "matrix", "labels")

    def __init__(self, ambient: Expr, matrix: PolyMatrix):
        self._key = None
        self.ambient = ambient
        self.matrix = matrix
        h = hashlib.sha256(
            (ambient.key() + "|" + matrix.canonical_str()).encode()
        ).hexdigest()[:10]
        self.labels = tuple(f"k{i + 1}@{h}" for i in range(matrix.ncols))

    def _make_key(self):
        return f"K({self.ambient.key()};{self.matrix.canonical_str()})"


def is_atomic(e: Expr) -> bool:
    """Atoms in the power-of sense: carriers of their own basis."""
    return isinstance(e, (Atom, KernelAtom, _Unit))


# ---------------------------------------------------------------------------
# realization

_REALIZE_CACHE: dict = {}


def realize(e: Expr) -> tuple:
    """Ordered basis labels of an expression, built structurally."""
    got = _REALIZE_CACHE.get(e.key())
    if got is not None:
        return got
    if isinstance(e, _Zero):
        out = ()
    elif isinstance(e, _Unit):
        out = ("1",)
    elif isinstance(e, Atom):
        out = e.labels
    elif isinstance(e, KernelAtom):
        out = e.labels
    elif isinstance(e, Sum):
        out = tuple(x for c in e.children for x in realize(c))
    elif isinstance(e, Tensor):
        bases = [realize(c) for c in e.children]
        if not bases:
            out = ("1",)
        else:
            out = tuple(
                "(" + "⊗".join(combo) + ")" if len(combo) > 1 else combo[0]
                for combo in itertools.product(*bases)
            )
    elif isinstance(e, SymPow):
        base = realize(e.child)
        out = tuple(
            "(" + "·".join(t) + ")" if len(t) != 1 else t[0]
            for t in itertools.combinations_with_replacement(base, e.p)
        )
        if e.p == 0:
            out = ("1",)
    elif isinstance(e, ExtPow):
        base = realize(e.child)
        out = tuple(
            "(" + "∧".join(t) + ")" if len(t) != 1 else t[0]
            for t in itertools.combinations(base, e.q)
        )
        if e.q == 0:
            out = ("1",)
    else:
        raise TypeError(f"unknown expression {e!r}")
    _REALIZE_CACHE[e.key()] = out
    return out


def rank(e: Expr) -> int:
    return len(realize(e))


# ---------------------------------------------------------------------------
# morphisms


class Morphism:
    __slots__ = ("source", "target", "matrix")

    def __init__(self, source: Expr, target: Expr, matrix: PolyMatrix):
        if matrix.nrows != rank(target) or matrix.ncols != rank(source):
            raise ValueError(
                f"matrix {matrix.nrows}x{matrix.ncols} does not match "
                f"{rank(target)}x{rank(source)}"
            )
        self.source = source
        self.target = target
        self.matrix = matrix

    @staticmethod
    def identity(e: Expr, nvars: int = 0) -> "Morphism":
        return Morphism(e, e, PolyMatrix.identity(rank(e), nvars))

    def compose(self, other: "Morphism") -> "Morphism":
        """self after other."""
        if other.target != self.source:
            raise ValueError("composition mismatch")
        return Morphism(other.source, self.target, self.matrix * other.matrix)

    def __repr__(self):
        return f"Morphism({self.source.key()} -> {self.target.key()})"


def inverse_matrix(M: PolyMatrix) -> PolyMatrix:
    """Two-sided inverse; exact over Q, unimodular solve over Q[t..]."""
    if M.nrows != M.ncols:
        raise ValueError("not square")
    if M.nvars == 0:
        return inverse_q(M)
    X = membership_solve(M, PolyMatrix.identity(M.nrows, M.nvars))
    if X is None or not (X * M - PolyMatrix.identity(M.nrows, M.nvars)).is_zero():
        raise ValueError("matrix is not invertible over the polynomial ring")
    return X


# ---------------------------------------------------------------------------
# induced maps on sums, tensors and powers


def direct_sum_matrix(mats: Sequence[PolyMatrix]) -> PolyMatrix:
    return PolyMatrix.direct_sum(list(mats))


def tensor_matrix(mats: Sequence[PolyMatrix]) -> PolyMatrix:
    mats = list(mats)
    out = PolyMatrix.identity(1, 0)
    for m in mats:
        out = out.kron(m)
    return out


def sym_power_matrix(p: int, M: PolyMatrix) -> PolyMatrix:
    """Induced map on p-th symmetric powers in the monomial bases."""
    src = list(itertools.combinations_with_replacement(range(M.ncols), p))
    tgt = list(itertools.combinations_with_replacement(range(M.nrows), p))
    tgt_index = {t: i for i, t in enumerate(tgt)}
    zero = Poly(M.nvars)
    rows = [[zero] * len(src) for _ in range(len(tgt))]
    for cj, mono in enumerate(src):
        acc = {(): Poly.const(1, M.nvars)}
        for s in mono:
            nxt: dict = {}
            for part, coeff in acc.items():
                for i in range(M.nrows):
                    mis = M.rows[i][s]
                    if mis.is_zero():
                        continue
                    np_ = tuple(sorted(part + (i,)))
                    add = coeff * mis
                    nxt[np_] = nxt.get(np_, zero) + add
            acc = {k: v for k, v in nxt.items() if not v.is_zero()}
        for part, coeff in acc.items():
            rows[tgt_index[part]][cj] = rows[tgt_index[part]][cj] + coeff
    return PolyMatrix(len(tgt), len(src), M.nvars, rows)


def ext_power_matrix(q: int, M: PolyMatrix) -> PolyMatrix:
    """Induced map on q-th exterior powers in the wedge bases (minors)."""
    src = list(itertools.combinations(range(M.ncols), q))
    tgt = list(itertools.combinations(range(M.nrows), q))
    tgt_index = {t: i for i, t in enumerate(tgt)}
    zero = Poly(M.nvars)
    rows = [[zero] * len(src) for _ in range(len(tgt))]
    for cj, wedge in enumerate(src):
        acc = {(): Poly.const(1, M.nvars)}
        for s in wedge:
            nxt: dict = {}
            for part, coeff in acc.items():
                for i in range(M.nrows):
                    if i in part:
                        continue
                    mis = M.rows[i][s]
                    if mis.is_zero():
                        continue
                    pos = sum(1 for x in part if x < i)
                    sign = 1 if (len(part) - pos) % 2 == 0 else -1
                    np_ = tuple(sorted(part + (i,)))
                    add = coeff * mis if sign == 1 else coeff * (-mis)
                    nxt[np_] = nxt.get(np_, zero) + add
            acc = {k: v for k, v in nxt.items() if not v.is_zero()}
        for part, coeff in acc.items():
            rows[tgt_index[part]][cj] = rows[tgt_index[part]][cj] + coeff
    return PolyMatrix(len(tgt), len(src), M.nvars, rows)


def direct_sum_map(fs: Sequence[Morphism]) -> Morphism:
    fs = list(fs)
    return Morphism(
        Sum([f.source for f in fs]),
        Sum([f.target for f in fs]),
        direct_sum_matrix([f.matrix for f in fs]),
    )


def tensor_map(fs: Sequence[Morphism]) -> Morphism:
    fs = list(fs)
    return Morphism(
        Tensor([f.source for f in fs]),
        Tensor([f.target for f in fs]),
        tensor_matrix([f.matrix for f in fs]),
    )


def sym_power_map(p: int, f: Morphism) -> Morphism:
    if not (is_atomic(f.source) and is_atomic(f.target)):
        raise ValueError("powers only apply to atoms")
    return Morphism(SymPow(p, f.source), SymPow(p, f.target), sym_power_matrix(p, f.matrix))


def ext_power_map(q: int, f: Morphism) -> Morphism:
    if not (is_atomic(f.source) and is_atomic(f.target)):
        raise ValueError("powers only apply to atoms")
    return Morphism(ExtPow(q, f.source), ExtPow(q, f.target), ext_power_matrix(q, f.matrix))


# ---------------------------------------------------------------------------
# normalization

_NORMALIZE_CACHE: dict = {}


def _perm_matrix(perm: Sequence[int], signs: Optional[Sequence[int]] = None) -> PolyMatrix:
    """Matrix sending source index j to target index perm[j] (with sign)."""
    n = len(perm)
    rows = [[Fraction(0)] * n for _ in range(n)]
    for j, i in enumerate(perm):
        rows[i][j] = Fraction(1 if signs is None else signs[j])
    return PolyMatrix.from_rational(rows, 0)


def normalize(e: Expr):
    """Unique normal form plus the signed permutation realizing it.

    Returns (nf, iso) with iso a rank(nf) x rank(e) matrix over Q mapping
    the structural basis of ``e`` onto the basis of ``nf``.
    """
    got = _NORMALIZE_CACHE.get(e.key())
    if got is not None:
        return got
    nf, iso = _normalize_impl(e)
    _NORMALIZE_CACHE[e.key()] = (nf, iso)
    return nf, iso


def _identity_for(e: Expr):
    return e, PolyMatrix.identity(rank(e))


def _normalize_impl(e: Expr):
    if isinstance(e, (_Zero, _Unit, Atom, KernelAtom)):
        return _identity_for(e)
    if isinstance(e, Sum):
        return _normalize_sum(e)
    if isinstance(e, Tensor):
        return _normalize_tensor(e)
    if isinstance(e, SymPow):
        return _normalize_power(e, sym=True)
    if isinstance(e, ExtPow):
        return _normalize_power(e, sym=False)
    raise TypeError(f"unknown expression {e!r}")


def _normalize_sum(e: Sum):
    datas = [normalize(c) for c in e.children]
    iso = direct_sum_matrix([d[1] for d in datas])
    parts = []
    for nf, _ in datas:
        if isinstance(nf, Sum):
            parts.extend(nf.children)
        elif isinstance(nf, _Zero):
            continue
        else:
            parts.append(nf)
    offsets = []
    pos = 0
    for p in parts:
        offsets.append(pos)
        pos += rank(p)
    order = sorted(range(len(parts)), key=lambda i: parts[i].key())
    sorted_parts = [parts[i] for i in order]
    perm = [0] * pos
    out = 0
    for i in order:
        for j in range(rank(parts[i])):
            perm[offsets[i] + j] = out
            out += 1
    sort_iso = _perm_matrix(perm)
    total = sort_iso * iso
    if not sorted_parts:
        return ZERO, PolyMatrix.zero(0, iso.ncols)
    if len(sorted_parts) == 1:
        return sorted_parts[0], total
    return Sum(sorted_parts), total


def _normalize_tensor(e: Tensor):
    datas = [normalize(c) for c in e.children]
    iso = tensor_matrix([d[1] for d in datas])
    factors = []
    for nf, _ in datas:
        if isinstance(nf, _Zero):
            return ZERO, PolyMatrix.zero(0, iso.ncols)
        if isinstance(nf, _Unit):
            continue
        if isinstance(nf, Tensor):
            factors.extend(nf.children)
        else:
            factors.append(nf)
    if not factors:
        return UNIT, iso
    if any(isinstance(f, Sum) for f in factors):
        choice_lists = [
            list(f.children) if isinstance(f, Sum) else [f] for f in factors
        ]
        monomials = [Tensor(combo) for combo in itertools.product(*choice_lists)]
        expanded = Sum(monomials)
        # raw index -> expanded index: split each factor index into a part
        # choice and a within-part index, then relocate into the block layout
        part_meta = []
        for f, parts in zip(factors, choice_lists):
            segs = []
            pos = 0
            for prt in parts:
                segs.append((pos, pos + rank(prt)))
                pos += rank(prt)
            part_meta.append(segs)
        mono_ranks = [rank(mn) for mn in monomials]
        mono_offsets = []
        pos = 0
        for r in mono_ranks:
            mono_offsets.append(pos)
            pos += r
        n_parts = [len(parts) for parts in choice_lists]
        perm = []
        for combo in itertools.product(*[range(rank(f)) for f in factors]):
            choice = []
            within = []
            widths = []
            for fi, idx in enumerate(combo):
                for pi, (lo, hi) in enumerate(part_meta[fi]):
                    if lo <= idx < hi:
                        choice.append(pi)
                        within.append(idx - lo)
                        widths.append(hi - lo)
                        break
            mono_lin = 0
            for pi, np_ in zip(choice, n_parts):
                mono_lin = mono_lin * np_ + pi
            lin = 0
            for w, wd in zip(within, widths):
                lin = lin * wd + w
            perm.append(mono_offsets[mono_lin] + lin)
        dist_iso = _perm_matrix(perm)
        nf, iso2 = normalize(expanded)
        return nf, iso2 * dist_iso * iso
    order = sorted(range(len(factors)), key=lambda i: factors[i].key())
    sorted_factors = [factors[i] for i in order]
    ranks = [rank(f) for f in factors]
    perm = []
    for combo in itertools.product(*[range(r) for r in ranks]):
        tgt_combo = tuple(combo[i] for i in order)
        idx = 0
        for t, r_i in zip(tgt_combo, [ranks[i] for i in order]):
            idx = idx * r_i + t
        perm.append(idx)
    sort_iso = _perm_matrix(perm)
    total = sort_iso * iso
    if len(sorted_factors) == 1:
        return sorted_factors[0], total
    return Tensor(sorted_factors), total


def _power_expr(p: int, c: Expr, sym: bool) -> Expr:
    if p == 0:
        return UNIT
    if p == 1:
        return c
    return SymPow(p, c) if sym else ExtPow(p, c)


def _normalize_power(e, sym: bool):
    p = e.p if sym else e.q
    c_nf, ci = normalize(e.child)
    raw_rank = rank(e)
    if p == 0:
        return UNIT, PolyMatrix.identity(1)
    if isinstance(c_nf, _Zero):
        return ZERO, PolyMatrix.zero(0, raw_rank)
    induced = sym_power_matrix(p, ci) if sym else ext_power_matrix(p, ci)
    if isinstance(c_nf, _Unit):
        if sym or p == 1:
            return UNIT, PolyMatrix.identity(1) * induced
        return ZERO, PolyMatrix.zero(0, raw_rank)
    if is_atomic(c_nf):
        if not sym and p > rank(c_nf):
            return ZERO, PolyMatrix.zero(0, raw_rank)
        return _power_expr(p, c_nf, sym), induced
    if isinstance(c_nf, Sum):
        nf, expand = _expand_power_of_sum(p, c_nf, sym)
        return nf, expand * induced
    raise ValueError(f"cannot take a power of {c_nf!r}")


def _expand_power_of_sum(p: int, s: Sum, sym: bool):
    """Binomial expansion of Sym^p / Ext^p of a sorted sum of atoms."""
    children = list(s.children)
    if not all(is_atomic(c) for c in children):
        raise ValueError("powers of sums require atomic summands")
    m = len(children)
    child_ranks = [rank(c) for c in children]
    offsets = []
    pos = 0
    for r in child_ranks:
        offsets.append(pos)
        pos += r
    # blocks ordered by descending exponent vector (weight drifts rightwards)
    evectors = sorted(
        (v for v in itertools.product(range(p + 1), repeat=m) if sum(v) == p),
        reverse=True,
    )
    blocks = []
    block_index = {}
    for ev in evectors:
        factors = [
            _power_expr(a, c, sym) for a, c in zip(ev, children) if a > 0
        ]
        expr = Tensor(factors) if len(factors) != 1 else factors[0]
        if sym:
            sub_bases = [
                list(itertools.combinations_with_replacement(range(r), a))
                for a, r in zip(ev, child_ranks) if a > 0
            ]
        else:
            sub_bases = [
                list(itertools.combinations(range(r), a))
                for a, r in zip(ev, child_ranks) if a > 0
            ]
        block_index[ev] = (len(blocks), sub_bases)
        blocks.append(expr)
    block_offsets = []
    pos_out = 0
    for b in blocks:
        block_offsets.append(pos_out)
        pos_out += rank(b)
    which_child = []
    for ci_, r in enumerate(child_ranks):
        which_child.extend([ci_] * r)
    combos = (
        itertools.combinations_with_replacement(range(sum(child_ranks)), p)
        if sym
        else itertools.combinations(range(sum(child_ranks)), p)
    )
    perm = []
    for tup in combos:
        ev = [0] * m
        per_child = [[] for _ in range(m)]
        for idx in tup:
            ch = which_child[idx]
            ev[ch] += 1
            per_child[ch].append(idx - offsets[ch])
        ev = tuple(ev)
        bi, sub_bases = block_index[ev]
        lin = 0
        si = 0
        for ch in range(m):
            if ev[ch] > 0:
                base = sub_bases[si]
                lin = lin * len(base) + base.index(tuple(per_child[ch]))
                si += 1
        perm.append(block_offsets[bi] + lin)
    expand = _perm_matrix(perm)
    raw = Sum(blocks)
    nf, iso2 = normalize(raw)
    return nf, iso2 * expand


# ---------------------------------------------------------------------------
# kernels

_KERNEL_CACHE: dict = {}


def _std_column_indices(K: PolyMatrix) -> Optional[list]:
    """Indices when the columns are distinct ascending standard basis vectors."""
    idx = []
    for j in range(K.ncols):
        hit = None
        for i in range(K.nrows):
            x = K.rows[i][j]
            if x.is_zero():
                continue
            if hit is not None or not x.is_constant() or x.constant_value() != 1:
                return None
            hit = i
        if hit is None:
            return None
        idx.append(hit)
    if idx != sorted(idx) or len(set(idx)) != len(idx):
        return None
    return idx


def simplify_submodule(ambient: Expr, K: PolyMatrix):
    """Replace a standard-columns inclusion by the literal sub-expression.

    Returns (expr, matrix) where matrix includes expr into ambient; the
    input is returned as a KernelAtom when no block simplification applies.
    """
    if K.ncols == 0:
        return ZERO, K
    if K.ncols == K.nrows:
        idx = _std_column_indices(K)
        if idx == list(range(K.nrows)):
            return ambient, K
    idx = _std_column_indices(K)
    if idx is not None and isinstance(ambient, Sum):
        blocks = []
        pos = 0
        for c in ambient.children:
            blocks.append((pos, pos + rank(c), c))
            pos += rank(c)
        chosen = []
        cursor = 0
        ok = True
        for lo, hi, c in blocks:
            seg = [i for i in idx if lo <= i < hi]
            if seg:
                if seg != list(range(lo, hi)):
                    ok = False
                    break
                chosen.append(c)
            cursor = hi
        if ok and sum(rank(c) for c in chosen) == len(idx):
            expr = Sum(chosen) if len(chosen) != 1 else chosen[0]
            return expr, K
    return KernelAtom(ambient, K), K


def kernel_object(f: Morphism, seed: int = 2024):
    """Kernel with canonical presentation and inclusion morphism.

    The kernel is computed in the normalized bases of source and target,
    so equal inputs (up to canonical isomorphism) get identical atoms.
    """
    s_nf, si = normalize(f.source)
    t_nf, ti = normalize(f.target)
    nvars = f.matrix.nvars
    M = (ti.with_nvars(nvars) if nvars else ti) * f.matrix * inverse_matrix(
        si.with_nvars(nvars) if nvars else si
    )
    cache_key = (s_nf.key(), t_nf.key(), M.canonical_str())
    got = _KERNEL_CACHE.get(cache_key)
    if got is None:
        if nvars == 0:
            K = kernel_basis_q(M)
        else:
            K = poly_kernel(M, seed=seed)
        expr, _ = simplify_submodule(s_nf, K)
        got = (expr, K)
        _KERNEL_CACHE[cache_key] = got
    expr, K = got
    incl = inverse_matrix(si).with_nvars(nvars) * K if nvars else inverse_matrix(si) * K
    return expr, Morphism(expr, f.source, incl)


def clear_caches():
    _REALIZE_CACHE.clear()
    _NORMALIZE_CACHE.clear()
    _KERNEL_CACHE.clear()
