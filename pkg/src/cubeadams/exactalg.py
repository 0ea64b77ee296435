"""Exact linear algebra over Q and over polynomial rings Q[t1..tm].

Everything is exact: scalars are ``fractions.Fraction``, polynomials are
coefficient dictionaries keyed by exponent vectors, and all matrix
operations (rref, kernels, solving) run in rational arithmetic.  There is
no floating point anywhere in this package.

Polynomial-matrix kernels are computed by a degree-truncated ansatz whose
coefficient space is solved exactly, then certified: the candidate columns
must annihilate the matrix identically and span the kernel of every
evaluated fiber at a battery of random rational points (0 and 1 excluded;
those are the face values of the unit interval and get their own
structural treatment downstream).
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from typing import Iterable, Optional, Sequence


class CertificationFailed(Exception):
    """A polynomial kernel could not be certified within the degree cap."""


class NotAComplex(Exception):
    """Composable maps whose consecutive composites fail to vanish."""


# ---------------------------------------------------------------------------
# polynomials


def _grlex_key(expo: tuple) -> tuple:
    # higher total degree first; ties broken lexicographically (t1-heavy first)
    return (-sum(expo), tuple(-e for e in expo))


class Poly:
    """Polynomial in t1..tm over Q, stored as {exponent vector: coefficient}."""

    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, nvars: int, terms=None):
        self.nvars = nvars
        clean = {}
        if terms:
            for expo, c in terms.items():
                c = Fraction(c)
                if c != 0:
                    expo = tuple(expo)
                    if len(expo) != nvars:
                        raise ValueError("exponent vector has wrong length")
                    clean[expo] = clean.get(expo, Fraction(0)) + c
        self.terms = {e: c for e, c in clean.items() if c != 0}
        self._hash = None

    # -- constructors ------------------------------------------------------
    @staticmethod
    def const(c, nvars: int = 0) -> "Poly":
        c = Fraction(c)
        if c == 0:
            return Poly(nvars)
        return Poly(nvars, {(0,) * nvars: c})

    @staticmethod
    def var(i: int, nvars: int) -> "Poly":
        if not 1 <= i <= nvars:
            raise ValueError("variable index out of range")
        expo = tuple(1 if j == i else 0 for j in range(1, nvars + 1))
        return Poly(nvars, {expo: Fraction(1)})

    # -- predicates ---------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self.terms)

    def constant_value(self) -> Fraction:
        if not self.terms:
            return Fraction(0)
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        return next(iter(self.terms.values()))

    def total_degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(e) for e in self.terms)

    def uses_var(self, i: int) -> bool:
        return any(e[i - 1] for e in self.terms)

    # -- arithmetic ----------------------------------------------------------
    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.nvars == self.nvars:
                return other
            if other.is_constant():
                return Poly.const(other.constant_value(), self.nvars)
            if self.is_constant():
                raise ValueError("variable count mismatch")
            raise ValueError("variable count mismatch")
        return Poly.const(other, self.nvars)

    def __add__(self, other) -> "Poly":
        other = self._coerce(other)
        if other.nvars != self.nvars:
            return other.__add__(self)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, Fraction(0)) + c
        return Poly(self.nvars, terms)

    def __neg__(self) -> "Poly":
        return Poly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "Poly":
        return self + (-self._coerce(other))

    def __mul__(self, other) -> "Poly":
        other = self._coerce(other)
        if other.nvars != self.nvars:
            return other.__mul__(self)
        terms = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, Fraction(0)) + c1 * c2
        return Poly(self.nvars, terms)

    __radd__ = __add__
    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, Poly):
            try:
                other = self._coerce(other)
            except (ValueError, TypeError):
                return NotImplemented
        if self.nvars != other.nvars:
            return self.is_constant() and other.is_constant() and \
                self.constant_value() == other.constant_value()
        return self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, tuple(sorted(self.terms.items()))))
        return self._hash

    # -- substitution --------------------------------------------------------
    def evaluate(self, i: int, value) -> "Poly":
        """Substitute value for t_i and drop the variable (others shift down)."""
        if not 1 <= i <= self.nvars:
            raise ValueError("variable index out of range")
        value = Fraction(value)
        terms = {}
        for e, c in self.terms.items():
            coeff = c * value ** e[i - 1]
            if coeff == 0:
                continue
            ne = e[: i - 1] + e[i:]
            terms[ne] = terms.get(ne, Fraction(0)) + coeff
        return Poly(self.nvars - 1, terms)

    def evaluate_all(self, values: Sequence) -> Fraction:
        vals = [Fraction(v) for v in values]
        if len(vals) != self.nvars:
            raise ValueError("need one value per variable")
        total = Fraction(0)
        for e, c in self.terms.items():
            prod = c
            for a, v in zip(e, vals):
                prod *= v ** a
            total += prod
        return total

    def insert_var(self, i: int) -> "Poly":
        """Adjoin an unused variable in slot i (others shift up)."""
        if not 1 <= i <= self.nvars + 1:
            raise ValueError("variable index out of range")
        terms = {e[: i - 1] + (0,) + e[i - 1 :]: c for e, c in self.terms.items()}
        return Poly(self.nvars + 1, terms)

    # -- printing ------------------------------------------------------------
    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms, key=_grlex_key):
            c = self.terms[e]
            mono = "*".join(
                f"t{j + 1}" if a == 1 else f"t{j + 1}^{a}"
                for j, a in enumerate(e)
                if a
            )
            if not mono:
                body = str(abs(c))
            elif abs(c) == 1:
                body = mono
            else:
                body = f"{abs(c)}*{mono}"
            parts.append(("- " if c < 0 else "+ ") + body)
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else "-" + text[2:]

    __repr__ = __str__


def parse_poly(text: str, nvars: int) -> Poly:
    """Parse the canonical string form produced by ``Poly.__str__``."""
    text = text.strip()
    if text == "0":
        return Poly(nvars)
    text = text.replace(" - ", " + -").lstrip()
    if text.startswith("-") and not text.startswith("- "):
        text = "-" + text[1:]
    out = Poly(nvars)
    for chunk in text.split(" + "):
        chunk = chunk.strip()
        neg = chunk.startswith("-")
        if neg:
            chunk = chunk[1:].strip()
        coeff = Fraction(1)
        expo = [0] * nvars
        for factor in chunk.split("*"):
            factor = factor.strip()
            if factor.startswith("t"):
                if "^" in factor:
                    name, power = factor.split("^")
                    expo[int(name[1:]) - 1] += int(power)
                else:
                    expo[int(factor[1:]) - 1] += 1
            else:
                coeff *= Fraction(factor)
        if neg:
            coeff = -coeff
        out = out + Poly(nvars, {tuple(expo): coeff})
    return out


def scalar_str(c: Fraction) -> str:
    c = Fraction(c)
    return f"{c.numerator}/{c.denominator}" if c.denominator != 1 else str(c.numerator)


def parse_scalar(text: str) -> Fraction:
    return Fraction(text)


# ---------------------------------------------------------------------------
# matrices


class PolyMatrix:
    """Dense matrix with Poly entries over a fixed variable count."""

    __slots__ = ("nrows", "ncols", "nvars", "rows", "_hash")

    def __init__(self, nrows: int, ncols: int, nvars: int, rows):
        self.nrows = nrows
        self.ncols = ncols
        self.nvars = nvars
        rows = tuple(tuple(r) for r in rows)
        if len(rows) != nrows or any(len(r) != ncols for r in rows):
            raise ValueError("inconsistent matrix shape")
        for r in rows:
            for x in r:
                if not isinstance(x, Poly) or x.nvars != nvars:
                    raise ValueError("entry with wrong type or variable count")
        self.rows = rows
        self._hash = None

    # -- constructors ---------------------------------------------------------
    @staticmethod
    def from_rational(rows, nvars: int = 0) -> "PolyMatrix":
        rows = [list(r) for r in rows]
        nrows = len(rows)
        ncols = len(rows[0]) if rows else 0
        return PolyMatrix(
            nrows, ncols, nvars,
            [[Poly.const(x, nvars) for x in r] for r in rows],
        )

    @staticmethod
    def identity(n: int, nvars: int = 0) -> "PolyMatrix":
        return PolyMatrix.from_rational(
            [[1 if i == j else 0 for j in range(n)] for i in range(n)], nvars
        )

    @staticmethod
    def zero(nrows: int, ncols: int, nvars: int = 0) -> "PolyMatrix":
        z = Poly(nvars)
        return PolyMatrix(nrows, ncols, nvars, [[z] * ncols for _ in range(nrows)])

    # -- helpers ---------------------------------------------------------------
    def with_nvars(self, nvars: int) -> "PolyMatrix":
        """Promote a constant-entry matrix into a larger polynomial ring."""
        if nvars == self.nvars:
            return self
        if self.nvars == 0:
            return PolyMatrix(
                self.nrows, self.ncols, nvars,
                [[Poly.const(x.constant_value(), nvars) for x in r] for r in self.rows],
            )
        raise ValueError("can only promote constant matrices")

    def entry(self, i: int, j: int) -> Poly:
        return self.rows[i][j]

    def is_zero(self) -> bool:
        return all(x.is_zero() for r in self.rows for x in r)

    def is_constant(self) -> bool:
        return all(x.is_constant() for r in self.rows for x in r)

    def uses_var(self, i: int) -> bool:
        return any(x.uses_var(i) for r in self.rows for x in r)

    def max_degree(self) -> int:
        degs = [x.total_degree() for r in self.rows for x in r if not x.is_zero()]
        return max(degs) if degs else 0

    def to_fractions(self):
        if not self.is_constant():
            raise ValueError("matrix has non-constant entries")
        return [[x.constant_value() for x in r] for r in self.rows]

    # -- algebra ----------------------------------------------------------------
    @staticmethod
    def _align(a: "PolyMatrix", b: "PolyMatrix"):
        if a.nvars == b.nvars:
            return a, b
        if a.nvars == 0:
            return a.with_nvars(b.nvars), b
        if b.nvars == 0:
            return a, b.with_nvars(a.nvars)
        raise ValueError("variable count mismatch")

    def __mul__(self, other: "PolyMatrix") -> "PolyMatrix":
        a, b = PolyMatrix._align(self, other)
        if a.ncols != b.nrows:
            raise ValueError(f"shape mismatch {a.nrows}x{a.ncols} * {b.nrows}x{b.ncols}")
        zero = Poly(a.nvars)
        bcols = list(zip(*b.rows)) if b.rows else []
        rows = []
        for r in a.rows:
            row = []
            for c in range(b.ncols):
                acc = zero
                col = bcols[c] if bcols else ()
                for x, y in zip(r, col):
                    if x.terms and y.terms:
                        acc = acc + x * y
                row.append(acc)
            rows.append(row)
        return PolyMatrix(a.nrows, b.ncols, a.nvars, rows)

    def __add__(self, other: "PolyMatrix") -> "PolyMatrix":
        a, b = PolyMatrix._align(self, other)
        if (a.nrows, a.ncols) != (b.nrows, b.ncols):
            raise ValueError("shape mismatch")
        return PolyMatrix(
            a.nrows, a.ncols, a.nvars,
            [[x + y for x, y in zip(r1, r2)] for r1, r2 in zip(a.rows, b.rows)],
        )

    def __sub__(self, other: "PolyMatrix") -> "PolyMatrix":
        return self + (-other)

    def __neg__(self) -> "PolyMatrix":
        return PolyMatrix(
            self.nrows, self.ncols, self.nvars,
            [[-x for x in r] for r in self.rows],
        )

    def scale(self, c) -> "PolyMatrix":
        if isinstance(c, Poly):
            f = c if c.nvars == self.nvars else Poly.const(c.constant_value(), self.nvars)
        else:
            f = Poly.const(c, self.nvars)
        return PolyMatrix(
            self.nrows, self.ncols, self.nvars,
            [[f * x for x in r] for r in self.rows],
        )

    def transpose(self) -> "PolyMatrix":
        return PolyMatrix(self.ncols, self.nrows, self.nvars, list(zip(*self.rows)) or [])

    def hstack(self, other: "PolyMatrix") -> "PolyMatrix":
        a, b = PolyMatrix._align(self, other)
        if a.nrows != b.nrows:
            raise ValueError("row mismatch")
        return PolyMatrix(a.nrows, a.ncols + b.ncols, a.nvars,
                          [r1 + r2 for r1, r2 in zip(a.rows, b.rows)])

    def vstack(self, other: "PolyMatrix") -> "PolyMatrix":
        a, b = PolyMatrix._align(self, other)
        if a.ncols != b.ncols:
            raise ValueError("column mismatch")
        return PolyMatrix(a.nrows + b.nrows, a.ncols, a.nvars, a.rows + b.rows)

    def columns(self, idx: Iterable[int]) -> "PolyMatrix":
        idx = list(idx)
        return PolyMatrix(self.nrows, len(idx), self.nvars,
                          [[r[j] for j in idx] for r in self.rows])

    @staticmethod
    def direct_sum(blocks: Sequence["PolyMatrix"]) -> "PolyMatrix":
        blocks = list(blocks)
        if not blocks:
            return PolyMatrix.zero(0, 0, 0)
        nvars = max(b.nvars for b in blocks)
        blocks = [b.with_nvars(nvars) if b.nvars != nvars else b for b in blocks]
        nrows = sum(b.nrows for b in blocks)
        ncols = sum(b.ncols for b in blocks)
        out = [[Poly(nvars)] * ncols for _ in range(nrows)]
        r0 = c0 = 0
        for b in blocks:
            for i, row in enumerate(b.rows):
                for j, x in enumerate(row):
                    out[r0 + i][c0 + j] = x
            r0 += b.nrows
            c0 += b.ncols
        return PolyMatrix(nrows, ncols, nvars, out)

    def kron(self, other: "PolyMatrix") -> "PolyMatrix":
        a, b = PolyMatrix._align(self, other)
        rows = []
        for r1 in a.rows:
            for r2 in b.rows:
                rows.append([x * y for x in r1 for y in r2])
        return PolyMatrix(a.nrows * b.nrows, a.ncols * b.ncols, a.nvars, rows)

    # -- substitution ------------------------------------------------------------
    def evaluate(self, i: int, value) -> "PolyMatrix":
        if not 1 <= i <= self.nvars:
            raise ValueError("variable index out of range")
        return PolyMatrix(
            self.nrows, self.ncols, self.nvars - 1,
            [[x.evaluate(i, value) for x in r] for r in self.rows],
        )

    def evaluate_all(self, values: Sequence) -> "PolyMatrix":
        return PolyMatrix(
            self.nrows, self.ncols, 0,
            [[Poly.const(x.evaluate_all(values), 0) for x in r] for r in self.rows],
        )

    def insert_var(self, i: int) -> "PolyMatrix":
        return PolyMatrix(
            self.nrows, self.ncols, self.nvars + 1,
            [[x.insert_var(i) for x in r] for r in self.rows],
        )

    # -- equality -----------------------------------------------------------------
    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyMatrix):
            return NotImplemented
        if (self.nrows, self.ncols) != (other.nrows, other.ncols):
            return False
        a, b = PolyMatrix._align(self, other)
        return a.rows == b.rows

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nrows, self.ncols, self.nvars, self.rows))
        return self._hash

    def canonical_str(self) -> str:
        body = ";".join(",".join(str(x) for x in r) for r in self.rows)
        return f"[{self.nrows}x{self.ncols}|{self.nvars}|{body}]"

    def __repr__(self):
        return self.canonical_str()


# ---------------------------------------------------------------------------
# rational elimination


def rref(M: PolyMatrix):
    """Reduced row echelon form of a constant-entry matrix.

    Returns (R, pivot columns, rank); all exact.
    """
    rows = [list(r) for r in M.to_fractions()]
    nrows, ncols = M.nrows, M.ncols
    pivots = []
    r = 0
    for c in range(ncols):
        pivot_row = None
        for i in range(r, nrows):
            if rows[i][c] != 0:
                pivot_row = i
                break
        if pivot_row is None:
            continue
        rows[r], rows[pivot_row] = rows[pivot_row], rows[r]
        pv = rows[r][c]
        rows[r] = [x / pv for x in rows[r]]
        for i in range(nrows):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    R = PolyMatrix.from_rational(rows, 0)
    return R, tuple(pivots), len(pivots)


def rank_q(M: PolyMatrix) -> int:
    return rref(M)[2]


def kernel_basis_q(M: PolyMatrix) -> PolyMatrix:
    """Canonical kernel basis from the rref free-variable construction.

    Column for free column f has entry 1 in row f and -R[r][f] in the pivot
    rows; columns ordered by ascending free column.
    """
    R, pivots, rank = rref(M)
    free = [c for c in range(M.ncols) if c not in pivots]
    cols = []
    Rfrac = R.to_fractions() if R.nrows else []
    for f in free:
        v = [Fraction(0)] * M.ncols
        v[f] = Fraction(1)
        for r, p in enumerate(pivots):
            v[p] = -Rfrac[r][f]
        cols.append(v)
    rows = [[cols[j][i] for j in range(len(cols))] for i in range(M.ncols)]
    return PolyMatrix.from_rational(rows, 0)


def solve_q(A: PolyMatrix, B: PolyMatrix) -> Optional[PolyMatrix]:
    """One exact solution X of A X = B over Q, or None if unsolvable."""
    a, b = PolyMatrix._align(A, B)
    aug = a.hstack(b)
    R, pivots, rank = rref(aug)
    if any(p >= a.ncols for p in pivots):
        return None
    Rrows = R.to_fractions()
    out = [[Fraction(0)] * b.ncols for _ in range(a.ncols)]
    for r, p in enumerate(pivots):
        for j in range(b.ncols):
            out[p][j] = Rrows[r][a.ncols + j]
    return PolyMatrix.from_rational(out, 0)


def is_invertible_q(M: PolyMatrix) -> bool:
    return M.nrows == M.ncols and rank_q(M) == M.nrows


def inverse_q(M: PolyMatrix) -> PolyMatrix:
    if M.nrows != M.ncols:
        raise ValueError("not square")
    X = solve_q(M, PolyMatrix.identity(M.nrows))
    if X is None or not is_invertible_q(M):
        raise ValueError("matrix is singular")
    return X


# ---------------------------------------------------------------------------
# polynomial kernels


def _monomials_upto(nvars: int, degree: int) -> list:
    out = []
    for total in range(degree + 1):
        for expo in itertools.product(range(total + 1), repeat=nvars):
            if sum(expo) == total:
                out.append(expo)
    return out


def certification_points(nvars: int, count: int, rng: random.Random) -> list:
    """Random rational sample points avoiding the face values 0 and 1."""
    pts = []
    seen = set()
    while len(pts) < count:
        p = tuple(Fraction(rng.randint(-19, 23), rng.randint(1, 7)) for _ in range(nvars))
        if any(x in (0, 1) for x in p) or p in seen:
            continue
        seen.add(p)
        pts.append(p)
    return pts


def _solve_degree_bound(M: PolyMatrix, degree: int) -> list:
    """Kernel of x -> M x over columns with entries of total degree <= degree.

    Returns the candidate columns as lists of Poly, in the canonical order
    induced by the rref free-variable construction on coefficient space.
    """
    monos = _monomials_upto(M.nvars, degree)
    unknowns = [(j, e) for j in range(M.ncols) for e in monos]
    out_monos = _monomials_upto(M.nvars, degree + M.max_degree())
    out_index = {e: i for i, e in enumerate(out_monos)}
    nrows_big = M.nrows * len(out_monos)
    cols = []
    for (j, e) in unknowns:
        col = [Fraction(0)] * nrows_big
        for i in range(M.nrows):
            entry = M.rows[i][j]
            for ee, c in entry.terms.items():
                tot = tuple(a + b for a, b in zip(ee, e))
                col[i * len(out_monos) + out_index[tot]] += c
        cols.append(col)
    big = PolyMatrix.from_rational(
        [[cols[j][i] for j in range(len(cols))] for i in range(nrows_big)], 0
    )
    K = kernel_basis_q(big)
    candidates = []
    for c in range(K.ncols):
        terms = [dict() for _ in range(M.ncols)]
        for idx, (j, e) in enumerate(unknowns):
            v = K.rows[idx][c].constant_value()
            if v != 0:
                terms[j][e] = v
        candidates.append([Poly(M.nvars, t) for t in terms])
    return candidates


def _normalize_column(col: list) -> list:
    """Scale so the first nonzero graded-lex-leading coefficient is 1."""
    lead = None
    for p in col:
        if not p.is_zero():
            e = min(p.terms, key=_grlex_key)
            lead = p.terms[e]
            break
    if lead is None or lead == 1:
        return col
    inv = 1 / lead
    return [Poly(p.nvars, {e: c * inv for e, c in p.terms.items()}) for p in col]


def poly_kernel(
    M: PolyMatrix,
    degree_bound: Optional[int] = None,
    n_points: int = 12,
    seed: int = 2024,
    hard_cap: int = 16,
) -> PolyMatrix:
    """Certified generating columns for the kernel of a polynomial matrix.

    The returned columns K satisfy M K = 0 identically and span ker M(p)
    at every certification point p; the kernel must have constant fiber
    dimension on the sample (flat case), otherwise certification fails.
    """
    if M.nvars == 0:
        return kernel_basis_q(M)
    rng = random.Random(seed)
    pts = certification_points(M.nvars, n_points, rng)
    fibers = [M.evaluate_all(p) for p in pts]
    fiber_ranks = [rank_q(F) for F in fibers]
    target = M.ncols - max(fiber_ranks)
    if any(M.ncols - r != target for r in fiber_ranks):
        raise CertificationFailed("kernel dimension is not constant on the sample")
    if target == 0:
        return PolyMatrix.zero(M.ncols, 0, M.nvars)
    degree = degree_bound if degree_bound is not None else 1 + M.max_degree()
    while True:
        candidates = _solve_degree_bound(M, degree)
        kept: list = []
        kept_fibers = [PolyMatrix.zero(M.ncols, 0, 0) for _ in pts]
        for col in candidates:
            if len(kept) == target:
                break
            col = _normalize_column(col)
            col_mat = PolyMatrix(M.ncols, 1, M.nvars, [[p] for p in col])
            improved = False
            new_fibers = []
            for F, p in zip(kept_fibers, pts):
                ev = col_mat.evaluate_all(p)
                cand = F.hstack(ev)
                if rank_q(cand) > rank_q(F):
                    improved = True
                new_fibers.append(cand)
            if improved:
                kept.append(col)
                kept_fibers = new_fibers
        if len(kept) == target:
            ranks = [rank_q(F) for F in kept_fibers]
            if all(r == target for r in ranks):
                K = PolyMatrix(
                    M.ncols, target, M.nvars,
                    [[kept[j][i] for j in range(target)] for i in range(M.ncols)],
                )
                if not (M * K).is_zero():
                    raise CertificationFailed("candidate columns do not annihilate M")
                return K
        if degree >= hard_cap:
            raise CertificationFailed(
                f"no certified kernel basis up to degree {hard_cap}"
            )
        degree = min(2 * degree, hard_cap) if degree > 0 else 1


def membership_solve(
    K: PolyMatrix, V: PolyMatrix, degree_bound: Optional[int] = None
) -> Optional[PolyMatrix]:
    """Solve K X = V with polynomial X of bounded degree; None if not in span."""
    K, V = PolyMatrix._align(K, V)
    if K.nvars == 0:
        return solve_q(K, V)
    degree = degree_bound if degree_bound is not None else 2 + K.max_degree() + V.max_degree()
    monos = _monomials_upto(K.nvars, degree)
    out_monos = _monomials_upto(K.nvars, degree + K.max_degree())
    out_index = {e: i for i, e in enumerate(out_monos)}
    nrows_big = K.nrows * len(out_monos)
    unknowns = [(j, e) for j in range(K.ncols) for e in monos]
    cols = []
    for (j, e) in unknowns:
        col = [Fraction(0)] * nrows_big
        for i in range(K.nrows):
            entry = K.rows[i][j]
            for ee, c in entry.terms.items():
                tot = tuple(a + b for a, b in zip(ee, e))
                col[i * len(out_monos) + out_index[tot]] += c
        cols.append(col)
    big = PolyMatrix.from_rational(
        [[cols[j][i] for j in range(len(cols))] for i in range(nrows_big)], 0
    )
    sols = []
    for v in range(V.ncols):
        rhs = [Fraction(0)] * nrows_big
        for i in range(K.nrows):
            for ee, c in V.rows[i][v].terms.items():
                if ee not in out_index:
                    return None
                rhs[i * len(out_monos) + out_index[ee]] += c
        x = solve_q(big, PolyMatrix.from_rational([[r] for r in rhs], 0))
        if x is None:
            return None
        col_terms = [dict() for _ in range(K.ncols)]
        for idx, (j, e) in enumerate(unknowns):
            val = x.rows[idx][0].constant_value()
            if val != 0:
                col_terms[j][e] = val
        sols.append([Poly(K.nvars, t) for t in col_terms])
    return PolyMatrix(
        K.ncols, V.ncols, K.nvars,
        [[sols[j][i] for j in range(V.ncols)] for i in range(K.ncols)],
    )


# ---------------------------------------------------------------------------
# exactness


def exactness_profile(dims: Sequence[int], maps: Sequence[PolyMatrix]):
    """Betti numbers of a finite complex of Q-vector spaces.

    ``maps[i]`` is d_i: C^i -> C^{i+1}; there are len(dims)-1 of them.
    Raises NotAComplex when a consecutive composite fails to vanish.
    """
    dims = list(dims)
    maps = list(maps)
    if len(maps) != max(len(dims) - 1, 0):
        raise ValueError("need exactly one map per consecutive pair")
    for i, m in enumerate(maps):
        if m.ncols != dims[i] or m.nrows != dims[i + 1]:
            raise ValueError(f"map {i} has shape {m.nrows}x{m.ncols}, expected {dims[i+1]}x{dims[i]}")
    for i in range(len(maps) - 1):
        if not (maps[i + 1] * maps[i]).is_zero():
            raise NotAComplex(f"d_{i + 1} d_{i} != 0")
    ranks = [rank_q(m) for m in maps]
    betti = []
    for i, d in enumerate(dims):
        r_out = ranks[i] if i < len(ranks) else 0
        r_in = ranks[i - 1] if i > 0 else 0
        betti.append(d - r_out - r_in)
    return betti, all(b == 0 for b in betti)


def is_exact_sequence(
    dims: Sequence[int],
    maps: Sequence[PolyMatrix],
    nvars: int = 0,
    n_points: int = 4,
    seed: int = 7,
) -> bool:
    """Exactness check that also covers polynomial-entry complexes.

    For nvars = 0 this is the rational betti test.  Otherwise the composite
    must vanish identically and every fiber at a battery of sample points
    (random rationals plus all 0/1 face combinations) must be exact.
    """
    if nvars == 0:
        try:
            _, ok = exactness_profile(dims, maps)
        except NotAComplex:
            return False
        return ok
    for i in range(len(maps) - 1):
        if not (maps[i + 1] * maps[i]).is_zero():
            return False
    rng = random.Random(seed)
    pts = certification_points(nvars, n_points, rng)
    pts += [tuple(Fraction(b) for b in bits)
            for bits in itertools.product((0, 1), repeat=nvars)]
    for p in pts:
        ev = [m.evaluate_all(p) for m in maps]
        try:
            _, ok = exactness_profile(dims, ev)
        except NotAComplex:
            return False
        if not ok:
            return False
    return True
