"""Matrix algebra over LocalElements.

Everything here is threshold-aware: rank, kernels and eigenspace stages
refuse to guess when an elementary divisor lands in the ambiguity band
[tau, N), and raise PrecisionExhaustedError instead.  Determinants expand
division-free (memoized Laplace over column subsets), so they never consume
precision; inverses go through the adjugate for the same reason.
"""

from __future__ import annotations

import math

from .localring import (
    FieldDescriptor,
    LocalElement,
    LocalFieldError,
    NotInvertibleError,
)


class PrecisionExhaustedError(LocalFieldError):
    """A rank or eigenspace decision fell in the ambiguity band [tau, N)."""


class SingularMatrixError(NotInvertibleError):
    """Matrix not invertible at working precision."""


class Mat:
    """Square matrix of LocalElements over one field."""

    __slots__ = ("field", "n", "rows")

    def __init__(self, field: FieldDescriptor, rows):
        self.field = field
        self.rows = tuple(tuple(r) for r in rows)
        self.n = len(self.rows)
        for r in self.rows:
            if len(r) != self.n:
                raise ValueError("matrix must be square")

    @staticmethod
    def identity(field, n):
        one, zero = field.one(), field.zero()
        return Mat(field, [[one if i == j else zero for j in range(n)] for i in range(n)])

    @staticmethod
    def diag(field, entries):
        entries = list(entries)
        zero = field.zero()
        n = len(entries)
        return Mat(field, [[entries[i] if i == j else zero for j in range(n)] for i in range(n)])

    @staticmethod
    def from_int_rows(field, rows):
        return Mat(field, [[field.from_int(c) for c in r] for r in rows])

    def __mul__(self, other):
        if isinstance(other, Mat):
            n = self.n
            a, b = self.rows, other.rows
            out = []
            for i in range(n):
                ai = a[i]
                row = []
                for j in range(n):
                    acc = ai[0] * b[0][j]
                    for k in range(1, n):
                        acc = acc + ai[k] * b[k][j]
                    row.append(acc)
                out.append(row)
            return Mat(self.field, out)
        if isinstance(other, (LocalElement, int)):
            return self.scale(other)
        return NotImplemented

    def scale(self, x):
        if isinstance(x, int):
            x = self.field.from_int(x)
        return Mat(self.field, [[e * x for e in r] for r in self.rows])

    def __add__(self, other):
        return Mat(self.field, [[a + b for a, b in zip(ra, rb)]
                                for ra, rb in zip(self.rows, other.rows)])

    def __sub__(self, other):
        return Mat(self.field, [[a - b for a, b in zip(ra, rb)]
                                for ra, rb in zip(self.rows, other.rows)])

    def __pow__(self, k: int):
        if k < 0:
            return mat_inv(self) ** (-k)
        result = Mat.identity(self.field, self.n)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, Mat):
            return NotImplemented
        return self.n == other.n and all(
            a == b for ra, rb in zip(self.rows, other.rows) for a, b in zip(ra, rb))

    __hash__ = None

    def eq_at(self, other, threshold=None):
        t = threshold if threshold is not None else self.field.tau
        return all((a - b).valuation() >= t
                   for ra, rb in zip(self.rows, other.rows) for a, b in zip(ra, rb))

    def is_identity(self):
        one = self.field.one()
        return all((e - one).is_zero() if i == j else e.is_zero()
                   for i, r in enumerate(self.rows) for j, e in enumerate(r))

    def transpose(self):
        return Mat(self.field, list(zip(*self.rows)))

    def column(self, j):
        return tuple(r[j] for r in self.rows)

    def min_entry_valuation(self):
        return min(e.valuation() for r in self.rows for e in r)

    def __repr__(self):
        return f"Mat(n={self.n}, field={self.field!r})"

    def to_json(self):
        return [[e.to_json() for e in r] for r in self.rows]

    @staticmethod
    def from_json(field, blob):
        return Mat(field, [[LocalElement.from_json(field, e) for e in r] for r in blob])


def _det_expand(rows, one, zero):
    """Division-free determinant: Laplace expansion by rows, memoized over
    active-column bitmasks.  Works for any entries with ring operators and
    an is_zero method (LocalElements, polynomials over them)."""
    n = len(rows)
    if n == 0:
        return one
    memo = {}

    def rec(r, mask):
        if r == n:
            return one
        hit = memo.get(mask)
        if hit is not None:
            return hit
        total = None
        sign = 1
        m = mask
        while m:
            low = m & -m
            c = low.bit_length() - 1
            entry = rows[r][c]
            if not entry.is_zero():
                term = entry * rec(r + 1, mask ^ low)
                if sign < 0:
                    term = -term
                total = term if total is None else total + term
            sign = -sign
            m &= m - 1
        if total is None:
            total = zero
        memo[mask] = total
        return total

    return rec(0, (1 << n) - 1)


def det(M: Mat) -> LocalElement:
    return _det_expand(M.rows, M.field.one(), M.field.zero())


def mat_inv(M: Mat) -> Mat:
    """Inverse over F via adjugate / determinant (exact when det is a unit;
    for non-unit determinants the pole goes into the shifts)."""
    d = det(M)
    if d.is_zero():
        raise SingularMatrixError("singular at working precision")
    dinv = d.inv()
    n = M.n
    if n == 1:
        return Mat(M.field, [[dinv]])
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            sub = [[M.rows[r][c] for c in range(n) if c != j]
                   for r in range(n) if r != i]
            cof = _det_expand(sub, M.field.one(), M.field.zero())
            if (i + j) % 2:
                cof = -cof
            out[j][i] = cof * dinv
    return Mat(M.field, out)


class Poly:
    """Polynomial in one variable with LocalElement coefficients."""

    __slots__ = ("field", "coeffs")

    def __init__(self, field, coeffs):
        self.field = field
        self.coeffs = tuple(coeffs) if coeffs else (field.zero(),)

    @staticmethod
    def const(field, c):
        return Poly(field, (c,))

    @staticmethod
    def monomial(field, c, k):
        return Poly(field, tuple([field.zero()] * k) + (c,))

    def degree(self):
        """Largest index with a coefficient nonzero at precision; -1 if none."""
        for i in range(len(self.coeffs) - 1, -1, -1):
            if not self.coeffs[i].is_zero():
                return i
        return -1

    def is_zero(self):
        return all(c.is_zero() for c in self.coeffs)

    def coeff(self, k):
        return self.coeffs[k] if k < len(self.coeffs) else self.field.zero()

    def __add__(self, other):
        if isinstance(other, LocalElement):
            other = Poly.const(self.field, other)
        la, lb = len(self.coeffs), len(other.coeffs)
        z = self.field.zero()
        return Poly(self.field, tuple(
            (self.coeffs[i] if i < la else z) + (other.coeffs[i] if i < lb else z)
            for i in range(max(la, lb))))

    def __neg__(self):
        return Poly(self.field, tuple(-c for c in self.coeffs))

    def __sub__(self, other):
        if isinstance(other, LocalElement):
            other = Poly.const(self.field, other)
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, LocalElement):
            return Poly(self.field, tuple(c * other for c in self.coeffs))
        z = self.field.zero()
        out = [z] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if not a.is_zero():
                for j, b in enumerate(other.coeffs):
                    if not b.is_zero():
                        out[i + j] = out[i + j] + a * b
        return Poly(self.field, tuple(out))

    def __call__(self, x: LocalElement) -> LocalElement:
        acc = self.field.zero()
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __eq__(self, other):
        return (self - other).is_zero()

    __hash__ = None

    def __repr__(self):
        return f"Poly(deg<={len(self.coeffs)-1})"

    def to_json(self):
        return [c.to_json() for c in self.coeffs]

    @staticmethod
    def from_json(field, blob):
        return Poly(field, [LocalElement.from_json(field, c) for c in blob])


def charpoly(M: Mat) -> tuple[LocalElement, ...]:
    """Coefficients (c_0,...,c_n) of det(xI - M), monic of degree n."""
    f = M.field
    one, zero = f.one(), f.zero()
    rows = [[Poly(f, ((-M.rows[i][j]), one) if i == j else (-M.rows[i][j],))
             for j in range(M.n)] for i in range(M.n)]
    p = _det_expand(rows, Poly.const(f, one), Poly.const(f, zero))
    coeffs = list(p.coeffs) + [zero] * (M.n + 1 - len(p.coeffs))
    return tuple(coeffs[: M.n + 1])


def poly_eval_matrix(coeffs, M: Mat) -> Mat:
    """Evaluate a coefficient list (c_0,...,c_d) at a matrix argument."""
    acc = Mat.identity(M.field, M.n).scale(coeffs[-1])
    for c in reversed(coeffs[:-1]):
        acc = acc * M + Mat.identity(M.field, M.n).scale(c)
    return acc


def synthetic_divide(coeffs, lam):
    """Divide a monic-or-not coefficient list by (x - lam); returns the
    quotient coefficients, discarding the (checked-elsewhere) remainder."""
    n = len(coeffs) - 1
    out = [None] * n
    acc = coeffs[n]
    for i in range(n - 1, -1, -1):
        out[i] = acc
        acc = coeffs[i] + acc * lam
    return tuple(out)


def root_multiplicity(coeffs, lam, threshold) -> int:
    """Multiplicity of lam as a root of the coefficient list, at threshold."""
    count = 0
    cur = coeffs
    while len(cur) > 1:
        val = _poly_eval(cur, lam).valuation()
        if val < threshold:
            break
        count += 1
        cur = synthetic_divide(cur, lam)
    return count


def _poly_eval(coeffs, x):
    acc = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = acc * x + c
    return acc


# --- rank / kernels at a valuation threshold ---------------------------------


def _classify_remaining(entries, tau, N):
    """After reduction stops, the remaining entries are the zero divisors.

    Nonzero digit vectors carry an exact valuation, so a value at or above
    tau is a decided zero divisor, not a guess (this is what makes
    diag(1, pi^(N-1)) have rank 1 at tau).  The genuinely ambiguous case is
    a vanished digit vector whose knowledge horizon shift+N dropped below
    tau through pole cancellation: there we abort rather than guess.
    """
    for x in entries:
        if x.is_zero() and x.shift + N < tau:
            raise PrecisionExhaustedError(
                f"entry only known to vanish mod pi^{x.shift + N}, below the "
                f"threshold {tau}; raise the working precision")


def elementary_divisor_valuations(rows, field, tau=None):
    """Smith-style divisor valuations below tau for a rectangular array of
    LocalElements.  Global minimal-valuation pivoting; row clearing followed
    by dropping the pivot row and column reproduces the divisor chain."""
    tau = tau if tau is not None else field.tau
    work = [list(r) for r in rows]
    nr = len(work)
    nc = len(work[0]) if nr else 0
    act_r = list(range(nr))
    act_c = list(range(nc))
    divisors = []
    while act_r and act_c:
        best = None
        for r in act_r:
            for c in act_c:
                v = work[r][c].valuation()
                if v != math.inf and (best is None or v < best[0]):
                    best = (v, r, c)
        if best is None or best[0] >= tau:
            break
        v, pr, pc = best
        divisors.append(v)
        pivot = work[pr][pc]
        for r in act_r:
            if r != pr and not work[r][pc].is_zero():
                m = work[r][pc] / pivot
                for c in act_c:
                    work[r][c] = work[r][c] - m * work[pr][c]
        act_r.remove(pr)
        act_c.remove(pc)
    _classify_remaining([work[r][c] for r in act_r for c in act_c], tau, field.N)
    return divisors


def rank_at_threshold(M, tau=None) -> int:
    """Number of elementary divisors with valuation below the threshold."""
    if isinstance(M, Mat):
        return len(elementary_divisor_valuations(M.rows, M.field, tau))
    raise TypeError("rank_at_threshold expects a Mat")


def rank_of_columns(cols, field, tau=None) -> int:
    if not cols:
        return 0
    rows = list(zip(*cols))
    return len(elementary_divisor_valuations(rows, field, tau))


def kernel_basis_at_threshold(M: Mat, tau=None):
    """Basis of the right kernel at threshold, as unimodular column vectors.

    Column reduction with global minimal-valuation pivots, mirrored on an
    identity matrix; the mirror columns of the unreduced columns form the
    kernel.  The mirror stays in GL_n(O_F), so each basis vector has a unit
    coordinate.
    """
    return _kernel_rectangular(M.rows, M.field, tau)


def solve_in_span(cols, target, field, tau=None):
    """Coefficients expressing target in the span of the given columns, or
    raise if it is not there at threshold.  Found from a kernel vector of
    the augmented matrix whose last coordinate is a unit."""
    n = len(target)
    aug_rows = [[cols[k][i] for k in range(len(cols))] + [target[i]] for i in range(n)]
    kern = _kernel_rectangular(aug_rows, field, tau)
    for vec in kern:
        if vec[-1].valuation() == 0:
            s = -vec[-1].inv()
            return [c * s for c in vec[:-1]]
    raise PrecisionExhaustedError("target vector not in span at threshold")


def _kernel_rectangular(rows, field, tau=None):
    f = field
    tau = tau if tau is not None else f.tau
    nr = len(rows)
    nc = len(rows[0])
    work = [list(r) for r in rows]
    mirror = [[f.one() if i == j else f.zero() for j in range(nc)] for i in range(nc)]
    act_r = list(range(nr))
    act_c = list(range(nc))
    while act_r and act_c:
        best = None
        for r in act_r:
            for c in act_c:
                v = work[r][c].valuation()
                if v != math.inf and (best is None or v < best[0]):
                    best = (v, r, c)
        if best is None or best[0] >= tau:
            break
        _, pr, pc = best
        pivot = work[pr][pc]
        for c in act_c:
            if c != pc and not work[pr][c].is_zero():
                m = work[pr][c] / pivot
                for i in range(nr):
                    work[i][c] = work[i][c] - m * work[i][pc]
                for i in range(nc):
                    mirror[i][c] = mirror[i][c] - m * mirror[i][pc]
        act_r.remove(pr)
        act_c.remove(pc)
    _classify_remaining([work[r][c] for r in act_r for c in act_c], tau, f.N)
    return [tuple(mirror[i][c] for i in range(nc)) for c in act_c]


# --- generalized eigenspaces --------------------------------------------------


class Filtration:
    """Nested kernel stages of (M - lambda): an ordered vector list where the
    first shape[0] vectors span stage 1, the first shape[1] span stage 2, and
    so on.  Vectors are unimodular columns."""

    __slots__ = ("field", "vectors", "shape")

    def __init__(self, field, vectors, shape):
        self.field = field
        self.vectors = tuple(tuple(v) for v in vectors)
        self.shape = tuple(shape)
        for v in self.vectors:
            if min(x.valuation() for x in v) != 0:
                raise ValueError("filtration vectors must be unimodular")

    def stage(self, i):
        """Vectors spanning stage i (1-based)."""
        return self.vectors[: self.shape[i - 1]]

    def dimension(self):
        return self.shape[-1] if self.shape else 0

    def depth(self):
        return len(self.shape)


def generalized_eigenspace(M: Mat, lam: LocalElement, cap: int | None = None) -> Filtration:
    """The flag ker(M-lam) in ker(M-lam)^2 in ... up to stabilization.

    The top dimension is cross-checked against the multiplicity of lam in
    the characteristic polynomial; disagreement is a precision failure, not
    a guess.
    """
    f = M.field
    n = M.n
    cap = cap if cap is not None else n
    A = M - Mat.identity(f, n).scale(lam)
    vectors = []
    shape = []
    Apow = A
    for _ in range(cap):
        kern = kernel_basis_at_threshold(Apow)
        if len(kern) == len(vectors):
            break
        added = _extend_basis(vectors, kern, f)
        vectors = vectors + added
        shape.append(len(vectors))
        if len(vectors) == n:
            break
        Apow = Apow * A
    if shape:
        mult = root_multiplicity(charpoly(M), lam, f.tau)
        if mult != shape[-1]:
            raise PrecisionExhaustedError(
                f"eigenspace dimension {shape[-1]} disagrees with characteristic "
                f"multiplicity {mult}")
    return Filtration(f, vectors, shape)


def _extend_basis(current, candidates, field):
    added = []
    target = len(candidates)
    cur = list(current)
    for v in candidates:
        if len(cur) >= target:
            break
        if rank_of_columns(cur + [v], field) > len(cur):
            cur.append(v)
            added.append(v)
    if len(cur) != target:
        raise PrecisionExhaustedError("could not extend stage basis at threshold")
    return added


# --- Iwasawa decomposition ----------------------------------------------------


def iwasawa_decompose(E: Mat):
    """Write E = Nup * E0 with Nup upper-triangular over F and E0 in
    GL_n(O_F).

    Rows are processed bottom-up (so the accumulated left factor stays upper
    triangular): eliminate the pivot columns of the rows below, rescale by a
    power of the uniformizer to minimal valuation 0, then pivot on the
    rightmost unit entry.  Uniformizer rescaling is a pure shift, hence
    exact.
    """
    f = E.field
    n = E.n
    work = [list(r) for r in E.rows]
    trans = [[f.one() if i == j else f.zero() for j in range(n)] for i in range(n)]
    pivot_col = [None] * n
    for i in range(n - 1, -1, -1):
        for r in range(i + 1, n):
            c = pivot_col[r]
            t = work[i][c]
            if not t.is_zero():
                m = t / work[r][c]
                for j in range(n):
                    work[i][j] = work[i][j] - m * work[r][j]
                    trans[i][j] = trans[i][j] - m * trans[r][j]
        vmin = min(x.valuation() for x in work[i])
        if vmin == math.inf:
            raise SingularMatrixError("matrix not invertible over F")
        if vmin != 0:
            s = f.uniformizer() ** (-vmin)
            for j in range(n):
                work[i][j] = work[i][j] * s
                trans[i][j] = trans[i][j] * s
        used = pivot_col[i + 1:]
        cands = [c for c in range(n) if c not in used
                 and work[i][c].valuation() == 0]
        if not cands:
            raise PrecisionExhaustedError("no unit pivot available in Iwasawa step")
        pivot_col[i] = max(cands)
    E0 = Mat(f, work)
    if det(E0).valuation() != 0:
        raise PrecisionExhaustedError("integral factor is not in GL_n(O_F)")
    Nup = _invert_upper_triangular(Mat(f, trans))
    return Nup, E0


def _invert_upper_triangular(U: Mat) -> Mat:
    f = U.field
    n = U.n
    x = [[f.zero()] * n for _ in range(n)]
    for j in range(n - 1, -1, -1):
        x[j][j] = U.rows[j][j].inv()
        for i in range(j - 1, -1, -1):
            acc = f.zero()
            for k in range(i + 1, j + 1):
                acc = acc + U.rows[i][k] * x[k][j]
            x[i][j] = -acc * U.rows[i][i].inv()
    return Mat(f, x)


def is_upper_triangular(M: Mat, threshold=None) -> bool:
    t = threshold if threshold is not None else M.field.tau
    return all(M.rows[i][j].valuation() >= t
               for i in range(M.n) for j in range(i))


# --- field enlargement predicates ---------------------------------------------


def zeta_q_plus_1_inertia(p: int, q: int) -> int:
    """Smallest f0 whose unramified extension contains the (q+1)-th roots of
    unity: the multiplicative order of p mod q+1."""
    m = q + 1
    k = 1
    acc = p % m
    while acc != 1:
        acc = (acc * p) % m
        k += 1
        if k > m:
            raise ValueError("order computation failed")
    return k


def needs_zeta_q_plus_1(field: FieldDescriptor) -> bool:
    """True when the working field is too small for the triangularization
    pipeline, which multiplies eigenvalues by (q+1)-th roots of unity."""
    return (field.p ** field.f0 - 1) % (field.q + 1) != 0
