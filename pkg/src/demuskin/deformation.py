"""Points of the framed deformation space as matrix tuples.

A point is a tuple (M_1,...,M_{d+2}) of n x n matrices congruent to the
identity mod the maximal ideal and satisfying the pro-p relation

    M_1^q [M_1,M_2] [M_3,M_4] ... [M_{d+1},M_{d+2}] = I

(with [A,B] = A B A^-1 B^-1; for q = 1 the group is free on d+1 generators
and there is no relation).  The determinant of M_1 is a q-th root of unity
on relation points and labels the connected component.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .localring import (
    FieldDescriptor,
    LocalElement,
    LocalFieldError,
    HenselBasinError,
    enumerate_mu_q,
    hensel_lift_unity,
    make_field,
    mu_q_index,
    reduce_mod_m,
)
from .linalg import Mat, PrecisionExhaustedError, charpoly, det, mat_inv, synthetic_divide


class RelationViolatedError(LocalFieldError):
    """The defining relation fails at the working threshold."""


class PreconditionError(LocalFieldError):
    """An operation was invoked outside its supported hypotheses."""


def _phi(q: int, p: int) -> int:
    return (q - q // p) if q >= 3 else 1


@dataclass(frozen=True)
class DeformationParams:
    """Shape data for the moduli problem: base field model, the degree d of
    the ground p-adic field, and the matrix size n."""

    field: FieldDescriptor
    d: int
    n: int

    def __post_init__(self):
        q, p = self.field.q, self.field.p
        if self.n < 1:
            raise PreconditionError("matrix dimension must be at least 1")
        if self.d < 1:
            raise PreconditionError("ground field degree must be at least 1")
        if q >= 3:
            e = _phi(q, p)
            if self.d < e:
                raise PreconditionError(
                    f"d = {self.d} is too small: a ground field containing the "
                    f"q-th roots of unity has degree at least phi(q) = {e}")
            if self.d % 2:
                raise PreconditionError("d must be even when q >= 3")

    @property
    def p(self):
        return self.field.p

    @property
    def q(self):
        return self.field.q

    @property
    def tuple_length(self):
        return self.d + 2 if self.q >= 3 else self.d + 1

    @property
    def path_assumption(self) -> bool:
        """p > n, the hypothesis under which the path pipeline works."""
        return self.field.p > self.n

    def to_json(self):
        return {"p": self.p, "q": self.q, "f0": self.field.f0,
                "N": self.field.N, "tau": self.field.tau,
                "d": self.d, "n": self.n}

    @staticmethod
    def from_json(blob):
        field = make_field(int(blob["p"]), int(blob["q"]), int(blob["f0"]),
                           int(blob["N"]), tau=blob.get("tau"))
        return DeformationParams(field, int(blob["d"]), int(blob["n"]))


class DeformationPoint:
    """A tuple of matrices deforming the trivial representation."""

    __slots__ = ("params", "matrices")

    def __init__(self, params: DeformationParams, matrices):
        self.params = params
        self.matrices = tuple(matrices)
        if len(self.matrices) != params.tuple_length:
            raise PreconditionError(
                f"expected {params.tuple_length} matrices, got {len(self.matrices)}")
        for m in self.matrices:
            if m.n != params.n:
                raise PreconditionError("matrix size mismatch")
            for i in range(m.n):
                for j in range(m.n):
                    want = 1 if i == j else 0
                    if reduce_mod_m(m.rows[i][j]) != want:
                        raise PreconditionError(
                            "matrices must be congruent to the identity mod m")

    def __eq__(self, other):
        return (isinstance(other, DeformationPoint)
                and self.params == other.params
                and all(a == b for a, b in zip(self.matrices, other.matrices)))

    __hash__ = None

    def eq_at(self, other, threshold=None):
        return all(a.eq_at(b, threshold) for a, b in zip(self.matrices, other.matrices))

    def to_json(self, meta=None):
        blob = {"params": self.params.to_json(),
                "matrices": [m.to_json() for m in self.matrices]}
        if meta:
            blob["meta"] = meta
        return blob

    @staticmethod
    def from_json(blob):
        params = DeformationParams.from_json(blob["params"])
        mats = [Mat.from_json(params.field, m) for m in blob["matrices"]]
        return DeformationPoint(params, mats)


@dataclass
class ComponentLabel:
    """Connected-component label: det(M_1) = zeta^index for the fixed
    primitive root zeta of the field."""

    index: int
    element: LocalElement

    def __eq__(self, other):
        return isinstance(other, ComponentLabel) and self.index == other.index

    def to_json(self):
        return {"index": self.index, "element": self.element.to_json()}

    @staticmethod
    def from_json(field, blob):
        return ComponentLabel(int(blob["index"]),
                              LocalElement.from_json(field, blob["element"]))


def label_for_index(field: FieldDescriptor, index: int) -> ComponentLabel:
    index %= max(field.q, 1)
    return ComponentLabel(index, enumerate_mu_q(field)[index])


def check_relation(pt: DeformationPoint):
    """Valuation of the relation residual: min entry valuation of the word
    minus the identity.  math.inf means the relation holds on the nose at
    working precision.  For q = 1 the relation is empty."""
    params = pt.params
    q = params.q
    if q == 1:
        return math.inf
    mats = pt.matrices
    m1, m2 = mats[0], mats[1]
    word = m1 ** (q + 1) * m2 * mat_inv(m1) * mat_inv(m2)
    for j in range(2, len(mats) // 2 + 1):
        a, b = mats[2 * j - 2], mats[2 * j - 1]
        if a.is_identity() and b.is_identity():
            continue
        word = word * (a * b * mat_inv(a) * mat_inv(b))
    res = word - Mat.identity(params.field, params.n)
    return res.min_entry_valuation()


def det_component(pt: DeformationPoint) -> ComponentLabel:
    """Component label of a relation point: Hensel-refine det(M_1) to the
    exact q-th root of unity it approximates and look it up among the
    powers of the fixed primitive root."""
    params = pt.params
    f = params.field
    residual = check_relation(pt)
    if residual < f.tau:
        raise RelationViolatedError(
            f"relation residual {residual} below threshold {f.tau}")
    d1 = det(pt.matrices[0])
    if params.q == 1:
        return label_for_index(f, 0)
    if (d1 ** params.q - 1).valuation() < f.tau:
        raise RelationViolatedError(
            "det(M_1) is not a q-th root of unity at threshold")
    try:
        lifted = hensel_lift_unity(d1, params.q)
        return ComponentLabel(mu_q_index(lifted), lifted)
    except (HenselBasinError, LocalFieldError) as exc:
        raise PrecisionExhaustedError(
            f"could not resolve the component label: {exc}") from exc


def canonical_point(params: DeformationParams, label) -> DeformationPoint:
    """The base point of a component: diag(zeta, 1, ..., 1) with identity
    partners."""
    f = params.field
    if isinstance(label, ComponentLabel):
        label = label.index
    zeta_k = enumerate_mu_q(f)[label % max(f.q, 1)]
    entries = [zeta_k] + [f.one()] * (params.n - 1)
    mats = [Mat.diag(f, entries)]
    mats += [Mat.identity(f, params.n) for _ in range(params.tuple_length - 1)]
    return DeformationPoint(params, mats)


def is_in_V(pt: DeformationPoint, threshold=None) -> bool:
    """True when all matrices past the second are the identity at threshold;
    there the relation collapses to M_2 M_1 M_2^-1 = M_1^(q+1)."""
    ident = Mat.identity(pt.params.field, pt.params.n)
    return all(m.eq_at(ident, threshold) for m in pt.matrices[2:])


def conjugate_point(pt: DeformationPoint, g: Mat) -> DeformationPoint:
    gi = mat_inv(g)
    return DeformationPoint(pt.params, [g * m * gi for m in pt.matrices])


# --- sampling -----------------------------------------------------------------


def _random_digits(rng, field):
    return field.element(0, tuple(rng.randrange(field.pM)
                                  for _ in range(field.e * field.f0)))


def _random_m_element(rng, field):
    return field.uniformizer() * _random_digits(rng, field)


def _random_gl_one_plus_m(rng, field, n):
    pi = field.uniformizer()
    rows = []
    for i in range(n):
        rows.append([(field.one() if i == j else field.zero())
                     + pi * _random_digits(rng, field) for j in range(n)])
    return Mat(field, rows)


def _commuting_block(rng, field, w):
    """A random w x w block of 1 + Mat(m) whose triangularization stays
    inside the implemented toolbox: scalar times unipotent for w >= 3,
    and for w = 2 either that or an upper-triangular block with diagonal
    entries separated at valuation one."""
    one, zero = field.one(), field.zero()
    pi = field.uniformizer()
    if w == 1:
        return [[one + _random_m_element(rng, field)]]
    if w == 2 and rng.random() < 0.6:
        r1, r2 = rng.sample(range(1, field.p), 2)
        c1 = one + pi * (field.from_int(r1) + _random_m_element(rng, field))
        c2 = one + pi * (field.from_int(r2) + _random_m_element(rng, field))
        return [[c1, _random_m_element(rng, field)], [zero, c2]]
    c = one + _random_m_element(rng, field)
    rows = [[(c if i == j else (_random_m_element(rng, field) if j > i else zero))
             for j in range(w)] for i in range(w)]
    return rows


def sample_point_on_V(params: DeformationParams, seed: int, eigenvalues) -> DeformationPoint:
    """Seeded relation-exact point on the closed subspace: M_1 = g D g^-1
    with D a diagonal of exact q-th roots of unity, M_2 = g C g^-1 with C
    block upper-triangular along equal-eigenvalue blocks (so it commutes
    with D exactly), all other matrices the identity.

    eigenvalues is a multiset of component-label indices of size n.
    """
    if not params.path_assumption:
        raise PreconditionError(
            f"sampler requires p > n (got p = {params.p}, n = {params.n})")
    labels = sorted((int(k) % max(params.q, 1) for k in eigenvalues), reverse=True)
    if len(labels) != params.n:
        raise PreconditionError(f"need exactly {params.n} eigenvalue labels")
    f = params.field
    rng = random.Random(seed)
    mus = enumerate_mu_q(f)
    diag = [mus[k] for k in labels]
    dmat = Mat.diag(f, diag)
    # group sizes of repeated labels, in order
    blocks = []
    start = 0
    for i in range(1, params.n + 1):
        if i == params.n or labels[i] != labels[start]:
            blocks.append(i - start)
            start = i
    crows = [[f.zero()] * params.n for _ in range(params.n)]
    off = 0
    for w in blocks:
        block = _commuting_block(rng, f, w)
        for i in range(w):
            for j in range(w):
                crows[off + i][off + j] = block[i][j]
        off += w
    cmat = Mat(f, crows)
    g = _random_gl_one_plus_m(rng, f, params.n)
    gi = mat_inv(g)
    m1 = g * dmat * gi
    m2 = g * cmat * gi
    mats = [m1, m2] + [Mat.identity(f, params.n)
                       for _ in range(params.tuple_length - 2)]
    return DeformationPoint(params, mats)


# --- eigenvalue detection -------------------------------------------------------


def detect_eigenvalues(m1: Mat) -> dict[int, int]:
    """Multiplicity of each q-th root of unity as an eigenvalue of M_1, by
    threshold deflation of the characteristic polynomial.  Keys are label
    indices; the multiplicities sum to n exactly when the spectrum lies in
    mu_q."""
    f = m1.field
    cur = charpoly(m1)
    out = {}
    for j, lam in enumerate(enumerate_mu_q(f)):
        mult = 0
        while len(cur) > 1:
            val = _eval_coeffs(cur, lam)
            if val.valuation() < f.tau:
                break
            cur = synthetic_divide(cur, lam)
            mult += 1
        if mult:
            out[j] = mult
    return out


def eigenvalues_by_rank_drop(m1: Mat) -> list[int]:
    """Label indices where M_1 - lambda drops rank at threshold."""
    from .linalg import rank_at_threshold
    f = m1.field
    out = []
    for j, lam in enumerate(enumerate_mu_q(f)):
        shifted = m1 - Mat.identity(f, m1.n).scale(lam)
        if rank_at_threshold(shifted) < m1.n:
            out.append(j)
    return out


def _eval_coeffs(coeffs, x):
    acc = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = acc * x + c
    return acc
