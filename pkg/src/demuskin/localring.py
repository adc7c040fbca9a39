"""Fixed-precision arithmetic in cyclotomic/unramified p-adic rings.

The working ring is O_F for F = Q_p(zeta_q) composed with the unramified
extension of inertia degree f0.  Internally an element of O_F is a polynomial
in the uniformizer pi = zeta_q - 1 (degree < e = phi(q)) whose coefficients
are polynomials in an unramified generator a (degree < f0) with integer
coefficients mod p^M.  With N = e*M this quotient is exactly O_F / pi^N, so
ring operations and unit inversion are exact; only division by a non-unit
costs precision, and that is handled by an explicit power-of-pi shift carried
next to the digits.  A LocalElement is

    x = pi^shift * digits,   digits a unit of O_F/pi^N or the zero vector,

which represents x exactly mod pi^(shift+N).  Negative shifts give elements
of F = O_F[1/pi].

The defining Eisenstein polynomial is the degree-phi(q) factor of
(1+pi)^q - 1, i.e. Phi_q(1+pi), so zeta_q = 1 + pi holds on the nose and the
q-th roots of unity are exactly representable.  For q = 1 the ring is just
the unramified extension and we formally take pi = p (Eisenstein x - p),
which keeps a single code path.
"""

from __future__ import annotations

import math


class LocalFieldError(Exception):
    """Base class for arithmetic errors in this package."""


class UnsupportedParametersError(LocalFieldError):
    """Field or operation parameters outside the supported range."""


class NotInvertibleError(LocalFieldError):
    """Inversion of an element that vanishes at working precision."""


class NotIntegralError(LocalFieldError):
    """An integral element was required but the shift is negative."""


class HenselBasinError(LocalFieldError):
    """Newton iteration did not converge: start was outside the basin."""


class SquareRootError(LocalFieldError):
    """The element has no square root in the field."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def _vp_int(c: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    v = 0
    while c % p == 0:
        c //= p
        v += 1
    return v


# --- residue field F_{p^f0}, elements encoded as ints 0 <= r < p^f0 ---------

def find_irreducible_poly(p: int, deg: int) -> tuple[int, ...]:
    """Non-leading coefficients (c_0,...,c_{deg-1}) of the lexicographically
    smallest monic irreducible of the given degree over F_p."""
    if deg == 1:
        return (0,)  # x itself; the generator reduces to 0, i.e. W = Z_p
    for code in range(p ** deg):
        coeffs = tuple((code // p ** i) % p for i in range(deg))
        if _poly_is_irreducible(coeffs, p):
            return coeffs
    raise UnsupportedParametersError(f"no irreducible polynomial of degree {deg} over F_{p}")


def _polmul_mod(a, b, mod_coeffs, p):
    # product of coefficient lists, reduced mod the monic poly with
    # non-leading coeffs mod_coeffs, over F_p
    deg = len(mod_coeffs)
    out = [0] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca:
            for j, cb in enumerate(b):
                out[i + j] = (out[i + j] + ca * cb) % p
    for k in range(len(out) - 1, deg - 1, -1):
        c = out[k]
        if c:
            for j in range(deg):
                out[k - deg + j] = (out[k - deg + j] - c * mod_coeffs[j]) % p
        out[k] = 0
    return out[:deg]


def _polpow_mod(a, n, mod_coeffs, p):
    deg = len(mod_coeffs)
    result = [1] + [0] * (deg - 1)
    base = list(a) + [0] * (deg - len(a))
    while n:
        if n & 1:
            result = _polmul_mod(result, base, mod_coeffs, p)
        base = _polmul_mod(base, base, mod_coeffs, p)
        n >>= 1
    return result


def _poly_is_irreducible(coeffs: tuple[int, ...], p: int) -> bool:
    """Irreducibility of a monic poly over F_p via x^(p^d) == x tests."""
    deg = len(coeffs)
    x = [0, 1]
    # x^(p^deg) must equal x mod f
    acc = x
    for _ in range(deg):
        acc = _polpow_mod(acc, p, coeffs, p)
    if acc != _polmul_mod(x, [1], coeffs, p):
        return False
    # and x^(p^(deg/l)) - x must be a unit gcd (no common factor) for prime l | deg
    for ell in {d for d in range(2, deg + 1) if deg % d == 0 and is_prime(d)}:
        acc = x
        for _ in range(deg // ell):
            acc = _polpow_mod(acc, p, coeffs, p)
        diff = [(a - b) % p for a, b in zip(acc, _polmul_mod(x, [1], coeffs, p))]
        if not any(diff):
            return False
    return True


def _cyclotomic_shifted(p: int, q: int) -> list[int]:
    """Integer coefficients of Phi_q(1+x), q = p^k >= 3, degree phi(q)."""
    qp = q // p
    # sum over i of (1+x)^(i*qp), computed with exact binomials
    e = q - qp
    out = [0] * (e + 1)
    for i in range(p):
        m = i * qp
        c = 1
        for j in range(m + 1):
            if j <= e:
                out[j] += c
            c = c * (m - j) // (j + 1)
    assert out[e] == 1 and out[0] == p
    return out


class FieldDescriptor:
    """Finite-precision model of O_F and F = Frac(O_F).

    Attributes: p, q, f0, e (ramification index), N (working precision in
    uniformizer digits, a multiple of e), tau (equality threshold, default
    ceil(3N/4)), unram and eis (non-leading coefficients of the defining
    polynomials).

    Internally every digit vector lives in O_F/pi^Nint with Nint = 2N: the
    upper band is a guard.  Stripping a valuation into the shift divides the
    digits by a power of pi, which commits to one of several lifts; the
    arbitrary part of that choice stays inside the guard band for the strip
    depths this package performs, so everything at or below N (and in
    particular at the threshold tau) is reliable.  All published semantics
    (valuation, equality, zero-ness, serialization) are at precision N.
    """

    __slots__ = ("p", "q", "f0", "e", "N", "Nint", "M", "pM", "tau", "unram",
                 "eis", "_pired", "_ured", "_u0inv", "_mu_cache", "_one",
                 "_zero", "_inv2", "_slot_bytes", "_stride", "_zbytes")

    def __init__(self, p, q, f0, N, tau=None):
        self.p = p
        self.q = q
        self.f0 = f0
        self.e = (q - q // p) if q >= 3 else 1
        m = -(-N // self.e)
        self.N = self.e * m
        self.Nint = 2 * self.N
        self.M = 2 * m
        self.pM = p ** self.M
        self.tau = tau if tau is not None else -(-3 * self.N // 4)
        self.unram = find_irreducible_poly(p, f0)
        if q >= 3:
            self.eis = tuple(_cyclotomic_shifted(p, q)[: self.e])
        else:
            self.eis = (-p,)
        self._precompute()
        self._mu_cache = None
        self._zero = LocalElement(self, 0, (0,) * (self.e * f0))
        self._one = self.from_int(1)
        self._inv2 = None

    def _precompute(self):
        e, f0 = self.e, self.f0
        # pi^(e+k) for k = 0..e-2 in the pi-basis; coefficients stay small
        # signed integers (polynomials in the Eisenstein coefficients), which
        # keeps the reduction multiplications small-by-big.
        rows = []
        cur = [-c for c in self.eis]
        rows.append(tuple(cur))
        for _ in range(e - 2):
            top = cur[e - 1]
            nxt = [top * rows[0][i] for i in range(e)]
            for i in range(1, e):
                nxt[i] += cur[i - 1]
            rows.append(tuple(nxt))
            cur = nxt
        self._pired = tuple(rows)
        urows = []
        if f0 > 1:
            cur = [-c for c in self.unram]
            urows.append(tuple(cur))
            for _ in range(f0 - 2):
                top = cur[f0 - 1]
                nxt = [top * urows[0][j] for j in range(f0)]
                for j in range(1, f0):
                    nxt[j] += cur[j - 1]
                urows.append(tuple(nxt))
                cur = nxt
        self._ured = tuple(urows)
        c0 = self.eis[0]
        u0 = c0 // self.p
        self._u0inv = pow(u0, -1, self.pM)
        # Kronecker packing layout: one byte-aligned slot per basis monomial,
        # wide enough to hold a full convolution coefficient without overlap.
        bits = (e * f0 * (self.pM - 1) ** 2).bit_length() + 1
        self._slot_bytes = (bits + 7) // 8
        self._stride = 2 * f0 - 1
        self._zbytes = ((2 * e - 2) * self._stride + 2 * f0 - 1) * self._slot_bytes + 8

    # -- equality / hashing on the defining data --------------------------

    def _key(self):
        return (self.p, self.q, self.f0, self.N, self.tau)

    def __eq__(self, other):
        return isinstance(other, FieldDescriptor) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return (f"FieldDescriptor(p={self.p}, q={self.q}, f0={self.f0}, "
                f"e={self.e}, N={self.N})")

    # -- digit-level arithmetic (flat tuples, index i*f0+j <-> pi^i a^j) --

    def _pack(self, x):
        bb = self._slot_bytes
        S = self._stride
        out = 0
        f0 = self.f0
        for i in range(self.e):
            base = i * f0
            rowoff = i * S * bb * 8
            for j in range(f0):
                c = x[base + j]
                if c:
                    out |= c << (rowoff + j * bb * 8)
        return out

    def _dig_mul_packed(self, xp, yp):
        """Digit product from two packed integers: one bigint multiply, byte
        extraction, then reduction by the small signed defining rows."""
        e, f0, pM = self.e, self.f0, self.pM
        if e == 1 and f0 == 1:
            return ((xp * yp) % pM,)
        bb = self._slot_bytes
        S = self._stride
        buf = (xp * yp).to_bytes(self._zbytes, "little")
        fb = int.from_bytes
        acc = [[fb(buf[(k * S + j) * bb:(k * S + j + 1) * bb], "little")
                for j in range(2 * f0 - 1)] for k in range(2 * e - 1)]
        if f0 > 1:
            ured = self._ured
            for row in acc:
                for k in range(2 * f0 - 2, f0 - 1, -1):
                    c = row[k]
                    if c:
                        urow = ured[k - f0]
                        for j in range(f0):
                            uc = urow[j]
                            if uc:
                                row[j] += c * uc
        pired = self._pired
        for k in range(2 * e - 2, e - 1, -1):
            row = acc[k]
            prow = pired[k - e]
            for j in range(f0):
                c = row[j]
                if c:
                    for i in range(e):
                        pc = prow[i]
                        if pc:
                            acc[i][j] += c * pc
        return tuple(acc[i][j] % pM for i in range(e) for j in range(f0))

    def _dig_mul(self, x, y):
        return self._dig_mul_packed(self._pack(x), self._pack(y))

    def _dig_add(self, x, y):
        pM = self.pM
        return tuple((a + b) % pM for a, b in zip(x, y))

    def _dig_neg(self, x):
        pM = self.pM
        return tuple((-a) % pM for a in x)

    def _dig_val(self, x):
        """Valuation in pi-digits of a digit vector; None if all zero."""
        e, f0, p = self.e, self.f0, self.p
        best = None
        for i in range(e):
            for j in range(f0):
                c = x[i * f0 + j]
                if c:
                    t = self.e * _vp_int(c, p) + i
                    if best is None or t < best:
                        best = t
                        if best == i:
                            break
            if best == i:
                break
        return best

    def _dig_mul_pi(self, x):
        e, f0, pM = self.e, self.f0, self.pM
        out = [0] * (e * f0)
        for i in range(1, e):
            for j in range(f0):
                out[i * f0 + j] = x[(i - 1) * f0 + j]
        prow = self._pired[0]
        for j in range(f0):
            c = x[(e - 1) * f0 + j]
            if c:
                for i in range(e):
                    out[i * f0 + j] = (out[i * f0 + j] + c * prow[i]) % pM
        return tuple(v % pM for v in out)

    def _dig_div_pi(self, x):
        """Exact solve of pi*z = x when val(x) >= 1; canonical top digit."""
        e, f0, pM, p = self.e, self.f0, self.pM, self.p
        z = [0] * (e * f0)
        ztop = []
        for j in range(f0):
            w0 = x[j]
            if w0 % p != 0:
                raise NotIntegralError("digit vector not divisible by the uniformizer")
            t = (w0 // p) % pM
            ztop.append((-t * self._u0inv) % pM)
        for j in range(f0):
            z[(e - 1) * f0 + j] = ztop[j]
        for i in range(1, e):
            ci = self.eis[i] % pM
            for j in range(f0):
                z[(i - 1) * f0 + j] = (x[i * f0 + j] + ztop[j] * ci) % pM
        return tuple(z)

    def _dig_strip(self, x, v):
        """Divide a digit vector of valuation >= v by pi^v, exactly.

        Repeated single-pi solves: dividing the integer coefficients by p
        would be off by a unit, since pi^e is p times a ring unit, not p
        times a scalar.
        """
        for _ in range(v):
            x = self._dig_div_pi(x)
        return x

    def _k_mul(self, x, y):
        p, f0 = self.p, self.f0
        if f0 == 1:
            return ((x[0] * y[0]) % p,)
        return tuple(_polmul_mod(list(x), list(y), list(self.unram), p))

    def _k_inv(self, x):
        p, f0 = self.p, self.f0
        if f0 == 1:
            return (pow(x[0], p - 2, p),)
        return tuple(_polpow_mod(list(x), p ** f0 - 2, list(self.unram), p))

    def _dig_inv(self, u):
        """Inverse of a unit digit vector, exact in O_F/pi^N."""
        e, f0, p, pM = self.e, self.f0, self.p, self.pM
        res = tuple(u[j] % p for j in range(f0))
        rinv = self._k_inv(res)
        z = [0] * (e * f0)
        for j in range(f0):
            z[j] = rinv[j]
        z = tuple(z)
        steps = max(1, math.ceil(math.log2(e * self.M))) + 1
        two = tuple((2 if i == 0 else 0) for i in range(e * f0))
        for _ in range(steps):
            t = self._dig_mul(u, z)
            t = tuple((a - b) % pM for a, b in zip(two, t))
            z = self._dig_mul(z, t)
        if self._dig_mul(u, z) != self._one_digits():
            raise NotInvertibleError("inversion failed at working precision")
        return z

    def _one_digits(self):
        d = [0] * (self.e * self.f0)
        d[0] = 1
        return tuple(d)

    # -- element constructors ---------------------------------------------

    def element(self, shift, digits):
        """Normalized element pi^shift * digits: the digit valuation is
        stripped into the shift, so nonzero digit vectors are units and the
        shift is the exact valuation.  (The strip's arbitrary lift choice
        lands in the guard band.)  A vanished digit vector at negative shift
        keeps the shift, recording that the value is only known to vanish
        mod pi^(shift+Nint)."""
        v = self._dig_val(digits)
        if v is None:
            return self._zero if shift >= 0 else LocalElement(self, shift, digits)
        if v:
            digits = self._dig_strip(digits, v)
            shift += v
        return LocalElement(self, shift, digits)

    def zero(self):
        return self._zero

    def one(self):
        return self._one

    def from_int(self, n: int):
        d = [0] * (self.e * self.f0)
        d[0] = n % self.pM
        return self.element(0, tuple(d))

    def uniformizer(self):
        return LocalElement(self, 1, self._one_digits())

    def zeta(self):
        """The fixed primitive q-th root of unity, 1 + pi exactly."""
        if self.q == 1:
            return self.one()
        d = [0] * (self.e * self.f0)
        d[0] = 1
        d[self.f0] = 1
        return LocalElement(self, 0, tuple(d))

    def unramified_generator(self):
        if self.f0 == 1:
            return self.zero()
        d = [0] * (self.e * self.f0)
        d[1] = 1
        return self.element(0, tuple(d))

    def from_digit_list(self, shift, digit_strings):
        digits = tuple(int(s) % self.pM for s in digit_strings)
        if len(digits) != self.e * self.f0:
            raise ValueError(f"expected {self.e * self.f0} digits, got {len(digits)}")
        return self.element(shift, digits)

    def to_json(self):
        return {"p": self.p, "q": self.q, "f0": self.f0, "e": self.e,
                "N": self.N, "tau": self.tau,
                "unram": list(self.unram), "eis": list(self.eis)}


class LocalElement:
    """An element of F at working precision: pi^shift * digits.

    Normalized: the digit vector is a unit of the internal quotient (or the
    zero vector), so the shift is the exact valuation.  Zero-ness, equality
    and the reported valuation are all at the published precision N; digits
    in the guard band above N are carried for arithmetic but are never
    meaningful on their own.
    """

    __slots__ = ("field", "shift", "digits", "_pk", "_val")

    def __init__(self, field, shift, digits):
        self.field = field
        self.shift = shift
        self.digits = digits
        self._pk = None
        self._val = False

    def _packed(self):
        if self._pk is None:
            self._pk = self.field._pack(self.digits)
        return self._pk

    def _raw_valuation(self):
        """shift + digit valuation, possibly beyond N; math.inf for a
        vanished digit vector."""
        if self._val is False:
            v = self.field._dig_val(self.digits)
            self._val = math.inf if v is None else self.shift + v
        return self._val

    def is_zero(self) -> bool:
        """Indistinguishable from zero at the published precision N."""
        return self._raw_valuation() >= self.field.N

    def valuation(self):
        """Exact valuation in uniformizer digits; math.inf when the element
        is indistinguishable from zero at precision N."""
        v = self._raw_valuation()
        return v if v < self.field.N else math.inf

    def is_unit(self) -> bool:
        return self._raw_valuation() == 0

    def __add__(self, other):
        other = _coerce(self.field, other)
        if other is NotImplemented:
            return NotImplemented
        f = self.field
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        s = min(self.shift, other.shift)
        dx = self.digits
        dy = other.digits
        kx = self.shift - s
        ky = other.shift - s
        if kx:
            dx = _shift_up(f, dx, kx)
        if ky:
            dy = _shift_up(f, dy, ky)
        return f.element(s, f._dig_add(dx, dy))

    __radd__ = __add__

    def __neg__(self):
        if self.is_zero():
            return self
        return LocalElement(self.field, self.shift, self.field._dig_neg(self.digits))

    def __sub__(self, other):
        other = _coerce(self.field, other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = _coerce(self.field, other)
        if other is NotImplemented:
            return NotImplemented
        if not any(self.digits) or not any(other.digits):
            zero = (0,) * (self.field.e * self.field.f0)
            return self.field.element(self.shift + other.shift, zero)
        return LocalElement(self.field, self.shift + other.shift,
                            self.field._dig_mul_packed(self._packed(), other._packed()))

    __rmul__ = __mul__

    def inv(self):
        if self.is_zero():
            raise NotInvertibleError("not invertible at precision")
        f = self.field
        return LocalElement(f, -self.shift, f._dig_inv(self.digits))

    def __truediv__(self, other):
        other = _coerce(self.field, other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inv()

    def __pow__(self, n: int):
        if n < 0:
            return self.inv() ** (-n)
        result = self.field._one
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, LocalElement):
            other = _coerce(self.field, other)
            if other is NotImplemented:
                return NotImplemented
        if self.field != other.field:
            return False
        return (self - other).is_zero()

    __hash__ = None  # representations of one value can differ in shift

    def eq_at(self, other, threshold=None) -> bool:
        """Equality at valuation threshold (default: the field's tau)."""
        other = _coerce(self.field, other)
        t = threshold if threshold is not None else self.field.tau
        return (self - other).valuation() >= t

    def truncate(self, depth: int):
        """Forget all digits from pi-valuation `depth` upward."""
        f = self.field
        if self.is_zero() or self.shift >= depth:
            return f._zero
        return f.element(self.shift, _mask_digits(f, self.digits, depth - self.shift))

    def __repr__(self):
        if self.is_zero():
            return "LocalElement(0 at precision)"
        return f"LocalElement(shift={self.shift}, digits={self.digits})"

    def to_json(self):
        """Digits are published at precision N only: the guard band is an
        internal artifact and never leaves the process."""
        if self.is_zero():
            return {"shift": 0, "digits": ["0"] * (self.field.e * self.field.f0)}
        masked = _mask_digits(self.field, self.digits, self.field.N)
        return {"shift": self.shift, "digits": [str(c) for c in masked]}

    @staticmethod
    def from_json(field, obj):
        return field.from_digit_list(int(obj["shift"]), obj["digits"])


def _coerce(field, x):
    if isinstance(x, LocalElement):
        if x.field != field:
            raise ValueError("elements from different fields")
        return x
    if isinstance(x, int):
        return field.from_int(x)
    return NotImplemented


def _shift_up(field, digits, k):
    """digits * pi^k inside O_F/pi^N."""
    if k >= field.N:
        return (0,) * (field.e * field.f0)
    va, vb = divmod(k, field.e)
    if va:
        if field.e == 1:
            digits = tuple((c * field.p ** va) % field.pM for c in digits)
            va = 0
        else:
            vb += va * field.e
            va = 0
    for _ in range(vb):
        digits = field._dig_mul_pi(digits)
    return digits


# --- public operations -------------------------------------------------------


def make_field(p: int, q: int, f0: int = 1, N: int = 32, tau=None) -> FieldDescriptor:
    """Build the working ring O_F for F = Q_{p^f0}(zeta_q) at precision N.

    q must be 1 or a power of p that is at least 3 (q = 2 is rejected).
    N is counted in uniformizer digits and is rounded up to a multiple of
    the ramification index; it must be at least 4*max(1, phi(q)).
    """
    if not is_prime(p):
        raise UnsupportedParametersError(f"p = {p} is not prime")
    if q != 1:
        if q == 2:
            raise UnsupportedParametersError("q = 2 is not supported")
        k, m = 0, q
        while m % p == 0:
            m //= p
            k += 1
        if m != 1 or k == 0 or q < 3:
            raise UnsupportedParametersError(f"q = {q} is not a power of p = {p} with q >= 3")
    if f0 < 1:
        raise UnsupportedParametersError("f0 must be at least 1")
    e = (q - q // p) if q >= 3 else 1
    if N < 4 * max(1, e):
        raise UnsupportedParametersError(f"precision N = {N} below the minimum {4 * max(1, e)}")
    return FieldDescriptor(p, q, f0, N, tau=tau)


def arith(op: str, x: LocalElement, y: LocalElement | None = None) -> LocalElement:
    """Dispatch form of the ring operations: add | mul | neg | inv."""
    if op == "add":
        return x + y
    if op == "mul":
        return x * y
    if op == "neg":
        return -x
    if op == "inv":
        return x.inv()
    raise ValueError(f"unknown operation {op!r}")


def hensel_lift_unity(x0: LocalElement, q: int) -> LocalElement:
    """Refine x0 to an exact solution of x^q = 1 at working precision.

    q must be 1 or a power of the residue characteristic.  Newton iteration
    x <- x - (x^q - 1)/(q x^(q-1)); convergence requires the start to agree
    with a root past the wild ramification of q.
    """
    f = x0.field
    if q != 1:
        m = q
        while m % f.p == 0:
            m //= f.p
        if m != 1:
            raise UnsupportedParametersError(f"q = {q} is not a power of p = {f.p}")
    if x0.valuation() != 0:
        raise HenselBasinError("start value is not a unit")
    if q == 1:
        return f.one()
    qe = f.from_int(q)
    cap = math.ceil(math.log2(f.N)) + 3
    x = x0
    for _ in range(cap):
        r = x ** q - 1
        if r.is_zero():
            return _snap_to_mu(x)
        x = x - r / (qe * x ** (q - 1))
        if x.valuation() != 0:
            break
    raise HenselBasinError("outside the Newton basin for x^q = 1")


def _snap_to_mu(x: LocalElement) -> LocalElement:
    """Replace a Newton limit of x^q = 1 by the exact stored root it
    approximates.  The limit is pinned mod pi^(N - v(q)) only, so the match
    is made at valuation N/2; if nothing matches, x is returned as is."""
    f = x.field
    half = f.N // 2
    for r in enumerate_mu_q(f):
        if x == r or (x - r).valuation() >= half:
            return r
    return x


def enumerate_mu_q(field: FieldDescriptor) -> tuple[LocalElement, ...]:
    """The q-th roots of unity as exact elements, ordered as powers of the
    fixed primitive root zeta = 1 + pi."""
    if field._mu_cache is None:
        z = field.zeta()
        out = [field.one()]
        cur = field.one()
        for _ in range(field.q - 1):
            cur = cur * z
            out.append(cur)
        field._mu_cache = tuple(out)
    return field._mu_cache


def mu_q_index(x: LocalElement) -> int:
    """Index j with x = zeta^j among the q-th roots of unity.

    Newton limits in O_F/pi^N pin a root of x^q = 1 only to N - v(q) digits,
    so after the exact fast path the match is made at valuation >= N/2.
    Distinct q-th roots differ at valuation <= phi(q) <= N/4, which keeps
    the threshold unambiguous.
    """
    f = x.field
    roots = enumerate_mu_q(f)
    for j, r in enumerate(roots):
        if x == r:
            return j
    half = f.N // 2
    for j, r in enumerate(roots):
        if (x - r).valuation() >= half:
            return j
    raise LocalFieldError("element does not match a q-th root of unity at precision")


def reduce_mod_m(x: LocalElement) -> int:
    """Image in the residue field F_{p^f0}, encoded base p as an integer."""
    f = x.field
    v = x.valuation()
    if v == math.inf:
        return 0
    if v < 0:
        raise NotIntegralError("element has a pole")
    if v > 0:
        return 0
    digits = x.digits if x.shift == 0 else f._dig_strip(x.digits, -x.shift)
    return sum((digits[j] % f.p) * f.p ** j for j in range(f.f0))


def zeta_tame(field: FieldDescriptor, m: int) -> LocalElement:
    """An exact root of unity of order m prime to p, via Newton from the
    residue field.  Requires m | p^f0 - 1."""
    p, f0 = field.p, field.f0
    if m < 1 or m % p == 0 or (p ** f0 - 1) % m != 0:
        raise UnsupportedParametersError(
            f"the residue field F_{p}^{f0} has no element of order {m}")
    if m == 1:
        return field.one()
    order = p ** f0 - 1
    target = None
    for code in range(2, p ** f0):
        cand = tuple((code // p ** i) % p for i in range(f0))
        r = _k_pow_field(field, cand, order // m)
        if _k_order(field, r) == m:
            target = r
            break
    if target is None:
        raise UnsupportedParametersError("no generator found in residue field")
    d = [0] * (field.e * f0)
    for j in range(f0):
        d[j] = target[j]
    x = field.element(0, tuple(d))
    me = field.from_int(m)
    cap = math.ceil(math.log2(field.N)) + 3
    for _ in range(cap):
        r = x ** m - 1
        if r.is_zero():
            return x
        x = x - r / (me * x ** (m - 1))
    raise HenselBasinError("tame root lift did not converge")


def _k_pow_field(field, x, n):
    out = tuple((1 if j == 0 else 0) for j in range(field.f0))
    base = x
    while n:
        if n & 1:
            out = field._k_mul(out, base)
        base = field._k_mul(base, base)
        n >>= 1
    return out


def _k_order(field, x):
    if not any(x):
        return 0
    one = tuple((1 if j == 0 else 0) for j in range(field.f0))
    cur = x
    for k in range(1, field.p ** field.f0):
        if cur == one:
            return k
        cur = field._k_mul(cur, x)
    return 0


def hensel_sqrt(x: LocalElement) -> LocalElement:
    """Square root of an element whose valuation is even and whose unit part
    is a square in the residue field (p odd)."""
    f = x.field
    if f.p == 2:
        raise UnsupportedParametersError("square roots need odd residue characteristic")
    if x.is_zero():
        return x
    v = x.valuation()
    if v % 2:
        raise SquareRootError("odd valuation has no square root in F")
    udig = x.digits if x.shift == v else f._dig_strip(x.digits, v - x.shift)
    res = tuple(udig[j] % f.p for j in range(f.f0))
    root = None
    for code in range(1, f.p ** f.f0):
        cand = tuple((code // f.p ** i) % f.p for i in range(f.f0))
        if f._k_mul(cand, cand) == res:
            root = cand
            break
    if root is None:
        raise SquareRootError("unit part is not a square in the residue field")
    d = [0] * (f.e * f.f0)
    for j in range(f.f0):
        d[j] = root[j]
    u = LocalElement(f, 0, udig)
    z = f.element(0, tuple(d))
    if f._inv2 is None:
        f._inv2 = f.from_int(2).inv()
    inv2 = f._inv2
    cap = math.ceil(math.log2(f.N)) + 4
    for _ in range(cap):
        r = z * z - u
        if r.is_zero():
            break
        z = (z + u / z) * inv2
    if not (z * z - u).is_zero():
        raise SquareRootError("square root iteration did not converge")
    return f.uniformizer() ** (v // 2) * z
