"""Exact truncated arithmetic: cyclotomic numbers, Puiseux series in q, p/q bi-series.

Coefficients are plain ``int``/``Fraction`` whenever they are rational and
:class:`CycNumber` otherwise.  Every series carries the window on which it is
known exactly; nothing outside that window is ever reported.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Union

INF = math.inf

Rational = Union[int, Fraction]


class TruncationError(ValueError):
    """A coefficient was requested outside the window on which it is known."""


# ---------------------------------------------------------------------------
# cyclotomic numbers


@lru_cache(maxsize=None)
def cyclotomic_poly(n: int) -> tuple[int, ...]:
    """Integer coefficients (low degree first) of the n-th cyclotomic polynomial."""
    num = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            num = _poly_exact_div(num, cyclotomic_poly(d))
    return tuple(num)


def _poly_exact_div(num: list[int], den: tuple[int, ...]) -> list[int]:
    num = list(num)
    dd = len(den) - 1
    out = [0] * (len(num) - dd)
    for i in range(len(num) - 1, dd - 1, -1):
        c = num[i]  # den is monic
        out[i - dd] = c
        if c:
            for k, dk in enumerate(den):
                num[i - dd + k] -= c * dk
    return out


@lru_cache(maxsize=None)
def totient(n: int) -> int:
    return len(cyclotomic_poly(n)) - 1


@lru_cache(maxsize=None)
def mobius(n: int) -> int:
    if n == 1:
        return 1
    res, m, p = 1, n, 2
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                return 0
            res = -res
        p += 1
    if m > 1:
        res = -res
    return res


@lru_cache(maxsize=None)
def _power_table(L: int) -> tuple[tuple[int, ...], ...]:
    """Canonical coordinates of x^k modulo Phi_L for k = 0..L-1."""
    phi = cyclotomic_poly(L)
    deg = len(phi) - 1
    rows = []
    cur = [1] + [0] * (deg - 1) if deg else []
    for _ in range(L):
        rows.append(tuple(cur))
        # multiply by x and reduce
        top = cur[-1] if deg else 0
        nxt = [0] + cur[:-1]
        if top:
            nxt = [a - top * b for a, b in zip(nxt, phi)]
        cur = nxt
    return tuple(rows)


@lru_cache(maxsize=None)
def _trace_weights(L: int) -> tuple[Fraction, ...]:
    # normalized trace of x^i is mu(L/g)/phi(L/g), g = gcd(i, L)
    out = []
    for i in range(totient(L)):
        m = L // math.gcd(i, L)
        out.append(Fraction(mobius(m), totient(m)))
    return tuple(out)


class CycNumber:
    """Element of Q(zeta_L) stored as integer coordinates over a common denominator.

    ``coords[i]`` is the coefficient of zeta_L^i, reduced modulo Phi_L.  Orders
    congruent to 2 mod 4 are never used; zeta_{2m} for odd m is rewritten in
    terms of zeta_m.  Instances are produced through :func:`root_of_unity` and the
    arithmetic operators, which return plain rationals whenever possible.
    """

    __slots__ = ("order", "coords", "den")

    def __init__(self, order: int, coords: Iterable[int], den: int = 1):
        coords = tuple(coords)
        if len(coords) != totient(order):
            raise ValueError("coordinate vector has the wrong length")
        g = math.gcd(den, *coords)
        if den < 0:
            g = -g
        if g not in (0, 1):
            coords = tuple(c // g for c in coords)
            den //= g
        self.order = order
        self.coords = coords
        self.den = den

    # -- construction helpers
    @staticmethod
    def _from_poly(L: int, poly: Mapping[int, int] | list[int], den: int) -> "Number":
        table = _power_table(L)
        deg = totient(L)
        out = [0] * deg
        items = poly.items() if isinstance(poly, Mapping) else enumerate(poly)
        for k, c in items:
            if c:
                row = table[k % L]
                for i in range(deg):
                    if row[i]:
                        out[i] += c * row[i]
        return _wrap(L, out, den)

    def embed(self, M: int) -> "CycNumber":
        """Same element written in Q(zeta_M); requires order | M."""
        if M == self.order:
            return self
        step = M // self.order
        table = _power_table(M)
        out = [0] * totient(M)
        for i, c in enumerate(self.coords):
            if c:
                row = table[(i * step) % M]
                for k in range(len(out)):
                    if row[k]:
                        out[k] += c * row[k]
        return CycNumber(M, out, self.den)

    def is_rational(self) -> bool:
        return not any(self.coords[1:])

    def conjugate(self) -> "Number":
        return self.galois(-1)

    def galois(self, a: int) -> "Number":
        """Apply zeta_L -> zeta_L^a (a coprime to L)."""
        L = self.order
        if math.gcd(a, L) != 1:
            raise ValueError("Galois exponent must be a unit modulo the order")
        poly = {}
        for i, c in enumerate(self.coords):
            if c:
                k = (i * a) % L
                poly[k] = poly.get(k, 0) + c
        return CycNumber._from_poly(L, poly, self.den)

    def trace(self) -> Fraction:
        """Normalized trace to Q (independent of the ambient cyclotomic field)."""
        w = _trace_weights(self.order)
        return sum((c * wi for c, wi in zip(self.coords, w) if c), Fraction(0)) / self.den

    def __complex__(self) -> complex:
        L = self.order
        z = sum(c * complex(math.cos(2 * math.pi * i / L), math.sin(2 * math.pi * i / L))
                for i, c in enumerate(self.coords) if c)
        return z / self.den

    # -- arithmetic
    def _coerce(self, other):
        if isinstance(other, CycNumber):
            return other
        if isinstance(other, (int, Fraction)):
            other = Fraction(other)
            return CycNumber(1, (other.numerator,), other.denominator)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        L = _lcm(self.order, o.order)
        a, b = self.embed(L), o.embed(L)
        d = a.den * b.den // math.gcd(a.den, b.den)
        fa, fb = d // a.den, d // b.den
        return _wrap(L, [x * fa + y * fb for x, y in zip(a.coords, b.coords)], d)

    __radd__ = __add__

    def __neg__(self):
        return CycNumber(self.order, (-c for c in self.coords), self.den)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            return _wrap(self.order, [c * other for c in self.coords], self.den)
        if isinstance(other, Fraction):
            return _wrap(self.order, [c * other.numerator for c in self.coords],
                         self.den * other.denominator)
        if not isinstance(other, CycNumber):
            return NotImplemented
        L = _lcm(self.order, other.order)
        a, b = self.embed(L), other.embed(L)
        prod: dict[int, int] = {}
        for i, x in enumerate(a.coords):
            if x:
                for j, y in enumerate(b.coords):
                    if y:
                        prod[i + j] = prod.get(i + j, 0) + x * y
        return CycNumber._from_poly(L, prod, a.den * b.den)

    __rmul__ = __mul__

    def inverse(self) -> "Number":
        # product of the nontrivial Galois conjugates is a rational multiple of 1/self
        L = self.order
        acc: Number = 1
        for a in range(2, L):
            if math.gcd(a, L) == 1:
                acc = acc * self.galois(a)
        norm = acc * self
        if isinstance(norm, CycNumber):
            raise ArithmeticError("norm computation did not reduce to a rational")
        if norm == 0:
            raise ZeroDivisionError("division by zero cyclotomic number")
        return acc * (1 / Fraction(norm))

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return self * (1 / Fraction(other))
        if isinstance(other, CycNumber):
            return self * other.inverse()
        return NotImplemented

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result: Number = 1
        base: Number = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        L = _lcm(self.order, o.order)
        a, b = self.embed(L), o.embed(L)
        return a.den == b.den and a.coords == b.coords

    def __hash__(self):
        # the normalized trace does not depend on the ambient field
        return hash(self.trace())

    def __bool__(self):
        return any(self.coords)

    def __repr__(self):
        return f"CycNumber({literal(self)})"


Number = Union[int, Fraction, CycNumber]


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def _wrap(L: int, coords: list[int], den: int) -> Number:
    """Return a rational when the coordinates say so, a CycNumber otherwise."""
    if not any(coords[1:]):
        c0 = coords[0] if coords else 0
        return Fraction(c0, den) if den != 1 and c0 % den else c0 // den
    return CycNumber(L, coords, den)


def normalize(x: Number) -> Number:
    """Collapse integral Fractions to ints and rational CycNumbers to rationals."""
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else x
    if isinstance(x, CycNumber) and x.is_rational():
        return normalize(Fraction(x.coords[0], x.den))
    return x


def cyc_root_of_unity(k: int, L: int) -> Number:
    """Canonical representative of zeta_L^k = e(k/L)."""
    if L < 1:
        raise ValueError("order must be positive")
    return root_of_unity(Fraction(k, L))


@lru_cache(maxsize=4096)
def root_of_unity(r: Fraction) -> Number:
    """e(r) for rational r."""
    r = Fraction(r) % 1
    k, L = r.numerator, r.denominator
    if L == 1:
        return 1
    if L == 2:
        return -1
    if L % 4 == 2:
        return _root_for_twice_odd(k, L // 2)
    return CycNumber._from_poly(L, {k: 1}, 1)


def _root_for_twice_odd(k: int, m: int) -> Number:
    # e(k/(2m)) with m odd: e(k/(2m)) = e(k/2) * e(k*(m+1)/2 / m)
    sign = -1 if k % 2 else 1
    e = (k * (m + 1) // 2) % m
    return sign * CycNumber._from_poly(m, {e: 1}, 1)


def is_zero(x: Number) -> bool:
    return not x


def rational_part(x: Number) -> Fraction:
    """The value as a Fraction; raises if it is irrational."""
    x = normalize(x)
    if isinstance(x, CycNumber):
        raise ValueError(f"coefficient {literal(x)} is not rational")
    return Fraction(x)


def literal(x: Number) -> str:
    """Exact text form: ``a/b`` for rationals, ``z(k,L)`` monomial sums otherwise."""
    x = normalize(x)
    if not isinstance(x, CycNumber):
        return str(x)
    parts = []
    for i, c in enumerate(x.coords):
        if not c:
            continue
        coef = Fraction(c, x.den)
        if i == 0:
            parts.append(str(coef))
            continue
        mono = f"z({i},{x.order})"
        if coef == 1:
            parts.append(mono)
        elif coef == -1:
            parts.append("-" + mono)
        else:
            parts.append(f"{coef}*{mono}")
    out = parts[0]
    for p in parts[1:]:
        out += p if p.startswith("-") else "+" + p
    return out


def conj(x: Number) -> Number:
    return x.conjugate() if isinstance(x, CycNumber) else x


def _div_int(x: Number, n: int) -> Number:
    if isinstance(x, int):
        return x // n if x % n == 0 else Fraction(x, n)
    if isinstance(x, Fraction):
        return normalize(x / n)
    return x / n


def _as_fraction(x) -> Fraction | float:
    if x == INF:
        return INF
    return Fraction(x)


# ---------------------------------------------------------------------------
# Puiseux series


class PuiseuxSeries:
    """Truncated series sum c_e q^e with e in (1/D)Z, exact for e < hi.

    ``terms`` maps the scaled integer exponent D*e to a nonzero coefficient.
    ``hi`` is a Fraction or ``INF`` for series known exactly (polynomials).
    """

    __slots__ = ("D", "terms", "hi", "_sorted")

    def __init__(self, D: int, terms: Mapping[int, Number], hi=INF):
        hi = _as_fraction(hi)
        if hi != INF:
            lim = hi * D
            terms = {k: normalize(c) for k, c in terms.items() if c and k < lim}
        else:
            terms = {k: normalize(c) for k, c in terms.items() if c}
        g = math.gcd(D, *terms) if terms else D
        if g > 1:
            terms = {k // g: c for k, c in terms.items()}
            D //= g
        self.D = D
        self.terms = terms
        self.hi = hi
        self._sorted = None

    # -- constructors
    @classmethod
    def from_dict(cls, coeffs: Mapping, hi=INF) -> "PuiseuxSeries":
        exps = [Fraction(e) for e in coeffs]
        D = 1
        for e in exps:
            D = _lcm(D, e.denominator)
        return cls(D, {int(Fraction(e) * D): c for e, c in coeffs.items()}, hi)

    @classmethod
    def constant(cls, c: Number = 1, hi=INF) -> "PuiseuxSeries":
        return cls(1, {0: c}, hi)

    @classmethod
    def monomial(cls, e, c: Number = 1, hi=INF) -> "PuiseuxSeries":
        e = Fraction(e)
        return cls(e.denominator, {e.numerator: c}, hi)

    @classmethod
    def zero(cls, hi=INF) -> "PuiseuxSeries":
        return cls(1, {}, hi)

    # -- inspection
    def items(self) -> list[tuple[Fraction, Number]]:
        return [(Fraction(k, self.D), c) for k, c in self.sorted_terms()]

    def sorted_terms(self) -> list[tuple[int, Number]]:
        if self._sorted is None:
            self._sorted = sorted(self.terms.items())
        return self._sorted

    def valuation(self) -> Fraction | None:
        if not self.terms:
            return None
        return Fraction(min(self.terms), self.D)

    @property
    def lo(self):
        """Lower bound of the support (the window's left end)."""
        v = self.valuation()
        return self.hi if v is None else v

    def is_exact(self) -> bool:
        return self.hi == INF

    def coeff(self, e) -> Number:
        e = Fraction(e)
        if e >= self.hi:
            raise TruncationError(f"exponent {e} is outside the window (< {self.hi})")
        k = e * self.D
        if k.denominator != 1:
            return 0
        return self.terms.get(int(k), 0)

    def leading(self) -> tuple[Fraction, Number]:
        if not self.terms:
            raise ValueError("series is zero at this truncation")
        k, c = self.sorted_terms()[0]
        return Fraction(k, self.D), c

    def rescaled(self, D: int) -> dict[int, Number]:
        f = D // self.D
        return {k * f: c for k, c in self.terms.items()} if f != 1 else dict(self.terms)

    def truncate(self, hi) -> "PuiseuxSeries":
        hi = _as_fraction(hi)
        if hi >= self.hi:
            return self
        return PuiseuxSeries(self.D, self.terms, hi)

    def with_hi(self, hi) -> "PuiseuxSeries":
        """Declare a (smaller) window; used when a caller knows less than stored."""
        return self.truncate(hi)

    def is_rational(self) -> bool:
        return not any(isinstance(c, CycNumber) for c in self.terms.values())

    def map_coeffs(self, fn) -> "PuiseuxSeries":
        return PuiseuxSeries(self.D, {k: fn(c) for k, c in self.terms.items()}, self.hi)

    def conjugate(self) -> "PuiseuxSeries":
        return self.map_coeffs(conj)

    # -- arithmetic
    def __add__(self, other):
        if isinstance(other, PuiseuxSeries):
            D = _lcm(self.D, other.D)
            out = self.rescaled(D)
            for k, c in other.rescaled(D).items():
                out[k] = out.get(k, 0) + c
            return PuiseuxSeries(D, out, min(self.hi, other.hi))
        if isinstance(other, (int, Fraction, CycNumber)):
            if 0 >= self.hi and other:
                raise TruncationError("constant term lies outside the window")
            out = dict(self.terms)
            out[0] = out.get(0, 0) + other
            return PuiseuxSeries(self.D, out, self.hi)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return PuiseuxSeries(self.D, {k: -c for k, c in self.terms.items()}, self.hi)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, PuiseuxSeries):
            return ps_mul(self, other)
        if isinstance(other, (int, Fraction, CycNumber)):
            if not other:
                return PuiseuxSeries.zero(self.hi)
            return PuiseuxSeries(self.D, {k: c * other for k, c in self.terms.items()}, self.hi)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, PuiseuxSeries):
            return ps_mul(self, ps_inv(other))
        if isinstance(other, (int, Fraction)):
            return self * (1 / Fraction(other))
        if isinstance(other, CycNumber):
            return self * other.inverse()
        return NotImplemented

    def __pow__(self, r):
        return ps_pow_rational(self, r)

    def shift(self, e) -> "PuiseuxSeries":
        """Multiply by q^e."""
        e = Fraction(e)
        D = _lcm(self.D, e.denominator)
        s = int(e * D)
        return PuiseuxSeries(D, {k + s: c for k, c in self.rescaled(D).items()},
                             self.hi + e if self.hi != INF else INF)

    # -- comparison
    def first_difference(self, other: "PuiseuxSeries", hi=None):
        """First (exponent, self - other) on the common window, or None."""
        top = min(self.hi, other.hi)
        if hi is not None:
            top = min(top, _as_fraction(hi))
        diff = (self.truncate(top) - other.truncate(top))
        if diff.terms:
            return diff.leading()
        return None

    def agrees_with(self, other: "PuiseuxSeries", hi=None) -> bool:
        return self.first_difference(other, hi) is None

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, CycNumber)):
            other = PuiseuxSeries.constant(other, self.hi)
        if not isinstance(other, PuiseuxSeries):
            return NotImplemented
        return self.hi == other.hi and self.items() == other.items()

    __hash__ = None

    def __repr__(self):
        body = " + ".join(f"({literal(c)})*q^{e}" for e, c in self.items()[:8])
        more = " + ..." if len(self.terms) > 8 else ""
        return f"PuiseuxSeries({body or '0'}{more}; hi={self.hi})"


def ps_mul(a: PuiseuxSeries, b: PuiseuxSeries, hi=None) -> PuiseuxSeries:
    """Product, exact on [a.lo+b.lo, min(a.lo+b.hi, b.lo+a.hi)) (optionally capped)."""
    top = min(a.lo + b.hi, b.lo + a.hi)
    if hi is not None:
        top = min(top, _as_fraction(hi))
    if top != INF:
        top = Fraction(top)
    D = _lcm(a.D, b.D)
    if not a.terms or not b.terms:
        return PuiseuxSeries.zero(top)
    if len(a.terms) > len(b.terms):
        a, b = b, a
    fa, fb = D // a.D, D // b.D
    A = [(k * fa, c) for k, c in a.sorted_terms()]
    B = [(k * fb, c) for k, c in b.sorted_terms()]
    out: dict[int, Number] = {}
    get = out.get
    if top == INF:
        for ka, ca in A:
            for kb, cb in B:
                k = ka + kb
                out[k] = get(k, 0) + ca * cb
    else:
        kmax = math.ceil(top * D) - 1
        for ka, ca in A:
            lim = kmax - ka
            for kb, cb in B:
                if kb > lim:
                    break
                k = ka + kb
                out[k] = get(k, 0) + ca * cb
    return PuiseuxSeries(D, out, top)


def ps_sum(series: Iterable[PuiseuxSeries]) -> PuiseuxSeries:
    series = list(series)
    if not series:
        return PuiseuxSeries.zero()
    D = 1
    hi = INF
    for s in series:
        D = _lcm(D, s.D)
        hi = min(hi, s.hi)
    out: dict[int, Number] = {}
    for s in series:
        f = D // s.D
        for k, c in s.terms.items():
            out[k * f] = out.get(k * f, 0) + c
    return PuiseuxSeries(D, out, hi)


def _unit_tail(a: PuiseuxSeries):
    """Split a = c q^v (1 + t); return (v, c, step g, dense tail list indexed by g-steps)."""
    v, c = a.leading()
    kv = min(a.terms)
    g = 0
    for k in a.terms:
        g = math.gcd(g, k - kv)
    return kv, c, g


def _target_len(a: PuiseuxSeries, kv: int, g: int, rel_hi) -> int:
    """Number of g-steps n with (kv + n g)/D - v < rel_hi, i.e. n*g/D < rel_hi."""
    if rel_hi == INF:
        raise TruncationError("infinite expansion needs a finite truncation")
    return max(0, math.ceil(Fraction(rel_hi) * a.D / g))


def ps_pow_rational(a: PuiseuxSeries, r, hi=None) -> PuiseuxSeries:
    """a^r via the binomial series on the normalized tail.

    Integer r works for any invertible leading coefficient; fractional r
    needs a leading coefficient equal to 1.
    """
    r = Fraction(r)
    if r == 0:
        return PuiseuxSeries.constant(1)
    if not a.terms:
        raise ValueError("not invertible at this truncation")
    v, c = a.leading()
    if r.denominator != 1 and c != 1:
        raise ValueError("fractional power requires monic leading term")
    if r == 1:
        return a if hi is None else a.truncate(hi)
    new_v = r * v
    rel_hi = a.hi - v if a.hi != INF else INF
    if hi is not None:
        rel_hi = min(rel_hi, _as_fraction(hi) - new_v)
    if r.denominator == 1 and r > 0:
        # binary powering keeps integer coefficients integral
        return _pow_int(a, int(r), None if rel_hi == INF else new_v + rel_hi)
    kv, _, g = _unit_tail(a)
    if g == 0:
        # monomial
        lead = c ** int(r) if r.denominator == 1 else 1
        return PuiseuxSeries.monomial(new_v, lead, INF if rel_hi == INF else new_v + rel_hi)
    n_max = _target_len(a, kv, g, rel_hi)
    inv_c = 1 / Fraction(c) if not isinstance(c, CycNumber) else c.inverse()
    tail = {}
    for k, x in a.terms.items():
        if k != kv:
            tail[(k - kv) // g] = normalize(x * inv_c) if c != 1 else x
    tail_items = sorted(tail.items())
    b: list[Number] = [1] + [0] * (max(n_max, 1) - 1)
    if r == -1:
        for n in range(1, n_max):
            s: Number = 0
            for k, ak in tail_items:
                if k > n:
                    break
                bn = b[n - k]
                if bn:
                    s = s - ak * bn
            b[n] = s
    else:
        rp1 = r + 1
        for n in range(1, n_max):
            s = 0
            for k, ak in tail_items:
                if k > n:
                    break
                bn = b[n - k]
                if bn:
                    s = s + (rp1 * k - n) * ak * bn
            b[n] = _div_int(normalize(s), n) if s else 0
    D = _lcm(a.D, new_v.denominator)
    f = D // a.D
    base = int(new_v * D)
    terms = {base + n * g * f: x for n, x in enumerate(b[:n_max]) if x}
    res = PuiseuxSeries(D, terms, new_v + rel_hi)
    if r.denominator == 1 and c != 1:
        res = res * (c ** int(r) if not isinstance(c, CycNumber) else c ** int(r))
    return res


def _pow_int(a: PuiseuxSeries, n: int, hi) -> PuiseuxSeries:
    v = a.lo

    def cap(k):
        # a partial power a^k only needs the part that survives n - k more factors
        return None if hi is None else hi - (n - k) * v

    if hi is not None:
        a = a.truncate(cap(1))
    result, rk = None, 0
    base, bk = a, 1
    m = n
    while m:
        if m & 1:
            rk += bk
            result = base if result is None else ps_mul(result, base, cap(rk))
        m >>= 1
        if m:
            bk *= 2
            base = ps_mul(base, base, cap(bk))
    return result if hi is None else result.truncate(hi)


def ps_inv(a: PuiseuxSeries, hi=None) -> PuiseuxSeries:
    """Multiplicative inverse; raises if the leading term is not visible."""
    if not a.terms:
        raise ValueError("not invertible at this truncation")
    return ps_pow_rational(a, -1, hi)


def ps_exp(a: PuiseuxSeries, hi=None) -> PuiseuxSeries:
    """exp(a) for a series with strictly positive exponents."""
    for k in a.terms:
        if k <= 0:
            raise ValueError(f"exp needs positive exponents; found q^{Fraction(k, a.D)}")
    top = a.hi if hi is None else min(a.hi, _as_fraction(hi))
    if not a.terms:
        return PuiseuxSeries.constant(1, top)
    g = math.gcd(*a.terms)
    n_max = _target_len(a, 0, g, top)
    ak = sorted((k // g, c) for k, c in a.terms.items())
    b: list[Number] = [1] + [0] * max(n_max - 1, 0)
    for n in range(1, n_max):
        s: Number = 0
        for k, c in ak:
            if k > n:
                break
            if b[n - k]:
                s = s + k * c * b[n - k]
        b[n] = _div_int(normalize(s), n) if s else 0
    return PuiseuxSeries(a.D, {n * g: x for n, x in enumerate(b[:n_max]) if x}, top)


def ps_log(a: PuiseuxSeries, hi=None) -> PuiseuxSeries:
    """log(a) for a = 1 + (strictly positive exponents)."""
    for k, c in a.terms.items():
        if k < 0 or (k == 0 and c != 1):
            raise ValueError(f"log needs 1 + positive tail; offending term at q^{Fraction(k, a.D)}")
    if a.terms.get(0) != 1:
        raise ValueError("log needs constant term 1; offending term at q^0")
    top = a.hi if hi is None else min(a.hi, _as_fraction(hi))
    tail = {k: c for k, c in a.terms.items() if k > 0}
    if not tail:
        return PuiseuxSeries.zero(top)
    g = math.gcd(*tail)
    n_max = _target_len(a, 0, g, top)
    ak = [0] * max(n_max, 1)
    for k, c in tail.items():
        if k // g < n_max:
            ak[k // g] = c
    lk: list[Number] = [0] * max(n_max, 1)
    for n in range(1, n_max):
        s: Number = n * ak[n] if ak[n] else 0
        for k in range(1, n):
            if lk[k] and ak[n - k]:
                s = s - k * lk[k] * ak[n - k]
        lk[n] = _div_int(normalize(s), n) if s else 0
    return PuiseuxSeries(a.D, {n * g: x for n, x in enumerate(lk) if x}, top)


def ps_substitute(a: PuiseuxSeries, num: int, shift: int, den: int) -> PuiseuxSeries:
    """Realize tau -> (num*tau + shift)/den: q^e -> e(e*shift/den) q^(e*num/den)."""
    if num <= 0 or den <= 0:
        raise ValueError("substitution needs num > 0 and den > 0")
    if num == 1 and den == 1 and shift == 0:
        return a
    big = a.D * den
    g = math.gcd(num, big)
    D2 = big // g
    m = num // g
    out = {}
    for k, c in a.terms.items():
        ph = Fraction(k * shift, big)
        if ph.denominator != 1:
            c = c * root_of_unity(ph)
        out[k * m] = c
    hi = a.hi * Fraction(num, den) if a.hi != INF else INF
    return PuiseuxSeries(D2, out, hi)


# ---------------------------------------------------------------------------
# bi-series in p with Puiseux coefficients in q


class BiSeries:
    """Sum over p-degrees m in [pmin, pmax] of p^m * rows[m](q), exact for m <= pmax.

    A missing row is exactly zero.  Each row keeps its own q-window.
    """

    __slots__ = ("pmin", "pmax", "rows")

    def __init__(self, rows: Mapping[int, PuiseuxSeries], pmin: int, pmax: int):
        self.pmin = pmin
        self.pmax = pmax
        clean = {}
        for m, r in rows.items():
            if m < pmin:
                if r.terms:
                    raise ValueError(f"row {m} lies below pmin={pmin}")
                continue
            if m > pmax:
                continue
            if r.terms or r.hi != INF:
                clean[m] = r
        self.rows = clean

    @property
    def D(self) -> int:
        D = 1
        for r in self.rows.values():
            D = _lcm(D, r.D)
        return D

    def row(self, m: int) -> PuiseuxSeries:
        if m > self.pmax:
            raise TruncationError(f"p-degree {m} is outside the window (<= {self.pmax})")
        return self.rows.get(m, PuiseuxSeries.zero())

    def shift_p(self, k: int) -> "BiSeries":
        return BiSeries({m + k: r for m, r in self.rows.items()}, self.pmin + k, self.pmax + k)

    def truncate_p(self, pmax: int) -> "BiSeries":
        return BiSeries(self.rows, self.pmin, min(pmax, self.pmax))

    def map_rows(self, fn) -> "BiSeries":
        return BiSeries({m: fn(r) for m, r in self.rows.items()}, self.pmin, self.pmax)

    def conjugate(self) -> "BiSeries":
        return self.map_rows(PuiseuxSeries.conjugate)

    def __add__(self, other: "BiSeries") -> "BiSeries":
        pmax = min(self.pmax, other.pmax)
        rows = dict(self.rows)
        for m, r in other.rows.items():
            rows[m] = rows[m] + r if m in rows else r
        return BiSeries(rows, min(self.pmin, other.pmin), pmax)

    def __neg__(self):
        return self.map_rows(lambda r: -r)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, BiSeries):
            return bs_mul(self, other)
        if isinstance(other, (int, Fraction, CycNumber)):
            return self.map_rows(lambda r: r * other)
        return NotImplemented

    __rmul__ = __mul__

    def first_difference(self, other: "BiSeries"):
        """First ((m, n), difference) on the common window, or None."""
        pmax = min(self.pmax, other.pmax)
        for m in range(min(self.pmin, other.pmin), pmax + 1):
            a, b = self.rows.get(m), other.rows.get(m)
            if a is None and b is None:
                continue
            a = a if a is not None else PuiseuxSeries.zero()
            b = b if b is not None else PuiseuxSeries.zero()
            d = a.first_difference(b)
            if d is not None:
                return (m, d[0]), d[1]
        return None

    def q_window(self) -> dict[int, object]:
        return {m: r.hi for m, r in sorted(self.rows.items())}

    def __repr__(self):
        return f"BiSeries(p in [{self.pmin}, {self.pmax}], rows={sorted(self.rows)})"


def bs_mul(a: BiSeries, b: BiSeries) -> BiSeries:
    pmin = a.pmin + b.pmin
    pmax = min(a.pmin + b.pmax, b.pmin + a.pmax)
    acc: dict[int, list[PuiseuxSeries]] = {}
    for i, ra in a.rows.items():
        for j, rb in b.rows.items():
            if i + j <= pmax:
                acc.setdefault(i + j, []).append(ps_mul(ra, rb))
    return BiSeries({m: ps_sum(v) for m, v in acc.items()}, pmin, pmax)


def bs_log(B: BiSeries) -> BiSeries:
    """log B for B = 1 + (positive p-degrees); the p^0 row must be exactly 1."""
    r0 = B.rows.get(0)
    if B.pmin < 0 or r0 is None or r0.terms != {0: 1} or r0.hi != INF:
        raise ValueError("bs_log needs p^0 coefficient equal to the constant series 1")
    X = BiSeries({m: r for m, r in B.rows.items() if m > 0}, 1, B.pmax)
    if B.pmax < 1:
        return BiSeries({}, 0, B.pmax)
    result = X
    power = X
    for k in range(2, B.pmax + 1):
        power = bs_mul(power, X)
        sign = 1 if k % 2 else -1
        result = result + power * Fraction(sign, k)
    return BiSeries(result.rows, 0, B.pmax)


def bs_coeff(B: BiSeries, m: int, n) -> Number:
    return B.row(m).coeff(n)


def bs_mul_binomial(B: BiSeries, m: int, n, zeta: Number, c, row_hi=None) -> BiSeries:
    """B * (1 - zeta p^m q^n)^c via the generalized binomial theorem.

    ``row_hi`` optionally caps each output row's q-window, which lets callers
    discard terms that can no longer reach the requested rectangle.
    """
    if m <= 0:
        raise ValueError("binomial factor needs positive p-degree")
    n = Fraction(n)
    if c == 0 or zeta == 0:
        return B
    kmax = (B.pmax - B.pmin) // m
    coefs: list[Number] = [1]
    binom: Number = 1
    mz = -zeta
    pw: Number = 1
    for k in range(1, kmax + 1):
        binom = normalize(binom * (Fraction(c) - (k - 1)) / k)
        if not binom:
            break
        pw = pw * mz
        coefs.append(normalize(binom * pw))
    out: dict[int, list[PuiseuxSeries]] = {}
    for r, row in B.rows.items():
        for k, ck in enumerate(coefs):
            t = r + m * k
            if t > B.pmax:
                break
            term = row if k == 0 else row.shift(n * k) * ck
            if row_hi is not None and t in row_hi:
                term = term.truncate(row_hi[t])
            out.setdefault(t, []).append(term)
    rows = {t: ps_sum(v) if len(v) > 1 else v[0] for t, v in out.items()}
    if row_hi is not None:
        rows = {t: r.truncate(row_hi[t]) if t in row_hi else r for t, r in rows.items()}
    return BiSeries(rows, B.pmin, B.pmax)
