"""q-expansions of eta, Eisenstein series and j, and expansion of eta/Eisenstein
expressions at arbitrary cusps gamma*tau, gamma in SL2(Z).

Expressions are kept in a normal form: a finite sum of rational multiples of
monomials prod atom^r, where an atom is one of eta(a*tau), E2/E4/E6(a*tau) or
q (a plain power of q).  Rational powers of a sum are only allowed when the sum
is a single monomial; since every atom has a monic q-expansion this fixes the
branch of the power.
"""
from __future__ import annotations

import math
import re
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .series_core import (
    INF,
    Number,
    PuiseuxSeries,
    normalize,
    ps_inv,
    ps_mul,
    ps_pow_rational,
    ps_substitute,
    ps_sum,
    root_of_unity,
)

WEIGHTS = {"eta": Fraction(1, 2), "E2": Fraction(2), "E4": Fraction(4), "E6": Fraction(6), "q": Fraction(0)}


class ExpansionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# basic q-series


def _nsteps(hi) -> int:
    """Number of integer exponents n >= 0 with n < hi."""
    hi = Fraction(hi)
    return max(0, math.ceil(hi))


@lru_cache(maxsize=None)
def _sigma_table(k: int, n: int) -> tuple[int, ...]:
    sig = [0] * n
    for d in range(1, n):
        dk = d ** k
        for m in range(d, n, d):
            sig[m] += dk
    return tuple(sig)


class _Grower:
    """Cache of an integer-exponent series that is recomputed to a larger window on demand."""

    def __init__(self, build):
        self._build = build
        self._best: PuiseuxSeries | None = None
        self._lock = threading.Lock()

    def get(self, hi) -> PuiseuxSeries:
        hi = Fraction(hi)
        with self._lock:
            if self._best is None or self._best.hi < hi:
                n = max(_nsteps(hi), 2 * _nsteps(self._best.hi) if self._best else 0)
                self._best = self._build(n)
            return self._best.truncate(hi)


def _euler_power_build(r: Fraction):
    def build(n: int) -> PuiseuxSeries:
        # prod (1-q^m)^r: b_n = -(r/n) sum_k sigma(k) b_{n-k}
        sig = _sigma_table(1, n + 1)
        b: list = [1] + [0] * max(n - 1, 0)
        integral = r.denominator == 1
        ri = int(r) if integral else r
        for m in range(1, n):
            s = 0
            for k in range(1, m + 1):
                if b[m - k]:
                    s += sig[k] * b[m - k]
            if integral:
                b[m] = -(ri * s) // m
            else:
                b[m] = normalize(-ri * s / m)
        return PuiseuxSeries(1, {i: c for i, c in enumerate(b[:n]) if c}, n)
    return build


_EULER: dict[Fraction, _Grower] = {}
_EULER_LOCK = threading.Lock()


def euler_power(r, hi) -> PuiseuxSeries:
    """prod_{n>=1} (1 - q^n)^r to q^hi (integer exponents)."""
    r = Fraction(r)
    with _EULER_LOCK:
        g = _EULER.get(r)
        if g is None:
            g = _EULER[r] = _Grower(_euler_power_build(r))
    return g.get(hi)


def eta_series(trunc) -> PuiseuxSeries:
    """Dedekind eta q^(1/24) prod (1-q^n), exact below ``trunc``."""
    trunc = Fraction(trunc)
    if trunc <= Fraction(1, 24):
        raise ValueError("eta truncation must exceed 1/24")
    return eta_power(1, trunc)


def eta_power(r, hi) -> PuiseuxSeries:
    """eta^r on the q-expansion branch, exact below ``hi``."""
    r = Fraction(r)
    lead = r / 24
    return euler_power(r, Fraction(hi) - lead).shift(lead)


def _eisenstein_build(k: int):
    norm = {2: -24, 4: 240, 6: -504}[k]

    def build(n: int) -> PuiseuxSeries:
        sig = _sigma_table(k - 1, max(n, 1))
        terms = {0: 1}
        for m in range(1, n):
            terms[m] = norm * sig[m]
        return PuiseuxSeries(1, terms, n)
    return build


_EIS = {k: _Grower(_eisenstein_build(k)) for k in (2, 4, 6)}


def eisenstein(k: int, trunc) -> PuiseuxSeries:
    """Normalized Eisenstein series E_k (k = 2, 4, 6) with constant term 1."""
    if k not in _EIS:
        raise ValueError(f"unsupported Eisenstein weight {k}")
    return _EIS[k].get(trunc)


def j_series(trunc) -> PuiseuxSeries:
    """j = E4^3 / eta^24, exact below ``trunc``."""
    trunc = Fraction(trunc)
    e4 = eisenstein(4, trunc + 1)
    return ps_mul(ps_pow_rational(e4, 3, trunc + 1), eta_power(-24, trunc), trunc)


def J_series(trunc) -> PuiseuxSeries:
    return j_series(trunc) - 744


def delta_series(trunc) -> PuiseuxSeries:
    return eta_power(24, trunc)


# ---------------------------------------------------------------------------
# expressions


Atom = tuple  # (kind, dilation: Fraction)
Monomial = tuple  # sorted tuple of (atom, exponent)


@dataclass(frozen=True)
class ModularExpr:
    """Normal form: {monomial: rational coefficient}."""

    terms: tuple = ()
    text: str = field(default="", compare=False)

    @staticmethod
    def from_terms(d: dict, text: str = "") -> "ModularExpr":
        items = tuple(sorted(((m, c) for m, c in d.items() if c), key=_mono_key))
        return ModularExpr(items, text)

    def as_dict(self) -> dict:
        return dict(self.terms)

    @staticmethod
    def const(c) -> "ModularExpr":
        return ModularExpr.from_terms({(): Fraction(c)})

    @staticmethod
    def atom(kind: str, dilation=1, power=1) -> "ModularExpr":
        if kind not in WEIGHTS:
            raise ValueError(f"unknown atom {kind}")
        return ModularExpr.from_terms({(((kind, Fraction(dilation)), Fraction(power)),): Fraction(1)})

    def __add__(self, other: "ModularExpr") -> "ModularExpr":
        d = self.as_dict()
        for m, c in other.terms:
            d[m] = d.get(m, 0) + c
        return ModularExpr.from_terms(d)

    def __neg__(self):
        return ModularExpr.from_terms({m: -c for m, c in self.terms})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other: "ModularExpr") -> "ModularExpr":
        d: dict = {}
        for m1, c1 in self.terms:
            for m2, c2 in other.terms:
                m = _mono_mul(m1, m2)
                d[m] = d.get(m, 0) + c1 * c2
        return ModularExpr.from_terms(d)

    def __pow__(self, r) -> "ModularExpr":
        r = Fraction(r)
        if r.denominator == 1 and r >= 0:
            out = ModularExpr.const(1)
            for _ in range(int(r)):
                out = out * self
            return out
        if len(self.terms) != 1:
            raise ExpansionError("non-integer or negative power of a sum is not supported")
        (m, c), = self.terms
        cr = _rational_power(c, r)
        if cr is None:
            raise ExpansionError(f"coefficient {c} has no rational power {r}")
        return ModularExpr.from_terms({tuple((a, e * r) for a, e in m): cr})

    def __truediv__(self, other: "ModularExpr") -> "ModularExpr":
        return self * other ** -1

    def weights(self) -> set[Fraction]:
        return {mono_weight(m) for m, _ in self.terms}

    def atoms(self) -> set:
        return {a for m, _ in self.terms for a, _ in m}

    def __str__(self):
        return self.text or render(self)


def _mono_key(item):
    m, _ = item
    return tuple((a[0], a[1], e) for a, e in m)


def _mono_mul(m1, m2):
    d: dict = {}
    for a, e in m1 + m2:
        d[a] = d.get(a, 0) + e
    return tuple(sorted(((a, e) for a, e in d.items() if e), key=lambda t: (t[0][0], t[0][1])))


def mono_weight(m) -> Fraction:
    return sum((WEIGHTS[a[0]] * e for a, e in m), Fraction(0))


def _rational_power(c: Fraction, r: Fraction) -> Fraction | None:
    """c^r when it is rational (c > 0, or r integral), else None."""
    c = Fraction(c)
    if r.denominator == 1:
        return c ** int(r)
    if c <= 0:
        return None
    num = _int_root(c.numerator, r.denominator)
    den = _int_root(c.denominator, r.denominator)
    if num is None or den is None:
        return None
    return Fraction(num, den) ** r.numerator


def _int_root(n: int, k: int) -> int | None:
    x = round(n ** (1.0 / k))
    for y in (x - 1, x, x + 1):
        if y >= 0 and y ** k == n:
            return y
    return None


def render(e: ModularExpr) -> str:
    parts = []
    for m, c in e.terms:
        factors = []
        for (kind, a), r in m:
            base = "q" if kind == "q" else f"{kind}({a})"
            factors.append(base if r == 1 else f"{base}^({r})")
        body = "*".join(factors)
        if not body:
            parts.append(str(c))
        elif c == 1:
            parts.append(body)
        else:
            parts.append(f"{c}*{body}")
    return " + ".join(parts) or "0"


# -- parser

_TOKEN = re.compile(r"\s*(?:(\d+(?:/\d+)?)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


class ExprSyntaxError(ValueError):
    pass


def _tokenize(text: str) -> list[str]:
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ExprSyntaxError(f"cannot tokenize at position {pos}")
        out.append(m.group(m.lastindex))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, want=None):
        t = self.peek()
        if t is None or (want is not None and t != want):
            raise ExprSyntaxError(f"expected {want or 'token'}, got {t!r}")
        self.i += 1
        return t

    def parse(self) -> ModularExpr:
        e = self.sum()
        if self.peek() is not None:
            raise ExprSyntaxError(f"unexpected {self.peek()!r}")
        return e

    def sum(self):
        e = self.product()
        while self.peek() in ("+", "-"):
            op = self.take()
            rhs = self.product()
            e = e + rhs if op == "+" else e - rhs
        return e

    def product(self):
        e = self.unary()
        while self.peek() in ("*", "/"):
            op = self.take()
            rhs = self.unary()
            e = e * rhs if op == "*" else e / rhs
        return e

    def unary(self):
        if self.peek() == "-":
            self.take()
            return -self.unary()
        if self.peek() == "+":
            self.take()
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek() == "^":
            self.take()
            return base ** self.exponent()
        return base

    def exponent(self) -> Fraction:
        sign = 1
        if self.peek() == "-":
            self.take()
            sign = -1
        if self.peek() == "(":
            self.take()
            val = self.exponent()
            self.take(")")
            return sign * val
        t = self.take()
        try:
            return sign * Fraction(t)
        except ValueError:
            raise ExprSyntaxError(f"bad exponent {t!r}") from None

    def rational_arg(self) -> Fraction:
        self.take("(")
        t = self.take()
        try:
            val = Fraction(t)
        except ValueError:
            raise ExprSyntaxError(f"bad dilation {t!r}") from None
        self.take(")")
        if val <= 0:
            raise ExprSyntaxError("dilation must be positive")
        return val

    def primary(self):
        t = self.peek()
        if t is None:
            raise ExprSyntaxError("unexpected end of expression")
        if t == "(":
            self.take()
            e = self.sum()
            self.take(")")
            return e
        if re.fullmatch(r"\d+(?:/\d+)?", t):
            self.take()
            return ModularExpr.const(Fraction(t))
        self.take()
        if t == "eta":
            return ModularExpr.atom("eta", self.rational_arg())
        if t in ("E2", "E4", "E6"):
            a = self.rational_arg() if self.peek() == "(" else Fraction(1)
            return ModularExpr.atom(t, a)
        if t == "jdil":
            a = self.rational_arg()
            return ModularExpr.atom("E4", a, 3) * ModularExpr.atom("eta", a, -24)
        if t == "j":
            return ModularExpr.atom("E4", 1, 3) * ModularExpr.atom("eta", 1, -24)
        if t == "q":
            return ModularExpr.atom("q")
        raise ExprSyntaxError(f"unknown name {t!r}")


def parse_expr(text: str) -> ModularExpr:
    e = _Parser(text).parse()
    return ModularExpr(e.terms, text.strip())


# ---------------------------------------------------------------------------
# cusp expansion


def dedekind_sum(d: int, c: int) -> Fraction:
    """s(d, c) for c > 0."""
    return _dedekind_sum(d % c, c)


@lru_cache(maxsize=None)
def _dedekind_sum(d: int, c: int) -> Fraction:
    s = Fraction(0)
    for k in range(1, c):
        x = Fraction(d * k, c)
        if x.denominator != 1:
            s += (Fraction(k, c) - Fraction(1, 2)) * (x - math.floor(x) - Fraction(1, 2))
    return s


def eta_log_phase(g: Sequence[Sequence[int]]) -> Fraction:
    """Rational r with eta(g tau) = e(r) (c tau + d)^(1/2) eta(tau), principal branch.

    For c > 0 this is the classical Dedekind formula; for c = 0 the matrix is a
    translation by b.
    """
    (a, b), (c, d) = g
    if c == 0:
        if not (a == 1 and d == 1):
            raise ValueError("translation part must be normalized to a = d = 1")
        return Fraction(b, 24)
    if c < 0:
        raise ValueError("normalize the matrix so that c >= 0")
    return Fraction(a + d, 24 * c) - dedekind_sum(d, c) / 2 - Fraction(1, 8)


def eta_multiplier(g) -> Number:
    """The 24th root of unity in eta(g tau) = eps * sqrt(-i(c tau + d)) eta(tau), c > 0."""
    (a, b), (c, d) = g
    return root_of_unity(Fraction(a + d, 24 * c) - dedekind_sum(d, c) / 2)


def normalize_gamma(gamma) -> tuple[tuple[int, int], tuple[int, int]]:
    (a, b), (c, d) = gamma
    if a * d - b * c != 1:
        raise ValueError("matrix must have determinant 1")
    if c < 0 or (c == 0 and d < 0):
        a, b, c, d = -a, -b, -c, -d
    return (a, b), (c, d)


def factor_upper(M) -> tuple[tuple[tuple[int, int], tuple[int, int]], tuple[int, int, int]]:
    """Write an integer matrix of positive determinant as g * [[A, B], [0, C]].

    g is in SL2(Z) with bottom-left entry >= 0, A, C > 0 and 0 <= B < C.
    """
    (al, be), (ga, de) = M
    n = al * de - be * ga
    if n <= 0:
        raise ValueError("matrix must have positive determinant")
    h = math.gcd(al, ga)
    p, r = al // h, ga // h
    if r < 0 or (r == 0 and p < 0):
        p, r, h = -p, -r, -h
    # solve s*p - q*r = 1
    x, y = _ext_gcd(p, r)  # x*p + y*r = 1
    s, q = x, -y
    A = h
    if A < 0:
        raise AssertionError("upper-triangular factor must have A > 0")
    C = n // A
    B = s * be - q * de
    t = B // C
    B -= t * C
    q += t * p
    s += t * r
    return ((p, q), (r, s)), (A, B, C)


def _ext_gcd(a: int, b: int) -> tuple[int, int]:
    """(x, y) with a x + b y = gcd(a, b) = 1 (raises otherwise)."""
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r:
        qt = old_r // r
        old_r, r = r, old_r - qt * r
        old_x, x = x, old_x - qt * x
        old_y, y = y, old_y - qt * y
    if old_r < 0:
        old_r, old_x, old_y = -old_r, -old_x, -old_y
    if old_r != 1:
        raise ValueError(f"{a} and {b} are not coprime")
    return old_x, old_y


def _prime_factors(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def _base_power(kind: str, r: Fraction, hi) -> PuiseuxSeries:
    if kind == "eta":
        return eta_power(r, hi)
    if kind == "q":
        return PuiseuxSeries.monomial(r)
    k = int(kind[1])
    base = eisenstein(k, hi)
    return ps_pow_rational(base, r, hi)


def _base_valuation(kind: str, r: Fraction) -> Fraction:
    if kind == "eta":
        return r / 24
    if kind == "q":
        return r
    return Fraction(0)


@lru_cache(maxsize=4096)
def _group_series(group: tuple, hi: Fraction) -> PuiseuxSeries:
    """prod kind^r over the group (all at the same argument), exact below hi."""
    vals = [_base_valuation(k, r) for k, r in group]
    total = sum(vals, Fraction(0))
    out = None
    rest = total
    for (kind, r), v in zip(group, vals):
        need = hi - (total - v)
        s = _base_power(kind, r, need)
        rest -= v
        # partial products must reach past hi by the valuation still to come
        out = s if out is None else ps_mul(out, s, hi - rest)
    return out.truncate(hi)


def _monomial_at(mono: tuple, gamma, hi: Fraction) -> tuple[Fraction, Fraction, list]:
    """Return (constant, phase, [(U, group)]) describing mono(gamma tau)."""
    (g11, g12), (g21, g22) = gamma
    const_primes: dict[int, Fraction] = {}
    phase = Fraction(0)
    groups: dict[tuple, dict[str, Fraction]] = {}
    total_w = Fraction(0)
    for (kind, a), r in mono:
        u, v = a.numerator, a.denominator
        M = ((u * g11, u * g12), (v * g21, v * g22))
        g, U = factor_upper(M)
        (p, q), (rr, s) = g
        w = WEIGHTS[kind] * r
        total_w += w
        if rr == 0:
            if kind == "eta":
                phase += r * Fraction(q, 24)
            elif kind == "q":
                phase += r * q
        else:
            if kind in ("E2", "q"):
                raise ExpansionError(f"{kind} cannot be expanded at a non-translation cusp")
            if kind in ("E4", "E6") and r.denominator != 1:
                raise ExpansionError("fractional powers of Eisenstein series are not single-valued")
            if kind == "eta":
                phase += r * eta_log_phase(g)
            # automorphy factor (rr*U tau + s) = (v/C) (g21 tau + g22)
            C = U[2]
            for pr, e in _prime_factors(v).items():
                const_primes[pr] = const_primes.get(pr, 0) + w * e
            for pr, e in _prime_factors(C).items():
                const_primes[pr] = const_primes.get(pr, 0) - w * e
        grp = groups.setdefault(U, {})
        grp[kind] = grp.get(kind, 0) + r
    if g21 != 0 and total_w != 0:
        raise ExpansionError("cannot expand non-zero-weight expression at a cusp")
    const = Fraction(1)
    for pr, e in const_primes.items():
        if e.denominator != 1:
            raise ExpansionError("automorphy constant is irrational")
        const *= Fraction(pr) ** int(e)
    out = [(U, tuple(sorted((k, r) for k, r in grp.items() if r))) for U, grp in groups.items()]
    return const, phase, out


def _group_valuation(U, group) -> Fraction:
    A, _, C = U
    return sum((_base_valuation(k, r) for k, r in group), Fraction(0)) * Fraction(A, C)


def expr_expand(e: ModularExpr, gamma=((1, 0), (0, 1)), trunc=10) -> PuiseuxSeries:
    """Exact q-expansion of e(gamma tau), exact for exponents below ``trunc``."""
    trunc = Fraction(trunc)
    gamma = normalize_gamma(gamma)
    return _expr_expand_cached(e.terms, gamma, trunc)


@lru_cache(maxsize=2048)
def _expr_expand_cached(terms, gamma, trunc: Fraction) -> PuiseuxSeries:
    pieces = []
    for mono, coef in terms:
        if not mono:
            pieces.append(PuiseuxSeries.constant(coef))
            continue
        const, phase, groups = _monomial_at(mono, gamma, trunc)
        vals = [_group_valuation(U, g) for U, g in groups]
        total = sum(vals, Fraction(0))
        if total >= trunc:
            pieces.append(PuiseuxSeries.zero(trunc))
            continue
        prod = None
        rest = total
        for (U, grp), v in zip(groups, vals):
            A, B, C = U
            need = trunc - (total - v)
            base = _group_series(grp, need * Fraction(C, A))
            s = ps_substitute(base, A, B, C)
            rest -= v
            prod = s if prod is None else ps_mul(prod, s, trunc - rest)
        scale: Number = normalize(coef * const)
        if phase.denominator != 1:
            scale = scale * root_of_unity(phase)
        pieces.append(prod.truncate(trunc) * scale)
    if not pieces:
        return PuiseuxSeries.zero(trunc)
    out = ps_sum(pieces)
    return out.truncate(trunc) if out.hi > trunc else out


# ---------------------------------------------------------------------------
# eta quotients


@dataclass(frozen=True)
class EtaQuotient:
    """prod eta(a_i tau)^(b_i) + k."""

    pairs: tuple[tuple[int, int], ...]
    k: Fraction = Fraction(0)

    @property
    def weight(self) -> Fraction:
        return Fraction(sum(b for _, b in self.pairs), 2)

    def to_expr(self) -> ModularExpr:
        e = ModularExpr.const(1)
        for a, b in self.pairs:
            e = e * ModularExpr.atom("eta", a, b)
        return e + ModularExpr.const(self.k) if self.k else e

    @staticmethod
    def from_expr(e: ModularExpr) -> "EtaQuotient | None":
        """Recognize c + prod eta^b (coefficient 1); None if e has another shape."""
        k = Fraction(0)
        pairs = None
        for m, c in e.terms:
            if not m:
                k = c
                continue
            if pairs is not None or c != 1:
                return None
            if any(kind != "eta" or a.denominator != 1 or r.denominator != 1 for (kind, a), r in m):
                return None
            pairs = tuple((int(a), int(r)) for (_, a), r in m)
        if pairs is None:
            return None
        return EtaQuotient(pairs, k)


def eta_positivity(Q: EtaQuotient) -> tuple[bool, int | None]:
    """Check sum_{a_i | k} b_i >= 0 for every residue k mod lcm(a_i); return (ok, witness)."""
    L = 1
    for a, _ in Q.pairs:
        L = L * a // math.gcd(L, a)
    for k in range(L):
        s = sum(b for a, b in Q.pairs if k % a == 0)
        if s < 0:
            return False, k
    return True, None


def nonfricke_inversion(Q: EtaQuotient, N: int, trunc) -> tuple[Fraction, Fraction, PuiseuxSeries]:
    """Solve T(-1/(N tau)) = k1 + k2 / (T(tau) - k1) and verify it to ``trunc``.

    Returns (k1, k2, T(-1/tau)).
    """
    if Q.weight != 0:
        raise ExpansionError("eta quotient must have weight 0")
    trunc = Fraction(trunc)
    e = Q.to_expr()
    at_s = expr_expand(e, ((0, -1), (1, 0)), Fraction(trunc, N) + 1)
    inv = ps_substitute(at_s, N, 0, 1).truncate(trunc)
    k1 = inv.coeff(0)
    k2 = inv.coeff(1)
    T = expr_expand(e, trunc=trunc + 2)
    rhs = ps_inv(T - k1, trunc) * k2 + k1
    if not inv.agrees_with(rhs, trunc):
        raise ExpansionError("not of non-Fricke inversion form")
    return Fraction(k1), Fraction(k2), at_s
