"""The lattice M = II_{1,1}(N) x II_{1,1} with Q(a, b, c, d) = ab + cd: discriminant
identification, cusps as isotropic vectors, rational quadratic divisors, the
projections F_K and F_0, Weyl vectors and the lifted constants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .modforms import eisenstein
from .series_core import Number, PuiseuxSeries, ps_mul, ps_sum
from .vvmf import VVMFTable


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class LatticeVector:
    a: Fraction
    b: Fraction
    c: Fraction
    d: Fraction

    def __init__(self, a, b, c, d):
        for name, x in zip("abcd", (a, b, c, d)):
            object.__setattr__(self, name, Fraction(x))

    def coords(self) -> tuple[Fraction, ...]:
        return (self.a, self.b, self.c, self.d)

    def __neg__(self):
        return LatticeVector(-self.a, -self.b, -self.c, -self.d)

    def __add__(self, other: "LatticeVector"):
        return LatticeVector(*(x + y for x, y in zip(self.coords(), other.coords())))

    def __sub__(self, other: "LatticeVector"):
        return self + (-other)

    def scale(self, r) -> "LatticeVector":
        return LatticeVector(*(x * Fraction(r) for x in self.coords()))

    def in_lattice(self, N: int) -> bool:
        """Membership in M: a, c, d integral and b in NZ."""
        a, b, c, d = self.coords()
        return all(x.denominator == 1 for x in (a, c, d)) and b.denominator == 1 and b.numerator % N == 0

    def in_dual(self, N: int) -> bool:
        """Membership in M-dual: a in (1/N)Z, b, c, d integral."""
        a, b, c, d = self.coords()
        return (a * N).denominator == 1 and all(x.denominator == 1 for x in (b, c, d))

    def m_z(self, N: int) -> int:
        """Positive generator of (z, M) for z in M."""
        if not self.in_lattice(N):
            raise LatticeError("vector is not in M")
        a, b, c, d = (int(x) for x in self.coords())
        # pairing with basis vectors (1,0,0,0), (0,N,0,0), (0,0,1,0), (0,0,0,1)
        return math.gcd(math.gcd(b, N * a), math.gcd(d, c)) or 0


def qform(v: LatticeVector) -> Fraction:
    return v.a * v.b + v.c * v.d


def pairing(u: LatticeVector, v: LatticeVector) -> Fraction:
    return u.a * v.b + u.b * v.a + u.c * v.d + u.d * v.c


def disc_identify(v: LatticeVector, N: int) -> tuple[int, int]:
    """M-dual/M -> (Z/N)^2 with the coordinate switch (a, b) -> (b mod N, Na mod N)."""
    if not v.in_dual(N):
        raise LatticeError("vector is not in M-dual")
    return int(v.b) % N, int(v.a * N) % N


def disc_lift(i: int, k: int, N: int) -> LatticeVector:
    """Representative (k/N, i, 0, 0) of the class (i, k)."""
    return LatticeVector(Fraction(k % N, N), i % N, 0, 0)


# ---------------------------------------------------------------------------
# cusps

Cusp = tuple  # (numerator, denominator) in lowest terms; infinity is (1, 0)
INFINITY: Cusp = (1, 0)


def cusp(x) -> Cusp:
    """Normalize a rational, an (a, c) pair or the string 'oo' to a reduced pair."""
    if isinstance(x, str):
        if x in ("oo", "inf", "i*oo"):
            return INFINITY
        x = Fraction(x)
    if isinstance(x, tuple):
        a, c = x
    else:
        x = Fraction(x)
        a, c = x.numerator, x.denominator
    a, c = int(a), int(c)
    if a == 0 and c == 0:
        raise LatticeError("0/0 is not a cusp")
    g = math.gcd(a, c)
    a, c = a // g, c // g
    if c < 0 or (c == 0 and a < 0):
        a, c = -a, -c
    return (a, c)


def cusp_to_vector(p1, p2) -> LatticeVector:
    """(a1/c1, a2/c2) -> (a1 a2, -c1 c2, c1 a2, a1 c2), primitive and isotropic."""
    a1, c1 = cusp(p1)
    a2, c2 = cusp(p2)
    return LatticeVector(a1 * a2, -c1 * c2, c1 * a2, a1 * c2)


def vector_to_cusp(v: LatticeVector) -> tuple[Cusp, Cusp]:
    """Inverse of :func:`cusp_to_vector`: (a/c or -d/b, a/d or -c/b), avoiding 0/0."""
    if qform(v) != 0:
        raise LatticeError("vector is not isotropic")
    a, b, c, d = v.coords()
    if not any((a, b, c, d)):
        raise LatticeError("zero vector has no cusp")
    first = (a, c) if (a, c) != (0, 0) else (-d, b)
    second = (a, d) if (a, d) != (0, 0) else (-c, b)
    return _frac_cusp(*first), _frac_cusp(*second)


def _frac_cusp(x: Fraction, y: Fraction) -> Cusp:
    den = math.lcm(x.denominator, y.denominator)
    return cusp((int(x * den), int(y * den)))


def point_vector(z1, z2) -> tuple:
    """Isotropic point (z1 z2, -1, z1, z2) attached to (z1, z2)."""
    return (z1 * z2, -1, z1, z2)


@dataclass(frozen=True)
class QuadraticDivisor:
    """The relation z1 = (-c z2 + a) / (b z2 + d)."""

    a: Fraction
    b: Fraction
    c: Fraction
    d: Fraction

    def z1(self, z2):
        return (-self.c * z2 + self.a) / (self.b * z2 + self.d)

    def contains(self, z1, z2) -> bool:
        x = point_vector(z1, z2)
        lam = (self.a, self.b, self.c, self.d)
        # pairing of lambda with the point vector
        return lam[0] * x[1] + lam[1] * x[0] + lam[2] * x[3] + lam[3] * x[2] == 0


def quadratic_divisor(lam: LatticeVector) -> QuadraticDivisor:
    if qform(lam) >= 0:
        raise LatticeError("empty divisor: lambda must have negative norm")
    return QuadraticDivisor(*lam.coords())


# ---------------------------------------------------------------------------
# projections and lifted constants

SUPPORTED_Z = {
    (1, 0, 0, 0): "scalar",
    (0, 0, 1, 0): "split",
    (0, 0, 0, 1): "split",
}


@dataclass(frozen=True)
class Projection:
    z: LatticeVector
    w: LatticeVector
    w_dual: LatticeVector
    FK: dict  # label -> series; label () for the scalar case, (i, k) otherwise
    span: dict  # (lambda, w') -> series, for the components in the span of w
    F0: PuiseuxSeries


def project_FK_F0(F: VVMFTable, z: LatticeVector, w: LatticeVector | None = None) -> Projection:
    """F_K, its components along w, and F_0 for the three supported cusps z."""
    key = tuple(int(x) for x in z.coords()) if all(x.denominator == 1 for x in z.coords()) else None
    kind = SUPPORTED_Z.get(key)
    if kind is None:
        raise LatticeError(f"unsupported cusp vector {z.coords()}")
    N = F.N
    row0 = ps_sum(F[0, k] for k in range(N))
    if kind == "scalar":
        # K = {0} x II_{1,1} is unimodular: one component, the sum over delta with i = 0
        w = w or LatticeVector(0, 0, 1, 0)
        wd = LatticeVector(0, 0, 0, 1)
        return Projection(z, w, wd, {(): row0}, {Fraction(0): row0}, row0)
    w = w or LatticeVector(1, 0, 0, 0)
    if w.coords() != (1, 0, 0, 0):
        raise LatticeError("only w = (1,0,0,0) is supported for this cusp")
    wd = LatticeVector(0, 1, 0, 0)
    FK = {(i, k): F[i, k] for i in range(N) for k in range(N)}
    # lambda = (k/N) w has (lambda, w') = k/N and class (0, k)
    span = {Fraction(k, N): F[0, k] for k in range(N)}
    return Projection(z, w, wd, FK, span, row0)


def B2(x) -> Fraction:
    """Periodic Bernoulli function: x^2 - x + 1/6 on [0, 1], extended with period 1."""
    x = Fraction(x)
    x -= math.floor(x)
    return x * x - x + Fraction(1, 6)


def _constant_term_with_E2(F0: PuiseuxSeries) -> Number:
    if F0.hi <= 0:
        raise LatticeError("F_0 must be known through the constant term")
    v = F0.lo
    top = Fraction(1)
    if v < 0:
        E2 = eisenstein(2, max(1, math.ceil(-v) + 1))
    else:
        E2 = eisenstein(2, 1)
    return ps_mul(F0.truncate(min(F0.hi, top)), E2, top).coeff(0)


def phi0_constant(F0: PuiseuxSeries) -> Fraction:
    """Phi_0 / pi = (1/3) * constant term of F_0 E_2."""
    return Fraction(_constant_term_with_E2(F0)) / 3


def _span_sum(span: Mapping) -> Fraction:
    total = Fraction(0)
    for x, s in span.items():
        c = s.coeff(0) if isinstance(s, PuiseuxSeries) else s
        total += Fraction(c) * B2(x)
    return total


def weyl_vector(span: Mapping, F0: PuiseuxSeries) -> tuple[Fraction, Fraction]:
    """(rho_w, rho_w') with rho_w' = ct(F_0 E_2)/24 and rho_w = (1/4) sum c_lambda(0) B2((lambda, w'))."""
    rho_wd = Fraction(_constant_term_with_E2(F0)) / 24
    return _span_sum(span) / 4, rho_wd


@dataclass(frozen=True)
class PiValue:
    """coeff * sqrt(2) * pi (or coeff * pi without the sqrt(2) tag)."""

    coeff: Fraction
    sqrt2: bool = True

    def __str__(self):
        tag = "*sqrt(2)" if self.sqrt2 else ""
        return f"{self.coeff}{tag}*pi"


def phiK_value(m, n, span: Mapping, F0: PuiseuxSeries) -> PiValue:
    """Homogeneous lift |v| Phi_K(v/|v|) at v = m w' + n w (equal to Phi_K when 2mn = 1).

    For a unit vector u the lift satisfies sqrt(2) |w_u| Phi_K(u) = Phi_0 + 4 pi w_u^2 S with
    S = sum c_lambda(0) B2((lambda, w')); scaling gives sqrt(2) pi (n Phi_0/pi + 2 m S).
    """
    m, n = Fraction(m), Fraction(n)
    if 2 * m * n <= 0:
        raise LatticeError("v must have positive norm")
    if m < 0:
        raise LatticeError("v must lie in the positive cone (m > 0)")
    return PiValue(n * phi0_constant(F0) + 2 * m * _span_sum(span))
