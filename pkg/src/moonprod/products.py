"""Equivariant Hecke operators, Faber polynomials, infinite products in p and q
and the recovery of product exponents from a two-variable series.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .catalog import ClassEntry, Family, family_of
from .report import Report, params
from .series_core import (
    INF,
    BiSeries,
    CycNumber,
    Number,
    PuiseuxSeries,
    TruncationError,
    bs_log,
    bs_mul_binomial,
    mobius,
    normalize,
    ps_mul,
    ps_substitute,
    ps_sum,
    root_of_unity,
)
from .vvmf import VVMFTable, build_hat_table, dft_rows


class ExtractionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Hecke operators and Faber polynomials


def _divisor_pairs(n: int):
    for a in range(1, n + 1):
        if n % a == 0:
            yield a, n // a


def hecke_equivariant(T: VVMFTable, n: int, i: int, j: int, trunc=None) -> PuiseuxSeries:
    """n T_n applied at (g^i, g^j): sum over ad = n, 0 <= b < d of F-hat_{di, aj-bi}((a tau + b)/d)."""
    if n < 1:
        raise ValueError("Hecke index must be positive")
    N = T.N
    parts = []
    for a, d in _divisor_pairs(n):
        for b in range(d):
            src = T[(d * i) % N, (a * j - b * i) % N]
            if trunc is not None:
                src = src.truncate(Fraction(trunc) * d / a)
            parts.append(ps_substitute(src, a, b, d))
    out = ps_sum(parts)
    return out if trunc is None else out.truncate(trunc)


def hecke_table(T: VVMFTable, n: int, trunc=None) -> VVMFTable:
    rows = tuple(tuple(hecke_equivariant(T, n, i, j, trunc) for j in range(T.N)) for i in range(T.N))
    return VVMFTable(T.N, T.kind, rows, T.name)


@dataclass(frozen=True)
class FaberPoly:
    """Monic polynomial sum coeffs[k] X^k (coeffs[-1] == 1)."""

    coeffs: tuple

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def evaluate(self, f: PuiseuxSeries, hi=None) -> PuiseuxSeries:
        """P(f), exact below ``hi`` (or on the natural window)."""
        n = self.degree
        if n == 0:
            return PuiseuxSeries.constant(self.coeffs[0])
        v = f.lo
        if hi is not None:
            f = f.truncate(Fraction(hi) - (n - 1) * v)
        powers = [PuiseuxSeries.constant(1), f]
        for k in range(2, n + 1):
            cap = None if hi is None else Fraction(hi) - (n - k) * v
            powers.append(ps_mul(powers[-1], f, cap))
        out = ps_sum(p * c for p, c in zip(powers, self.coeffs) if c)
        return out if hi is None else out.truncate(hi)

    def __str__(self):
        terms = []
        for k in range(self.degree, -1, -1):
            c = self.coeffs[k]
            if not c:
                continue
            mono = "" if k == 0 else ("X" if k == 1 else f"X^{k}")
            if mono and c == 1:
                terms.append(mono)
            else:
                terms.append(f"{c}{'*' + mono if mono else ''}")
        return " + ".join(terms).replace("+ -", "- ") or "0"


def faber_polynomial(f: PuiseuxSeries, n: int) -> FaberPoly:
    """The monic degree-n polynomial P with P(f) = q^-n + O(q)."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    if n == 0:
        return FaberPoly((1,))
    lead = f.items()
    if not lead or lead[0] != (Fraction(-1), 1) or any(-1 < e < 1 for e, _ in lead) or f.hi < 1:
        raise ValueError("Faber polynomials need f = q^-1 + O(q)")
    # the window q^-n .. q^0 of f^k only needs f below q^1
    f = f.truncate(Fraction(n + 1) if f.hi > n + 1 else f.hi)
    powers = [PuiseuxSeries.constant(1), f]
    for k in range(2, n + 1):
        powers.append(ps_mul(powers[-1], f, 1 + n - k))
    coeffs = [0] * (n + 1)
    coeffs[n] = 1
    cur = powers[n]
    for k in range(n - 1, -1, -1):
        c = cur.coeff(-k)
        if c:
            coeffs[k] = -c
            cur = cur - powers[k] * c
    return FaberPoly(tuple(normalize(c) for c in coeffs))


def verify_hecke_monic(entry: ClassEntry, n_max: int, trunc, entries=None, table: VVMFTable | None = None,
                       rows: Iterable[int] = (0, 1)) -> Report:
    """n T_n F-hat_{i,j} == Faber_n(F-hat_{i,j}) for n <= n_max, i in ``rows``, all j; below ``trunc``."""
    trunc = Fraction(trunc)
    if table is None:
        fam = family_of(entry, entries, trunc=n_max * trunc + 1)
        table = build_hat_table(fam, n_max * trunc + 1, entry.name)
    N = table.N
    rep = Report()
    fabers = {}
    for n in range(1, n_max + 1):
        for i in rows:
            for j in range(N):
                g = math.gcd(math.gcd(i, j), N)
                key = (n, g)
                if key not in fabers:
                    fabers[key] = faber_polynomial(table[0, g], n)
                lhs = hecke_equivariant(table, n, i, j, trunc)
                rhs = fabers[key].evaluate(table[i, j], trunc)
                top = min(lhs.hi, rhs.hi)
                d = lhs.first_difference(rhs)
                par = params(n=n, i=i, j=j, window=top)
                if top < min(trunc, 1):
                    rep.add("hecke", entry.name, par, ("window", f"only below q^{top}"))
                else:
                    rep.add("hecke", entry.name, par, None if d is None else (f"q^{d[0]}", d[1]))
    return rep


def verify_hecke_series(f: PuiseuxSeries, n_max: int, trunc, name: str = "series") -> Report:
    """Complete replicability check for a single level-1-style function (row (0,0) of a 1x1 table)."""
    T = VVMFTable(1, "trace", ((f,),), name)
    rep = Report()
    for n in range(1, n_max + 1):
        lhs = hecke_equivariant(T, n, 0, 0, trunc)
        rhs = faber_polynomial(f, n).evaluate(f, trunc)
        d = lhs.first_difference(rhs)
        rep.add("hecke", name, params(n=n, window=min(lhs.hi, rhs.hi)), None if d is None else (f"q^{d[0]}", d[1]))
    return rep


# ---------------------------------------------------------------------------
# two-variable series


def lhs_difference(fsig: PuiseuxSeries, ftau: PuiseuxSeries, P: int, qwin=None) -> BiSeries:
    """f(sigma) - f(tau): p-rows -1..P carry the constants a_m, row 0 also carries -f(tau)."""
    if P >= fsig.hi:
        raise TruncationError(f"f(sigma) is only known below p^{fsig.hi}")
    rows = {}
    for m in range(-1, P + 1):
        c = fsig.coeff(m)
        rows[m] = PuiseuxSeries.constant(c)
    tau = ftau if qwin is None else ftau.truncate(qwin)
    rows[0] = rows[0] - tau
    return BiSeries(rows, -1, P)


@dataclass
class ExponentTable:
    """c(m, n) for p-degree m >= 1 and n in (1/N)Z.

    For each m the window ``win[m] = (n_lo, n_hi)`` is inclusive; c(m, n) is
    asserted to vanish for n < n_lo and every grid point in the window is
    known (missing keys are zero).  n_hi may be INF for exact data.
    """

    N: int
    P: int
    values: dict = field(default_factory=dict)
    win: dict = field(default_factory=dict)

    def get(self, m: int, n) -> Number:
        n = Fraction(n)
        if m not in self.win:
            raise TruncationError(f"p-degree {m} is outside the table")
        lo, hi = self.win[m]
        if n > hi:
            raise TruncationError(f"(m, n) = ({m}, {n}) is outside the window")
        if (n * self.N).denominator != 1:
            return 0
        return self.values.get((m, n), 0)

    def grid(self, m: int):
        lo, hi = self.win[m]
        if hi == INF:
            keys = [n for (mm, n) in self.values if mm == m]
            hi = max(keys) if keys else lo
        k = math.ceil(lo * self.N)
        while Fraction(k, self.N) <= hi:
            yield Fraction(k, self.N)
            k += 1

    def nonzero(self) -> dict:
        return {k: v for k, v in self.values.items() if v}


def _row_windows(P: int, step: Fraction, n_lo: Mapping[int, Fraction], n_hi: Mapping[int, object]):
    """Support lower bounds lo_k and exactness bounds hi_k of rows k = -1..P of the product."""
    lo = {-1: Fraction(0)}
    hi = {-1: INF}
    for k in range(0, P + 1):
        cands = [n_lo[m] + lo[k - m] for m in range(1, k + 2) if m in n_lo]
        lo[k] = min(cands) if cands else INF
        his = [n_hi[m] + step + lo[k - m] for m in range(1, k + 2)
               if m in n_hi and n_hi[m] != INF and lo[k - m] != INF]
        # factors with p-degree beyond the table never reach row k when the table covers 1..P+1
        hi[k] = min(his) if his else INF
    return lo, hi


def plan_windows(P: int, N: int, n_lo: Mapping[int, Fraction], target) -> dict[int, Fraction]:
    """Smallest n_hi(m) per m so that every product row k <= P is exact below ``target``."""
    step = Fraction(1, N)
    lo, _ = _row_windows(P, step, n_lo, {})
    out = {}
    for m in range(1, P + 2):
        worst = min(lo[k - m] for k in range(m - 1, P + 1))
        need = Fraction(target) - step - worst
        out[m] = Fraction(math.ceil(need * N), N)
    return out


def borcherds_product(E: ExponentTable, twist: Mapping | None = None, P: int | None = None) -> BiSeries:
    """p^-1 prod (1 - zeta p^m q^n)^c over the table, exact on the implied rectangle.

    Without ``twist`` every factor has zeta = 1 and c = E(m, n).  With
    ``twist``, ``twist[(m, n)]`` is a sequence of (r, c) pairs, each giving a
    factor (1 - e(r) p^m q^n)^c; E then only supplies the windows.
    """
    P = E.P if P is None else P
    step = Fraction(1, E.N)
    for m in range(1, P + 2):
        if m not in E.win:
            raise TruncationError(f"exponent table does not cover p-degree {m}")
    n_lo = {m: E.win[m][0] for m in range(1, P + 2)}
    n_hi = {m: E.win[m][1] for m in range(1, P + 2)}
    lo, hi = _row_windows(P, step, n_lo, n_hi)
    factors = []
    for m in range(1, P + 2):
        for n in E.grid(m):
            if twist is None:
                c = E.get(m, n)
                if c:
                    factors.append((m, n, 1, c))
            else:
                for r, c in twist.get((m, n), ()):
                    if c:
                        factors.append((m, n, root_of_unity(Fraction(r)), c))
    B = BiSeries({-1: PuiseuxSeries.constant(1)}, -1, P)
    row_hi = {k: hi[k] for k in range(-1, P + 1) if hi[k] != INF}
    for m, n, z, c in factors:
        B = bs_mul_binomial(B, m, n, z, c, row_hi)
    rows = dict(B.rows)
    for k in range(0, P + 1):
        r = rows.get(k, PuiseuxSeries.zero())
        rows[k] = r.truncate(hi[k]) if hi[k] != INF else r
    return BiSeries(rows, -1, P)


def extract_exponents(B: BiSeries, N: int, require_integral: bool = True) -> ExponentTable:
    """Invert the product: c(M, n) = sum_{a | (M, Nn)} mu(a)/a L(M/a, n/a), L from -log(p B)."""
    pB = B.shift_p(1)
    r0 = pB.rows.get(0)
    if r0 is None or r0.terms != {0: 1}:
        raise ExtractionError("p*B must have p^0 coefficient 1")
    L = -bs_log(pB)
    Pmax = pB.pmax  # p-degrees of L: 1..pB.pmax
    rows = {M: L.rows.get(M, PuiseuxSeries.zero()) for M in range(1, Pmax + 1)}
    E = ExponentTable(N, Pmax - 1)
    for M in range(1, Pmax + 1):
        divs = [a for a in range(1, M + 1) if M % a == 0]
        lo = INF
        for a in divs:
            r = rows[M // a]
            if r.terms:
                lo = min(lo, a * r.lo)
        top = min((a * rows[M // a].hi for a in divs), default=INF)
        if lo == INF:
            lo = Fraction(0) if top == INF else Fraction(math.floor(top * N), N)
        lo = Fraction(math.floor(lo * N), N)
        if top == INF:
            span = max((a * max(rows[M // a].terms, default=0) / rows[M // a].D
                        for a in divs if rows[M // a].terms), default=lo)
            n_hi = INF
            last = Fraction(math.floor(Fraction(span) * N), N)
        else:
            last = Fraction(math.ceil(top * N) - 1, N)
            n_hi = last
        E.win[M] = (lo, n_hi)
        k = int(lo * N)
        while Fraction(k, N) <= last:
            n = Fraction(k, N)
            g = math.gcd(M, abs(k)) if k else M
            total: Number = 0
            for a in range(1, g + 1):
                if g % a == 0 and mobius(a):
                    total = total + rows[M // a].coeff(n / a) * Fraction(mobius(a), a)
            total = normalize(total)
            if total:
                if require_integral and (isinstance(total, CycNumber) or Fraction(total).denominator != 1):
                    raise ExtractionError(f"non-integral exponent at (m, n) = ({M}, {n}): {total}")
                E.values[(M, n)] = total
            k += 1
    return E


# ---------------------------------------------------------------------------
# product formulas at the two cusps


def _row0_multiplicity(fam: Family) -> list[PuiseuxSeries]:
    """F_{0,k} = (1/N) sum_j e(-jk/N) f_((j,N)); only needs the family series."""
    N = fam.N
    return [ps_sum(fam.f(j) * (root_of_unity(Fraction(-j * k, N)) * Fraction(1, N)) for j in range(N))
            for k in range(N)]


def prod1_twist(fam: Family, P: int, target) -> tuple[ExponentTable, dict]:
    """Exponent data (1 - e(j/N) p^m q^n)^{c_{0,j}(mn)} for the product at (i oo, i oo)."""
    N = fam.N
    F0 = _row0_multiplicity(fam)
    n_lo = {m: Fraction(math.ceil(Fraction(-1, m))) for m in range(1, P + 2)}
    n_hi = plan_windows(P, 1, n_lo, target)
    need = max(m * n_hi[m] for m in n_hi) + 1
    if min(s.hi for s in F0) < need:
        raise TruncationError(f"family known only below q^{min(s.hi for s in F0)}, need {need}")
    E = ExponentTable(1, P)
    twist = {}
    for m in range(1, P + 2):
        E.win[m] = (n_lo[m], n_hi[m])
        for n in E.grid(m):
            data = []
            for j in range(N):
                c = F0[j].coeff(m * n)
                if c:
                    data.append((Fraction(j, N), c))
            if data:
                twist[(m, n)] = data
    return E, twist


def _table_min_valuation(F: VVMFTable) -> Fraction:
    vals = [F[i, k].valuation() for i in range(F.N) for k in range(F.N) if F[i, k].terms]
    return min(vals)


def prod2_exponents(F: VVMFTable, P: int, target) -> ExponentTable:
    """c(m, n) = c_{m mod N, Nn mod N}(mn) on a rectangle exact below ``target``."""
    N = F.N
    vmin = min(_table_min_valuation(F), Fraction(0))
    n_lo = {m: Fraction(math.ceil(vmin * N / m), N) for m in range(1, P + 2)}
    n_hi = plan_windows(P, N, n_lo, target)
    need = max(m * n_hi[m] for m in n_hi)
    if F.hi <= need:
        raise TruncationError(f"table known only below q^{F.hi}, need beyond {need}")
    E = ExponentTable(N, P)
    for m in range(1, P + 2):
        E.win[m] = (n_lo[m], n_hi[m])
        for n in E.grid(m):
            c = F[m % N, int(n * N) % N].coeff(m * n)
            if c:
                E.values[(m, n)] = c
    return E


def prod2_table_trunc(N: int, P: int, target, vmin=Fraction(-1)) -> Fraction:
    """Table truncation needed by :func:`prod2_exponents`."""
    n_lo = {m: Fraction(math.ceil(vmin * N / m), N) for m in range(1, P + 2)}
    n_hi = plan_windows(P, N, n_lo, target)
    return max(m * n_hi[m] for m in n_hi) + 1


def compare_bi(rep: Report, check: str, name: str, par: str, lhs: BiSeries, rhs: BiSeries, mixed_only=False):
    """Row-by-row comparison; records one row per p-degree."""
    pmax = min(lhs.pmax, rhs.pmax)
    ok = True
    for m in range(min(lhs.pmin, rhs.pmin), pmax + 1):
        a = lhs.rows.get(m, PuiseuxSeries.zero())
        b = rhs.rows.get(m, PuiseuxSeries.zero())
        d = a.first_difference(b)
        top = min(a.hi, b.hi)
        rep.add(check, name, f"{par},p^{m},q<{top}", None if d is None else (f"p^{m}q^{d[0]}", d[1]))
        ok = ok and d is None
    return ok


def verify_prod1(entry: ClassEntry, P: int, trunc, entries=None) -> Report:
    """f(1,g,sigma) - f(1,g,tau) = p^-1 prod (1 - e(j/N) p^m q^n)^{c_{0,j}(mn)}."""
    trunc = Fraction(trunc)
    n_lo = {m: Fraction(math.ceil(Fraction(-1, m))) for m in range(1, P + 2)}
    n_hi = plan_windows(P, 1, n_lo, trunc)
    need = max(m * n_hi[m] for m in n_hi) + 1
    fam = family_of(entry, entries, trunc=max(need, P + 2))
    f = fam.f(1)
    lhs = lhs_difference(f, f, P, trunc)
    E, twist = prod1_twist(fam, P, trunc)
    rhs = borcherds_product(E, twist)
    rep = Report()
    compare_bi(rep, "prod1", entry.name, params(P=P), lhs, rhs)
    return rep


def verify_prod2(entry: ClassEntry, P: int, trunc, entries=None, table: VVMFTable | None = None) -> Report:
    """f(sigma) - F-hat_{1,0}(tau) = p^-1 prod (1 - p^m q^n)^{c_{m,Nn}(mn)}, plus the extraction cross-check."""
    trunc = Fraction(trunc)
    N = entry.level
    if table is None:
        need = prod2_table_trunc(N, P, trunc)
        fam = family_of(entry, entries, trunc=need)
        table = build_hat_table(fam, need, entry.name)
    F = dft_rows(table)
    E = prod2_exponents(F, P, trunc)
    f = table[0, 1]
    lhs = lhs_difference(f, table[1, 0], P, trunc)
    rhs = borcherds_product(E)
    rep = Report()
    compare_bi(rep, "prod2", entry.name, params(P=P), lhs, rhs)
    # extraction from the left side must reproduce the DFT exponents
    X = extract_exponents(lhs, N)
    bad = None
    for m in range(1, P + 2):
        if m not in X.win:
            continue
        for n in X.grid(m):
            if n > E.win[m][1]:
                break
            if X.get(m, n) != E.get(m, n):
                bad = (f"c({m},{n})", f"{X.get(m, n)} vs {E.get(m, n)}")
                break
        if bad:
            break
    rep.add("prod2-extract", entry.name, params(P=P), bad)
    return rep


def orbifold_Z(F: VVMFTable, k: int, l: int, trunc=None) -> PuiseuxSeries:
    """Z(g^k, g^l, tau) = sum_r e(lr/N) F_{k,r}, i.e. the entry F-hat_{k,l}."""
    N = F.N
    out = ps_sum(F[k, r] * root_of_unity(Fraction(l * r, N)) for r in range(N))
    return out if trunc is None else out.truncate(trunc)


def logp_series(T: VVMFTable, P: int, i: int = 0, j: int = 1, trunc=None) -> BiSeries:
    """-sum_{m <= P} (1/m) (m T_m F-hat)_{i,j} p^m as a bi-series."""
    rows = {0: PuiseuxSeries.zero(INF)}
    for m in range(1, P + 1):
        rows[m] = hecke_equivariant(T, m, i, j, trunc) * Fraction(-1, m)
    return BiSeries(rows, 0, P)


def greedy_exponents(B: BiSeries, N: int) -> ExponentTable:
    """Peel factors off p*B row by row: after rows < m are cleared, row m is -sum_n c(m, n) q^n."""
    R = B.shift_p(1)
    r0 = R.rows.get(0)
    if r0 is None or r0.terms != {0: 1}:
        raise ExtractionError("p*B must have p^0 coefficient 1")
    E = ExponentTable(N, R.pmax - 1)
    for m in range(1, R.pmax + 1):
        row = R.rows.get(m, PuiseuxSeries.zero())
        found = {}
        for n, c in row.items():
            c = normalize(-c)
            if isinstance(c, CycNumber) or Fraction(c).denominator != 1:
                raise ExtractionError(f"non-integral exponent at (m, n) = ({m}, {n}): {c}")
            found[n] = c
        lo = min(found, default=Fraction(0))
        E.win[m] = (lo, Fraction(math.ceil(row.hi * N) - 1, N) if row.hi != INF else INF)
        for n, c in found.items():
            E.values[(m, n)] = c
            R = bs_mul_binomial(R, m, n, 1, -c)
    return E
