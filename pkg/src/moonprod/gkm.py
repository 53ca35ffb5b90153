"""Cartan data read off product exponents, the simple-root side of the
denominator identity, and its twisted variants for cyclic h = g^l.

Conventions: a degree (m, n) stands for p^m q^n.  Degrees pair by
(r, r') = -(m N n' + N n m'), which makes the real simple root of a Fricke
class have norm 2.  The Weyl vector is rho = (-1, 0), so e(rho) = p^-1, and a
simple root of degree (m, n) is the vector alpha = -(m, n), i.e.
e(-alpha) = p^m q^n.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .catalog import ClassEntry, family_of
from .modforms import expr_expand
from .products import (
    ExponentTable,
    borcherds_product,
    compare_bi,
    extract_exponents,
    hecke_equivariant,
    lhs_difference,
    prod2_exponents,
    prod2_table_trunc,
)
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
    normalize,
    ps_substitute,
    ps_sum,
    root_of_unity,
)
from .vvmf import S_MATRIX, VVMFTable, build_hat_table, dft_rows


class Case(enum.Enum):
    FRICKE = "Fricke"
    NONFRICKE = "NonFricke"


class GKMError(ValueError):
    pass


Degree = tuple  # (m: int, n: Fraction)


def pairing(N: int, r: Degree, s: Degree) -> Fraction:
    (m, n), (m2, n2) = r, s
    return -(m * N * Fraction(n2) + N * Fraction(n) * m2)


RHO = (-1, Fraction(0))


@dataclass
class CartanData:
    case: Case
    N: int
    simple: dict = field(default_factory=dict)  # degree -> multiplicity
    bound: Fraction = Fraction(0)

    def entry(self, r: Degree, s: Degree) -> Fraction:
        """Cartan entry between simple roots of degrees r and s."""
        return pairing(self.N, r, s)

    def degrees(self) -> list:
        return sorted(d for d, k in self.simple.items() if k)

    def matrix(self) -> tuple[list, list[list[Fraction]]]:
        ds = self.degrees()
        return ds, [[self.entry(a, b) for b in ds] for a in ds]

    def real_roots(self) -> list:
        return [d for d in self.degrees() if self.entry(d, d) > 0]

    def problems(self) -> list[str]:
        out = []
        ds, A = self.matrix()
        for i, a in enumerate(ds):
            for j, b in enumerate(ds):
                if A[i][j] != A[j][i]:
                    out.append(f"asymmetric entry at {a}, {b}")
                if i != j and A[i][j] > 0:
                    out.append(f"positive off-diagonal entry {A[i][j]} at {a}, {b}")
            if A[i][i] > 0 and A[i][i] != 2:
                out.append(f"positive diagonal entry {A[i][i]} at {a}")
        real = self.real_roots()
        if self.case is Case.FRICKE:
            want = (1, Fraction(-1, self.N))
            if real != [want] or self.simple.get(want) != 1:
                out.append(f"expected one real simple root at {want}, found {real}")
        elif real:
            out.append(f"unexpected real simple roots {real}")
        if self.case is Case.NONFRICKE:
            for a in ds:
                for b in ds:
                    if a[1] == 0 and b[1] == 0 and self.entry(a, b) != 0:
                        out.append(f"nonzero (m,0) block entry at {a}, {b}")
        for d in ds:
            alpha = (-d[0], -d[1])
            if pairing(self.N, RHO, alpha) != pairing(self.N, alpha, alpha) / 2:
                out.append(f"Weyl vector condition fails at {d}")
        return out


def cartan_from_exponents(entry: ClassEntry, E: ExponentTable, bound, case: Case | None = None) -> CartanData:
    """Simple roots: row c(1, .) and, for non-Fricke classes, column c(., 0), up to ``bound``."""
    case = case or (Case.FRICKE if entry.fricke else Case.NONFRICKE)
    bound = Fraction(bound)
    N = E.N
    C = CartanData(case, N, bound=bound)
    lo, hi = E.win[1]
    if hi != INF and hi < bound:
        raise TruncationError(f"row 1 known only up to q^{hi}")
    k = math.ceil(lo * N)
    while Fraction(k, N) <= bound:
        n = Fraction(k, N)
        c = E.get(1, n)
        if c:
            if c < 0:
                raise GKMError(f"not a GKM datum: multiplicity {c} at degree (1, {n})")
            if case is Case.FRICKE and n <= 0 and n != Fraction(-1, N):
                raise GKMError(f"not a GKM datum: unexpected simple root at degree (1, {n})")
            if case is Case.NONFRICKE and n < 0:
                raise GKMError(f"not a GKM datum: pole at degree (1, {n}) for a non-Fricke class")
            C.simple[(1, n)] = c
        k += 1
    if case is Case.NONFRICKE:
        for m in range(2, int(bound) + 1):
            if m not in E.win:
                break
            c = E.get(m, 0)
            if c:
                if c < 0:
                    raise GKMError(f"not a GKM datum: multiplicity {c} at degree ({m}, 0)")
                C.simple[(m, Fraction(0))] = c
    bad = C.problems()
    if bad:
        raise GKMError(f"not a GKM datum: {bad[0]}")
    return C


def homology_degree_filter(N: int, bound: int) -> list[Degree]:
    """Degrees r = (m, n), 0 < m <= bound, |n| <= bound, with (r, r + 2 rho) = 0."""
    out = []
    for m in range(1, bound + 1):
        for k in range(-bound * N, bound * N + 1):
            r = (m, Fraction(k, N))
            r2 = (m + 2 * RHO[0], r[1] + 2 * RHO[1])
            if pairing(N, r, r2) == 0:
                out.append(r)
    expected = {(m, Fraction(0)) for m in range(1, bound + 1)}
    expected |= {(1, Fraction(k, N)) for k in range(-bound * N, bound * N + 1)}
    if set(out) != expected:
        raise AssertionError("homology filter does not reduce to (m,0) and (1,n) degrees")
    return out


def classify_fricke(entry: ClassEntry, trunc=4) -> Case:
    """Fricke if T(-1/(N tau)) = T(tau); otherwise T(-1/tau) must be regular at zero."""
    trunc = Fraction(trunc)
    N = entry.level
    at_s = expr_expand(entry.expr, S_MATRIX, Fraction(trunc, N) + 1)
    fricke = ps_substitute(at_s, N, 0, 1).truncate(trunc)
    T = expr_expand(entry.expr, trunc=trunc)
    if fricke.agrees_with(T, trunc):
        return Case.FRICKE
    if at_s.terms and at_s.lo >= 0:
        return Case.NONFRICKE
    raise GKMError("unclassifiable at this truncation")


# ---------------------------------------------------------------------------
# the two sides


def _row1_sum(E: ExponentTable, l: int, qwin) -> PuiseuxSeries:
    """sum_n e(l n) c(1, n) q^n below ``qwin``."""
    parts = {}
    for n in E.grid(1):
        if n >= qwin:
            break
        c = E.get(1, n)
        if c:
            parts[n] = c * root_of_unity(l * n) if l else c
    return PuiseuxSeries.from_dict(parts, hi=Fraction(qwin))


def simple_root_side(C: CartanData, P: int, trunc) -> BiSeries:
    """Weyl-alternating sum of simple-root data, exact on p-rows -1..P and q below ``trunc``.

    Fricke: f(p) - f(q^(1/N)) with f(x) = sum_n c(1, n) x^(Nn).
    Non-Fricke: p^-1 prod_m (1 - p^m)^c(m, 0) - sum_{n != 0} c(1, n) q^n.
    """
    trunc = Fraction(trunc)
    N = C.N
    mult = C.simple
    if C.case is Case.FRICKE:
        if C.bound < Fraction(P, N):
            raise TruncationError(f"simple roots known only to degree (1, {C.bound})")
        rows = {}
        for m in range(-1, P + 1):
            rows[m] = PuiseuxSeries.constant(mult.get((1, Fraction(m, N)), 0))
        q = PuiseuxSeries.from_dict({n: c for (one, n), c in mult.items() if n < trunc}, hi=min(trunc, C.bound + Fraction(1, N)))
        rows[0] = rows[0] - q
        return BiSeries(rows, -1, P)
    if C.bound < P + 1:
        raise TruncationError(f"simple roots known only to degree ({C.bound}, 0)")
    B = BiSeries({-1: PuiseuxSeries.constant(1)}, -1, P)
    for m in range(1, P + 2):
        c = mult.get((m, Fraction(0)), 0)
        B = bs_mul_binomial(B, m, 0, 1, c)
    rows = dict(B.rows)
    q = PuiseuxSeries.from_dict({n: c for (one, n), c in mult.items() if one == 1 and 0 < n < trunc},
                                hi=min(trunc, C.bound + Fraction(1, N)))
    rows[0] = rows.get(0, PuiseuxSeries.zero()) - q
    return BiSeries(rows, -1, P)


def _denominator_data(entry: ClassEntry, P: int, trunc, entries=None, margin: int = 2):
    """Table, left side and extracted exponents with windows wide enough for ``trunc``."""
    trunc = Fraction(trunc)
    N = entry.level
    W = trunc + P + margin
    need = max(W, Fraction(P + 2, N) + 1) + 1
    fam = family_of(entry, entries, trunc=need)
    table = build_hat_table(fam, need, entry.name)
    lhs = lhs_difference(table[0, 1], table[1, 0], P, W)
    E = extract_exponents(lhs, N)
    return table, lhs, E


def verify_denominator(entry: ClassEntry, P: int, trunc, entries=None) -> Report:
    """Simple-root side vs the product over extracted exponents (and vs the left side)."""
    trunc = Fraction(trunc)
    N = entry.level
    rep = Report()
    _, lhs, E = _denominator_data(entry, P, trunc, entries)
    case = Case.FRICKE if entry.fricke else Case.NONFRICKE
    try:
        bound = max(Fraction(P, N), trunc) if case is Case.FRICKE else Fraction(P + 1)
        bound = min(bound, E.win[1][1])
        C = cartan_from_exponents(entry, E, bound, case)
    except (GKMError, TruncationError) as exc:
        rep.add("cartan", entry.name, params(P=P), ("datum", str(exc)))
        return rep
    rep.add("cartan", entry.name, params(P=P, simple_roots=len(C.degrees())), None)
    S = simple_root_side(C, P, trunc)
    prod = borcherds_product(E, P=P)
    compare_bi(rep, "denom", entry.name, params(P=P, case=case.value), _clip(S, trunc), _clip(prod, trunc))
    compare_bi(rep, "denom-lhs", entry.name, params(P=P), _clip(S, trunc), _clip(lhs, trunc))
    short = [m for m, r in prod.rows.items() if r.hi < trunc]
    if short:
        rep.add("denom-window", entry.name, params(P=P), (f"p^{short[0]}", f"q<{prod.rows[short[0]].hi}"))
    return rep


def _clip(B: BiSeries, trunc) -> BiSeries:
    return BiSeries({m: r.truncate(trunc) for m, r in B.rows.items()} | {
        m: PuiseuxSeries.zero(trunc) for m in range(B.pmin, B.pmax + 1) if m not in B.rows}, B.pmin, B.pmax)


# ---------------------------------------------------------------------------
# twisted identities


@dataclass(frozen=True)
class TwistCharacterData:
    """Tr(g^l | V^{m,n}) = e(l n) c_{m, Nn}(mn) from a multiplicity table."""

    N: int
    E: ExponentTable

    def trace(self, l: int, m: int, n) -> Number:
        n = Fraction(n)
        c = self.E.get(m, n)
        return c * root_of_unity(l * n) if c and l % self.N else c


def twisted_sides(entry: ClassEntry, l: int, P: int, trunc, entries=None,
                  table: VVMFTable | None = None) -> tuple[BiSeries, BiSeries, TwistCharacterData]:
    trunc = Fraction(trunc)
    N = entry.level
    if table is None:
        need = prod2_table_trunc(N, P, trunc)
        fam = family_of(entry, entries, trunc=need)
        table = build_hat_table(fam, need, entry.name)
    F = dft_rows(table)
    E = prod2_exponents(F, P, trunc)
    tw = TwistCharacterData(N, E)
    twist = {}
    for m in range(1, P + 2):
        for n in E.grid(m):
            c = E.get(m, n)
            if c:
                twist[(m, n)] = [(l * n, c)]
    rhs = borcherds_product(E, twist)
    rows = {}
    if entry.fricke:
        # Tr(h | V^{1,-1/N}) Tr(h | V^{m,1/N}) = c(m, 1/N)
        rows[-1] = PuiseuxSeries.constant(1)
        for m in range(1, P + 1):
            rows[m] = PuiseuxSeries.constant(normalize(tw.trace(l, 1, Fraction(-1, N)) * tw.trace(l, m, Fraction(1, N))))
        rows[0] = -_row1_sum(E, l, trunc)
        lhs = BiSeries(rows, -1, P)
    else:
        B = BiSeries({-1: PuiseuxSeries.constant(1)}, -1, P)
        for m in range(1, P + 2):
            B = bs_mul_binomial(B, m, 0, 1, tw.trace(l, m, 0))
        rows = dict(B.rows)
        q = _row1_sum(E, l, trunc)
        q = PuiseuxSeries.from_dict({e: c for e, c in q.items() if e != 0}, hi=q.hi)
        rows[0] = rows.get(0, PuiseuxSeries.zero()) - q
        lhs = BiSeries(rows, -1, P)
    return lhs, rhs, tw


def hecke_log_side(table: VVMFTable, l: int, P: int, trunc) -> BiSeries:
    """-sum_{M <= P+1} (1/M) (M T_M F-hat)_{1,l} p^M: the logarithm of p times the twisted product."""
    rows = {0: PuiseuxSeries.zero(INF)}
    for M in range(1, P + 2):
        rows[M] = hecke_equivariant(table, M, 1, l, trunc) * Fraction(-1, M)
    return BiSeries(rows, 0, P + 1)


def twisted_denominator_check(entry: ClassEntry, l: int, P: int, trunc, entries=None) -> tuple[Report, BiSeries]:
    """Both sides of the twisted identity for h = g^l, plus the Hecke-sum oracle for the log side.

    Returns the report and the (clipped) left side, so callers can compare l with N - l.
    """
    trunc = Fraction(trunc)
    N = entry.level
    need = prod2_table_trunc(N, P, trunc)
    fam = family_of(entry, entries, trunc=max(need, (P + 1) * trunc + 1))
    table = build_hat_table(fam, max(need, (P + 1) * trunc + 1), entry.name)
    lhs, rhs, _ = twisted_sides(entry, l, P, trunc, table=table)
    rep = Report()
    par = params(l=l, P=P)
    compare_bi(rep, "twisted", entry.name, par, _clip(lhs, trunc), _clip(rhs, trunc))
    logs = bs_log(rhs.shift_p(1))
    oracle = hecke_log_side(table, l, P, trunc)
    compare_bi(rep, "twisted-log", entry.name, par, _clip(logs, trunc), _clip(oracle, trunc))
    return rep, _clip(lhs, trunc)


def verify_twisted_conjugacy(entry: ClassEntry, l: int, P: int, trunc, entries=None) -> Report:
    """Reports for l and N - l are Galois-conjugate: the left sides are complex conjugates."""
    N = entry.level
    _, a = twisted_denominator_check(entry, l, P, trunc, entries)
    _, b = twisted_denominator_check(entry, (N - l) % N, P, trunc, entries)
    rep = Report()
    d = a.conjugate().first_difference(b)
    rep.add("twisted-conjugate", entry.name, params(l=l, P=P), None if d is None else (f"p^{d[0][0]}q^{d[0][1]}", d[1]))
    return rep


def verify_twisted_galois(entry: ClassEntry, l: int, a: int, P: int, trunc, entries=None) -> Report:
    """zeta -> zeta^a carries the left side for g^l to the one for g^(al) (a a unit mod N)."""
    N = entry.level
    if math.gcd(a, N) != 1:
        raise ValueError(f"{a} is not a unit modulo {N}")
    _, x = twisted_denominator_check(entry, l, P, trunc, entries)
    _, y = twisted_denominator_check(entry, (a * l) % N, P, trunc, entries)
    moved = x.map_rows(lambda r: r.map_coeffs(lambda c: c.galois(a) if isinstance(c, CycNumber) else c))
    d = moved.first_difference(y)
    rep = Report()
    rep.add("twisted-galois", entry.name, params(l=l, a=a, P=P),
            None if d is None else (f"p^{d[0][0]}q^{d[0][1]}", d[1]))
    return rep
