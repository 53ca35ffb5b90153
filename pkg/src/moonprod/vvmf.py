"""The trace table F-hat_{i,j} = f_((i,j,N))(A tau) and its row-wise Fourier
transform F, a vector-valued modular function for the discriminant form
(Z/N)^2 with quadratic value ik/N.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .catalog import Family
from .modforms import _ext_gcd, expr_expand
from .report import Report, params
from .series_core import (
    CycNumber,
    INF,
    Number,
    PuiseuxSeries,
    TruncationError,
    literal,
    ps_substitute,
    ps_sum,
    root_of_unity,
)

TRACE = "trace"
MULTIPLICITY = "multiplicity"

S_MATRIX = ((0, -1), (1, 0))


@dataclass(frozen=True)
class VVMFTable:
    N: int
    kind: str
    entries: tuple  # N x N tuple of PuiseuxSeries
    name: str = ""

    def __getitem__(self, ij) -> PuiseuxSeries:
        i, j = ij
        return self.entries[i % self.N][j % self.N]

    def row(self, i: int) -> tuple:
        return self.entries[i % self.N]

    @property
    def hi(self):
        return min(s.hi for r in self.entries for s in r)

    def truncate(self, hi) -> "VVMFTable":
        return VVMFTable(self.N, self.kind, tuple(tuple(s.truncate(hi) for s in r) for r in self.entries), self.name)

    def support(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.N) for j in range(self.N) if self[i, j].terms]


def canonical_lift(i: int, j: int, N: int) -> tuple[tuple[tuple[int, int], tuple[int, int]], int]:
    """SL2(Z) matrix A with bottom row = (i, j)/g mod N/g, g = gcd(i, j, N); returns (A, g)."""
    i, j = i % N, j % N
    g = math.gcd(math.gcd(i, j), N)
    Np = N // g
    if Np == 1:
        return ((1, 0), (0, 1)), g
    c = (i // g) % Np
    if c == 0:
        c = Np
    d = (j // g) % Np
    while math.gcd(c, d) != 1:
        d += Np
    x, y = _ext_gcd(d, c)  # x d + y c = 1, so a d - b c = 1 with a = x, b = -y
    a, b = x, -y
    # translation-reduce: left multiplication by T^t leaves f_(g) unchanged
    t = a // c
    a, b = a - t * c, b - t * d
    return ((a, b), (c, d)), g


def _matmul(A, B):
    (a, b), (c, d) = A
    (e, f), (g, h) = B
    return ((a * e + b * g, a * f + b * h), (c * e + d * g, c * f + d * h))


def build_hat_table(fam: Family, trunc, name: str = "") -> VVMFTable:
    trunc = Fraction(trunc)
    N = fam.N
    rows = []
    for i in range(N):
        row = []
        for j in range(N):
            A, g = canonical_lift(i, j, N)
            try:
                row.append(expr_expand(fam.expr(g), A, trunc))
            except ValueError as exc:
                raise type(exc)(f"entry ({i},{j}): {exc}") from None
        rows.append(tuple(row))
    return VVMFTable(N, TRACE, tuple(rows), name)


def hat_entry_at(fam: Family, i: int, j: int, gamma, trunc) -> PuiseuxSeries:
    """F-hat_{i,j}(gamma tau) expanded directly (used for the S-law)."""
    A, g = canonical_lift(i, j, fam.N)
    return expr_expand(fam.expr(g), _matmul(A, gamma), trunc)


def dft_rows(T: VVMFTable) -> VVMFTable:
    """F_{i,k} = (1/N) sum_j e(-jk/N) F-hat_{i,j}."""
    N = T.N
    rows = []
    for i in range(N):
        row = []
        for k in range(N):
            parts = [T[i, j] * (root_of_unity(Fraction(-j * k, N)) * Fraction(1, N)) for j in range(N)]
            row.append(ps_sum(parts))
        rows.append(tuple(row))
    return VVMFTable(N, MULTIPLICITY, tuple(rows), T.name)


def idft_rows(F: VVMFTable) -> VVMFTable:
    """F-hat_{i,j} = sum_k e(jk/N) F_{i,k}."""
    N = F.N
    rows = []
    for i in range(N):
        row = []
        for j in range(N):
            row.append(ps_sum(F[i, k] * root_of_unity(Fraction(j * k, N)) for k in range(N)))
        rows.append(tuple(row))
    return VVMFTable(N, TRACE, tuple(rows), F.name)


def component_coeff(F: VVMFTable, i: int, k: int, n) -> Number:
    """c_{i,k}(n); raises TruncationError outside the window."""
    return F[i, k].coeff(Fraction(n))


def _cmp(report: Report, check: str, name: str, par: str, a: PuiseuxSeries, b: PuiseuxSeries, hi=None):
    d = a.first_difference(b, hi)
    report.add(check, name, par, None if d is None else (f"q^{d[0]}", d[1]))


def check_type_rho(F: VVMFTable, trunc, fam: Family | None = None, name: str | None = None) -> Report:
    """T-law and (given the family) S-law for a multiplicity table, compared below ``trunc``."""
    trunc = Fraction(trunc)
    name = name or F.name
    N = F.N
    rep = Report()
    # T-law and the equivalent support condition
    for i in range(N):
        for k in range(N):
            f = F[i, k].truncate(trunc)
            lhs = ps_substitute(f, 1, 1, 1)
            rhs = f * root_of_unity(Fraction(i * k, N))
            _cmp(rep, "T-law", name, params(i=i, k=k), lhs, rhs)
            bad = None
            for e, c in f.items():
                if (e - Fraction(i * k, N)).denominator != 1:
                    bad = (f"q^{e}", c)
                    break
            rep.add("T-support", name, params(i=i, k=k), bad)
    if fam is None:
        return rep
    hat = idft_rows(F)
    # S-law in the trace picture: F-hat_{i,j}(-1/tau) = F-hat_{j,-i}(tau)
    s_hat = [[hat_entry_at(fam, i, j, S_MATRIX, trunc) for j in range(N)] for i in range(N)]
    for i in range(N):
        for j in range(N):
            _cmp(rep, "S-relabel", name, params(i=i, j=j), s_hat[i][j], hat[j, -i], trunc)
    # S-law in the multiplicity picture (Gauss-sum form)
    s_tab = dft_rows(VVMFTable(N, TRACE, tuple(tuple(r) for r in s_hat), name))
    for i in range(N):
        for k in range(N):
            parts = []
            for j in range(N):
                for l in range(N):
                    if F[j, l].terms:
                        parts.append(F[j, l] * (root_of_unity(Fraction(-(j * k + i * l), N)) * Fraction(1, N)))
            rhs = ps_sum(parts) if parts else PuiseuxSeries.zero(INF)
            _cmp(rep, "S-law", name, params(i=i, k=k), s_tab[i, k], rhs, trunc)
    return rep


def check_hat_translation(T: VVMFTable, trunc=None, name: str | None = None) -> Report:
    """F-hat_{i,j}(tau + 1) = F-hat_{i,j+i}(tau) for every entry."""
    name = name or T.name
    rep = Report()
    for i in range(T.N):
        for j in range(T.N):
            _cmp(rep, "hat-T-law", name, params(i=i, j=j), ps_substitute(T[i, j], 1, 1, 1), T[i, j + i], trunc)
    return rep


def _rational_table(F: VVMFTable, only_negative=False) -> tuple[bool, tuple | None]:
    for i in range(F.N):
        for k in range(F.N):
            for e, c in F[i, k].items():
                if only_negative and e >= 0:
                    break
                if isinstance(c, CycNumber):
                    return False, (i, k, e)
    return True, None


def rationality_predicates(F: VVMFTable) -> dict:
    """Hypotheses and conclusions of the two rationality criteria, to truncation.

    * row-0 criterion: if every F_{0,k} is rational, the whole table is.
    * singular-part criterion: if all coefficients with n < 0 and the row-0
      constant terms are rational, the whole table is.
    """
    row0 = all(not isinstance(c, CycNumber) for k in range(F.N) for _, c in F[0, k].items())
    sing, where = _rational_table(F, only_negative=True)
    consts = all(not isinstance(F[0, k].coeff(0), CycNumber) for k in range(F.N)) if F.hi > 0 else False
    full, bad = _rational_table(F)
    return {
        "row0_rational": row0,
        "singular_rational": sing and consts,
        "singular_defect": where,
        "table_rational": full,
        "table_defect": bad,
        "row0_criterion_consistent": (not row0) or full,
        "singular_criterion_consistent": (not (sing and consts)) or full,
    }


def rederive_from_row0(F: VVMFTable, fam: Family, trunc) -> Report:
    """Check that the multiplicity table is determined by its row 0.

    Row 0 of F-hat (the inverse transform of row 0 of F) pins down the family
    f_(m); every other entry is then recomputed by expansion at the canonical
    lift and compared with the given table.
    """
    rep = Report()
    hat0 = idft_rows(VVMFTable(F.N, MULTIPLICITY, (F.row(0),) + tuple(
        tuple(PuiseuxSeries.zero() for _ in range(F.N)) for _ in range(F.N - 1)), F.name))
    for j in range(F.N):
        g = math.gcd(j, F.N)
        _cmp(rep, "row0-family", F.name, params(j=j), hat0[0, j], fam.series[g], trunc)
    rebuilt = dft_rows(build_hat_table(fam, trunc, F.name))
    for i in range(F.N):
        for k in range(F.N):
            _cmp(rep, "rederive", F.name, params(i=i, k=k), rebuilt[i, k], F[i, k], trunc)
    return rep


def table_tsv(T: VVMFTable) -> str:
    """Rows i, j, exponent numerator, D, coefficient."""
    lines = ["i\tj\texponent-numerator\tD\tcoefficient"]
    for i in range(T.N):
        for j in range(T.N):
            s = T[i, j]
            for k, c in s.sorted_terms():
                lines.append(f"{i}\t{j}\t{k}\t{s.D}\t{literal(c)}")
            lines.append(f"{i}\t{j}\t-\t-\twindow<{s.hi}")
    return "\n".join(lines) + "\n"
