"""Conjugacy-class entries: parsing, validation and the family f_(m) = T_{g^m}."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Iterable, Mapping, TextIO

from .modforms import EtaQuotient, ExprSyntaxError, ModularExpr, eta_positivity, expr_expand, parse_expr
from .series_core import PuiseuxSeries


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class ClassEntry:
    name: str
    order: int
    h: int
    fricke: bool
    expr: ModularExpr
    power_map: Mapping[int, str] = field(default_factory=dict)

    @property
    def level(self) -> int:
        return self.order * self.h

    def power_class(self, m: int) -> str:
        """Name of the class of g^m."""
        d = math.gcd(m, self.order)
        if d == 1:
            return self.name
        if d == self.order and self.order > 1 and d not in self.power_map:
            return "1A"
        try:
            return self.power_map[d]
        except KeyError:
            raise CatalogError(f"{self.name}: no power map entry for {d}") from None

    def series(self, trunc) -> PuiseuxSeries:
        return expr_expand(self.expr, trunc=trunc)

    def eta_quotient(self) -> EtaQuotient | None:
        return EtaQuotient.from_expr(self.expr)


@dataclass(frozen=True)
class Family:
    """f_(m) for every divisor m of N, both as expressions and expanded series."""

    N: int
    names: Mapping[int, str]
    exprs: Mapping[int, ModularExpr]
    series: Mapping[int, PuiseuxSeries]

    def f(self, m: int) -> PuiseuxSeries:
        return self.series[math.gcd(m, self.N)]

    def expr(self, m: int) -> ModularExpr:
        return self.exprs[math.gcd(m, self.N)]


def _divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def parse_catalog(text: str, validate: bool = True) -> list[ClassEntry]:
    """Parse the line-oriented catalog format (entries separated by blank lines)."""
    entries: list[ClassEntry] = []
    cur: dict | None = None
    cur_line = 0

    def flush():
        nonlocal cur
        if cur is None:
            return
        if "expr" not in cur:
            raise CatalogError(f"line {cur_line}: class {cur['name']} has no expr line")
        if any(e.name == cur["name"] for e in entries):
            raise CatalogError(f"line {cur_line}: duplicate class {cur['name']}")
        entries.append(ClassEntry(cur["name"], cur["order"], cur["h"], cur["fricke"],
                                  cur["expr"], dict(cur["power"])))
        cur = None

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("#"):
            continue
        if not line:
            flush()
            continue
        head, _, rest = line.partition(" ")
        if head == "class":
            flush()
            tok = rest.split()
            if len(tok) != 7 or tok[1] != "order" or tok[3] != "h" or tok[5] != "fricke":
                raise CatalogError(f"line {lineno}: expected 'class <name> order <n> h <h> fricke <true|false>'")
            if tok[6] not in ("true", "false"):
                raise CatalogError(f"line {lineno}: fricke flag must be true or false")
            try:
                order, h = int(tok[2]), int(tok[4])
            except ValueError:
                raise CatalogError(f"line {lineno}: order and h must be integers") from None
            if order < 1 or h < 1:
                raise CatalogError(f"line {lineno}: order and h must be positive")
            cur = {"name": tok[0], "order": order, "h": h, "fricke": tok[6] == "true", "power": {}}
            cur_line = lineno
        elif cur is None:
            raise CatalogError(f"line {lineno}: '{head}' outside a class block")
        elif head == "expr":
            try:
                cur["expr"] = parse_expr(rest)
            except (ExprSyntaxError, ValueError) as exc:
                raise CatalogError(f"line {lineno}: {exc}") from None
        elif head == "power":
            tok = rest.split()
            if len(tok) != 3 or tok[1] != "->":
                raise CatalogError(f"line {lineno}: expected 'power <m> -> <name>'")
            try:
                m = int(tok[0])
            except ValueError:
                raise CatalogError(f"line {lineno}: power index must be an integer") from None
            cur["power"][m] = tok[2]
        else:
            raise CatalogError(f"line {lineno}: unknown directive '{head}'")
    flush()
    if validate:
        for e in entries:
            problems = entry_problems(e, entries)
            if problems:
                raise CatalogError(f"class {e.name}: {problems[0]}")
    return entries


def load_catalog(source: bytes | str | TextIO | io.BufferedIOBase, validate: bool = True) -> list[ClassEntry]:
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    return parse_catalog(text, validate)


def shipped_catalog_text() -> str:
    return resources.files("moonprod").joinpath("data/monster_classes.txt").read_text("utf-8")


_SHIPPED: list[ClassEntry] | None = None


def shipped_catalog() -> list[ClassEntry]:
    global _SHIPPED
    if _SHIPPED is None:
        _SHIPPED = parse_catalog(shipped_catalog_text())
    return _SHIPPED


def catalog_index(entries: Iterable[ClassEntry]) -> dict[str, ClassEntry]:
    return {e.name: e for e in entries}


def get_class(name: str, entries: Iterable[ClassEntry] | None = None) -> ClassEntry:
    idx = catalog_index(shipped_catalog() if entries is None else entries)
    try:
        return idx[name]
    except KeyError:
        raise CatalogError(f"unknown class {name!r}") from None


def normalization_defect(s: PuiseuxSeries) -> str | None:
    """Why s is not of the form q^-1 + O(q) with integer exponents (None if it is)."""
    for e, c in s.items():
        if e >= 1:
            break
        if e.denominator != 1:
            return f"non-integral exponent {e}"
        if e == -1 and c != 1:
            return "not principally normalized (q^-1 coefficient is not 1)"
        if e < -1 or e == 0:
            return f"not principally normalized (term at q^{e})"
    if s.hi <= -1 or s.coeff(-1) != 1:
        return "not principally normalized (missing q^-1)"
    return None


def entry_problems(e: ClassEntry, entries: Iterable[ClassEntry] = ()) -> list[str]:
    """Static invariants of a catalog entry (no Hecke checks)."""
    out = []
    n, h = e.order, e.h
    if n % h or 24 % h:
        out.append(f"h = {h} must divide both the order {n} and 24")
    names = {x.name for x in entries} | {"1A"}
    for d in _divisors(n)[1:]:
        target = e.power_map.get(d)
        if target is None and d != n:
            out.append(f"power map missing divisor {d}")
        elif target is not None and target not in names:
            out.append(f"dangling power map reference {target}")
    if n > 1 and e.power_map.get(n, "1A") != "1A":
        out.append(f"power {n} must map to 1A")
    if 1 in e.power_map and e.power_map[1] != e.name:
        out.append("power 1 must map to the class itself")
    if n == 1 and e.name != "1A":
        out.append("the identity class must be named 1A")
    try:
        defect = normalization_defect(e.series(2))
    except ValueError as exc:
        defect = f"cannot expand: {exc}"
    if defect:
        out.append(defect)
    if not e.fricke:
        Q = e.eta_quotient()
        if Q is not None:
            ok, k = eta_positivity(Q)
            if not ok:
                out.append(f"eta-product positivity fails at k = {k}")
    return out


def family_of(entry: ClassEntry, entries: Iterable[ClassEntry] | None = None, trunc=10) -> Family:
    """f_(m) = T_{g^m} for each divisor m of N = order*h."""
    idx = catalog_index(shipped_catalog() if entries is None else entries)
    idx.setdefault(entry.name, entry)
    N = entry.level
    names, exprs, series = {}, {}, {}
    for m in _divisors(N):
        name = entry.power_class(m)
        if name not in idx:
            raise CatalogError(f"dangling power map reference {name}")
        target = idx[name]
        names[m] = name
        exprs[m] = target.expr
        series[m] = target.series(Fraction(trunc))
    return Family(N, names, exprs, series)
