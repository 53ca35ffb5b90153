from fractions import Fraction

import pytest

from moonprod.catalog import get_class, shipped_catalog
from moonprod.gkm import (
    RHO,
    Case,
    GKMError,
    cartan_from_exponents,
    classify_fricke,
    homology_degree_filter,
    pairing,
    twisted_denominator_check,
    twisted_sides,
    verify_denominator,
    verify_twisted_conjugacy,
    verify_twisted_galois,
    _denominator_data,
)
from moonprod.products import ExponentTable
from moonprod.series_core import CycNumber, INF


def cartan(name, P=3, trunc=3):
    entry = get_class(name)
    _, _, E = _denominator_data(entry, P, trunc)
    bound = min(Fraction(trunc), E.win[1][1]) if entry.fricke else Fraction(P + 1)
    return cartan_from_exponents(entry, E, bound)


def test_pairing_normalization():
    for N in (1, 2, 3, 9):
        real = (1, Fraction(-1, N))
        assert pairing(N, real, real) == 2
        alpha = (-1, Fraction(1, N))
        assert pairing(N, RHO, alpha) == pairing(N, alpha, alpha) / 2


def test_cartan_1A():
    C = cartan("1A")
    assert C.case is Case.FRICKE
    assert C.real_roots() == [(1, Fraction(-1))]
    assert C.simple[(1, Fraction(1))] == 196884
    assert C.entry((1, Fraction(1)), (1, Fraction(2))) == -3
    assert C.entry((1, Fraction(1)), (1, Fraction(1))) == -2
    assert not C.problems()


def test_cartan_2B_block():
    C = cartan("2B")
    assert C.case is Case.NONFRICKE and not C.real_roots()
    zero_block = [d for d in C.degrees() if d[1] == 0]
    assert zero_block
    for a in zero_block:
        for b in zero_block:
            assert C.entry(a, b) == 0


def test_cartan_3C_real_root():
    C = cartan("3C")
    assert C.N == 9
    assert C.real_roots() == [(1, Fraction(-1, 9))]
    assert C.simple[(1, Fraction(-1, 9))] == 1


def test_negative_multiplicity_rejected():
    E = ExponentTable(1, 2, {(1, Fraction(-1)): 1, (1, Fraction(1)): -5}, {1: (Fraction(-1), INF), 2: (Fraction(0), INF)})
    with pytest.raises(GKMError, match="not a GKM datum"):
        cartan_from_exponents(get_class("1A"), E, 2)
    E = ExponentTable(2, 2, {(1, Fraction(-1, 2)): 1, (1, Fraction(0)): 3}, {1: (Fraction(-1, 2), INF)})
    with pytest.raises(GKMError, match="unexpected simple root"):
        cartan_from_exponents(get_class("2A"), E, 1)


def test_homology_filter():
    for N in (1, 2, 3):
        ds = homology_degree_filter(N, 3)
        assert (2, Fraction(0)) in ds and (1, Fraction(1, N)) in ds
        assert (2, Fraction(1, N)) not in ds
        assert all(m == 1 or n == 0 for m, n in ds)


@pytest.mark.parametrize("entry", shipped_catalog(), ids=lambda e: e.name)
def test_classify_matches_catalog(entry):
    want = Case.FRICKE if entry.fricke else Case.NONFRICKE
    assert classify_fricke(entry) is want


@pytest.mark.parametrize("name", ["1A", "2B", "3C"])
def test_denominator_identity(name):
    rep = verify_denominator(get_class(name), 4, 3)
    assert rep.passed, rep.failures()[:2]
    assert {r.check for r in rep.rows} >= {"cartan", "denom", "denom-lhs"}


@pytest.mark.parametrize("name,l", [("3C", 0), ("3C", 1), ("2B", 1), ("2A", 1)])
def test_twisted_identity(name, l):
    rep, _ = twisted_denominator_check(get_class(name), l, 2, 2)
    assert rep.passed, rep.failures()[:2]


def test_twisted_3C_has_cyclotomic_coefficients():
    lhs, rhs, tw = twisted_sides(get_class("3C"), 1, 2, 2)
    coeffs = [c for r in rhs.rows.values() for _, c in r.items()]
    assert any(isinstance(c, CycNumber) for c in coeffs)
    # untwisted traces are the plain multiplicities
    assert tw.trace(0, 1, Fraction(1, 9)) == tw.E.get(1, Fraction(1, 9))


def test_twisted_conjugacy_3C():
    assert verify_twisted_conjugacy(get_class("3C"), 1, 2, 2).passed


def test_twisted_galois_3C():
    assert verify_twisted_galois(get_class("3C"), 1, 2, 2, 2).passed
    assert verify_twisted_galois(get_class("3C"), 2, 4, 2, 2).passed
    with pytest.raises(ValueError):
        verify_twisted_galois(get_class("3C"), 1, 3, 2, 2)
