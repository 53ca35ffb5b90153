import math
from fractions import Fraction

import pytest
from hypothesis import assume, given, strategies as st

from moonprod.catalog import family_of, get_class, shipped_catalog
from moonprod.lattice import (
    INFINITY,
    B2,
    LatticeError,
    LatticeVector,
    cusp,
    cusp_to_vector,
    disc_identify,
    disc_lift,
    phi0_constant,
    phiK_value,
    project_FK_F0,
    qform,
    pairing,
    quadratic_divisor,
    vector_to_cusp,
    weyl_vector,
)
from moonprod.modforms import J_series
from moonprod.series_core import PuiseuxSeries
from moonprod.vvmf import build_hat_table, dft_rows

ints = st.integers(-20, 20)


def test_qform_and_pairing():
    v = LatticeVector(1, 2, 3, 4)
    assert qform(v) == 14
    assert pairing(v, v) == 2 * qform(v)
    assert pairing(LatticeVector(1, 0, 0, 0), LatticeVector(0, 1, 0, 0)) == 1


@given(st.integers(1, 12), ints, ints, ints, ints, ints, ints, ints, ints)
def test_disc_identify_is_isomorphism(N, a1, b1, c1, d1, a2, b2, c2, d2):
    u = LatticeVector(Fraction(a1, N), b1, c1, d1)
    v = LatticeVector(Fraction(a2, N), b2, c2, d2)
    iu, ku = disc_identify(u, N)
    iv, kv = disc_identify(v, N)
    assert disc_identify(u + v, N) == ((iu + iv) % N, (ku + kv) % N)
    # the quadratic value ik/N is respected modulo 1
    assert (qform(u) - Fraction(iu * ku, N)).denominator == 1
    assert disc_identify(disc_lift(iu, ku, N), N) == (iu, ku)
    assert (u - disc_lift(iu, ku, N)).in_lattice(N) == True


def test_disc_identify_rejects_non_dual():
    with pytest.raises(LatticeError):
        disc_identify(LatticeVector(Fraction(1, 5), 0, 0, 0), 3)


fractions_or_inf = st.one_of(
    st.just("oo"),
    st.builds(Fraction, st.integers(-30, 30), st.integers(1, 30)),
)


@given(fractions_or_inf, fractions_or_inf)
def test_cusp_roundtrip(p1, p2):
    v = cusp_to_vector(p1, p2)
    assert qform(v) == 0
    assert math.gcd(*(int(x) for x in v.coords())) == 1
    assert vector_to_cusp(v) == (cusp(p1), cusp(p2))


def test_cusp_examples():
    assert cusp_to_vector("oo", "oo").coords() == (1, 0, 0, 0)
    assert cusp_to_vector(0, 0).coords() == (0, -1, 0, 0)
    assert cusp((2, -4)) == (-1, 2)
    assert vector_to_cusp(LatticeVector(0, 0, 1, 0)) == ((0, 1), INFINITY)
    with pytest.raises(LatticeError):
        vector_to_cusp(LatticeVector(1, 1, 0, 0))


@given(ints, ints, ints, ints, st.builds(Fraction, ints, st.integers(1, 9)))
def test_divisor_contains_its_graph(a, b, c, d, z2):
    lam = LatticeVector(a, b, c, d)
    assume(qform(lam) < 0 and b * z2 + d != 0)
    D = quadratic_divisor(lam)
    assert D.contains(D.z1(z2), z2)
    assert not D.contains(D.z1(z2) + 1, z2) or b * z2 + d == 0 or (b == 0 and d == 0)


def test_empty_divisor():
    with pytest.raises(LatticeError, match="empty divisor"):
        quadratic_divisor(LatticeVector(1, 1, 0, 0))


@pytest.mark.parametrize("entry", shipped_catalog(), ids=lambda e: e.name)
def test_projections(entry):
    N = entry.level
    F = dft_rows(build_hat_table(family_of(entry, trunc=2), 2, entry.name))
    scalar = project_FK_F0(F, LatticeVector(1, 0, 0, 0))
    split = project_FK_F0(F, LatticeVector(0, 0, 1, 0))
    J = J_series(2)
    # F_0 is the trace of the identity, the normalized j-function
    for pr in (scalar, split):
        assert pr.F0.agrees_with(J)
    assert scalar.FK[()].agrees_with(J)
    assert len(split.FK) == N * N and len(split.span) == N
    with pytest.raises(LatticeError):
        project_FK_F0(F, LatticeVector(1, 1, 0, 0))


def test_bernoulli():
    assert B2(0) == Fraction(1, 6)
    assert B2(Fraction(1, 2)) == Fraction(-1, 12)
    assert B2(Fraction(5, 4)) == B2(Fraction(1, 4))


def test_phi0_and_weyl_examples():
    J = J_series(2)
    assert phi0_constant(J) == -8
    assert weyl_vector({Fraction(0): J}, J) == (0, -1)
    const = PuiseuxSeries.constant(24)
    assert phi0_constant(const) == 8
    assert weyl_vector({Fraction(0): const}, const) == (1, 1)
    assert phiK_value(1, Fraction(1, 2), {Fraction(0): J}, J).coeff == -4
    assert str(phiK_value(1, Fraction(1, 2), {Fraction(0): J}, J)) == "-4*sqrt(2)*pi"
    with pytest.raises(LatticeError):
        phiK_value(1, -1, {}, J)


def test_phiK_homogeneous():
    J = J_series(2)
    span = {Fraction(0): J + 3, Fraction(1, 2): PuiseuxSeries.constant(2)}
    a = phiK_value(1, Fraction(1, 2), span, J).coeff
    b = phiK_value(3, Fraction(3, 2), span, J).coeff
    assert b == 3 * a
