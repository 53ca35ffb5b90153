import io

import pytest

from moonprod.catalog import (
    CatalogError,
    entry_problems,
    family_of,
    get_class,
    load_catalog,
    parse_catalog,
    shipped_catalog,
)
from moonprod.modforms import J_series

GOOD = """
# comment
class 1A order 1 h 1 fricke true
expr j - 744

class 2B order 2 h 1 fricke false
expr eta(1)^24/eta(2)^24 + 24
power 2 -> 1A
"""


def test_shipped_catalog_loads():
    names = [e.name for e in shipped_catalog()]
    assert names == ["1A", "2A", "2B", "3A", "3B", "3C", "4C"]
    for e in shipped_catalog():
        assert entry_problems(e, shipped_catalog()) == []


def test_known_coefficients():
    # 2A and 2B are the positive and negative parts of the Hecke-twisted J
    assert get_class("2A").series(3).coeff(1) == 4372
    assert get_class("2B").series(3).coeff(1) == 276
    assert get_class("2B").series(3).coeff(2) == -2048
    assert get_class("3A").series(3).coeff(1) == 783
    assert get_class("3B").series(3).coeff(1) == 54


def test_load_from_stream_and_bytes():
    a = load_catalog(io.StringIO(GOOD))
    b = load_catalog(GOOD.encode())
    assert [e.name for e in a] == [e.name for e in b] == ["1A", "2B"]
    assert a[0].series(4).agrees_with(J_series(4))


@pytest.mark.parametrize("text,msg", [
    ("class 1A order 1 h 1 fricke maybe\nexpr j - 744\n", "fricke flag"),
    ("class 1A order 1 h 1 fricke true\n", "no expr"),
    ("expr j\n", "outside a class block"),
    ("class 1A order 1 h 1 fricke true\nexpr j - 743\n", "not principally normalized"),
    ("class 2B order 2 h 5 fricke false\nexpr eta(1)^24/eta(2)^24 + 24\npower 2 -> 1A\n", "must divide"),
    ("class 2B order 2 h 1 fricke false\nexpr eta(1)^24/eta(2)^24 + 24\npower 2 -> 5Z\n", "dangling power map reference 5Z"),
    ("class 1A order 1 h 1 fricke true\nexpr j - 744\nwhat now\n", "unknown directive"),
    ("class 1A order 1 h 1 fricke true\nexpr j - 744\n\nclass 1A order 1 h 1 fricke true\nexpr j - 744\n", "duplicate"),
])
def test_rejections(text, msg):
    with pytest.raises(CatalogError, match=msg):
        parse_catalog(text)


def test_family_power_classes():
    fam = family_of(get_class("3C"))
    assert dict(fam.names) == {1: "3C", 3: "1A", 9: "1A"}
    fam = family_of(get_class("4C"))
    assert dict(fam.names) == {1: "4C", 2: "2B", 4: "1A", 8: "1A"}


def test_unknown_class():
    with pytest.raises(CatalogError):
        get_class("NOPE")
