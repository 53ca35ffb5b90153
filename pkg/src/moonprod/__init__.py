"""Exact q-series machinery for equivariant Borcherds products attached to monster classes."""
from .catalog import ClassEntry, Family, family_of, get_class, load_catalog, shipped_catalog
from .modforms import ModularExpr, expr_expand, parse_expr
from .products import (
    ExponentTable,
    FaberPoly,
    borcherds_product,
    extract_exponents,
    faber_polynomial,
    hecke_equivariant,
    lhs_difference,
    verify_hecke_monic,
    verify_prod1,
    verify_prod2,
)
from .report import Report
from .series_core import BiSeries, CycNumber, PuiseuxSeries, TruncationError, root_of_unity
from .vvmf import VVMFTable, build_hat_table, dft_rows, idft_rows

__all__ = [
    "BiSeries",
    "ClassEntry",
    "CycNumber",
    "ExponentTable",
    "FaberPoly",
    "Family",
    "ModularExpr",
    "PuiseuxSeries",
    "Report",
    "TruncationError",
    "VVMFTable",
    "borcherds_product",
    "build_hat_table",
    "dft_rows",
    "expr_expand",
    "extract_exponents",
    "faber_polynomial",
    "family_of",
    "get_class",
    "hecke_equivariant",
    "idft_rows",
    "lhs_difference",
    "load_catalog",
    "parse_expr",
    "root_of_unity",
    "shipped_catalog",
    "verify_hecke_monic",
    "verify_prod1",
    "verify_prod2",
]
