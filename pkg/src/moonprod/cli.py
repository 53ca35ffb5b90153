"""Command-line entry point: expand series, run verification pipelines, lint catalogs."""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import gkm, lattice, products, vvmf
from .catalog import (
    CatalogError,
    ClassEntry,
    entry_problems,
    family_of,
    get_class,
    load_catalog,
    normalization_defect,
    shipped_catalog,
)
from .modforms import eta_positivity, expr_expand
from .report import Report, params
from .series_core import literal

CHECKS = ("hecke", "prod1", "prod2", "denom", "twisted", "vvmf-laws", "lattice")

DEFAULTS = {"P": 4, "jobs": 1, "hecke_n": 6, "hecke_qmax": 12, "vvmf_qmax": 3}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    catalog: str | None = None
    classes: list[str] = field(default_factory=list)
    P: int = DEFAULTS["P"]
    qmax: Fraction | None = None
    checks: list[str] = field(default_factory=list)
    out: str | None = None
    jobs: int = DEFAULTS["jobs"]

    def validate(self):
        if self.P < 1:
            raise UsageError("P must be at least 1")
        if self.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        # every shipped series has a simple pole q^-1, so the q-window must reach P
        if self.qmax is not None and self.qmax < self.P and set(self.checks) & {"prod1", "prod2", "denom", "twisted"}:
            raise UsageError(f"--qmax {self.qmax} is below P = {self.P}")
        for c in self.checks:
            if c not in CHECKS:
                raise UsageError(f"unknown check {c!r} (choose from {', '.join(CHECKS)})")


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _entries(cfg_catalog: str | None) -> list[ClassEntry]:
    if cfg_catalog is None:
        return shipped_catalog()
    with open(cfg_catalog, "rb") as fh:
        return load_catalog(fh)


# ---------------------------------------------------------------------------
# individual pipelines


def run_check(check: str, entry: ClassEntry, entries: list[ClassEntry], P: int, qmax: Fraction | None) -> Report:
    if check == "hecke":
        trunc = qmax or DEFAULTS["hecke_qmax"]
        return products.verify_hecke_monic(entry, DEFAULTS["hecke_n"], trunc, entries)
    if check == "prod1":
        return products.verify_prod1(entry, P, qmax or P, entries)
    if check == "prod2":
        return products.verify_prod2(entry, P, qmax or P, entries)
    if check == "denom":
        return gkm.verify_denominator(entry, P, qmax or P, entries)
    if check == "twisted":
        rep = Report()
        N = entry.level
        for l in range(N):
            r, _ = gkm.twisted_denominator_check(entry, l, P, qmax or P, entries)
            rep.extend(r)
        for l in range(1, N // 2 + 1):
            rep.extend(gkm.verify_twisted_conjugacy(entry, l, P, qmax or P, entries))
        return rep
    if check == "vvmf-laws":
        return _vvmf_laws(entry, entries, qmax or DEFAULTS["vvmf_qmax"])
    if check == "lattice":
        return _lattice_checks(entry, entries, qmax or DEFAULTS["vvmf_qmax"])
    raise UsageError(f"unknown check {check!r}")


def _vvmf_laws(entry: ClassEntry, entries, trunc) -> Report:
    fam = family_of(entry, entries, trunc=trunc)
    T = vvmf.build_hat_table(fam, trunc, entry.name)
    F = vvmf.dft_rows(T)
    rep = vvmf.check_type_rho(F, trunc, fam, entry.name)
    rep.extend(vvmf.check_hat_translation(T, name=entry.name))
    preds = vvmf.rationality_predicates(F)
    for key in ("row0_criterion_consistent", "singular_criterion_consistent"):
        rep.add("rationality", entry.name, key, None if preds[key] else ("table", str(preds["table_defect"])))
    rep.extend(vvmf.rederive_from_row0(F, fam, trunc))
    rep.notes.append(f"{entry.name}: {len(F.support())} nonzero multiplicity entries of {F.N * F.N}")
    return rep


def _lattice_checks(entry: ClassEntry, entries, trunc) -> Report:
    fam = family_of(entry, entries, trunc=max(trunc, 2))
    F = vvmf.dft_rows(vvmf.build_hat_table(fam, max(trunc, 2), entry.name))
    rep = Report()
    for z in SUPPORTED_Z_VECTORS:
        pr = lattice.project_FK_F0(F, lattice.LatticeVector(*z))
        par = params(z="".join(map(str, z)))
        lead = pr.F0.truncate(1)
        rep.add("F0-form", entry.name, par, None if lead.terms == {-1 * lead.D: 1} else ("F0", str(lead)))
        phi0 = lattice.phi0_constant(pr.F0)
        rep.add("phi0", entry.name, par, None if phi0 == -8 else ("phi0", str(phi0)))
        rho = lattice.weyl_vector(pr.span, pr.F0)
        rep.add("weyl-vector", entry.name, par, None if rho == (0, -1) else ("rho", str(rho)))
        for m, n in ((1, Fraction(1, 2)), (2, Fraction(1, 4)), (Fraction(1, 3), Fraction(3, 2))):
            val = lattice.phiK_value(m, n, pr.span, pr.F0)
            want = -8 * n
            rep.add("phiK", entry.name, par + f",m={m},n={n}", None if val.coeff == want else ("phiK", str(val)))
    return rep


SUPPORTED_Z_VECTORS = ((1, 0, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))


def _task(args):
    check, name, catalog, P, qmax = args
    entries = _entries(catalog)
    entry = get_class(name, entries)
    return run_check(check, entry, entries, P, qmax)


def lint_catalog(entries: list[ClassEntry], n_max: int = 6, trunc=12) -> Report:
    """Principal normalization, eta-product positivity and Hecke-monicity for each entry."""
    rep = Report()
    for e in entries:
        try:
            defect = normalization_defect(e.series(2))
        except ValueError as exc:
            defect = f"cannot expand: {exc}"
        rep.add("normalized", e.name, "-", None if defect is None else ("q-expansion", defect))
        if not e.fricke:
            Q = e.eta_quotient()
            if Q is not None:
                ok, k = eta_positivity(Q)
                rep.add("positivity", e.name, "-", None if ok else (f"k={k}", "negative exponent"))
        others = [p for p in entry_problems(e, entries) if "normalized" not in p and "positivity" not in p]
        rep.add("structure", e.name, "-", None if not others else ("entry", others[0]))
        if defect is None and not others:
            try:
                rep.extend(products.verify_hecke_monic(e, n_max, trunc, entries))
            except (ValueError, CatalogError) as exc:
                rep.add("hecke", e.name, "-", ("expansion", str(exc)))
    return rep


# ---------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--catalog", metavar="PATH", help="catalog file (default: shipped catalog)")
    common.add_argument("--config", metavar="PATH", help="JSON file with defaults for these flags")
    common.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    common.add_argument("--jobs", type=int, metavar="INT", help="parallel worker processes")

    ap = argparse.ArgumentParser(prog="moonprod", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("expand", parents=[common], help="print the q-expansion of a class")
    p.add_argument("cls", metavar="CLASS")
    p.add_argument("order", nargs="?", type=_rational, default=Fraction(10),
                   help="print exponents up to and including this one (default 10)")

    p = sub.add_parser("verify", parents=[common], help="run verification pipelines")
    p.add_argument("targets", nargs="+", metavar="[CLASS ...] CHECK",
                   help=f"classes (or 'all') followed by one of: {', '.join(CHECKS)}, all")
    p.add_argument("--class", dest="classes", action="append", metavar="NAME")
    p.add_argument("-P", type=int, dest="P", metavar="INT", help="p-truncation")
    p.add_argument("--qmax", type=_rational, metavar="RAT", help="q-truncation")

    p = sub.add_parser("catalog-lint", parents=[common], help="run the catalog acceptance gate")
    p.add_argument("path", nargs="?", help="catalog file (default: shipped catalog)")
    p.add_argument("--qmax", type=_rational, metavar="RAT", help="q-truncation for the Hecke check")

    p = sub.add_parser("vvmf", parents=[common], help="dump the trace or multiplicity table")
    p.add_argument("cls", metavar="CLASS")
    p.add_argument("--qmax", type=_rational, metavar="RAT", default=None)
    p.add_argument("--trace", action="store_true", help="dump F-hat instead of F")
    return ap


def _merge_config(args) -> dict:
    conf = {}
    if getattr(args, "config", None):
        try:
            conf = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        if not isinstance(conf, dict):
            raise UsageError("config must be a JSON object")
    merged = {}
    for key in ("catalog", "out", "jobs", "P", "qmax", "classes", "checks"):
        flag = getattr(args, key, None)
        merged[key] = flag if flag is not None else conf.get(key)
    if merged["qmax"] is not None:
        merged["qmax"] = Fraction(str(merged["qmax"]))
    return merged


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_expand(args, conf) -> int:
    entries = _entries(conf["catalog"])
    entry = get_class(args.cls, entries)
    s = expr_expand(entry.expr, trunc=args.order + 1)
    lines = ["exponent\tcoefficient"]
    lines += [f"{e}\t{literal(c)}" for e, c in s.items() if e <= args.order]
    _emit("\n".join(lines) + "\n", conf["out"])
    return 0


def cmd_verify(args, conf) -> int:
    targets = list(args.targets)
    check = targets.pop()
    checks = list(CHECKS) if check == "all" else [check]
    if conf["checks"] and not args.targets[:-1] and check == "all":
        checks = list(conf["checks"])
    classes = list(conf["classes"] or []) + targets
    entries = _entries(conf["catalog"])
    if not classes or classes == ["all"]:
        classes = [e.name for e in entries]
    for name in classes:
        get_class(name, entries)
    cfg = RunConfig(conf["catalog"], classes, conf["P"] or DEFAULTS["P"], conf["qmax"], checks,
                    conf["out"], conf["jobs"] or DEFAULTS["jobs"])
    cfg.validate()
    tasks = [(c, name, cfg.catalog, cfg.P, cfg.qmax) for name in cfg.classes for c in cfg.checks]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_task, tasks))
    else:
        results = [_task(t) for t in tasks]
    rep = Report()
    for r in results:
        rep.extend(r)
    _emit(rep.to_tsv(), cfg.out)
    return 0 if rep.passed else 1


def cmd_catalog_lint(args, conf) -> int:
    path = args.path or conf["catalog"]
    if path is None:
        entries = shipped_catalog()
    else:
        with open(path, "rb") as fh:
            entries = load_catalog(fh, validate=False)
    rep = lint_catalog(entries, trunc=conf["qmax"] or DEFAULTS["hecke_qmax"])
    _emit(rep.to_tsv(), conf["out"])
    return 0 if rep.passed else 1


def cmd_vvmf(args, conf) -> int:
    entries = _entries(conf["catalog"])
    entry = get_class(args.cls, entries)
    trunc = conf["qmax"] or DEFAULTS["vvmf_qmax"]
    T = vvmf.build_hat_table(family_of(entry, entries, trunc=trunc), trunc, entry.name)
    _emit(vvmf.table_tsv(T if args.trace else vvmf.dft_rows(T)), conf["out"])
    return 0


COMMANDS = {"expand": cmd_expand, "verify": cmd_verify, "catalog-lint": cmd_catalog_lint, "vvmf": cmd_vvmf}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        conf = _merge_config(args)
        return COMMANDS[args.command](args, conf)
    except (UsageError, ValueError, OSError) as exc:
        print(f"moonprod: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
