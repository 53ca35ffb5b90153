"""Uniform pass/fail rows shared by every verification pipeline."""
from __future__ import annotations

from dataclasses import dataclass, field

from .series_core import literal

COLUMNS = ("check-id", "class", "parameters", "status", "first-defect-location", "defect-value")


@dataclass(frozen=True)
class CheckRow:
    check: str
    cls: str
    params: str
    ok: bool
    location: str = "-"
    value: str = "-"

    @property
    def status(self) -> str:
        return "pass" if self.ok else "fail"

    def tsv(self) -> str:
        return "\t".join((self.check, self.cls, self.params, self.status, self.location, self.value))


@dataclass
class Report:
    rows: list[CheckRow] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.rows) and all(r.ok for r in self.rows)

    def add(self, check: str, cls: str, params: str, defect=None) -> CheckRow:
        """Record a comparison; ``defect`` is None or (location, value)."""
        if defect is None:
            row = CheckRow(check, cls, params, True)
        else:
            loc, val = defect
            row = CheckRow(check, cls, params, False, str(loc), val if isinstance(val, str) else literal(val))
        self.rows.append(row)
        return row

    def extend(self, other: "Report") -> "Report":
        self.rows.extend(other.rows)
        self.notes.extend(other.notes)
        return self

    def failures(self) -> list[CheckRow]:
        return [r for r in self.rows if not r.ok]

    def to_tsv(self, header: bool = True) -> str:
        lines = ["\t".join(COLUMNS)] if header else []
        lines += [r.tsv() for r in self.rows]
        lines += [f"# {n}" for n in self.notes]
        return "\n".join(lines) + "\n"


def params(**kw) -> str:
    return ",".join(f"{k}={v}" for k, v in kw.items())
