"""Pass/fail reports with defect tensors."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, List


def _jsonable(x):
    if x is None or isinstance(x, (bool, int, str, float)):
        return x
    if hasattr(x, "to_json"):
        return x.to_json()
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return str(x)


@dataclass
class Check:
    name: str
    passed: bool
    defect: Any = None
    detail: str = ""

    def to_json(self):
        out = {"name": self.name, "passed": self.passed}
        if self.detail:
            out["detail"] = self.detail
        if not self.passed and self.defect is not None:
            out["defect"] = _jsonable(self.defect)
        return out


@dataclass
class Report:
    title: str
    checks: List[Check] = field(default_factory=list)
    note: str = ""

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, passed, defect=None, detail="") -> Check:
        c = Check(name, bool(passed), defect, detail)
        self.checks.append(c)
        return c

    def extend(self, other: "Report", prefix: str = ""):
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.passed, c.defect, c.detail))

    def failures(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]

    def to_json(self):
        out = {"title": self.title, "passed": self.passed,
               "checks": [c.to_json() for c in self.checks]}
        if self.note:
            out["note"] = self.note
        return out

    def __repr__(self):
        bad = ", ".join(c.name for c in self.failures())
        status = "pass" if self.passed else f"FAIL [{bad}]"
        return f"Report({self.title}: {len(self.checks)} checks, {status})"
