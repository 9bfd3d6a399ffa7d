"""Reports shared by the coding backends."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""
    value: float | None = None
    witness: object = None


@dataclass
class Report:
    title: str
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def add(self, name, passed, detail="", value=None, witness=None) -> Check:
        c = Check(name, bool(passed), detail, value, witness)
        self.checks.append(c)
        return c

    def rows(self):
        return [(self.title, c.name, c.passed, c.value, c.detail) for c in self.checks]


REPORT_HEADER = ["report", "check", "pass", "value", "detail"]
