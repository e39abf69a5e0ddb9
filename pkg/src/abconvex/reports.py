"""Rule reports and scenario reports with JSON round-tripping."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

__all__ = [
    "HOLDS",
    "FAILS",
    "NOT_CHECKED",
    "EQUAL",
    "STRICT",
    "VIOLATED",
    "PASS",
    "FAIL",
    "NOT_APPLICABLE",
    "RuleReport",
    "Report",
]

# hypothesis status
HOLDS = "holds"
FAILS = "fails"
NOT_CHECKED = "not-checked"

# conclusion status; EQUAL also covers predicate claims that hold exactly
EQUAL = "equal"
STRICT = "strict-inclusion"
VIOLATED = "violated"

# overall status
PASS = "pass"
FAIL = "fail"
NOT_APPLICABLE = "not-applicable"


@dataclass
class RuleReport:
    rule: str
    hypothesis: str = NOT_CHECKED
    conclusion: str = EQUAL
    witnesses: list = field(default_factory=list)
    details: dict = field(default_factory=dict)
    status: str = ""

    def __post_init__(self):
        if not self.status:
            self.status = self.default_status()

    def default_status(self) -> str:
        if self.conclusion == VIOLATED:
            return NOT_APPLICABLE if self.hypothesis == FAILS else FAIL
        if self.conclusion == NOT_CHECKED:
            return NOT_APPLICABLE
        return PASS

    @property
    def passed(self) -> bool:
        return self.status != FAIL

    def to_json(self) -> dict:
        return {
            "rule": self.rule,
            "status": self.status,
            "hypothesis": self.hypothesis,
            "conclusion": self.conclusion,
            "witnesses": self.witnesses,
            "details": self.details,
        }

    @classmethod
    def from_json(cls, data: dict) -> "RuleReport":
        return cls(
            rule=data["rule"],
            hypothesis=data["hypothesis"],
            conclusion=data["conclusion"],
            witnesses=list(data.get("witnesses", [])),
            details=dict(data.get("details", {})),
            status=data["status"],
        )


@dataclass
class Report:
    """A scenario run: rule reports plus an overall status.

    ``timing`` is wall-clock seconds; it is left out of JSON unless asked for
    so that repeated runs serialise byte-identically.
    """

    scenario: str
    entries: list[RuleReport] = field(default_factory=list)
    info: dict = field(default_factory=dict)
    timing: float | None = None

    @property
    def status(self) -> str:
        if any(e.status == FAIL for e in self.entries):
            return FAIL
        if self.entries and all(e.status == NOT_APPLICABLE for e in self.entries):
            return NOT_APPLICABLE
        return PASS

    def to_json(self, include_timing: bool = False) -> dict:
        out: dict[str, Any] = {
            "scenario": self.scenario,
            "status": self.status,
            "info": self.info,
            "checks": [e.to_json() for e in self.entries],
        }
        if include_timing and self.timing is not None:
            out["timing_seconds"] = round(self.timing, 4)
        return out

    def dumps(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_json(include_timing), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, data: dict) -> "Report":
        return cls(
            scenario=data["scenario"],
            entries=[RuleReport.from_json(e) for e in data.get("checks", [])],
            info=dict(data.get("info", {})),
            timing=data.get("timing_seconds"),
        )

    @classmethod
    def loads(cls, text: str) -> "Report":
        return cls.from_json(json.loads(text))

    def to_text(self) -> str:
        lines = [f"scenario {self.scenario}: {self.status.upper()}"]
        for e in self.entries:
            lines.append(f"  [{e.status}] {e.rule}: hypothesis {e.hypothesis}, conclusion {e.conclusion}")
            for w in e.witnesses[:5]:
                lines.append(f"      witness {json.dumps(w, sort_keys=True)}")
            if len(e.witnesses) > 5:
                lines.append(f"      ... {len(e.witnesses) - 5} more witnesses")
        if self.timing is not None:
            lines.append(f"  time {self.timing:.3f}s")
        return "\n".join(lines) + "\n"
