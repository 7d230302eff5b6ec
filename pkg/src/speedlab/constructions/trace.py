"""Audit traces emitted by every stage construction."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from ..numerics import format_number


def _plain(value: Any) -> Any:
    """JSON-safe copy with every exact number rendered as a fraction string."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, Fraction):
        return format_number(value)
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


@dataclass
class Assertion:
    name: str
    lhs: Any
    relation: str
    rhs: Any
    holds: bool

    def to_json(self) -> dict:
        return {"name": self.name, "lhs": _plain(self.lhs), "relation": self.relation,
                "rhs": _plain(self.rhs), "holds": self.holds}


_RELATIONS = {
    "<=": lambda x, y: x <= y,
    "<": lambda x, y: x < y,
    "==": lambda x, y: x == y,
    ">=": lambda x, y: x >= y,
    ">": lambda x, y: x > y,
}


@dataclass
class StageTrace:
    """Per-stage records plus terminal assertions and summary values."""

    construction: str
    records: list = field(default_factory=list)
    assertions: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def record(self, **fields) -> None:
        self.records.append(fields)

    def check(self, name: str, lhs, relation: str, rhs) -> bool:
        holds = bool(_RELATIONS[relation](lhs, rhs))
        self.assertions.append(Assertion(name, lhs, relation, rhs, holds))
        return holds

    def flag(self, name: str, holds: bool, detail: Any = None) -> bool:
        """A boolean assertion without a numeric comparison."""
        self.assertions.append(Assertion(name, detail, "is", True, bool(holds)))
        return bool(holds)

    @property
    def ok(self) -> bool:
        return all(a.holds for a in self.assertions)

    def failed(self) -> list:
        return [a for a in self.assertions if not a.holds]

    def assertion(self, name: str) -> Assertion:
        for a in self.assertions:
            if a.name == name:
                return a
        raise KeyError(name)

    def to_jsonl(self) -> str:
        lines = [json.dumps({"stage_record": _plain(r)}, sort_keys=True) for r in self.records]
        lines += [json.dumps({"assertion": a.to_json()}, sort_keys=True) for a in self.assertions]
        return "".join(line + "\n" for line in lines)

    def summary_csv(self) -> str:
        """``kind,name,value,relation,bound,holds`` rows; summary values first, then assertions."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "name", "value", "relation", "bound", "holds"])
        w.writerow(["summary", "construction", self.construction, "", "", ""])
        for key in sorted(self.summary):
            w.writerow(["summary", key, _scalar(self.summary[key]), "", "", ""])
        for a in self.assertions:
            w.writerow(["assertion", a.name, _scalar(a.lhs), a.relation, _scalar(a.rhs),
                        "true" if a.holds else "false"])
        return buf.getvalue()


def _scalar(value) -> str:
    value = _plain(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, dict)):
        return json.dumps(value, sort_keys=True)
    return "" if value is None else str(value)
