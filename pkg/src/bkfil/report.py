"""Check records and their JSON / text renderings."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .spec_io import dumps

VERDICTS = ("pass", "fail", "inconclusive-at-precision", "not-applicable")


def jsonable(x):
    """Convert nested results into plain JSON types with deterministic key order."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [jsonable(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if x is None or isinstance(x, (str, float)):
        return x
    if hasattr(x, "as_dict"):
        return jsonable(x.as_dict())
    return str(x)


@dataclass
class CheckRecord:
    module: str
    index: int
    check: str
    verdict: str
    witnesses: dict = field(default_factory=dict)
    precision: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"bad verdict {self.verdict!r}")

    def as_dict(self) -> dict:
        return {"module": self.module, "index": self.index, "check": self.check, "verdict": self.verdict,
                "witnesses": jsonable(self.witnesses), "precision": jsonable(self.precision)}


@dataclass
class Report:
    suite: str
    records: list = field(default_factory=list)
    errors: list = field(default_factory=list)  # per-module parse or build errors

    def add(self, rec: CheckRecord):
        self.records.append(rec)

    def counts(self) -> dict:
        c = {v: 0 for v in VERDICTS}
        for r in self.records:
            c[r.verdict] += 1
        return c

    def verdicts(self) -> list:
        return [(r.index, r.check, r.verdict) for r in self.records]

    def exit_code(self, strict: bool = False) -> int:
        c = self.counts()
        if self.errors:
            return 2
        if c["fail"]:
            return 1
        if strict and c["inconclusive-at-precision"]:
            return 3
        return 0

    def to_json(self) -> str:
        return dumps({"suite": self.suite, "records": [r.as_dict() for r in self.records],
                      "errors": jsonable(self.errors), "counts": self.counts()})

    def to_text(self) -> str:
        head = ("module", "check", "verdict", "n_p/eff", "note")
        rows = []
        for r in self.records:
            pr = r.precision
            prec = f"{pr.get('n_p', '-')}/{pr.get('N_eff', '-')}" if pr else "-"
            rows.append((f"{r.index}:{r.module}", r.check, r.verdict, prec, _note(r)))
        widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h) for i, h in enumerate(head)]
        fmt = lambda row: "  ".join(s.ljust(w) for s, w in zip(row, widths)).rstrip()
        lines = [f"suite: {self.suite}", fmt(head), fmt(tuple("-" * w for w in widths))]
        lines += [fmt(row) for row in rows]
        for e in self.errors:
            lines.append(f"error: module {e['index']}: {e['message']}")
        c = self.counts()
        lines.append("totals: " + ", ".join(f"{k}={c[k]}" for k in VERDICTS))
        return "\n".join(lines) + "\n"


def _note(r: CheckRecord) -> str:
    w = r.witnesses
    for key in ("reason", "error", "first_bad"):
        if key in w and w[key] not in (None, [], {}):
            return str(w[key])[:60]
    return ""


def parse_report(text: str) -> Optional[dict]:
    import json
    return json.loads(text)
