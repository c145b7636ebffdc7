"""Verification reports shared by the classical and quantum checks."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Any

import numpy as np


@dataclass
class Check:
    name: str
    max_abs_deviation: float
    tolerance: float
    passed: bool
    t: int | None = None
    detail: dict[str, Any] = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        where = "" if self.t is None else f" t={self.t}"
        return (f"[{status}] {self.name}{where}: max_abs_deviation="
                f"{self.max_abs_deviation:.3e} (tol {self.tolerance:.1e})")


class VerificationReport:
    """Ordered collection of named numeric checks."""

    def __init__(self, title: str = "verification"):
        self.title = title
        self.checks: list[Check] = []

    def add(self, name: str, deviation: float, tol: float, t: int | None = None,
            passed: bool | None = None, **detail) -> Check:
        deviation = float(deviation)
        if passed is None:
            passed = bool(math.isfinite(deviation) and deviation <= tol)
        check = Check(name, deviation, float(tol), bool(passed), t, detail)
        self.checks.append(check)
        return check

    def extend(self, other: "VerificationReport", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.max_abs_deviation, c.tolerance,
                                     c.passed, c.t, dict(c.detail)))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def __bool__(self):
        return self.passed

    def __iter__(self):
        return iter(self.checks)

    def __len__(self):
        return len(self.checks)

    def to_dict(self, timestamp: bool = True) -> dict:
        out = {
            "title": self.title,
            "passed": self.passed,
            "checks": [_finite(asdict(c)) for c in self.checks],
        }
        if timestamp:
            out["timestamp"] = datetime.now(timezone.utc).isoformat()
        return out

    def to_json(self, pretty: bool = False, timestamp: bool = True) -> str:
        return json.dumps(self.to_dict(timestamp), indent=2 if pretty else None,
                          sort_keys=True, default=_jsonable)

    def summary(self) -> str:
        return "\n".join(c.line() for c in self.checks)


def _finite(entry: dict) -> dict:
    if not math.isfinite(entry["max_abs_deviation"]):
        entry["max_abs_deviation"] = None
    return entry


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
