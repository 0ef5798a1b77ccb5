"""Serializable verification records."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

SCHEMA_VERSION = "sharptrace-report/1"

__all__ = ["Case", "Report", "SCHEMA_VERSION", "jsonable"]


def jsonable(x):
    """Convert numpy scalars/arrays and nested containers to plain JSON types."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


@dataclass
class Case:
    """One checked relation.

    kind="inequality": passes when gap >= -tol.
    kind="equality":   passes when |gap| <= tol.
    """

    id: str
    gap: float
    tol: float
    kind: str = "inequality"
    inputs: dict = field(default_factory=dict)
    terms: dict = field(default_factory=dict)
    passed: bool | None = None

    def __post_init__(self):
        if self.kind not in ("inequality", "equality"):
            raise ValueError(f"unknown case kind {self.kind!r}")
        self.gap = float(self.gap)
        self.tol = float(self.tol)
        if self.passed is None:
            self.passed = self.evaluate()

    def evaluate(self) -> bool:
        if not math.isfinite(self.gap):
            return False
        if self.kind == "equality":
            return abs(self.gap) <= self.tol
        return self.gap >= -self.tol

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return jsonable(d)

    @classmethod
    def from_dict(cls, d: dict) -> "Case":
        d = dict(d)
        d["passed"] = d.pop("pass")
        return cls(**d)


@dataclass
class Report:
    suite: str
    params: dict = field(default_factory=dict)
    cases: list = field(default_factory=list)
    environment: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def add(self, case: Case) -> Case:
        self.cases.append(case)
        return case

    def extend(self, other: "Report", prefix: str = "") -> None:
        for c in other.cases:
            c = Case.from_dict(c.to_dict())
            c.id = prefix + c.id
            self.cases.append(c)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases)

    def failures(self) -> list:
        return [c for c in self.cases if not c.passed]

    def to_dict(self) -> dict:
        env = {"version": SCHEMA_VERSION}
        env.update(self.environment)
        return jsonable(
            {
                "suite": self.suite,
                "params": self.params,
                "cases": [c.to_dict() for c in self.cases],
                "environment": env,
                "wall_time": self.wall_time,
                "pass": self.passed,
            }
        )

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=False)

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        return cls(
            suite=d["suite"],
            params=d.get("params", {}),
            cases=[Case.from_dict(c) for c in d.get("cases", [])],
            environment=d.get("environment", {}),
            wall_time=d.get("wall_time", 0.0),
        )

    @classmethod
    def from_json(cls, s: str) -> "Report":
        return cls.from_dict(json.loads(s))

    def summary_lines(self) -> list[str]:
        out = []
        for c in self.cases:
            tag = "PASS" if c.passed else "FAIL"
            out.append(f"{tag} {c.id}: gap={c.gap:.3e} tol={c.tol:.1e} ({c.kind})")
        return out
