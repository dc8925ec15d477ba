"""Verification report container and JSON-friendly serialisation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass
class Check:
    name: str
    residual: float
    threshold: float
    passed: bool
    detail: dict = field(default_factory=dict)


@dataclass
class VerificationReport:
    command: str
    config: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    certificates: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    data: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, residual: float, threshold: float, passed: bool | None = None, **detail) -> Check:
        if passed is None:
            passed = bool(np.isfinite(residual) and residual <= threshold)
        chk = Check(name, float(residual), float(threshold), bool(passed), detail)
        self.checks.append(chk)
        return chk

    def fail(self, name: str, error: BaseException) -> Check:
        chk = Check(name, math.nan, math.nan, False, {"error": f"{type(error).__name__}: {error}"})
        self.checks.append(chk)
        return chk

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return to_jsonable({
            "command": self.command,
            "config": self.config,
            "verdict": "pass" if self.passed else "fail",
            "checks": [{"name": c.name, "residual": c.residual, "threshold": c.threshold,
                        "verdict": "pass" if c.passed else "fail", **({"detail": c.detail} if c.detail else {})}
                       for c in self.checks],
            "certificates": self.certificates,
            "notes": self.notes,
            "data": self.data,
            "wall_time": self.wall_time,
        })


def to_jsonable(obj: Any) -> Any:
    """Complex numbers become ``[re, im]``, arrays nested lists, NaN/inf strings."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(float(obj.real)), to_jsonable(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj
