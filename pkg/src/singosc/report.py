"""Residual reports shared by the verification routines and the CLI."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class Check:
    """Outcome of one numerical check.

    A check passes when ``residual < tolerance`` (strict, so a zero tolerance
    always fails).  ``details`` carries per-component residuals or other
    diagnostics and is serialized alongside the headline numbers.
    """

    name: str
    residual: float
    tolerance: float
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.residual < self.tolerance)

    def to_dict(self) -> dict[str, Any]:
        out = {
            "name": self.name,
            "residual": float(self.residual),
            "tolerance": float(self.tolerance),
            "pass": self.passed,
        }
        if self.details:
            out["details"] = self.details
        return out
