from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

PASS = "PASS"
FAIL = "FAIL"
CONSISTENT = "CONSISTENT"
INCONSISTENT = "INCONSISTENT"
DATA_ERROR = "DATA_ERROR"


@dataclass
class Verdict:
    """Outcome of a verification step.

    ``checks`` maps each named condition to whether it held; ``details``
    carries the numbers behind them.
    """

    status: str
    checks: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    message: str = ""

    @property
    def passed(self):
        return self.status in (PASS, CONSISTENT)

    @classmethod
    def from_checks(cls, checks, details=None, message="", ok=PASS, bad=FAIL):
        status = ok if all(checks.values()) else bad
        return cls(status, dict(checks), dict(details or {}), message)

    def to_dict(self):
        return jsonable({"status": self.status, "checks": self.checks,
                         "details": self.details, "message": self.message})


def jsonable(obj):
    """Recursively convert numpy containers and scalars to plain Python."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    return obj


def dumps(obj):
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"
