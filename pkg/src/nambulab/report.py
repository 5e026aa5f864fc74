"""Structured pass/fail records for identity checks over sampled points."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

PASS = "PASS"
FAIL = "FAIL"
ERRATUM_SUSPECT = "ERRATUM-SUSPECT"
SKIPPED_SINGULAR = "SKIPPED-SINGULAR"


def verdict_for(max_rel: float, tolerance: float, suspect: bool = False) -> str:
    if max_rel <= tolerance:
        return PASS
    return ERRATUM_SUSPECT if suspect else FAIL


@dataclass
class CheckRecord:
    """Outcome of one identity check swept over sample points."""

    check_id: str
    reference: str
    max_abs_residual: float
    max_rel_residual: float
    tolerance: float
    verdict: str
    points: int = 0

    def __post_init__(self):
        if not self.reference:
            raise ValueError("every check record needs a reference description")

    def to_dict(self) -> dict:
        return {
            "check_id": self.check_id,
            "reference": self.reference,
            "max_abs_residual": self.max_abs_residual,
            "max_rel_residual": self.max_rel_residual,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            "points": self.points,
        }


@dataclass
class VerificationReport:
    """All check records for one system run, plus the run configuration."""

    system: str
    parameters: dict
    seed: int
    samples: int
    checks: list[CheckRecord] = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)
    wall_time_s: float = 0.0

    def add(self, record: CheckRecord):
        self.checks.append(record)

    def failures(self) -> list[CheckRecord]:
        return [c for c in self.checks if c.verdict == FAIL]

    def passed(self) -> bool:
        return not self.failures()

    def to_dict(self) -> dict:
        return {
            "system": self.system,
            "parameters": dict(sorted(self.parameters.items())),
            "seed": self.seed,
            "samples": self.samples,
            "tolerances": dict(sorted(self.tolerances.items())),
            "checks": [c.to_dict() for c in self.checks],
            "wall_time_s": self.wall_time_s,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


class ResidualTracker:
    """Accumulates per-point residual samples into one check record."""

    def __init__(self):
        self.max_abs = 0.0
        self.max_rel = 0.0
        self.points = 0
        self.skipped = 0

    def add(self, absolute: float, scale: float):
        self.max_abs = max(self.max_abs, absolute)
        self.max_rel = max(self.max_rel, absolute / scale)
        self.points += 1

    def add_sample(self, sample):
        self.add(sample.absolute, sample.scale)

    def skip(self):
        self.skipped += 1

    def record(
        self, check_id: str, reference: str, tolerance: float, suspect: bool = False
    ) -> CheckRecord:
        if self.points == 0:
            return CheckRecord(
                check_id, reference, 0.0, 0.0, tolerance, SKIPPED_SINGULAR, 0
            )
        return CheckRecord(
            check_id,
            reference,
            self.max_abs,
            self.max_rel,
            tolerance,
            verdict_for(self.max_rel, tolerance, suspect),
            self.points,
        )
