"""
report_manager.py

Check results and their persistence.
- Check describes one identity test; CheckResult is its outcome.
- CheckReport aggregates one run and renders text or JSON.
- ReportManager writes JSON reports atomically.
"""

import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from expr_engine import Point

PASS = "pass"
FAIL = "fail"
NOT_APPLICABLE = "not-applicable"


@dataclass
class Check:
    """
    A named identity test.

    `residual` maps a sample point to the scaled residual of the identity there.
    A check with `applicable=False` is reported without being evaluated.
    An expected negative passes when its probe residual exceeds `threshold`
    (the configured negative threshold when unset).
    """

    id: str
    anchor: str
    residual: Optional[Callable[[Point], float]] = None
    tol: Optional[float] = None
    applicable: bool = True
    reason: str = ""
    negative: bool = False
    threshold: Optional[float] = None


@dataclass
class CheckResult:
    id: str
    anchor: str
    residual: float
    tol: float
    verdict: str
    worst_point: Optional[Point] = None
    expect: str = "positive"
    reason: str = ""

    @property
    def failed(self) -> bool:
        return self.verdict == FAIL

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "anchor": self.anchor,
            "residual": float(self.residual),
            "tol": float(self.tol),
            "verdict": self.verdict,
            "worst_point": self.worst_point.to_dict() if self.worst_point else None,
            "expect": self.expect,
            "reason": self.reason,
        }


@dataclass
class CheckReport:
    scenario: str
    seed: int
    suite: str
    checks: List[CheckResult] = field(default_factory=list)
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return not any(c.failed for c in self.checks)

    def counts(self) -> Dict[str, int]:
        out = {PASS: 0, FAIL: 0, NOT_APPLICABLE: 0}
        for c in self.checks:
            out[c.verdict] += 1
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "suite": self.suite,
            "checks": [c.to_dict() for c in self.checks],
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    def to_text(self) -> str:
        lines = [f"Scenario {self.scenario} | suite {self.suite} | seed {self.seed}"]
        width = max((len(c.id) for c in self.checks), default=10)
        for c in self.checks:
            marker = {PASS: "PASS", FAIL: "FAIL", NOT_APPLICABLE: "N/A "}[c.verdict]
            line = f"  {marker}  {c.id:<{width}}  residual={c.residual:.3e}  tol={c.tol:.1e}"
            if c.expect == "negative":
                line += "  (expected negative)"
            if c.reason:
                line += f"  [{c.reason}]"
            line += f"  <{c.anchor}>"
            lines.append(line)
        counts = self.counts()
        lines.append(
            f"{counts[PASS]} passed, {counts[FAIL]} failed, {counts[NOT_APPLICABLE]} not applicable"
            f" -> {'OK' if self.passed else 'FAILED'}"
        )
        return "\n".join(lines) + "\n"


class ReportManager:
    """Writes reports to disk."""

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def write_json(self, report: CheckReport, path: Path) -> Path:
        """Writes the JSON report through a temporary file and an atomic rename."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.logger.info(f"[{report.scenario}] Writing JSON report to {path}")
        fd, tmp_name = tempfile.mkstemp(prefix=".report-", suffix=".json", dir=path.parent)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                f.write(report.to_json())
            os.replace(tmp_name, path)
        except OSError as e:
            self.logger.error(f"Failed to write report {path}. Error: {e}")
            self._discard(Path(tmp_name))
            raise IOError(f"Could not write report to {path}") from e
        return path

    def _discard(self, tmp: Path) -> None:
        try:
            tmp.unlink(missing_ok=True)
        except OSError as e:
            self.logger.error(f"Could not remove temporary report {tmp}. Error: {e}")
