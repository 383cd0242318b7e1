import json
import os

import pytest

from expr_engine import Point
from report_manager import FAIL, NOT_APPLICABLE, PASS, CheckReport, CheckResult, ReportManager


def make_report(verdicts=(PASS, PASS)):
    point = Point((0.5, 0.25), (-0.125, 1.0))
    checks = [
        CheckResult(f"lifts.check{i}", f"Eq:anchor{i}", 1e-12 * (i + 1), 1e-8, verdict, point)
        for i, verdict in enumerate(verdicts)
    ]
    return CheckReport(scenario="E3", seed=42, suite="lifts", checks=checks, runtime=1.5)


def test_result_dictionary():
    d = make_report().checks[0].to_dict()
    assert list(d) == ["id", "anchor", "residual", "tol", "verdict", "worst_point", "expect", "reason"]
    assert d["worst_point"] == {"q": [0.5, 0.25], "u": [-0.125, 1.0]}
    assert d["expect"] == "positive"


def test_not_applicable_result_has_no_point():
    result = CheckResult("sck.scK", "Thm1:scK", 0.0, 1e-8, NOT_APPLICABLE, reason="J is not g-symmetric")
    assert result.to_dict()["worst_point"] is None
    assert not result.failed


def test_report_json_excludes_runtime():
    report = make_report()
    payload = json.loads(report.to_json())
    assert list(payload) == ["scenario", "seed", "suite", "checks", "passed"]
    assert payload["passed"] is True
    report.runtime = 99.0
    assert json.loads(report.to_json()) == payload


@pytest.mark.parametrize("verdicts, passed", [
    ((PASS, PASS), True),
    ((PASS, NOT_APPLICABLE), True),
    ((PASS, FAIL), False),
])
def test_overall_verdict(verdicts, passed):
    report = make_report(verdicts)
    assert report.passed is passed
    assert sum(report.counts().values()) == len(verdicts)


def test_text_rendering():
    report = make_report((PASS, FAIL, NOT_APPLICABLE))
    report.checks[1].expect = "negative"
    report.checks[2].reason = "needs a declared metric"
    text = report.to_text()
    assert text.startswith("Scenario E3 | suite lifts | seed 42")
    assert "PASS  lifts.check0" in text
    assert "(expected negative)" in text
    assert "[needs a declared metric]" in text
    assert "<Eq:anchor1>" in text
    assert text.rstrip().endswith("1 passed, 1 failed, 1 not applicable -> FAILED")


def test_write_json_is_atomic(tmp_path):
    manager = ReportManager()
    target = tmp_path / "nested" / "E3.json"
    written = manager.write_json(make_report(), target)
    assert written == target
    assert json.loads(target.read_text(encoding="utf-8"))["scenario"] == "E3"
    assert not list(target.parent.glob(".report-*"))


def test_write_json_overwrites(tmp_path):
    manager = ReportManager()
    target = tmp_path / "E3.json"
    manager.write_json(make_report((PASS,)), target)
    manager.write_json(make_report((FAIL,)), target)
    assert json.loads(target.read_text(encoding="utf-8"))["passed"] is False


def test_failed_write_leaves_no_temporary_file(tmp_path, monkeypatch):
    def refuse(src, dst):
        raise PermissionError("read-only target")

    monkeypatch.setattr(os, "replace", refuse)
    target = tmp_path / "E3.json"
    with pytest.raises(IOError, match="Could not write report"):
        ReportManager().write_json(make_report(), target)
    assert list(tmp_path.iterdir()) == []
