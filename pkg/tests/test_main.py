import json

import pytest

import main
from suite_runner import NumericCheckError, SuiteRunner


def run(*args):
    return main.main(["check", *args, "--quiet"])


def test_connection_suite_on_the_flat_plane(capsys):
    assert run("--scenario", "E1", "--suite", "connection", "--points", "3") == main.EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("Scenario E1 | suite connection | seed 42")
    assert out.rstrip().endswith("-> OK")


def test_declared_negatives_exit_cleanly():
    assert run("--scenario", "E5", "--suite", "torsion", "--points", "3") == main.EXIT_OK


def test_tight_tolerance_fails(capsys):
    code = run("--scenario", "E4", "--suite", "lifts", "--points", "2", "--tol", "1e-300")
    assert code == main.EXIT_FAILED
    assert "FAILED" in capsys.readouterr().out


def test_list_bundled_scenarios(capsys):
    assert main.main(["check", "--list"]) == main.EXIT_OK
    names = [line.split()[0] for line in capsys.readouterr().out.splitlines()]
    assert names == ["E1", "E2", "E3", "E4", "E5", "E6", "E7"]


@pytest.mark.parametrize("argv", [
    [],
    ["check"],
    ["check", "--scenario", "E1", "--suite", "curvature"],
    ["check", "--scenario", "E1", "--points", "0"],
    ["check", "--scenario", "E1", "--tol", "-1"],
])
def test_usage_errors(argv):
    assert main.main(argv) == main.EXIT_USAGE


def test_unknown_scenario(capsys):
    assert run("--scenario", "E9") == main.EXIT_SCENARIO
    assert "scenario error" in capsys.readouterr().err


def test_invalid_scenario_file(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"name": "broken", "dim": 2,', encoding="utf-8")
    assert run("--scenario", str(path)) == main.EXIT_SCENARIO


def test_sampling_exhaustion_is_a_scenario_error(tmp_path):
    document = {
        "name": "pole",
        "dim": 3,
        "mode": "riemannian",
        "metric": [["1", "0", "0"], ["0", "sin(q1)^2", "0"], ["0", "0", "1"]],
        "J": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "2"]],
        "sampling": {"q_box": [[0, 1e-4], [0.3, 1.2], [0.3, 1.2]]},
    }
    path = tmp_path / "pole.json"
    path.write_text(json.dumps(document), encoding="utf-8")
    assert run("--scenario", str(path), "--points", "2") == main.EXIT_SCENARIO


def test_numeric_failure(monkeypatch, capsys):
    def broken(self, suite="all"):
        raise NumericCheckError("lifts.Rcoord1", ZeroDivisionError("division by zero"))

    monkeypatch.setattr(SuiteRunner, "run", broken)
    assert run("--scenario", "E1", "--points", "2") == main.EXIT_NUMERIC
    assert "lifts.Rcoord1" in capsys.readouterr().err


def test_json_report_is_reproducible(tmp_path):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    for path in (first, second):
        assert run("--scenario", "E2", "--suite", "lifts", "--points", "3", "--seed", "5",
                   "--json", str(path)) == main.EXIT_OK
    assert first.read_bytes() == second.read_bytes()
    payload = json.loads(first.read_text(encoding="utf-8"))
    assert payload["seed"] == 5
    assert payload["suite"] == "lifts"
    assert payload["passed"] is True
