import json

import numpy as np
import pytest
import sympy

import config
from expr_engine import Point, chart_symbols
from scenario_manager import (
    SamplingExhaustedError,
    ScenarioError,
    ScenarioManager,
    SplitMix64,
    TensorField,
    hessian_metric,
    load_scenario,
    object_array,
    probe_point,
    sample,
)

BUNDLED = ["E1", "E2", "E3", "E4", "E5", "E6", "E7"]


def document(**overrides):
    doc = {
        "name": "T",
        "dim": 2,
        "mode": "riemannian",
        "metric": [["1", "0"], ["0", "1"]],
        "J": [["1", "0"], ["0", "1"]],
    }
    doc.update(overrides)
    return doc


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_fixtures_load(scenario, name):
    s = scenario(name)
    assert s.name == name
    assert s.J.shape == (s.n, s.n)
    assert s.source.endswith(f"{name}.json")


def test_list_bundled_reports_every_fixture():
    names = [entry["name"] for entry in ScenarioManager().list_bundled()]
    assert names == BUNDLED


def test_riemannian_mode_synthesizes_the_lagrangian(scenario):
    _, u = chart_symbols(2)
    assert sympy.expand(scenario("E1").lagrangian - (u[0] ** 2 + u[1] ** 2) / 2) == 0


def test_f_defaults_to_trace(scenario):
    q, _ = chart_symbols(2)
    assert scenario("E2").f is None
    assert scenario("E2").f_or_trace == 5
    assert sympy.expand(scenario("E3").f_or_trace - (q[0] ** 2 + q[1] ** 2)) == 0


def test_hessian_metric_of_general_lagrangian(scenario):
    g = hessian_metric(scenario("E6"))
    assert g.space == "tau" and g.signature == "(0,2)"
    np.testing.assert_allclose(g.at(Point((1.0, 1.0), (0.5, 0.2))), [[1.75, 0.0], [0.0, 1.0]])


def test_hessian_metric_equals_declared_metric(scenario):
    s = scenario("E4")
    g = hessian_metric(s)
    for i, j in np.ndindex(3, 3):
        assert sympy.simplify(g[i, j] - s.metric[i, j]) == 0


def test_expect_block_is_read(scenario):
    assert "torsion.N_J" in scenario("E5").expect_negative
    assert scenario("E1").expect_negative == ()


@pytest.mark.parametrize("overrides, path", [
    ({"J": [["1", "0", "0"], ["0", "1", "0"]]}, "J"),
    ({"dim": 5}, "dim"),
    ({"dim": 0}, "dim"),
    ({"mode": "finsler"}, "mode"),
    ({"metric": [["1", "q1"], ["0", "1"]]}, "metric[0][1]"),
    ({"J": [["u1", "0"], ["0", "1"]]}, "J[0][0]"),
    ({"J": [["q1 +", "0"], ["0", "1"]]}, "J[0][0]"),
    ({"lagrangian": "u1^2"}, "lagrangian"),
    ({"f": "q1 + u2"}, "f"),
    ({"expect": {"negative": "torsion.N_J"}}, "expect.negative"),
    ({"sampling": {"count": 0}}, "sampling.count"),
    ({"sampling": {"q_box": [[1, 0], [0, 1]]}}, "sampling.q_box[0]"),
])
def test_invalid_documents(overrides, path):
    with pytest.raises(ScenarioError) as err:
        load_scenario(document(**overrides))
    assert err.value.path == path


def test_missing_metric_and_lagrangian():
    doc = document()
    del doc["metric"]
    with pytest.raises(ScenarioError, match="metric"):
        load_scenario(doc)
    with pytest.raises(ScenarioError, match="lagrangian"):
        load_scenario(document(mode="lagrangian", metric=None))


def test_invalid_json_text():
    with pytest.raises(ScenarioError, match="invalid JSON"):
        load_scenario("{not json")


def test_unknown_scenario_name():
    with pytest.raises(ScenarioError, match="not found"):
        ScenarioManager().load("E99")


def test_load_from_path(tmp_path):
    path = tmp_path / "custom.json"
    path.write_text(json.dumps(document(name="custom")), encoding="utf-8")
    assert ScenarioManager().load(str(path)).name == "custom"


def test_splitmix64_reference_values():
    rng = SplitMix64(0)
    assert rng.next_u64() == 0xE220A8397B1DCDAF
    assert rng.next_u64() == 0x6E789E6AA1B965F4
    assert 0.0 <= SplitMix64(42).next_double() < 1.0


def test_sampling_is_deterministic(scenario):
    s = scenario("E3")
    first = sample(s, count=10, seed=7)
    second = sample(s, count=10, seed=7)
    assert first.points == second.points
    assert sample(s, count=10, seed=8).points != first.points


def test_samples_stay_in_the_boxes(scenario):
    s = scenario("E3")
    for p in sample(s, count=50):
        assert all(0.3 <= x <= 1.2 for x in p.q)
        assert all(-1.0 <= x <= 1.0 for x in p.u)


def test_degenerate_metric_rejects_points(scenario):
    s = scenario("E4")
    with pytest.raises(SamplingExhaustedError):
        sample(s, count=3, q_box=[(0.0, 1e-4), (0.3, 1.2), (0.3, 1.2)])


def test_partial_rejection_is_counted():
    s = load_scenario(document(metric=[["sqrt(q1)", "0"], ["0", "1"]]))
    samples = sample(s, count=20, q_box=[(-1.0, 1.0), (0.3, 1.2)])
    assert len(samples) == 20
    assert all(p.q[0] > 0.0 for p in samples)
    assert samples.rejected > 0


def test_probe_point_truncates_to_dimension():
    p = probe_point(3)
    assert p.q == config.PROBE_Q[:3] and p.u == config.PROBE_U[:3]


def test_tensor_field_shape_is_checked():
    with pytest.raises(ValueError):
        TensorField("TQ", "(1,1)", object_array([[1, 0], [0, 1]]), 2)
    with pytest.raises(ValueError):
        TensorField("R3", "vector", object_array([1, 0]), 2)


def test_tensor_field_gradient(scenario):
    s = scenario("E3")
    J = TensorField("Q", "(1,1)", s.J, 2)
    point = Point((1.0, 2.0), (0.0, 0.0))
    np.testing.assert_allclose(J.at(point), [[2.0, 2.0], [2.0, 5.0]])
    # d/dq1 of [[q1^2 + 1, q1 q2], [q1 q2, q2^2 + 1]]
    np.testing.assert_allclose(J.gradient(point)[0], [[2.0, 2.0], [2.0, 0.0]])
