import json
import math
from pathlib import Path

import numpy as np
import pytest

import safedmp

ROOT = Path(__file__).resolve().parents[2]
SUITE = ROOT / "scenarios" / "suite"


def straight_demo(n=201, duration=1.0):
    t = np.linspace(0.0, duration, n)
    s = t / duration
    p = 10 * s**3 - 15 * s**4 + 6 * s**5
    return t, np.stack([p, np.zeros(n), np.zeros(n)], axis=1)


def test_learn_and_rollout_reproduce_demo():
    t, x = straight_demo()
    model = safedmp.learn(t, x)
    assert model.dim == 3 and model.n_basis == 25
    assert model.tau_nominal == pytest.approx(1.0)
    times, points, converged = safedmp.rollout(model)
    assert converged
    assert np.allclose(points[0], x[0])
    assert np.linalg.norm(points[-1] - x[-1]) < 1e-3


def test_model_json_round_trip():
    model = safedmp.learn(*straight_demo())
    back = safedmp.DmpModel.from_json(model.to_json())
    assert np.array_equal(back.weights, model.weights)


def test_stt_law():
    assert safedmp.stt_control(0.0, -1.0, 1.0) == 0.0
    u = safedmp.stt_control(0.5, -1.0, 1.0, k=2.5e-4)
    assert u == pytest.approx(-2.5e-4 * (4 / (2 * 0.75)) * math.log(3.0))
    assert safedmp.inverse_log_error(safedmp.log_error(0.3)) == pytest.approx(0.3, abs=1e-15)
    with pytest.raises(safedmp.SafeDmpError) as info:
        safedmp.log_error(1.0)
    assert info.value.args[1] == "domain"


def test_reroute_projects_to_clearance():
    obstacle = safedmp.Obstacle([0.5, 0.0, 0.0], 0.1)
    position, feasible, passes = safedmp.reroute(np.array([0.45, 0.02, 0.0]), [obstacle])
    assert feasible and passes == 1
    assert np.linalg.norm(position - obstacle.center0) == pytest.approx(0.15)


def test_headon_safedmp_vs_apf():
    model = safedmp.learn(*straight_demo())
    obstacles = [safedmp.Obstacle([0.5, 0.0, 0.0], 0.1)]
    safe = safedmp.run(model, obstacles)
    apf = safedmp.run(model, obstacles, method="dmp-apf")
    assert safe["converged"]
    assert min(safe["min_clearance"]) >= 0.0
    assert apf["status"] == "not-converged"


def test_perturbation_is_recovered():
    model = safedmp.learn(*straight_demo())
    log = safedmp.run(model, perturbations=[(0.3, np.array([0.0, 0.05, 0.0]))])
    assert log["converged"]
    assert abs(log["tau"][-1] - model.tau_nominal) < 1e-3


def test_scenario_and_bench():
    row, log = safedmp.run_scenario(SUITE / "04_sshape_rotated.json")
    assert row["collision_count"] == 0 and row["status"] == "converged"
    assert log["x_measured"].shape[1] == 3
    report = safedmp.bench(sorted(SUITE.glob("0[1-3]*.json")))
    assert report["schema_version"] == 1
    assert len(report["rows"]) == 6
    assert report == safedmp.bench(sorted(SUITE.glob("0[1-3]*.json")))


def test_bad_scenario_raises(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": 1, "colour": 1}))
    with pytest.raises(safedmp.SafeDmpError):
        safedmp.run_scenario(bad)
