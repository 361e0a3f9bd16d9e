import os
import pathlib

import numpy as np
import pytest

import mfg_occupation as mo

CONFIGS = pathlib.Path(os.environ.get("MFG_CONFIG_DIR", pathlib.Path(__file__).resolve().parents[2] / "configs"))

HEAT = """
grid.L = 3
grid.n = 61
time.T = 0.2
time.K = 200
model.name = ex2.1
model.beta = 0
model.q = 0
model.a = 0.5
initial.variance = 0.05
"""


def variance(w, x):
    m = (w * x).sum()
    return (w * x * x).sum() - m * m


def test_heat_flow_conserves_and_spreads():
    s = mo.Scenario.from_text(HEAT)
    rep = s.solve_fpk()
    sol = rep["solution"]
    assert sol.shape == (201, 61)
    np.testing.assert_allclose(sol.sum(axis=1), 1.0, atol=1e-12)
    assert rep["min_weight"] >= -1e-12
    x = s.nodes[:, 0]
    assert variance(sol[-1], x) - variance(sol[0], x) == pytest.approx(0.2, rel=1e-6)


def test_overrides_and_snapshot():
    s = mo.Scenario.from_text(HEAT, ["grid.n=41", "seed=5"])
    assert s.nodes.shape == (41, 1)
    assert "# override: seed = 5" in s.snapshot()
    with pytest.raises(mo.ValidationError):
        mo.Scenario.from_text(HEAT, ["grid.bogus=1"])


def test_step_size_violation_raises():
    with pytest.raises(mo.NumericalError):
        mo.Scenario.from_text(HEAT, ["time.K=5"]).solve_fpk()


def test_best_response_beats_default_control():
    s = mo.Scenario.from_file(str(CONFIGS / "ex21.cfg"))
    br = s.best_response()
    assert br["control"].shape == (16, 11, 1)
    assert br["projected_cost"] <= br["relaxed_cost"] + 1e-8
    assert br["relaxed_cost"] <= s.cost() + 1e-10
    assert s.cost(br["control"]) == pytest.approx(br["projected_cost"], abs=1e-10)


def test_crowd_equilibrium_and_certificate():
    s = mo.Scenario.from_file(str(CONFIGS / "crowd.cfg"))
    assert s.dependence != "none"
    res = s.equilibrium(challengers=20)
    assert res["converged"]
    assert res["best_gap"] <= 1e-3
    assert res["certificate"]["exploitability"] <= 1e-3
    again = s.certify(res["mu"], res["control"], challengers=20)
    assert again["exploitability"] == res["certificate"]["exploitability"]


def test_hypotheses_and_particles():
    s = mo.Scenario.from_text(HEAT, ["particles.count=20000"])
    assert all(r["pass"] for r in s.check_hypotheses())
    pc = s.particle_check()
    assert max(pc["w1_gap"]) < 0.05


def test_free_functions():
    assert mo.legendre(lambda v: 2.0 * v * v, 3.0) == pytest.approx(9.0 / 8.0, abs=1e-9)
    x = np.linspace(-10, 10, 201)
    assert mo.beta_vw(1 + x * x, np.abs(x), 5.0) == pytest.approx(0.4, abs=1e-12)
    a = np.zeros(11)
    b = np.zeros(11)
    a[0] = b[10] = 1.0
    assert mo.kr_distance(a, a, 1, 1.0, 11) == pytest.approx(0.0, abs=1e-12)
    assert mo.kr_distance(a, b, 1, 1.0, 11) > 0.0
    assert set(mo.catalog_names()) >= {"ex2.1", "ex2.2", "ex2.3", "ex2.4"}
