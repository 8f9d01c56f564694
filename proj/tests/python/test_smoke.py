import math

import numpy as np
import pytest

import allelopathy as al


def test_params_validate():
    p = al.Params(1.96, 1.96, 0.05)
    assert p.lambda1 == 1.96 and p.gamma == 0.05
    assert math.isinf(al.Params(2, 1, math.inf).gamma)
    with pytest.raises(ValueError):
        al.Params(1, 1, 0.0)


def test_simulate_shapes_and_determinism():
    p = al.Params(2.0, 1.8, 0.3)
    a = al.simulate(p, [30, 30], 5.0, seed=3, sample_times=[0, 2.5, 5])
    b = al.simulate(p, [30, 30], 5.0, seed=3, sample_times=[0, 2.5, 5])
    assert a["densities"].shape == (3, 4)
    np.testing.assert_allclose(a["densities"].sum(axis=1), 1.0)
    assert a["final"].shape == (30, 30)
    assert set(np.unique(a["final"])) <= {0, 1, 2, 3}
    assert np.array_equal(a["final"], b["final"])


def test_dual_matches_forward():
    p = al.Params(2.0, 1.5, 0.7, dim=1)
    dens = [0.2, 0.3, 0.3, 0.2]
    final = al.simulate(p, [20], 5.0, seed=11, densities=dens)["final"]
    dual = [al.determine_color(p, [20], 5.0, 11, dens, x, 5.0) for x in range(20)]
    assert dual == final.tolist()


def test_coupling_and_favorability():
    variants = [al.Params(1.96, 2.88, 0.05), al.Params(1.96, 2.88, 0.5)]
    assert al.couple_holds(variants, [30, 30], 10.0, seed=1)
    f = al.favorability_rate_check(2.0, 1.0, 20000)
    assert abs(f["empirical"] - 0.5) < 3 * math.sqrt(0.25 / 20000)


def test_meanfield():
    p = al.Params(2.0, 3.0, 1.0)
    np.testing.assert_allclose(al.meanfield.ubar(p), [0.25, 0.5, 0, 0.25], atol=1e-15)
    w = al.meanfield.interior(p)
    assert w.min() > 0 and abs(w.sum() - 1) < 1e-12
    assert np.abs(al.meanfield.rhs(w, p)).max() < 1e-10
    assert al.meanfield.classify_region(2, 3, 1) == {"in_w1": True, "in_w2": True, "coexist": True}
    assert abs(al.meanfield.rhs(np.array([0.1, 0.2, 0.3, 0.4]), p).sum()) < 1e-14
    traj = al.meanfield.integrate(np.array([0.25, 0.25, 0.26, 0.24]), p, T=10.0)
    assert traj.shape == (11, 5)


def test_run_config(tmp_path):
    text = 'mode sweep\nsweep { lambda1 2\nlambda2 3\ngamma "0.05 0.5 1 2 5" }'
    r = al.run_config(text, {"output": str(tmp_path / "sw")})
    rows = (tmp_path / "sw" / "phase.csv").read_text().splitlines()
    assert len(rows) == 6
    assert "phase.csv" in r["files"]
    with pytest.raises(ValueError, match="params.gamma"):
        al.run_config("params { gamma 0 }")
    echo = al.resolved_config("params { lambda1 1,96 }")
    assert al.resolved_config(echo) == echo
