import math

import pytest

import herdlv

BASE = herdlv.Params(0.5, 0.4, 0.65)


def test_params_validation():
    assert BASE.r == 0.5 and BASE.alpha == 0.4 and BASE.beta == 0.65
    with pytest.raises(herdlv.ParameterError, match="r must be > 0"):
        herdlv.Params(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        herdlv.Params(1.0, math.nan, 1.0)


def test_equilibria_and_stability():
    eqs = {e["kind"]: e for e in herdlv.equilibria(BASE)}
    assert set(eqs) == {"extinction", "prey_only", "interior"}
    x, y = eqs["interior"]["point"]
    assert abs(x - (0.4 / 0.65) ** 2) <= 1e-15
    assert abs(y - 0.1912) <= 1e-4
    assert eqs["interior"]["stability"] == "stable"
    assert eqs["prey_only"]["stability"] == "saddle"

    c = herdlv.classify_interior(BASE)
    assert c["criterion"] == c["eigen"] == "stable"
    assert all(ev.real < 0 for ev in c["eigenvalues"])

    j = herdlv.jacobian(BASE, 1.0, 0.0)
    assert j[0][0] == -0.5 and j[1][1] == pytest.approx(0.25)


def test_extinction_bound_and_envelope():
    b = herdlv.extinction_bound(BASE, 0.4, 1.0)
    assert abs(b["k_value"] - 0.82219) <= 1e-5
    assert b["sufficient"]
    assert b["t_upper"] == pytest.approx(2.657003139, rel=1e-9)
    assert abs(herdlv.envelope(BASE, 0.4, 1.0, b["t_upper"])) <= 1e-12
    assert herdlv.extinction_bound(BASE, 0.4, 0.3)["t_upper"] is None


def test_right_hand_sides():
    fx, fy = herdlv.rhs_raw(BASE, 0.25, 0.5)
    assert fx == pytest.approx(0.5 * 0.25 * 0.75 - 0.5 * 0.5)
    assert fy == pytest.approx(-0.4 * 0.5 + 0.65 * 0.5 * 0.5)
    du, dy = herdlv.rhs_regularized(BASE, 0.0, 1.0)
    assert du == -0.5 and dy == -0.4


def test_integrate_extinction():
    traj = herdlv.integrate(BASE, 0.4, 1.0)
    term = traj.terminal
    assert term["kind"] == "extinction"
    assert abs(term["t_ext"] - 1.624) <= 0.005
    assert traj.t_ext == term["t_ext"]
    s = traj.samples
    assert s["x"][-1] == 0.0 and (s["x"] >= 0).all() and (s["y"] >= 0).all()
    ref = herdlv.integrate_raw_reference(BASE, 0.4, 1.0, 1e-5, 10.0, 1000)
    assert abs(ref.t_ext - traj.t_ext) <= 1e-6
    assert herdlv.verify_theorem_bounds(BASE, traj)["all_passed"]
    rs = traj.resample(11)
    assert len(rs["t"]) == 11 and rs["t"][-1] == traj.t_final


def test_integrate_config_and_failure():
    cfg = herdlv.IntegratorConfig(t_max=20.0)
    traj = herdlv.integrate(BASE, 0.4, 0.3, cfg)
    assert traj.terminal["kind"] == "horizon"
    assert traj.t_final == 20.0
    with pytest.raises(TypeError):
        herdlv.IntegratorConfig(bogus=1.0)
    bad = herdlv.IntegratorConfig(rtol=1e-14, atol=1e-16, h_min=0.5, h_init=0.9)
    with pytest.raises(herdlv.IntegrationFailure):
        herdlv.integrate(BASE, 0.4, 1.0, bad)


def test_classification_and_basins():
    assert herdlv.classify_ic(BASE, 0.4, 0.3)["outcome"] == "coexistence"
    v = herdlv.classify_ic(BASE, 0.4, 1.0)
    assert v["outcome"] == "extinction" and v["t_ext"] > 0
    assert herdlv.classify_ic(BASE, 0.0, 0.5)["reason"] == "initially_extinct"

    (row,) = herdlv.separatrix_scan(BASE, [0.4])
    assert row["failure"] is None
    assert 0.3 < row["y_crit"] < herdlv.k_threshold(BASE, 0.4)
    with pytest.raises(herdlv.RegimeError):
        herdlv.separatrix_scan(herdlv.Params(0.5, 0.4, 1.0), [0.4])

    grid = herdlv.grid_sweep(BASE, (0.4, 0.4, 0.3, 1.0), 1, 2)
    assert grid["outcome"] == [["coexistence", "extinction"]]
    assert math.isnan(grid["t_ext"][0][0]) and grid["t_ext"][0][1] > 0
