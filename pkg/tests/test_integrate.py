import numpy as np
import pytest

from threescale.integrate import (CustomEvent, IntegratorConfig, Section, Trajectory,
                                  convergence_order, poincare_section, simulate)
from threescale.model import Frame, paper_params, phi


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(rtol=1e-15)
    with pytest.raises(ValueError):
        IntegratorConfig(method="rk4")
    p = paper_params(alpha=0.75, beta2=0.05)
    assert IntegratorConfig().solver_name(p) == "DOP853"
    assert IntegratorConfig().solver_name(p.replace(delta=0.01)) == "Radau"


def test_rejects_bad_initial_state():
    p = paper_params(alpha=0.75, beta2=0.05)
    with pytest.raises(ValueError):
        simulate(p, (-0.1, 0.1, 0.1), 10.0)
    with pytest.raises(ValueError):
        simulate(p, (0.1, 0.1, 0.1), 0.0)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_planes_stay_invariant(k):
    p = paper_params(alpha=0.75, beta2=0.09)
    s0 = np.array([0.3, 0.1, 0.2])
    s0[k] = 0.0
    tr = simulate(p, s0, 300.0)
    assert tr.success
    assert np.all(tr.states[:, k] == 0.0)
    assert np.all(np.delete(tr.states, k, axis=1) > 0)


def test_extremum_events_are_zeros_of_phi(mmo_params):
    tr = simulate(mmo_params, (0.3, 0.1, 0.2), 500.0)
    ev = tr.events_of("XMax") + tr.events_of("XMin")
    assert len(ev) > 10
    for e in ev:
        assert abs(phi(e.state, mmo_params)) <= 1e-8
    kinds = [e.kind for e in sorted(ev, key=lambda e: e.time)]
    # maxima and minima alternate
    assert all(a != b for a, b in zip(kinds, kinds[1:]))


def test_frames_give_the_same_path(mmo_params):
    s0 = (0.3, 0.1, 0.2)
    a = simulate(mmo_params, s0, 100.0, IntegratorConfig(frame=Frame.INTERMEDIATE))
    b = simulate(mmo_params, s0, 10.0, IntegratorConfig(frame=Frame.SLOW))
    np.testing.assert_allclose(a.states[-1], b.states[-1], rtol=1e-6)
    c = b.rescaled(Frame.INTERMEDIATE)
    assert c.t_end == pytest.approx(100.0)


def test_tight_tolerance_converges(mmo_params):
    # before the first passage near the repelling sheet, which amplifies errors
    s0 = (0.3, 0.1, 0.2)
    a = simulate(mmo_params, s0, 60.0, IntegratorConfig(rtol=1e-10, atol=1e-12))
    b = simulate(mmo_params, s0, 60.0, IntegratorConfig(rtol=1e-12, atol=1e-14))
    np.testing.assert_allclose(a.states[-1], b.states[-1], rtol=1e-9)


def test_implicit_and_explicit_agree(mmo_params):
    s0 = (0.3, 0.1, 0.2)
    a = simulate(mmo_params, s0, 50.0, IntegratorConfig(method="explicit", rtol=1e-11))
    b = simulate(mmo_params, s0, 50.0, IntegratorConfig(method="implicit", rtol=1e-11))
    np.testing.assert_allclose(a.states[-1], b.states[-1], rtol=1e-6)


@pytest.mark.parametrize("method,order", [("explicit", 8), ("implicit", 5)])
def test_observed_order(method, order):
    # Radau IIA has classical order 5; small steps show at least that
    assert convergence_order(IntegratorConfig(method=method)) == pytest.approx(order, abs=0.6)


def test_custom_and_section_events(mmo_params):
    tr = simulate(mmo_params, (0.3, 0.1, 0.2), 300.0,
                  section=Section((1.0, 0.0, 0.0), 0.3, 1),
                  custom=[CustomEvent(lambda t, s: s[2] - 0.2, 0, "ZCross")])
    sc = tr.events_of("SectionCross")
    assert sc and all(abs(e.state[0] - 0.3) < 1e-8 for e in sc)
    assert all(abs(e.state[2] - 0.2) < 1e-8 for e in tr.events_of("ZCross"))


def test_poincare_section_returns_requested_crossings(mmo_params):
    res = poincare_section(mmo_params, (0.3, 0.1, 0.2), Section((1.0, 0.0, 0.0), 0.3, 1), 5,
                           t_end=2000.0)
    assert res.complete and len(res) == 5
    # a periodic attractor returns to the same point
    np.testing.assert_allclose(res.crossings[0], res.crossings[-1], atol=1e-3)


def test_save_load_and_csv(tmp_path, mmo_params):
    tr = simulate(mmo_params, (0.3, 0.1, 0.2), 50.0)
    tr.save(tmp_path / "t.npz")
    back = Trajectory.load(tmp_path / "t.npz")
    np.testing.assert_array_equal(back.states, tr.states)
    assert back.events == tr.events and back.params == tr.params
    tr.to_csv(tmp_path / "t.csv")
    data = np.loadtxt(tmp_path / "t.csv", delimiter=",", skiprows=1)
    np.testing.assert_array_equal(data[:, 1:], tr.states)


def test_attractor_window():
    p = paper_params(alpha=0.75, beta2=0.09)
    tr = simulate(p, (0.3, 0.1, 0.2), 100.0)
    at = tr.attractor(0.5)
    assert at.times[0] >= 50.0 and at.t_end == tr.t_end
    assert all(e.time >= 50.0 for e in at.events)
