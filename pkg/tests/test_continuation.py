import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from threescale.continuation import Arclength, ArclengthSettings, fd_jacobian, tangent


def circle(w):
    return np.array([w[0] ** 2 + w[1] ** 2 - 1.0])


def test_fd_jacobian_matches_analytic():
    w = np.array([0.3, -0.7])
    assert np.allclose(fd_jacobian(circle, w), [[0.6, -1.4]], atol=1e-8)


@given(st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=50, deadline=None)
def test_tangent_is_unit_null_vector(a, b):
    J = np.array([[a, b]])
    if np.hypot(a, b) < 1e-3:
        return
    t = tangent(J)
    assert np.isclose(np.linalg.norm(t), 1.0)
    assert abs(J @ t).max() <= 1e-12 * max(1.0, np.hypot(a, b))
    assert np.dot(tangent(J, prev=-t), t) < 0


def test_arclength_passes_turning_points_on_circle():
    eng = Arclength(circle, [1.0, 0.0], settings=ArclengthSettings(h0=1e-2, h_max=0.1))
    pts = [eng.w]
    angle = 0.0
    while angle < 2 * np.pi and len(pts) < 500:
        w = eng.step()
        assert w is not None
        angle += np.arccos(np.clip(np.dot(pts[-1], w), -1, 1))
        pts.append(w)
    P = np.array(pts)
    assert np.max(np.abs(np.hypot(P[:, 0], P[:, 1]) - 1.0)) <= 1e-9
    # both turning points in the parameter (second coordinate) were crossed
    assert P[:, 0].min() < -0.99 and P[:, 1].max() > 0.99 and P[:, 1].min() < -0.99


def test_locate_finds_zero_of_test_function():
    eng = Arclength(circle, [1.0, 0.0], settings=ArclengthSettings(h0=1e-2, h_max=0.2),
                    direction=1.0)
    while True:
        w = eng.step()
        if w[0] < 0:
            break
    s_hi = float(np.dot(w - eng.w_prev, eng.t_prev))
    wz = eng.locate(eng.w_prev, eng.t_prev, 0.0, s_hi, lambda v: v[0], tol=1e-12)
    assert wz is not None
    assert abs(wz[0]) <= 1e-8 and abs(abs(wz[1]) - 1.0) <= 1e-8


def test_locate_requires_sign_change():
    eng = Arclength(circle, [1.0, 0.0])
    assert eng.locate(eng.w, eng.t, 0.0, 1e-2, lambda v: 1.0 + v[0]) is None


def test_seed_is_projected_onto_curve():
    eng = Arclength(circle, [1.01, 0.0])
    assert abs(circle(eng.w)[0]) <= 1e-9
