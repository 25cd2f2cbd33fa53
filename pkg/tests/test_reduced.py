import numpy as np
import pytest

from threescale import reduced as rd
from threescale.integrate import CustomEvent, simulate
from threescale.manifolds import F_surface, fold_nu
from threescale.model import chi, paper_params, phi, psi


def _fd_grad(f, s, h=1e-7):
    s = np.asarray(s, float)
    return np.array([(f(s + h * e) - f(s - h * e)) / (2 * h) for e in np.eye(3)])


@pytest.mark.parametrize("x,z", [(0.2, 0.1), (0.6, 0.05), (0.05, 0.02)])
def test_reduced_field_is_implicit_derivative(x, z):
    # differentiate phi(x, y, z) = 0 along y' = y chi, z' = delta z psi
    p = paper_params(alpha=0.6, beta2=0.048)
    s = np.array([x, float(F_surface(x, z, p)), z])
    g = _fd_grad(lambda u: phi(u, p), s)
    ydot, zdot = s[1] * chi(s, p), p.delta * z * psi(s, p)
    xdot = -(g[1] * ydot + g[2] * zdot) / g[0]
    np.testing.assert_allclose(rd.reduced_field(x, z, p), [xdot, zdot], rtol=1e-6)


def test_folded_singularities_on_fold():
    p = paper_params(alpha=0.6, beta2=0.048)
    fs = rd.folded_singularities(p)
    kinds = sorted((f.kind, f.branch) for f in fs)
    assert kinds == [("FoldedFocus", "Fplus"), ("FoldedNode", "F0"), ("FoldedSaddle", "F0")]
    for f in fs:
        assert f.z == pytest.approx(float(fold_nu(f.x, p)), rel=1e-12)
        np.testing.assert_allclose(rd.desingularized_field(f.x, f.z, p), 0.0, atol=1e-12)
    node = next(f for f in fs if f.kind == "FoldedNode")
    assert 0 < node.mu_ratio < 1


def test_desingularized_type_matches_classification():
    p = paper_params(alpha=0.6, beta2=0.048)
    for f in rd.folded_singularities(p):
        want = {"FoldedNode": "node", "FoldedSaddle": "saddle", "FoldedFocus": "focus"}[f.kind]
        assert rd.desingularized_type(f.x, f.z, p) == want


def test_double_limit_freezes_z():
    p = paper_params(alpha=0.6, beta2=0.048)
    f = rd.desingularized_field(np.array([0.1, 0.3]), np.array([0.1, 0.2]), p, "DoubleLimit")
    assert np.all(f[1] == 0)
    with pytest.raises(ValueError):
        rd.desingularized_field(0.1, 0.1, p, "Other")


def test_funnel_points_reach_folded_node():
    p = paper_params(alpha=0.6, beta2=0.048)
    node = next(f for f in rd.folded_singularities(p) if f.kind == "FoldedNode")
    fun = rd.strong_canard(node, p)
    assert fun.tangency_angle() < 1e-2
    pts = fun.sample(12, np.random.default_rng(1))
    assert np.all(fun.contains(pts[:, 0], pts[:, 1]))
    assert all(rd.flows_to(x, z, node, p) for x, z in pts)


def test_plane_predictor_matches_full_system():
    p = paper_params(alpha=0.75, beta2=0.09)
    y0, z0 = 0.3, 0.2
    pe = rd.plane_flow(y0, z0, p)
    assert pe.defined and pe.t_tc < pe.t_exit
    x0 = 1e-30
    # at x ~ 1e-30 the full system is the plane flow; x returns to x0 at the way-out time
    tr = simulate(p, (x0, y0, z0), 1.2 * pe.t_exit,
                  custom=[CustomEvent(lambda t, s: np.log(s[0] / x0), 1, "Back")])
    back = tr.events_of("Back")[0]
    assert back.time == pytest.approx(pe.t_exit, rel=1e-8)
    assert back.state[1] == pytest.approx(pe.y_exit, rel=1e-8)
    assert back.state[2] == pytest.approx(pe.z_exit, rel=1e-8)


def test_plane_flow_rejects_negative_start():
    with pytest.raises(ValueError):
        rd.plane_flow(-0.1, 0.1, paper_params(alpha=0.75, beta2=0.09))


def test_delayed_hopf_exit_is_monotone_in_entry():
    p = paper_params(alpha=0.7, beta2=0.2)
    exits = [rd.delayed_hopf_exit(x, p) for x in (0.45, 0.55, 0.65)]
    assert all(e.defined for e in exits)
    hopf = exits[0].x_hopf
    # entries further from the Hopf point leave later, i.e. at smaller x
    xs = [e.x_exit for e in exits]
    assert all(x < hopf for x in xs)
    assert xs[0] > xs[1] > xs[2]


def test_fsn2_points_put_equilibrium_on_fold():
    from threescale.model import partials

    base = paper_params(alpha=0.6, beta2=0.05)
    for kind in ("Coexistent", "E_xz"):
        pts = rd.fsn2_point(0.6, base, kind=kind)
        assert len(pts) == 2
        for b in pts:
            eq = next(e for e in rd.ordinary_singularities(base.replace(beta2=b)) if e.kind == kind)
            assert abs(partials(eq.state, base.replace(beta2=b)).phi_x) <= 1e-8
