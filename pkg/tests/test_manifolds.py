import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from threescale import manifolds as mf
from threescale.model import partials, paper_params, phi


@pytest.fixture(scope="module")
def nu_oracle():
    """Fold curve eliminated symbolically from phi = 0 and phi_x = 0."""
    x, y, z, a, b1, b2 = sp.symbols("x y z alpha beta1 beta2", positive=True)
    ph = 1 - x - y / (b1 + x) - a * x * z / (b2 ** 2 + x ** 2)
    y_sol = sp.solve(sp.Eq(ph, 0), y)[0]
    z_sol = sp.solve(sp.Eq(sp.diff(ph, x).subs(y, y_sol), 0), z)[0]
    return sp.lambdify((x, a, b1, b2), sp.simplify(z_sol), "numpy")


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 0.85), st.floats(0.2, 1.0), st.floats(0.003, 0.3))
def test_fold_parametrization_solves_defining_equations(x, alpha, beta2):
    p = paper_params(alpha=alpha, beta2=beta2)
    if abs(x - mf.fold_x_d(p)) < 1e-3:
        return
    s = np.array([x, mf.fold_mu(x, p), mf.fold_nu(x, p)])
    scale = max(1.0, abs(s[2]))
    assert abs(phi(s, p)) <= 1e-10 * scale
    assert abs(partials(s, p).phi_x) <= 1e-10 * scale


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 0.85), st.floats(0.2, 1.0), st.floats(0.003, 0.3))
def test_fold_nu_matches_symbolic_elimination(nu_oracle, x, alpha, beta2):
    p = paper_params(alpha=alpha, beta2=beta2)
    if abs(x - mf.fold_x_d(p)) < 1e-3:
        return
    assert mf.fold_nu(x, p) == pytest.approx(nu_oracle(x, alpha, p.beta1, beta2), rel=1e-9)


def test_printed_variant_of_nu_is_not_a_fold():
    p = paper_params(alpha=0.6, beta2=0.048)
    x = 0.3
    s = np.array([x, mf.F_surface(x, mf.fold_nu_printed(x, p), p), mf.fold_nu_printed(x, p)])
    assert abs(partials(s, p).phi_x) > 1e-3


@pytest.mark.parametrize("beta2,alpha", [(0.005, 0.6), (0.048, 0.6), (0.2, 0.9)])
def test_nu_vanishes_at_half_of_one_minus_beta1(beta2, alpha):
    p = paper_params(alpha=alpha, beta2=beta2)
    assert mf.fold_nu(0.5 * (1 - p.beta1), p) == 0.0


def test_pole_of_nu():
    p = paper_params(alpha=0.6, beta2=0.048)
    assert mf._nu_den(mf.fold_x_d(p), p) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("beta2,alpha,case", [
    (0.3, 0.9, "Case1"), (0.2, 0.6, "Case2i"), (0.15, 0.3, "Case2ii"), (0.005, 0.6, "Case3")])
def test_fold_case_labels(beta2, alpha, case):
    fc = mf.classify_fold_curve(paper_params(alpha=alpha, beta2=beta2))
    assert fc.case == case
    names = {"Case1": {"F"}}.get(case, {"F-", "F0", "F+"})
    assert set(fc.branches) == names
    for pts in fc.branches.values():
        assert np.all(pts >= -1e-12)


@pytest.mark.xfail(strict=True, reason="reference parameters give x_d < (1 - beta1)/2 here, "
                                       "which forces Case3")
@pytest.mark.parametrize("beta2,alpha,case", [
    (0.048, 0.6, "Case2i"), (0.025, 0.6, "Case2ii"), (0.0245, 0.8, "Case2ii")])
def test_benchmark_fold_cases(beta2, alpha, case):
    assert mf.classify_fold_curve(paper_params(alpha=alpha, beta2=beta2)).case == case


def test_fold_case_rule():
    # Case3 exactly when the pole lies below (1 - beta1)/2
    for b2, a in [(0.005, 0.6), (0.048, 0.6), (0.2, 0.6), (0.3, 0.9)]:
        p = paper_params(alpha=a, beta2=b2)
        fc = mf.classify_fold_curve(p)
        assert (fc.case == "Case3") == (mf.fold_x_d(p) < 0.5 * (1 - p.beta1))


def test_sheet_structure_alternates():
    p = paper_params(alpha=0.6, beta2=0.005)
    sc = mf.sheet_structure(0.05, p)
    signs = [s[2] for s in sc.sheets]
    assert signs == [-1, 1, -1]
    assert (sc.attracting, sc.repelling) == (2, 1)


def test_superslow_curves_lie_on_nullclines():
    p = paper_params(alpha=0.6, beta2=0.005)
    Z, L = mf.superslow_curves(p)
    from threescale.model import chi
    pz = Z.points()
    assert np.max(np.abs(phi(pz.T, p))) <= 1e-12
    assert np.max(np.abs(chi(pz.T, p))) <= 1e-12
    pl = L.points()
    assert np.max(np.abs(phi(pl.T, p))) <= 1e-12 and np.all(pl[:, 1] == 0)
    assert Z.x_start == pytest.approx(p.delta1 * p.beta1 / (1 - p.delta1))


def test_layer_eigenvalues_match_jacobian():
    p = paper_params(alpha=0.6, beta2=0.005)
    for x in (0.1, 0.3, 0.45, 0.6):
        le = mf.layer_eigenvalues(x, p)
        z = float(mf.G(x, p))
        y = float(mf.y_Z(x, p))
        ev = np.sort_complex(np.linalg.eigvals(mf.layer_jacobian(x, y, z, p)))
        np.testing.assert_allclose(np.sort_complex(np.array([le.lambda_plus, le.lambda_minus])),
                                   ev, atol=1e-12)


def test_layer_hopf_point_and_criticality():
    p = paper_params(alpha=0.6, beta2=0.005)
    hs = [h for h in mf.hopf_points_fast(p) if h.branch.startswith("Z")]
    assert len(hs) == 1
    h = hs[0]
    assert abs(mf.layer_eigenvalues(h.x, p).trace) <= 1e-10
    # closed form and multilinear-form coefficient agree on the sign
    assert h.Delta == pytest.approx(0.871, abs=2e-3)
    assert h.l1 > 0 and h.kind == "Subcritical"


def test_first_lyapunov_on_normal_form():
    # z' = (i w) z + c |z|^2 z has l1 = Re(c) / w
    w, c = 2.0, -0.3

    def f(u):
        x, y = u
        r2 = x * x + y * y
        return np.array([-w * y + c * r2 * x, w * x + c * r2 * y])

    l1, om = mf.first_lyapunov(f, np.zeros(2))
    assert om == pytest.approx(w, rel=1e-6)
    assert np.sign(l1) == np.sign(c)


@pytest.mark.xfail(strict=True, reason="reference parameters give one Hopf point on Z")
def test_benchmark_layer_hopf_pair():
    hs = [h for h in mf.hopf_points_fast(paper_params(alpha=0.6, beta2=0.005))
          if h.branch.startswith("Z")]
    assert len(hs) == 2


def test_degenerate_nodes_are_discriminant_roots():
    p = paper_params(alpha=0.6, beta2=0.005)
    roots = mf.degenerate_nodes(p)
    assert len(roots) == 2
    for r in roots:
        assert abs(mf.layer_eigenvalues(r, p).Lambda) <= 1e-12
    # the Hopf point lies between them, where the pair is complex
    h = [h for h in mf.hopf_points_fast(p) if h.branch.startswith("Z")][0]
    assert roots[0] < h.x < roots[1]


def test_alpha_zero_rejected():
    with pytest.raises(ValueError):
        mf.classify_fold_curve(paper_params(alpha=0.0, beta2=0.05))
