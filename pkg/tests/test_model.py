import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from threescale.model import (AssumptionWarning, DimensionalParams, Frame, Params, equilibria,
                              equilibrium_residual, jacobian, nondimensionalize, paper_params,
                              preset, vector_field)

unit = st.floats(0.01, 1.0)


def fd_jac(s, p, h=1e-6):
    s = np.asarray(s, float)
    return np.column_stack([(vector_field(s + h * e, p) - vector_field(s - h * e, p)) / (2 * h)
                            for e in np.eye(3)])


@settings(max_examples=60, deadline=None)
@given(unit, unit, unit, st.floats(0.1, 1.0), st.floats(0.002, 0.5))
def test_jacobian_matches_finite_differences(x, y, z, alpha, beta2):
    p = paper_params(alpha=alpha, beta2=beta2)
    assert np.max(np.abs(jacobian((x, y, z), p) - fd_jac((x, y, z), p))) <= 1e-6


@settings(max_examples=40, deadline=None)
@given(unit, unit, unit, st.sampled_from(list(Frame)))
def test_frames_are_uniform_rescalings(x, y, z, frame):
    p = paper_params(alpha=0.75, beta2=0.05)
    s = np.array([x, y, z])
    np.testing.assert_allclose(vector_field(s, p, frame), vector_field(s, p) * frame.factor(p),
                               rtol=1e-15, atol=0)
    np.testing.assert_allclose(jacobian(s, p, frame), jacobian(s, p) * frame.factor(p),
                               rtol=1e-15, atol=0)


def test_frame_factors():
    p = paper_params(alpha=0.75, beta2=0.05)
    assert Frame.INTERMEDIATE.factor(p) == pytest.approx(20.0)
    assert Frame.SLOW.factor(p) == pytest.approx(200.0)
    assert Frame.parse("slow") is Frame.SLOW


def test_coordinate_planes_are_invariant():
    p = paper_params(alpha=0.75, beta2=0.05)
    for k in range(3):
        s = np.array([0.3, 0.2, 0.1])
        s[k] = 0.0
        assert vector_field(s, p)[k] == 0.0


def test_params_validation():
    with pytest.raises(ValueError):
        paper_params(alpha=1.5, beta2=0.1)
    with pytest.raises(ValueError):
        paper_params(alpha=0.5, beta2=0.1, epsilon=0.0)
    with pytest.warns(AssumptionWarning):
        paper_params(alpha=0.5, beta2=0.1, delta1=1.2)


def test_params_text_round_trip(tmp_path):
    p = paper_params(alpha=0.6, beta2=0.005)
    p.save(tmp_path / "p.txt")
    assert Params.load(tmp_path / "p.txt") == p
    q = Params.from_text("alpha = 0.3  # comment\n", base=p)
    assert q.alpha == 0.3 and q.beta2 == p.beta2
    with pytest.raises(ValueError, match="unknown parameter"):
        Params.from_text("omega=1", base=p)
    with pytest.raises(KeyError):
        preset("nope", 0.5, 0.1)


def test_reference_values():
    p = paper_params(alpha=0.75, beta2=0.01)
    assert (p.beta1, p.delta1, p.delta2, p.delta3) == (0.1, 0.15, 0.35, 0.65)
    assert (p.gamma1, p.gamma2, p.epsilon, p.delta) == (4.1, 15.0, 0.05, 0.1)


@pytest.mark.parametrize("beta2,alpha", [(0.01, 0.75), (0.05, 0.75), (0.09, 0.75), (0.005, 0.6)])
def test_equilibria_are_roots(beta2, alpha):
    p = paper_params(alpha=alpha, beta2=beta2)
    eqs = equilibria(p)
    kinds = [e.kind for e in eqs]
    assert kinds[:2] == ["Origin", "PreyOnly"]
    for e in eqs:
        assert equilibrium_residual(e.state, p) <= 1e-10
        assert np.all(np.asarray(e.state) >= 0)


def test_coexistence_stability_switches_at_hopf():
    # the coexistence equilibrium loses stability near beta2 = 0.0724 at alpha = 0.75
    def star(b):
        return next(e for e in equilibria(paper_params(alpha=0.75, beta2=b))
                    if e.kind == "Coexistent")
    assert star(0.05).stable
    assert not star(0.09).stable


def _dims(**kw):
    base = dict(r=1.0, K=1.0, p1=1.0, H1=0.1, b1=0.05, d1=0.0075, m1=0.205, p2=1.0, H2=0.01,
                b2=0.005, d2=0.00175, q=0.005, d3=0.00325, m2=15.0, alpha=0.75)
    base.update(kw)
    return DimensionalParams(**base)


def test_nondimensionalize_recovers_reference_set():
    p, sc = nondimensionalize(_dims())
    ref = paper_params(alpha=0.75, beta2=0.01)
    for k, v in ref.as_dict().items():
        assert getattr(p, k) == pytest.approx(v, rel=1e-12), k
    assert sc.epsilon2 == pytest.approx(sc.epsilon1 * p.delta)


def test_nondimensionalize_warns_on_death_rate_equal_to_conversion():
    with pytest.warns(AssumptionWarning, match="delta1"):
        p, _ = nondimensionalize(_dims(d1=0.05))
    assert p.delta1 == 1.0


def test_dimensional_validation():
    with pytest.raises(ValueError):
        _dims(K=-1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        DimensionalParams.from_text("\n".join(f"{k}={v}" for k, v in vars(_dims()).items()))
