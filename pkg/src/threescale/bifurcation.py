"""Continuation of equilibria, Hopf curves and periodic orbits.

Equilibria are followed in linear coordinates so that branches can be traced
through the coordinate planes (where transcritical exchanges happen).
Periodic orbits are shot in logarithmic coordinates, where the model reads
``u_i' = g_i(exp(u))`` and the stiff approach to ``x = 0`` is benign.
Floquet multipliers do not depend on that change of variables.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .continuation import Arclength, ArclengthSettings, tangent
from .manifolds import (G, H, first_lyapunov, hopf_Delta, layer_jacobian, superslow_curves,
                        x_Z_start, y_Z)
from .model import (AssumptionWarning, Frame, Params, chi, equilibria, jacobian, paper_params,
                    partials, phi, psi, vector_field)

BIF_KINDS = ("Hopf", "SaddleNode", "Transcritical", "PeriodDoubling", "Torus", "CyclicFold",
             "HomoclinicApprox", "BogdanovTakens", "Cusp", "GeneralizedHopf")


@dataclass
class BranchPoint:
    params: dict
    state: np.ndarray
    stability: np.ndarray  # eigenvalues or Floquet multipliers
    stable: bool
    family: str = ""
    period: float = math.nan
    x_min: float = math.nan
    x_max: float = math.nan


@dataclass
class BifPoint:
    kind: str
    params: dict
    state: np.ndarray
    data: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"kind": self.kind, "params": self.params,
                "state": [float(v) for v in np.ravel(self.state)],
                "data": {k: _jsonable(v) for k, v in self.data.items()}}


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int)):
        return int(v)
    if isinstance(v, complex) or isinstance(v, np.complexfloating):
        return [float(v.real), float(v.imag)]
    if isinstance(v, np.ndarray):
        return [_jsonable(t) for t in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(t) for t in v]
    return v


@dataclass
class Branch:
    kind: str  # "Equilibrium" or "PeriodicOrbit"
    vary: str
    points: list[BranchPoint] = field(default_factory=list)
    detected: list[BifPoint] = field(default_factory=list)
    truncated: bool = False
    note: str = ""

    def values(self) -> np.ndarray:
        return np.array([pt.params[self.vary] for pt in self.points])

    def of_kind(self, kind: str) -> list[BifPoint]:
        return [b for b in self.detected if b.kind == kind]

    def to_csv(self, path) -> None:
        marks = {}
        for b in self.detected:
            v = b.params[self.vary]
            k = int(np.argmin(np.abs(self.values() - v))) if self.points else -1
            marks.setdefault(k, []).append(b.kind)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([self.vary, "family", "period", "x", "y", "z", "x_min", "x_max",
                        "stable", "bif"])
            for i, pt in enumerate(self.points):
                s = np.ravel(pt.state)
                s = np.concatenate([s, np.full(3 - len(s), 0.0)]) if len(s) < 3 else s[:3]
                w.writerow([_fmt(pt.params[self.vary]), pt.family, _fmt(pt.period),
                            *(_fmt(v) for v in s), _fmt(pt.x_min), _fmt(pt.x_max),
                            int(pt.stable), ";".join(marks.get(i, []))])

    def summary(self) -> dict:
        return {"kind": self.kind, "vary": self.vary, "n_points": len(self.points),
                "truncated": self.truncated, "note": self.note,
                "detected": [b.as_dict() for b in self.detected]}

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def _fmt(v) -> str:
    return "nan" if not np.isfinite(v) else repr(float(v))


def _with(p: Params, **kw) -> Params:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AssumptionWarning)
        return p.replace(**kw)


def _rates(s, p: Params) -> np.ndarray:
    """Per-capita growth rates in the fast frame."""
    return np.array([phi(s, p), p.epsilon * chi(s, p), p.epsilon * p.delta * psi(s, p)])


def _drates(s, p: Params) -> np.ndarray:
    d = partials(s, p)
    e, ed = p.epsilon, p.epsilon * p.delta
    return np.array([[d.phi_x, d.phi_y, d.phi_z],
                     [e * d.chi_x, e * d.chi_y, 0.0],
                     [ed * d.psi_x, 0.0, ed * d.psi_z]])


def hopf_test(J) -> float:
    """Product of pairwise eigenvalue sums; vanishes when ``l_i + l_j = 0``.

    For a 3x3 matrix this is ``s1 s2 - s3`` in terms of the trace, the sum of
    principal 2x2 minors and the determinant; for 2x2 it is the trace.
    """
    J = np.asarray(J)
    if J.shape == (2, 2):
        return float(np.trace(J))
    s1 = np.trace(J)
    s2 = 0.5 * (s1 ** 2 - np.trace(J @ J))
    return float(s1 * s2 - np.linalg.det(J))


def _hopf_pair(eigs):
    """Index pair whose sum is closest to zero."""
    n = len(eigs)
    pairs = [(abs(eigs[i] + eigs[j]), i, j) for i in range(n) for j in range(i + 1, n)]
    _, i, j = min(pairs)
    return eigs[i], eigs[j]


# ---------------------------------------------------------------------------
# equilibria


def _default_seed(p: Params):
    eqs = equilibria(p)
    for kind in ("Coexistent", "E_xz", "E_xy", "E_z", "PreyOnly", "Origin"):
        for e in eqs:
            if e.kind == kind:
                return np.array(e.state, dtype=float), kind
    raise RuntimeError("no equilibrium found to seed the branch")


def _family(active) -> str:
    names = {(1, 1, 1): "Coexistent", (1, 0, 1): "E_xz", (1, 1, 0): "E_xy",
             (0, 0, 1): "E_z", (1, 0, 0): "PreyOnly", (0, 0, 0): "Origin"}
    return names.get(tuple(int(a) for a in active), "Boundary")


def continue_equilibrium(p: Params, vary: str = "beta2", bounds=(0.001, 0.1), seed=None,
                         direction: float | None = None,
                         settings: ArclengthSettings | None = None,
                         follow_boundary: bool = True, max_points: int = 5000) -> Branch:
    """Follow an equilibrium in parameter ``vary`` across ``bounds``.

    ``seed`` is a state (defaults to the coexistence equilibrium of ``p``);
    ``direction`` is the sign of the initial parameter change (by default
    towards the farther bound). Hopf points (a pair with ``l_i + l_j = 0``
    and nonzero imaginary part) and folds (zero determinant on the family)
    are located by bisection along the branch. When a positive coordinate of
    the seed family hits zero a transcritical point is recorded and, with
    ``follow_boundary``, the branch continues on the boundary family.
    """
    lo, hi = sorted(bounds)
    lam0 = getattr(p, vary)
    if seed is None:
        s0, _ = _default_seed(p)
    else:
        s0 = np.array(seed, dtype=float)
    if direction is None:
        direction = 1.0 if hi - lam0 >= lam0 - lo else -1.0
    settings = settings or ArclengthSettings(h0=1e-4, h_max=2e-3)
    br = Branch("Equilibrium", vary)
    active = s0 > 0

    while True:
        idx = np.flatnonzero(active)
        fam = _family(active)
        seg = _trace_equilibrium_family(p, vary, s0, idx, (lo, hi), direction, settings, fam,
                                        br, max_points - len(br.points))
        if seg is None:
            break
        # seg: state at which coordinate j left the orthant, and the parameter there
        s_tc, lam_tc, j = seg
        active = active.copy()
        active[j] = False
        if not follow_boundary or not active.any():
            br.note = f"stopped at transcritical with {_family(active)}"
            break
        p = _with(p, **{vary: lam_tc})
        s0 = s_tc.copy()
        s0[j] = 0.0
    return br


def _eq_system(p, vary, idx):
    def G_(w):
        s = np.zeros(3)
        s[idx] = w[:-1]
        return _rates(s, _with(p, **{vary: w[-1]}))[idx]

    def J_(w):
        s = np.zeros(3)
        s[idx] = w[:-1]
        q = _with(p, **{vary: w[-1]})
        Ju = _drates(s, q)[np.ix_(idx, idx)]
        h = 1e-7 * max(1.0, abs(w[-1]))
        gl = (_rates(s, _with(p, **{vary: w[-1] + h}))[idx]
              - _rates(s, _with(p, **{vary: w[-1] - h}))[idx]) / (2 * h)
        return np.column_stack([Ju, gl])

    return G_, J_


def _trace_equilibrium_family(p, vary, s0, idx, bounds, direction, settings, fam, br, budget):
    lo, hi = bounds
    G_, J_ = _eq_system(p, vary, idx)
    w0 = np.concatenate([s0[idx], [getattr(p, vary)]])
    if len(idx):
        # polish the seed at fixed parameter
        for _ in range(20):
            Jw = J_(w0)[:, :-1]
            dw = np.linalg.solve(Jw, G_(w0))
            w0[:-1] -= dw
            if np.linalg.norm(dw) < 1e-14:
                break
    else:
        return _trace_trivial(p, vary, bounds, direction, br)
    eng = Arclength(G_, w0, J_, settings=settings, direction=direction)

    def state(w):
        s = np.zeros(3)
        s[idx] = w[:-1]
        return s

    def info(w):
        q = _with(p, **{vary: w[-1]})
        J3 = jacobian(state(w), q)
        return J3, np.linalg.eigvals(J3)

    def record(w):
        J3, ev = info(w)
        br.points.append(BranchPoint({vary: float(w[-1])}, state(w), ev,
                                     bool(np.all(ev.real < 0)), fam))

    def t_hopf(w):
        return hopf_test(info(w)[0])

    def t_fold(w):
        return float(np.linalg.det(J_(w)[:, :-1]))

    def t_pos(j):
        return lambda w: float(w[j])

    record(eng.w)
    prev = eng.w.copy()
    n = 0
    while n < budget:
        w = eng.step()
        if w is None:
            br.truncated = True
            br.note = "step size underflow"
            return None
        n += 1
        lam = w[-1]
        # leaving the orthant: transcritical with the boundary family
        neg = [k for k in range(len(idx)) if w[k] < 0 <= prev[k]]
        if neg:
            k = neg[0]
            wt = eng.locate(eng.w_prev, eng.t_prev, 0.0,
                            float(np.dot(w - eng.w_prev, eng.t_prev)), t_pos(k), tol=1e-12)
            if wt is None:
                wt = w
            _scan_tests(eng, prev, wt, t_hopf, t_fold, br, p, vary, state, idx)
            st = state(wt)
            st[idx[k]] = 0.0
            br.detected.append(BifPoint("Transcritical", {vary: float(wt[-1])}, st,
                                        {"coordinate": "xyz"[idx[k]], "from": fam}))
            return st, float(wt[-1]), int(idx[k])
        _scan_tests(eng, prev, w, t_hopf, t_fold, br, p, vary, state, idx)
        if lam < lo or lam > hi:
            break
        record(w)
        prev = w.copy()
    return None


def _scan_tests(eng, prev, w, t_hopf, t_fold, br, p, vary, state, idx):
    s_end = float(np.dot(w - eng.w_prev, eng.t_prev))
    for kind, test in (("Hopf", t_hopf), ("SaddleNode", t_fold)):
        a, b = test(prev), test(w)
        if a * b >= 0:
            continue
        wz = eng.locate(eng.w_prev, eng.t_prev, 0.0, s_end, test, tol=1e-12)
        if wz is None:
            continue
        q = _with(p, **{vary: wz[-1]})
        s = state(wz)
        J3 = jacobian(s, q)
        ev = np.linalg.eigvals(J3)
        data = {"test": test(wz), "eigenvalues": ev}
        if kind == "Hopf":
            l1, l2 = _hopf_pair(ev)
            if abs(l1.imag) < 1e-12:
                continue  # neutral saddle
            l1c, om = first_lyapunov(lambda u: vector_field(u, q), s, A=J3)
            data.update(omega=om, l1=l1c,
                        criticality="Subcritical" if l1c > 0 else "Supercritical")
        br.detected.append(BifPoint(kind, {vary: float(wz[-1])}, s, data))


def _trace_trivial(p, vary, bounds, direction, br):
    lo, hi = bounds
    for lam in np.linspace(lo, hi, 50)[:: int(np.sign(direction)) or 1]:
        q = _with(p, **{vary: float(lam)})
        ev = np.linalg.eigvals(jacobian(np.zeros(3), q))
        br.points.append(BranchPoint({vary: float(lam)}, np.zeros(3), ev,
                                     bool(np.all(ev.real < 0)), "Origin"))
    return None


# ---------------------------------------------------------------------------
# Hopf curves in two parameters


@dataclass
class HopfCurve:
    vary: tuple[str, str]
    params: np.ndarray  # (N, 2)
    states: np.ndarray  # (N, 3)
    omega: np.ndarray
    closed: bool = False
    endpoints: list[BifPoint] = field(default_factory=list)
    note: str = ""

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([*self.vary, "x", "y", "z", "omega"])
            for pr, s, om in zip(self.params, self.states, self.omega):
                w.writerow([*(_fmt(v) for v in pr), *(_fmt(v) for v in s), _fmt(om)])


def continue_hopf_2par(p: Params, hopf: BifPoint, vary=("beta2", "alpha"),
                       bounds=((1e-4, 0.5), (0.0, 1.0)), settings: ArclengthSettings | None = None,
                       max_points: int = 4000, both_directions: bool = True) -> HopfCurve:
    """Follow a Hopf point of the coexistence equilibrium in two parameters.

    Unknowns are the state and both parameters; the defining system is the
    equilibrium condition plus the Hopf test function (product of pairwise
    eigenvalue sums). The curve ends at the parameter box, on closing, or
    where the imaginary pair collides on the real axis (flagged
    Bogdanov-Takens).
    """
    a, b = vary
    settings = settings or ArclengthSettings(h0=1e-4, h_max=5e-3)
    def q_of(w):
        return _with(p, **{a: w[3], b: w[4]})

    def G_(w):
        q = q_of(w)
        s = w[:3]
        return np.concatenate([_rates(s, q), [hopf_test(jacobian(s, q))]])

    def omega2(w):
        J = jacobian(w[:3], q_of(w))
        s1 = np.trace(J)
        return float(np.linalg.det(J) / s1) if s1 != 0 else math.nan

    w0 = np.concatenate([np.asarray(hopf.state, dtype=float),
                         [hopf.params.get(a, getattr(p, a)), hopf.params.get(b, getattr(p, b))]])
    (alo, ahi), (blo, bhi) = bounds
    pieces, ends = [], []
    closed = False
    for sgn in ((1.0, -1.0) if both_directions else (1.0,)):
        eng = Arclength(G_, w0, settings=settings, direction=1.0)
        if sgn < 0:
            eng.t = -eng.t
        pts = [eng.w.copy()]
        for _ in range(max_points):
            w = eng.step()
            if w is None:
                ends.append(BifPoint("Endpoint", {a: pts[-1][3], b: pts[-1][4]}, pts[-1][:3],
                                     {"reason": "step underflow"}))
                break
            if omega2(w) <= 0:
                wz = eng.locate(eng.w_prev, eng.t_prev, 0.0,
                                float(np.dot(w - eng.w_prev, eng.t_prev)), omega2, tol=1e-10)
                wz = wz if wz is not None else w
                pts.append(wz)
                ends.append(BifPoint("BogdanovTakens", {a: float(wz[3]), b: float(wz[4])},
                                     wz[:3], {"omega2": omega2(wz)}))
                break
            if not (alo <= w[3] <= ahi and blo <= w[4] <= bhi) or np.any(w[:3] < 0):
                ends.append(BifPoint("Endpoint", {a: float(w[3]), b: float(w[4])}, w[:3],
                                     {"reason": "left parameter box or orthant"}))
                break
            pts.append(w.copy())
            if len(pts) > 20 and np.linalg.norm(w - w0) < 0.5 * eng.h:
                closed = True
                break
        pieces.append(np.array(pts))
        if closed:
            break
    if len(pieces) == 2:
        W = np.vstack([pieces[1][::-1], pieces[0][1:]])
    else:
        W = pieces[0]
    om = np.sqrt(np.maximum([omega2(w) for w in W], 0.0))
    return HopfCurve((a, b), W[:, 3:5], W[:, :3], om, closed, ends)


def e_star_stable(p: Params) -> bool | None:
    """Stability of the coexistence equilibrium (``None`` if absent)."""
    for e in equilibria(p):
        if e.kind == "Coexistent":
            return e.stable
    return None


# ---------------------------------------------------------------------------
# periodic orbits


class _LogSystem:
    """Kolmogorov-type field ``s_i' = s_i r_i(s; lam)`` written in ``u = log s``.

    ``make(lam)`` returns a function of the full state giving the per-capita
    rates and their state derivatives; ``idx`` selects the active coordinates
    and ``base`` fills the others.
    """

    def __init__(self, make, idx, base, time_factor=1.0):
        self.make = make
        self.idx = np.asarray(idx)
        self.base = np.asarray(base, dtype=float)
        self.c = time_factor
        self._cache = {}

    def _ev(self, lam):
        f = self._cache.get(lam)
        if f is None:
            if len(self._cache) > 16:
                self._cache.clear()
            f = self._cache[lam] = self.make(lam)
        return f

    def state(self, u):
        s = self.base.copy()
        s[self.idx] = np.exp(u)
        return s

    def g(self, u, lam):
        return self.c * self._ev(lam)(self.state(u))[0][self.idx]

    def Ju(self, u, lam):
        s = self.state(u)
        return self.c * (self._ev(lam)(s)[1] * s[None, :])[np.ix_(self.idx, self.idx)]

    def g_lam(self, u, lam):
        h = 1e-7 * max(1.0, abs(lam))
        return (self.g(u, lam + h) - self.g(u, lam - h)) / (2 * h)

    def fused(self, lam):
        """``u -> (g, Ju, dg/dlam)`` at fixed ``lam``, for the variational equations."""
        h = 1e-7 * max(1.0, abs(lam))
        f0, fp, fm = self._ev(lam), self._ev(lam + h), self._ev(lam - h)
        idx, c = self.idx, self.c
        ix = np.ix_(idx, idx)

        def ev(u):
            s = self.state(u)
            r, dr = f0(s)
            gl = (fp(s)[0] - fm(s)[0])[idx] * (c / (2 * h))
            return c * r[idx], c * (dr * s[None, :])[ix], gl

        return ev


def _kernel(p: Params):
    """Scalar evaluation of the fast-frame rates and their Jacobian."""
    a, b1, b2 = p.alpha, p.beta1, p.beta2 ** 2
    d1, d2, d3, g1, g2 = p.delta1, p.delta2, p.delta3, p.gamma1, p.gamma2
    e, ed = p.epsilon, p.epsilon * p.delta

    def ev(s):
        x, y, z = float(s[0]), float(s[1]), float(s[2])
        bx = b1 + x
        q = b2 + x * x
        zz = 1.0 + g2 * z
        r = np.array([1.0 - x - y / bx - a * x * z / q,
                      e * (x / bx - d1 - g1 * y),
                      ed * (a * (x * x / q - d2) + (1.0 - a) * (1.0 / zz - d3))])
        dr = np.array([[-1.0 + y / bx ** 2 - a * z * (b2 - x * x) / q ** 2, -1.0 / bx, -a * x / q],
                       [e * b1 / bx ** 2, -e * g1, 0.0],
                       [ed * 2.0 * a * x * b2 / q ** 2, 0.0, -ed * (1.0 - a) * g2 / zz ** 2]])
        return r, dr

    return ev


def _full_system(p: Params, vary: str, frame=Frame.INTERMEDIATE) -> _LogSystem:
    return _LogSystem(lambda lam: _kernel(_with(p, **{vary: lam})), [0, 1, 2], np.zeros(3),
                      Frame.parse(frame).factor(p))


def _layer_system(p: Params) -> _LogSystem:
    k = _kernel(p)

    def make(z):
        def ev(s):
            r, dr = k((s[0], s[1], z))
            return r[:2], dr[:2, :2]
        return ev

    return _LogSystem(make, [0, 1], np.zeros(2), 1.0)


# log-state ceiling for shooting; populations above exp(5) are far outside the dynamics
U_MAX = 5.0


@dataclass
class Shot:
    """One shooting segment with its variational data."""
    u_end: np.ndarray
    M: np.ndarray
    S: np.ndarray  # sensitivity of u_end to the parameter
    trace_integral: float
    path: np.ndarray  # (n, m) log-state at solver steps
    ok: bool


def shoot(sys: _LogSystem, u0, T, lam, rtol=1e-10, atol=1e-12) -> Shot:
    """Integrate a segment with its variational and parameter-sensitivity equations."""
    n = len(u0)

    ev = sys.fused(lam)

    def rhs(t, Y):
        g, J, gl = ev(Y[:n])
        Phi = Y[n:n + n * n].reshape(n, n)
        S = Y[n + n * n:n + n * n + n]
        return np.concatenate([g, (J @ Phi).ravel(), J @ S + gl, [J.trace()]])

    def blowup(t, Y):
        return U_MAX - np.max(Y[:n])
    blowup.terminal = True

    Y0 = np.concatenate([u0, np.eye(n).ravel(), np.zeros(n), [0.0]])
    with np.errstate(over="ignore", invalid="ignore"):
        sol = solve_ivp(rhs, (0.0, T), Y0, method="DOP853", rtol=rtol, atol=atol,
                        events=blowup)
    Y = sol.y[:, -1]
    ok = sol.status == 0
    if not ok:
        Y = np.full_like(Y, np.nan)
    return Shot(Y[:n], Y[n:n + n * n].reshape(n, n), Y[n + n * n:n + n * n + n], float(Y[-1]),
                sol.y[:n], ok)


@dataclass
class PeriodicOrbit:
    state: np.ndarray  # a point on the orbit
    period: float
    lam: float
    multipliers: np.ndarray
    trace_integral: float
    x_min: float
    x_max: float
    samples: np.ndarray = field(repr=False, default=None)  # (m, n) states along the orbit
    segments: np.ndarray = field(repr=False, default=None)  # (K, n) log-states

    @property
    def trivial_multiplier(self) -> complex:
        return self.multipliers[int(np.argmin(np.abs(self.multipliers - 1.0)))]

    @property
    def nontrivial(self) -> np.ndarray:
        k = int(np.argmin(np.abs(self.multipliers - 1.0)))
        return np.delete(self.multipliers, k)


class OrbitProblem:
    """Multiple-shooting system for a periodic orbit.

    Unknowns ``w = (U_0, ..., U_{K-1}, log T, lam / lam_scale)`` with ``U_k``
    the log-state at time ``k T / K``. Equations: each segment of length ``T / K`` ends at
    the next ``U``, plus a Poincare phase condition on ``U_0`` against the
    anchor point. ``K = 1`` is single shooting.
    """

    def __init__(self, sys: _LogSystem, K: int, lam_scale: float = 0.01):
        self.sys, self.K, self.n = sys, int(K), len(sys.idx)
        self.lam_scale = lam_scale
        self.u_ref = None
        self.f_ref = None
        self._memo = {}

    def split(self, w):
        n, K = self.n, self.K
        return w[:n * K].reshape(K, n), math.exp(w[n * K]), w[n * K + 1] * self.lam_scale

    def pack(self, U, T, lam):
        return np.concatenate([np.ravel(U), [math.log(T), lam / self.lam_scale]])

    def set_anchor(self, w):
        U, _, lam = self.split(w)
        f = self.sys.g(U[0], lam)
        self.u_ref, self.f_ref = U[0].copy(), f / np.linalg.norm(f)

    def run(self, w) -> list[Shot]:
        key = w.tobytes()
        if key not in self._memo:
            if len(self._memo) > 4:
                self._memo.clear()
            U, T, lam = self.split(w)
            self._memo[key] = [shoot(self.sys, U[k], T / self.K, lam) for k in range(self.K)]
        return self._memo[key]

    def G(self, w):
        U, T, lam = self.split(w)
        shots = self.run(w)
        r = [shots[k].u_end - U[(k + 1) % self.K] for k in range(self.K)]
        return np.concatenate([*r, [np.dot(self.f_ref, U[0] - self.u_ref)]])

    def J(self, w):
        n, K = self.n, self.K
        U, T, lam = self.split(w)
        shots = self.run(w)
        A = np.zeros((n * K + 1, n * K + 2))
        for k, sh in enumerate(shots):
            r = slice(n * k, n * k + n)
            A[r, n * k:n * k + n] = sh.M
            k1 = (k + 1) % K
            A[r, n * k1:n * k1 + n] -= np.eye(n)
            A[r, n * K] = self.sys.g(sh.u_end, lam) * (T / K)
            A[r, n * K + 1] = sh.S * self.lam_scale
        A[-1, :n] = self.f_ref
        return A

    def orbit(self, w) -> PeriodicOrbit:
        U, T, lam = self.split(w)
        shots = self.run(w)
        M = np.eye(self.n)
        for sh in shots:
            M = sh.M @ M
        trace_int = float(sum(sh.trace_integral for sh in shots))
        mu = np.linalg.eigvals(M)
        k = int(np.argmin(np.abs(mu)))
        if self.n > 1 and mu[k].imag == 0.0 and abs(mu[k]) < 1e-8 * np.max(np.abs(mu)):
            # below eigvals resolution; det M = exp(int trace J) recovers it
            mu[k] = math.exp(trace_int) / np.prod(np.delete(mu, k)).real
        path = np.hstack([sh.path for sh in shots])
        X = np.array([self.sys.state(u) for u in path.T])
        return PeriodicOrbit(self.sys.state(U[0]), float(T), float(lam), mu,
                             trace_int,
                             float(X[:, 0].min()), float(X[:, 0].max()), X, U.copy())

    def residual(self, w) -> float:
        return float(np.max(np.abs(self.G(w))))

    def newton(self, w, iters=25, tol=1e-5, res_tol=1e-9):
        """Newton at fixed parameter; returns the converged ``w`` or ``None``."""
        w = np.array(w, dtype=float)
        self.set_anchor(w)
        m = self.n * self.K + 1
        for _ in range(iters):
            r = self.G(w)
            if not np.all(np.isfinite(r)):
                return None
            dw = np.linalg.solve(self.J(w)[:, :m], r)
            w[:m] -= dw
            if np.linalg.norm(dw) < tol * (1 + np.linalg.norm(w)) and self.residual(w) <= res_tol:
                return w
        return None

    def initial(self, u0, T, lam):
        """Segment starts from a plain integration of ``u0`` over one period guess."""
        ts = np.linspace(0.0, T, self.K + 1)[:-1]
        with np.errstate(over="ignore"):
            sol = solve_ivp(lambda t, u: self.sys.g(u, lam), (0.0, T), u0, method="DOP853",
                            rtol=1e-10, atol=1e-12, dense_output=True)
        U = sol.sol(ts).T if self.K > 1 else np.atleast_2d(u0)
        return self.pack(U, T, lam)


def default_segments(period: float, segment_length: float = 10.0, cap: int = 40) -> int:
    return int(min(cap, max(1, math.ceil(period / segment_length))))


def _orbit_of(sys: _LogSystem, u0, T, lam, segments=None):
    K = segments or default_segments(T)
    prob = OrbitProblem(sys, K)
    w = prob.newton(prob.initial(np.asarray(u0, dtype=float), T, lam))
    if w is None:
        raise RuntimeError("shooting did not converge")
    return prob.orbit(w)


def periodic_seed_from_simulation(p: Params, s0, vary: str = "beta2", t_transient=3000.0,
                                  t_search=1000.0, tol=1e-3, segments=None) -> PeriodicOrbit:
    """Locate a periodic orbit from a simulation and refine it by shooting.

    After a transient the last ``x`` minimum is compared with earlier ones;
    the first near-return (log-distance below ``tol``) gives the period guess.
    """
    from .integrate import IntegratorConfig, simulate

    cfg = IntegratorConfig()
    tr = simulate(p, s0, t_transient, cfg, extrema=False)
    tr2 = simulate(p, tr.states[-1], t_search, cfg)
    if np.ptp(np.log(tr2.x)) < 1e-6:
        raise RuntimeError("simulation settled on an equilibrium")
    mins = tr2.events_of("XMin")
    if len(mins) < 2:
        raise RuntimeError("no oscillation found for the periodic seed")
    t_a, s_a = mins[-1].time, np.log(np.array(mins[-1].state))
    for ev in mins[-2::-1]:
        if np.linalg.norm(np.log(np.array(ev.state)) - s_a) < tol:
            sys = _full_system(p, vary)
            return _orbit_of(sys, s_a, t_a - ev.time, getattr(p, vary), segments)
    raise RuntimeError("simulation did not settle on a periodic orbit")


def periodic_seed_from_hopf(sys: _LogSystem, s_eq, lam, amplitude=1e-3):
    """Small-amplitude seed ``(u0, T, direction)`` next to a Hopf point."""
    u_e = np.log(np.asarray(s_eq, dtype=float)[sys.idx])
    ev, V = np.linalg.eig(sys.Ju(u_e, lam))
    k = int(np.argmax(ev.imag))
    q = V[:, k].real
    q /= np.linalg.norm(q)
    return u_e + amplitude * q, 2 * np.pi / ev[k].imag, q


def _multiplier_tests(mu_nontrivial):
    m = mu_nontrivial
    pd = float(np.prod((m + 1.0)).real)
    fold = float(np.prod((m - 1.0)).real)
    cpl = [abs(v) - 1.0 for v in m if v.imag > 1e-9]
    tr = float(np.prod(cpl)) if cpl else math.nan
    return {"PeriodDoubling": pd, "CyclicFold": fold, "Torus": tr}


def continue_periodic(p: Params, orbit: PeriodicOrbit, vary: str = "beta2", bounds=(0.001, 0.1),
                      direction: float = 1.0, settings: ArclengthSettings | None = None,
                      period_cap_fast: float = 1e4, saddle_distance: float = 1e-3,
                      max_points: int = 400, frame=Frame.INTERMEDIATE) -> Branch:
    """Shooting continuation of a periodic orbit with Floquet multipliers.

    The unknowns are the segment starts (log coordinates), the log period and
    the parameter, followed by pseudo-arclength so that cyclic folds are
    passed. Period-doubling, torus and cyclic-fold test functions of the
    nontrivial multipliers are monitored and bisected. The branch stops with
    ``HomoclinicApprox`` when the orbit passes within ``saddle_distance`` of a
    saddle equilibrium while either its period (in fast time) exceeds
    ``period_cap_fast`` or the step size underflows.
    """
    sys = _full_system(p, vary, frame)
    K = len(orbit.segments) if orbit.segments is not None else default_segments(orbit.period)
    prob = OrbitProblem(sys, K)
    U = orbit.segments if orbit.segments is not None else \
        prob.split(prob.initial(np.log(orbit.state[sys.idx]), orbit.period, orbit.lam))[0]
    w0 = prob.pack(U, orbit.period, orbit.lam)
    prob.set_anchor(w0)
    eng = Arclength(prob.G, w0, prob.J, settings=settings or _orbit_settings(),
                    direction=direction)
    return _follow_orbits(prob, eng, Branch("PeriodicOrbit", vary), vary, sorted(bounds),
                          max_points, period_cap_fast * sys.c, saddle_distance,
                          lambda orb: _saddle_distance_full(p, vary, orb))


def continue_periodic_from_hopf(p: Params, hopf: BifPoint, vary: str = "beta2",
                                bounds=(0.001, 0.1), amplitude: float = 2e-3,
                                max_points: int = 400, **kw) -> Branch:
    """Continue the cycle family emanating from a Hopf point of ``continue_equilibrium``."""
    lam = hopf.params[vary]
    q = _with(p, **{vary: lam})
    sys = _full_system(q, vary, kw.pop("frame", Frame.INTERMEDIATE))
    prob, eng = _start_at_hopf(sys, hopf.state, lam, segment_length=10.0, cap=40)
    if eng is None:
        br = Branch("PeriodicOrbit", vary, truncated=True, note="no cycle near the Hopf point")
        return br
    return _follow_orbits(prob, eng, Branch("PeriodicOrbit", vary), vary, sorted(bounds),
                          max_points, kw.get("period_cap_fast", 1e4) * sys.c,
                          kw.get("saddle_distance", 1e-3),
                          lambda orb: _saddle_distance_full(q, vary, orb))


def _orbit_settings():
    return ArclengthSettings(h0=2e-3, h_max=0.2, h_min=1e-8, tol=1e-5, res_tol=1e-9)


def _start_at_hopf(sys: _LogSystem, s_eq, lam, segment_length, cap, amplitude=2e-3):
    """Shooting problem and continuation engine on a small cycle next to a Hopf point."""
    u0, T, _ = periodic_seed_from_hopf(sys, s_eq, lam, amplitude=amplitude)
    u_e = np.log(np.asarray(s_eq, dtype=float)[sys.idx])
    prob = OrbitProblem(sys, default_segments(T, segment_length=segment_length, cap=cap))
    w0 = prob.initial(u0, T, lam)
    U0, _, _ = prob.split(w0)
    # fix the amplitude along the seed's radial direction for the first point
    t0 = np.concatenate([np.ravel(U0 - u_e), [0.0, 0.0]])
    t0 /= np.linalg.norm(t0)
    prob.set_anchor(w0)
    eng = Arclength(prob.G, w0, prob.J, t0=t0, settings=_orbit_settings())
    w, _ = eng.correct(w0, t0)
    if w is None:
        return prob, None
    eng.w = w
    eng.t = tangent(prob.J(w), t0)
    return prob, eng


def _follow_orbits(prob: OrbitProblem, eng: Arclength, br: Branch, vary, bounds, max_points,
                   period_cap, saddle_distance, saddle_dist_fn, annotate=None):
    lo, hi = bounds

    def record(w):
        orb = prob.orbit(w)
        stable = bool(np.all(np.abs(orb.nontrivial) < 1.0))
        br.points.append(BranchPoint({vary: float(orb.lam)}, orb.state, orb.multipliers, stable,
                                     "Periodic", orb.period, orb.x_min, orb.x_max))
        return orb

    def tests(w):
        return _multiplier_tests(prob.orbit(w).nontrivial)

    def homoclinic(orb, reason):
        d = saddle_dist_fn(orb)
        if d > saddle_distance:
            return False
        data = {"period": orb.period, "saddle_distance": d, "reason": reason}
        if annotate is not None:
            data.update(annotate(orb))
        br.detected.append(BifPoint("HomoclinicApprox", {vary: orb.lam}, orb.state, data))
        br.note = f"homoclinic approach ({reason})"
        return True

    orb = record(eng.w)
    prev_t = tests(eng.w)
    for _ in range(max_points):
        prob.set_anchor(eng.w)
        w = eng.step()
        if w is None:
            if not homoclinic(orb, "step underflow"):
                br.truncated = True
                br.note = "step size underflow"
            break
        cur_t = tests(w)
        s_end = float(np.dot(w - eng.w_prev, eng.t_prev))
        for kind in ("PeriodDoubling", "Torus", "CyclicFold"):
            a, b = prev_t[kind], cur_t[kind]
            if not (np.isfinite(a) and np.isfinite(b)) or a * b >= 0:
                continue
            wz = eng.locate(eng.w_prev, eng.t_prev, 0.0, s_end,
                            lambda v, k=kind: tests(v)[k], tol=1e-7)
            oz = prob.orbit(wz if wz is not None else w)
            br.detected.append(BifPoint(kind, {vary: oz.lam}, oz.state,
                                        {"period": oz.period, "multipliers": oz.multipliers,
                                         "located": wz is not None}))
        orb = record(w)
        if orb.period > period_cap and homoclinic(orb, "period cap"):
            break
        if not lo <= orb.lam <= hi:
            br.note = "parameter bound reached"
            break
        prev_t = cur_t
    else:
        br.note = "point budget exhausted"
    return br


def _saddle_distance_full(p, vary, orb: PeriodicOrbit) -> float:
    q = _with(p, **{vary: orb.lam})
    best = math.inf
    for e in equilibria(q):
        if np.any(e.eigenvalues.real > 0) and np.any(e.eigenvalues.real < 0):
            d = np.linalg.norm(orb.samples - np.asarray(e.state), axis=1)
            best = min(best, float(d.min()))
    return best


# ---------------------------------------------------------------------------
# fast subsystem


@dataclass
class LayerBranch:
    name: str
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    stable: np.ndarray
    saddle: np.ndarray


@dataclass
class CycleBranch:
    hopf_x: float
    z: np.ndarray
    period: np.ndarray
    x_min: np.ndarray
    x_max: np.ndarray
    stable: np.ndarray
    detected: list[BifPoint]
    end: str  # "HomoclinicApprox", "bounds", "truncated" or "budget"
    loop: str = ""  # "small" or "big" for homoclinic ends


@dataclass
class FastDiagram:
    params: Params
    branches: list[LayerBranch]
    hopf: list
    cycles: list[CycleBranch]

    def bistable_z(self) -> np.ndarray:
        """z values where a stable equilibrium coexists with a stable cycle."""
        out = []
        for c in self.cycles:
            for z, st in zip(c.z, c.stable):
                if st and _stable_equilibrium_at(self, z):
                    out.append(z)
        return np.array(sorted(out))


def _stable_equilibrium_at(d: FastDiagram, z: float) -> bool:
    for b in d.branches:
        if len(b.z) < 2:
            continue
        for i in range(len(b.z) - 1):
            if (b.z[i] - z) * (b.z[i + 1] - z) <= 0 and b.stable[i] and b.stable[i + 1]:
                return True
    return False


def _layer_stability(x, y, z, p):
    st, sd = [], []
    for xi, yi, zi in zip(x, y, z):
        ev = np.linalg.eigvals(layer_jacobian(xi, yi, zi, p))
        st.append(bool(np.all(ev.real < 0)))
        sd.append(bool(np.any(ev.real > 0) and np.any(ev.real < 0)))
    return np.array(st), np.array(sd)


def _layer_equilibria(p: Params, z: float):
    """Equilibria of the layer problem at fixed ``z``: K, L and Z points."""
    out = [(0.0, 0.0)]
    xs = np.linspace(1e-6, 1.0, 4001)
    Lz = H(xs, p) - z
    for i in np.flatnonzero(np.sign(Lz[:-1]) * np.sign(Lz[1:]) < 0):
        out.append((brentq(lambda t: H(t, p) - z, xs[i], xs[i + 1]), 0.0))
    x0 = x_Z_start(p)
    xz = np.linspace(x0, 1.0, 4001)[1:]
    Zz = G(xz, p) - z
    for i in np.flatnonzero(np.sign(Zz[:-1]) * np.sign(Zz[1:]) < 0):
        xr = brentq(lambda t: G(t, p) - z, xz[i], xz[i + 1])
        out.append((xr, float(y_Z(xr, p))))
    return out


def _winding(X, Y, x0, y0) -> int:
    a = np.unwrap(np.arctan2(Y - y0, X - x0))
    return int(round((a[-1] - a[0]) / (2 * np.pi)))


def fast_subsystem_diagram(p: Params, z_range=(0.0, 0.5), n_samples: int = 800,
                           cycles: bool = True, period_cap: float = 1e4,
                           max_cycle_points: int = 300) -> FastDiagram:
    """Bifurcation diagram of the ``(x, y)`` layer problem with ``z`` as parameter."""
    zlo, zhi = z_range
    if zlo < 0 or zhi <= zlo:
        raise ValueError("z_range must be an increasing pair of nonnegative numbers")
    Zc, Lc = superslow_curves(p, n_samples=n_samples)
    branches = []
    for c in (Zc, Lc):
        keep = (c.z >= zlo) & (c.z <= zhi)
        labels = np.asarray(c.labels)
        for lab in dict.fromkeys(labels[keep]):
            m = keep & (labels == lab)
            st, sd = _layer_stability(c.x[m], c.y[m], c.z[m], p)
            branches.append(LayerBranch(str(lab), c.x[m], c.y[m], c.z[m], st, sd))
    zk = np.linspace(zlo, zhi, 50)
    branches.append(LayerBranch("K", np.zeros_like(zk), np.zeros_like(zk), zk,
                                np.zeros(len(zk), bool), np.ones(len(zk), bool)))
    hopf = [h for h in Zc.hopf_points if zlo <= h.z <= zhi]
    cyc = []
    if cycles:
        for h in hopf:
            cyc.append(_layer_cycle_branch(p, h, (zlo, zhi), period_cap, max_cycle_points))
    return FastDiagram(p, branches, hopf, cyc)


def _layer_cycle_branch(p, h, z_range, period_cap, max_points,
                        saddle_distance=1e-3) -> CycleBranch:
    sys = _layer_system(p)
    prob, eng = _start_at_hopf(sys, [h.x, h.y], h.z, segment_length=50.0, cap=8)
    empty = np.array([])
    if eng is None:
        return CycleBranch(h.x, empty, empty, empty, empty, np.array([], bool), [], "truncated")

    def dist(orb):
        best = math.inf
        for xe, ye in _layer_equilibria(p, orb.lam):
            ev = np.linalg.eigvals(layer_jacobian(xe, ye, orb.lam, p))
            if np.any(ev.real > 0) and np.any(ev.real < 0):
                d = np.hypot(orb.samples[:, 0] - xe, orb.samples[:, 1] - ye)
                best = min(best, float(d.min()))
        return best

    br = _follow_orbits(prob, eng, Branch("PeriodicOrbit", "z"), "z", sorted(z_range),
                        max_points, period_cap, saddle_distance, dist,
                        annotate=lambda orb: {"loop": _loop_kind(p, orb)})
    homs = br.of_kind("HomoclinicApprox")
    if homs:
        end = "HomoclinicApprox"
    elif br.truncated:
        end = "truncated"
    else:
        end = "bounds" if br.note == "parameter bound reached" else "budget"
    pts = br.points
    return CycleBranch(h.x, np.array([q.params["z"] for q in pts]),
                       np.array([q.period for q in pts]), np.array([q.x_min for q in pts]),
                       np.array([q.x_max for q in pts]), np.array([q.stable for q in pts]),
                       br.detected, end, homs[0].data["loop"] if homs else "")


def _loop_kind(p, orb: PeriodicOrbit) -> str:
    """``small`` if the cycle winds around one non-saddle equilibrium, ``big`` if more."""
    X, Y = orb.samples[:, 0], orb.samples[:, 1]
    X, Y = np.append(X, X[0]), np.append(Y, Y[0])
    n_in = 0
    for xe, ye in _layer_equilibria(p, orb.lam):
        if xe <= 0 or ye <= 0:
            continue
        ev = np.linalg.eigvals(layer_jacobian(xe, ye, orb.lam, p))
        if np.any(ev.real > 0) and np.any(ev.real < 0):
            continue
        if _winding(X, Y, xe, ye) != 0:
            n_in += 1
    return "big" if n_in >= 2 else "small"


# ---------------------------------------------------------------------------
# two-parameter diagram of the layer problem


@dataclass
class Curve2:
    name: str
    z: np.ndarray
    beta2: np.ndarray
    x: np.ndarray
    physical: np.ndarray


@dataclass
class FastDiagram2:
    alpha: float
    sn_f: list[Curve2]
    hopf: list[Curve2]
    points: list[BifPoint]
    self_intersections: list[tuple[float, float]]

    def of_kind(self, kind):
        return [b for b in self.points if b.kind == kind]


def _layer_tests(x, b2, p):
    """Trace and determinant of the layer Jacobian on ``Z`` at ``beta2 = b2``."""
    q = _with(p, beta2=b2) if b2 != 0 else None
    if q is None:
        return math.nan, math.nan
    y = float(y_Z(x, q, clip=False))
    z = float(G(x, q, clip=False))
    J = layer_jacobian(x, y, z, q)
    return float(np.trace(J)), float(np.linalg.det(J))


def _curve_2par(p, test_idx, seeds, beta_bounds, x_bounds, settings, max_points):
    curves = []
    seen = []

    def G_(w):
        return np.array([_layer_tests(w[0], w[1], p)[test_idx]])

    for x0, b0 in seeds:
        if seen and np.min(np.hypot(np.array(seen)[:, 0] - x0,
                                    np.array(seen)[:, 1] - b0)) < 2 * settings.h_max:
            continue
        pts = []
        for sgn in (1.0, -1.0):
            eng = Arclength(G_, np.array([x0, b0]), settings=settings, direction=sgn)
            seg = [eng.w.copy()]
            for _ in range(max_points):
                w = eng.step()
                if w is None:
                    break
                if not (x_bounds[0] <= w[0] <= x_bounds[1]
                        and beta_bounds[0] <= w[1] <= beta_bounds[1]) or abs(w[1]) < 1e-9:
                    break
                seg.append(w.copy())
            pts.append(np.array(seg))
        W = np.vstack([pts[1][::-1], pts[0][1:]])
        curves.append(W)
        seen.extend((w[0], w[1]) for w in W)
    return curves


def _refine_on_curve(cond, event, wa, wb, tol=1e-12):
    """Zero of ``event`` on the curve ``cond = 0`` between nearby points ``wa``, ``wb``.

    Points are parametrized by the chord position ``t`` and solved for along
    the chord normal.
    """
    d = wb - wa
    nrm = np.array([-d[1], d[0]]) / np.linalg.norm(d)

    def on_curve(t):
        base = wa + t * d
        s, h = 0.0, 1e-9
        for _ in range(30):
            f = cond(*(base + s * nrm))
            df = (cond(*(base + (s + h) * nrm)) - cond(*(base + (s - h) * nrm))) / (2 * h)
            if df == 0:
                break
            step = f / df
            s -= step
            if abs(step) < tol:
                break
        return base + s * nrm

    fa, fb = event(*on_curve(0.0)), event(*on_curve(1.0))
    if not (np.isfinite(fa) and np.isfinite(fb)) or fa * fb > 0:
        return 0.5 * (wa + wb)
    t = brentq(lambda t: event(*on_curve(t)), 0.0, 1.0, xtol=tol)
    return on_curve(t)


def _segment_intersections(P):
    """Self-intersections of a polyline ``P`` (N, 2)."""
    out = []
    n = len(P)
    for i in range(n - 1):
        a, b = P[i], P[i + 1]
        for j in range(i + 2, n - 1):
            c, d = P[j], P[j + 1]
            den = (b[0] - a[0]) * (d[1] - c[1]) - (b[1] - a[1]) * (d[0] - c[0])
            if den == 0:
                continue
            t = ((c[0] - a[0]) * (d[1] - c[1]) - (c[1] - a[1]) * (d[0] - c[0])) / den
            u = ((c[0] - a[0]) * (b[1] - a[1]) - (c[1] - a[1]) * (b[0] - a[0])) / den
            if 0 <= t <= 1 and 0 <= u <= 1:
                out.append((float(a[0] + t * (b[0] - a[0])), float(a[1] + t * (b[1] - a[1]))))
    return out


def fast_subsystem_2par(alpha: float = 1.0, base: Params | None = None,
                        beta_bounds=(-0.5, 0.5), n_seed: int = 41,
                        max_points: int = 3000) -> FastDiagram2:
    """Fold (SN_f) and Hopf curves of the layer problem in the ``(z, beta2)`` plane.

    Equilibria on ``Z`` are parametrized by ``x``, so each codimension-one
    condition is a single equation in ``(x, beta2)``, followed by arclength
    continuation and mapped to ``z = G(x)``. ``beta2`` enters only through
    its square; negative values are continued and flagged nonphysical.
    Cusps are turning points of the fold curve in ``beta2``; Bogdanov-Takens
    points are where the Hopf frequency vanishes; generalized Hopf points are
    sign changes of the criticality index along the Hopf curve.
    """
    p = base if base is not None else paper_params(alpha, 0.01)
    p = _with(p, alpha=alpha)
    settings = ArclengthSettings(h0=1e-4, h_max=2e-3, h_min=1e-10)
    bet = [b for b in np.linspace(beta_bounds[0], beta_bounds[1], n_seed) if abs(b) > 1e-6]
    xs = np.linspace(1e-4, 1.0, 2001)
    out = {}
    for name, k in (("SN_f", 1), ("Hopf", 0)):
        seeds = []
        for b in bet:
            vals = np.array([_layer_tests(x, b, p)[k] for x in xs])
            for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
                seeds.append((0.5 * (xs[i] + xs[i + 1]), b))
        out[name] = _curve_2par(p, k, seeds, beta_bounds, (1e-5, 1.0), settings, max_points)

    def to_curve(name, W):
        z = np.array([G(w[0], _with(p, beta2=w[1]), clip=False) for w in W])
        return Curve2(name, z, W[:, 1], W[:, 0], W[:, 1] > 0)

    sn = [to_curve("SN_f", W) for W in out["SN_f"]]
    hf = [to_curve("Hopf", W) for W in out["Hopf"]]
    def phys(x, b):
        return bool(b > 0 and y_Z(x, _with(p, beta2=b), clip=False) >= 0)

    def point(kind, c, i, event, cond):
        w = _refine_on_curve(lambda x, b: _layer_tests(x, b, p)[cond], event,
                             np.array([c.x[i], c.beta2[i]]), np.array([c.x[i + 1], c.beta2[i + 1]]))
        x, b = w
        z = float(G(x, _with(p, beta2=b), clip=False))
        return BifPoint(kind, {"z": z, "beta2": float(b)}, np.array([x]),
                        {"physical": phys(x, b)})

    def delta(x, b):
        q = _with(p, beta2=b)
        y = float(y_Z(x, q, clip=False))
        z = float(G(x, q, clip=False))
        return hopf_Delta(x, y, z, q)

    points = []
    for c in sn:
        db = np.diff(c.beta2)
        for i in np.flatnonzero(db[:-1] * db[1:] < 0):
            # turning point of the fold curve in beta2: max/min of beta2 along the curve
            k = i + 1
            points.append(BifPoint("Cusp", {"z": float(c.z[k]), "beta2": float(c.beta2[k])},
                                   np.array([c.x[k]]), {"physical": phys(c.x[k], c.beta2[k])}))
    for c in hf:
        dets = np.array([_layer_tests(x, b, p)[1] for x, b in zip(c.x, c.beta2)])
        for i in np.flatnonzero(np.sign(dets[:-1]) * np.sign(dets[1:]) < 0):
            points.append(point("BogdanovTakens", c, i, lambda x, b: _layer_tests(x, b, p)[1], 0))
        D = np.array([delta(x, b) if d > 0 else math.nan
                      for x, b, d in zip(c.x, c.beta2, dets)])
        for i in range(len(D) - 1):
            if np.isfinite(D[i]) and np.isfinite(D[i + 1]) and D[i] * D[i + 1] < 0:
                points.append(point("GeneralizedHopf", c, i, delta, 0))
    inter = []
    for c in hf:
        det = np.array([_layer_tests(x, b, p)[1] for x, b in zip(c.x, c.beta2)])
        m = det > 0
        P = np.column_stack([c.z, c.beta2])
        for zi, bi in _segment_intersections(P):
            k = int(np.argmin(np.hypot(c.z - zi, c.beta2 - bi)))
            if m[k]:
                inter.append((zi, bi))
    return FastDiagram2(alpha, sn, hf, points, inter)
