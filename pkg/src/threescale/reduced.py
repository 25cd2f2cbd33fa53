"""Reduced flows on the critical manifold and delay predictors.

On ``S`` (``y = F(x, z)``) the intermediate-time reduced flow is singular on
the fold curve; multiplying by ``-phi_x`` gives the desingularized system::

    x' = phi_y y chi + delta phi_z z psi
    z' = -delta phi_x z psi

whose equilibria on the fold are folded singularities. Orbits on repelling
sheets (``phi_x > 0``) run backwards relative to the reduced flow.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from matplotlib.path import Path as MplPath
from scipy.integrate import cumulative_trapezoid, solve_ivp
from scipy.optimize import brentq

from .manifolds import (G, F_surface, classify_fold_curve, dG, fold_mu, fold_nu,
                        layer_eigenvalues, x_Z_start, y_Z)
from .model import Params, chi, equilibria, partials, phi, psi


def desingularized_field(x, z, p: Params, limit: str = "FiniteDelta"):
    """Desingularized reduced field at ``(x, F(x, z), z)``.

    ``limit="DoubleLimit"`` drops the ``delta`` terms, leaving ``z`` frozen.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    y = F_surface(x, z, p)
    s = np.stack([x, y, z])
    d = partials(s, p)
    if limit == "DoubleLimit":
        return np.stack([d.phi_y * y * chi(s, p), np.zeros_like(x * z)])
    if limit != "FiniteDelta":
        raise ValueError(f"unknown limit {limit!r}")
    ps = psi(s, p)
    return np.stack([d.phi_y * y * chi(s, p) + p.delta * d.phi_z * z * ps,
                     -p.delta * d.phi_x * z * ps])


def reduced_field(x, z, p: Params):
    """Reduced flow on ``S`` in intermediate time (singular where phi_x = 0)."""
    f = desingularized_field(x, z, p)
    px = partials(np.stack([x, F_surface(x, z, p), z]), p).phi_x
    return f / (-px)


def _jac2(x, z, p: Params, limit="FiniteDelta"):
    hx = 1e-7 * max(abs(x), 1e-6)
    hz = 1e-7 * max(abs(z), 1e-6)
    cx = (desingularized_field(x + hx, z, p, limit) - desingularized_field(x - hx, z, p, limit)) / (2 * hx)
    cz = (desingularized_field(x, z + hz, p, limit) - desingularized_field(x, z - hz, p, limit)) / (2 * hz)
    return np.column_stack([cx, cz])


@dataclass
class FoldedSingularity:
    x: float
    y: float
    z: float
    eigenvalues: np.ndarray
    kind: str
    branch: str
    mu_ratio: float = float("nan")
    eigenvectors: np.ndarray | None = None

    @property
    def location(self):
        return np.array([self.x, self.y, self.z])


def _classify_eigs(w, dead=1e-10):
    disc = (w[0] - w[1]) ** 2
    if abs(w[0].imag) > 0 and abs(disc.real) > dead:
        return "FoldedFocus"
    lr = np.sort(np.abs(w.real))
    if lr[0] <= 1e-6 * lr[1]:
        return "Degenerate"
    if abs(w[0].imag) > 0:
        return "Degenerate"
    return "FoldedNode" if w[0].real * w[1].real > 0 else "FoldedSaddle"


def _branch_of(x, fc) -> str:
    for lab, pts in fc.branches.items():
        if len(pts) and pts[0, 0] - 1e-12 <= x <= pts[-1, 0] + 1e-12:
            return {"F-": "Fminus", "F0": "F0", "F+": "Fplus", "F": "F"}[lab]
    return "outside"


def folded_singularity_function(x, p: Params):
    """First desingularized component along the fold curve."""
    x = np.asarray(x, dtype=float)
    return desingularized_field(x, fold_nu(x, p), p)[0]


def folded_singularities(p: Params, n_grid: int = 4000, positive_only: bool = True) -> list[FoldedSingularity]:
    """Equilibria of the desingularized flow lying on the fold curve.

    Node, saddle or focus from the 2x2 Jacobian in ``(x, z)``; a weak
    eigenvalue below ``1e-6`` of the strong one is flagged ``Degenerate``.
    """
    fc = classify_fold_curve(p, n_grid)
    xs = np.linspace(0.0, 1.0, n_grid + 1)[1:]
    xs = xs[np.abs(xs - fc.x_d) > 1e-12]
    with np.errstate(all="ignore"):
        v = folded_singularity_function(xs, p)
    out = []
    for i in range(len(xs) - 1):
        a, b = v[i], v[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)) or a * b > 0:
            continue
        if xs[i] < fc.x_d < xs[i + 1]:
            continue
        r = xs[i] if a == 0 else brentq(lambda t: float(folded_singularity_function(t, p)),
                                         xs[i], xs[i + 1], xtol=1e-14)
        y, z = float(fold_mu(r, p)), float(fold_nu(r, p))
        if positive_only and (y < 0 or z < 0):
            continue
        J = _jac2(r, z, p)
        w, V = np.linalg.eig(J)
        kind = _classify_eigs(w)
        mu_ratio = float("nan")
        if kind in ("FoldedNode", "FoldedSaddle") and w.imag.max() == 0:
            a_ = np.abs(w.real)
            mu_ratio = float(a_.min() / a_.max())
        out.append(FoldedSingularity(r, y, z, w, kind, _branch_of(r, fc), mu_ratio, V))
    return out


# ---------------------------------------------------------------------------
# ordinary singularities and FSN II


def ordinary_singularities(p: Params) -> list:
    """Equilibria of the full system lying on ``S`` (not on ``x = 0``)."""
    return [e for e in equilibria(p) if e.state.x > 0 and e.kind != "PreyOnly"]


def _fold_test(p: Params, kind: str):
    eqs = [e for e in equilibria(p) if e.kind == kind]
    if not eqs:
        return np.nan
    return float(partials(eqs[0].state, p).phi_x)


@dataclass
class FSN2Result:
    beta2: np.ndarray
    alpha: np.ndarray
    test_xz: np.ndarray   # phi_x at E_xz, zero where it sits on the fold
    test_star: np.ndarray  # phi_x at E*
    curve_a: np.ndarray    # (beta2, alpha) points, E_xz crossing the fold
    curve_b: np.ndarray    # (beta2, alpha) points, E* crossing the fold
    flagged: bool = False


def _zero_points(B, A, T):
    pts = []
    for j, a in enumerate(A):
        row = T[j]
        for i in range(len(B) - 1):
            u, v = row[i], row[i + 1]
            if np.isfinite(u) and np.isfinite(v) and u * v < 0:
                pts.append((B[i] + (B[i + 1] - B[i]) * u / (u - v), a))
    for i, b in enumerate(B):
        col = T[:, i]
        for j in range(len(A) - 1):
            u, v = col[j], col[j + 1]
            if np.isfinite(u) and np.isfinite(v) and u * v < 0:
                pts.append((b, A[j] + (A[j + 1] - A[j]) * u / (u - v)))
    return np.array(sorted(set(pts))) if pts else np.empty((0, 2))


def fsn2_curves(beta2_grid, alpha_grid, base: Params) -> FSN2Result:
    """Where an ordinary singularity crosses the fold curve.

    On the fold ``phi_x = 0``, so the signed test is ``phi_x`` evaluated at
    ``E_xz`` (curve a) and at ``E*`` (curve b); zero crossings between grid
    nodes are located by linear interpolation along rows and columns.
    ``flagged`` is set when either curve has no detected point.
    """
    B = np.asarray(beta2_grid, float)
    A = np.asarray(alpha_grid, float)
    Ta = np.full((len(A), len(B)), np.nan)
    Tb = np.full_like(Ta, np.nan)
    for j, a in enumerate(A):
        for i, b in enumerate(B):
            p = base.replace(alpha=a, beta2=b)
            Ta[j, i] = _fold_test(p, "E_xz")
            Tb[j, i] = _fold_test(p, "Coexistent")
    ca, cb = _zero_points(B, A, Ta), _zero_points(B, A, Tb)
    return FSN2Result(B, A, Ta, Tb, ca, cb, flagged=len(ca) == 0 or len(cb) == 0)


def fsn2_point(alpha: float, base: Params, kind: str = "Coexistent", lo=1e-3, hi=0.5, n=200):
    """``beta2`` values at fixed ``alpha`` where the equilibrium ``kind`` sits on the fold."""
    bs = np.linspace(lo, hi, n)
    t = np.array([_fold_test(base.replace(alpha=alpha, beta2=b), kind) for b in bs])
    out = []
    for i in range(n - 1):
        if np.isfinite(t[i]) and np.isfinite(t[i + 1]) and t[i] * t[i + 1] < 0:
            out.append(brentq(lambda b: _fold_test(base.replace(alpha=alpha, beta2=b), kind),
                              bs[i], bs[i + 1], xtol=1e-12))
    return out


def desingularized_type(x, z, p: Params) -> str:
    """``saddle`` or ``node``/``focus`` type of an equilibrium of the desingularized flow."""
    w = np.linalg.eigvals(_jac2(x, z, p))
    if abs(w[0].imag) > 0:
        return "focus"
    return "saddle" if w[0].real * w[1].real < 0 else "node"


# ---------------------------------------------------------------------------
# strong canard and funnel


@dataclass
class SingularFunnel:
    node: FoldedSingularity
    gamma: np.ndarray        # (n, 2) strong canard in (x, z), starting at the node
    fold_arc: np.ndarray     # (m, 2) fold-curve arc bounding the funnel
    polygon: np.ndarray
    truncated: bool = False
    note: str = ""
    strong_dir: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def contains(self, x, z) -> np.ndarray:
        pts = np.column_stack([np.atleast_1d(x), np.atleast_1d(z)])
        return MplPath(self.polygon).contains_points(pts)

    def sample(self, n: int, rng, reach=(0.05, 0.6), margin=0.1) -> np.ndarray:
        """Random points between the canard and the fold arc.

        Each point interpolates between the two boundaries at a common
        fraction of their arclength, staying ``margin`` away from either.
        """
        def along(curve, f):
            L = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(curve, axis=0), axis=1))])
            t = f * L[-1]
            return np.column_stack([np.interp(t, L, curve[:, 0]), np.interp(t, L, curve[:, 1])])

        f = rng.uniform(*reach, n)
        s = rng.uniform(margin, 1.0 - margin, n)[:, None]
        return (1.0 - s) * along(self.gamma, f) + s * along(self.fold_arc, f)

    def tangency_angle(self) -> float:
        """Angle between the first segment of ``gamma`` and the strong direction."""
        seg = self.gamma[min(len(self.gamma) - 1, 3)] - self.gamma[0]
        c = abs(np.dot(seg, self.strong_dir)) / (np.linalg.norm(seg) * np.linalg.norm(self.strong_dir))
        return float(np.arccos(min(1.0, c)))


def _flow_desing(p, t_end, x0, z0, backward=False, max_step=np.inf, stop_on_fold=True):
    sgn = -1.0 if backward else 1.0

    def rhs(t, u):
        return sgn * desingularized_field(u[0], u[1], p)

    evs = []

    def out_x(t, u):
        return u[0]
    out_x.terminal = True

    def out_y(t, u):
        return F_surface(u[0], u[1], p)
    out_y.terminal = True

    def out_z(t, u):
        return u[1]
    out_z.terminal = True
    evs = [out_x, out_y, out_z]
    if stop_on_fold:
        def fold(t, u):
            return partials((u[0], F_surface(u[0], u[1], p), u[1]), p).phi_x
        fold.terminal = True
        evs.append(fold)
    return solve_ivp(rhs, (0, t_end), [x0, z0], method="DOP853", rtol=1e-10, atol=1e-13,
                     events=evs, max_step=max_step, dense_output=False)


def strong_canard(fn: FoldedSingularity, p: Params, offset: float = 1e-6,
                  t_end: float = 50.0, arc_points: int = 400) -> SingularFunnel:
    """Strong singular canard of a folded node and the funnel it bounds.

    The desingularized flow is integrated from ``fn`` displaced by
    ``offset`` along the strong eigendirection, in the time direction that
    moves away from the node, on the attracting side (``phi_x < 0``).
    The funnel polygon is closed by a chord from the end of the canard to
    the fold arc that leaves the node on the attracting side of the weak
    eigendirection, cut at the canard's arclength.
    """
    if fn.kind != "FoldedNode":
        raise ValueError("strong canard needs a folded node")
    w, V = fn.eigenvalues.real, fn.eigenvectors.real
    ks = int(np.argmax(np.abs(w)))
    vs = V[:, ks] / np.linalg.norm(V[:, ks])
    vw = V[:, 1 - ks] / np.linalg.norm(V[:, 1 - ks])
    backward = w[ks] < 0  # leave the node against the flow when it attracts
    note = ""
    best = None
    for sgn in (1.0, -1.0):
        x0, z0 = fn.x + sgn * offset * vs[0], fn.z + sgn * offset * vs[1]
        px = partials((x0, F_surface(x0, z0, p), z0), p).phi_x
        if px >= 0:
            continue
        sol = _flow_desing(p, t_end, x0, z0, backward=backward)
        best = sol
        break
    if best is None:
        raise ValueError("strong eigendirection does not enter the attracting sheet")
    gamma = np.vstack([[fn.x, fn.z], best.y.T])
    truncated = best.status == 1
    if truncated:
        note = "canard left the chart or reached the fold"

    # orient the weak direction into the attracting sheet
    h = 1e-4 * max(abs(fn.x), 1e-4)
    xw, zw = fn.x + h * vw[0], fn.z + h * vw[1]
    if partials((xw, F_surface(xw, zw, p), zw), p).phi_x > 0:
        vw = -vw
    # fold arc leaving the node on the weak side, as long as the canard
    fc = classify_fold_curve(p)
    arcs = [a for a in fc.branches.values() if len(a)]
    arc = min(arcs, key=lambda a: np.min(np.abs(a[:, 0] - fn.x)))
    i0 = int(np.argmin(np.abs(arc[:, 0] - fn.x)))
    # the funnel lies on the same side of the canard as the weak direction
    g_dir = gamma[min(len(gamma) - 1, 3)] - gamma[0]
    side_w = np.sign(g_dir[0] * vw[1] - g_dir[1] * vw[0])
    best_part, best_score = None, -np.inf
    for part in (arc[i0::-1], arc[i0:]):
        if len(part) < 2:
            continue
        k = min(len(part) - 1, 5)
        d = part[k, [0, 2]] - part[0, [0, 2]]
        score = side_w * (g_dir[0] * d[1] - g_dir[1] * d[0]) / np.linalg.norm(d)
        if score > best_score:
            best_part, best_score = part, score
    part = best_part[:, [0, 2]]
    part = np.vstack([[fn.x, fn.z], part])
    glen = np.sum(np.linalg.norm(np.diff(gamma, axis=0), axis=1))
    alen = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(part, axis=0), axis=1))])
    fold_arc = part[alen <= glen]
    poly = np.vstack([gamma, fold_arc[::-1]])
    return SingularFunnel(fn, gamma, fold_arc, poly, truncated, note, vs)


def flows_to(x0, z0, fn: FoldedSingularity, p: Params, t_end=200.0, tol=1e-4) -> bool:
    """Whether the forward orbit from ``(x0, z0)`` on the attracting sheet reaches ``fn``.

    The orbit is stopped where it meets the fold curve, so orbits jumping off
    at a regular fold point do not count.
    """
    sol = _flow_desing(p, t_end, x0, z0, stop_on_fold=True)
    d = np.hypot(sol.y[0] - fn.x, sol.y[1] - fn.z)
    return bool(np.min(d) <= tol)


# ---------------------------------------------------------------------------
# way-in / way-out predictors


@dataclass
class PlaneExit:
    t: np.ndarray
    y: np.ndarray
    z: np.ndarray
    t_entry: float
    t_tc: float
    t_exit: float
    y_exit: float
    z_exit: float
    defined: bool


def plane_flow(y0: float, z0: float, p: Params, t_end: float = 2000.0) -> PlaneExit:
    """Flow on ``x = 0`` with the entry-exit delay predictor.

    Intermediate time. Contraction is accumulated from the landing point
    ``(y0, z0)``: the prey stays near zero until
    ``int phi(0, y, z) ds`` returns to zero. ``t_tc`` is when ``y`` falls
    through ``beta1`` (the transcritical line), where the plane turns
    repelling.
    """
    if y0 < 0 or z0 < 0:
        raise ValueError("y0 and z0 must be nonnegative")

    def rhs(t, u):
        y, z, _ = u
        s = (0.0, y, z)
        return [y * chi(s, p), p.delta * z * psi(s, p), phi(s, p)]

    def tc(t, u):
        return u[0] - p.beta1
    tc.direction = -1

    def way_out(t, u):
        return u[2] if t > 0 else -1.0
    way_out.direction = 1
    way_out.terminal = True

    sol = solve_ivp(rhs, (0, t_end), [y0, z0, 0.0], method="DOP853", rtol=1e-10,
                    atol=1e-13, events=[tc, way_out])
    t_tc = float(sol.t_events[0][0]) if len(sol.t_events[0]) else np.nan
    if len(sol.t_events[1]):
        te = float(sol.t_events[1][0])
        ye, ze = sol.y_events[1][0][:2]
        ok = True
    else:
        te, ye, ze, ok = np.nan, np.nan, np.nan, False
    return PlaneExit(sol.t, sol.y[0], sol.y[1], 0.0, t_tc, te, float(ye), float(ze), ok)


@dataclass
class DelayedExit:
    x_entry: float
    x_hopf: float
    x_exit: float
    z_exit: float
    defined: bool
    note: str = ""


def superslow_speed(x, p: Params):
    """``dx/dtau`` along ``Z`` under the slow flow ``z' = z psi``."""
    x = np.asarray(x, dtype=float)
    z = G(x, p)
    return z * psi(np.stack([x, y_Z(x, p), z]), p) / dG(x, p)


def delayed_hopf_exit(x_entry: float, p: Params, n: int = 20000) -> DelayedExit:
    """Way-out point of a slow passage through a layer Hopf point on ``Z``.

    Following the slow flow along ``Z`` from ``x_entry``, the predictor
    accumulates ``int Re(lambda) dtau`` and returns the first point past
    the Hopf point where it is back to zero. Undefined when the flow stops
    (equilibrium or fold) or never crosses a Hopf point.
    """
    x0 = x_Z_start(p)
    if not x0 < x_entry < 1.0:
        raise ValueError("entry must lie on the branch of Z with y > 0")
    v0 = float(superslow_speed(x_entry, p))
    if v0 == 0 or not np.isfinite(v0):
        return DelayedExit(x_entry, np.nan, np.nan, np.nan, False, "no slow drift at entry")
    lo, hi = (x_entry, 1.0 - 1e-9) if v0 > 0 else (x0 + 1e-9, x_entry)
    xs = np.linspace(lo, hi, n) if v0 > 0 else np.linspace(hi, lo, n)
    re = layer_eigenvalues(xs, p).lambda_plus.real
    v = superslow_speed(xs, p)
    # flow stops at an equilibrium of the slow flow or a fold of Z
    stop = np.flatnonzero((np.sign(v) != np.sign(v0)) | ~np.isfinite(v))
    m = stop[0] if len(stop) else n
    xs, re, v = xs[:m], re[:m], v[:m]
    if re[0] >= 0:
        return DelayedExit(x_entry, x_entry, x_entry, float(G(x_entry, p)), True,
                           "entry is not attracting")
    cross = np.flatnonzero((re[:-1] < 0) & (re[1:] >= 0))
    if not len(cross):
        return DelayedExit(x_entry, np.nan, np.nan, np.nan, False, "no Hopf point downstream")
    k = cross[0]
    x_h = xs[k] - re[k] * (xs[k + 1] - xs[k]) / (re[k + 1] - re[k])
    I = cumulative_trapezoid(re / np.abs(v), np.abs(xs - xs[0]), initial=0.0)
    after = np.flatnonzero((np.arange(len(I) - 1) > k) & (I[:-1] < 0) & (I[1:] >= 0))
    if not len(after):
        return DelayedExit(x_entry, x_h, np.nan, np.nan, False, "contraction not recovered")
    j = after[0]
    x_e = xs[j] - I[j] * (xs[j + 1] - xs[j]) / (I[j + 1] - I[j])
    return DelayedExit(x_entry, float(x_h), float(x_e), float(G(x_e, p)), True)
