"""Critical manifold, fold curve, superslow curves and layer-problem Hopf points.

The critical manifold of the fast prey equation is the plane ``x = 0`` plus
the surface ``S = {phi = 0}``, the graph ``y = F(x, z)``. Normal
hyperbolicity fails on the fold curve ``phi = phi_x = 0``, parametrized by
``x`` as ``(x, mu(x), nu(x))``.

The superslow manifold is the equilibrium set of the two-dimensional
``(x, y)`` layer problem with ``z`` frozen: the axis ``K`` (x = y = 0), the
curve ``L`` (y = 0, z = H(x)) and the coexistence curve ``Z``
(chi = 0, z = G(x)).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .model import Params, chi, partials, phi, phi_x_derivs, vector_field

N_GRID = 4000
_XTOL = 1e-12


def _brackets(f, xs):
    """Brent-refined roots of ``f`` from sign changes of its grid samples."""
    with np.errstate(all="ignore"):
        v = np.asarray(f(xs), dtype=float)
    out = []
    for i in range(len(xs) - 1):
        a, b = v[i], v[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        if a == 0.0:
            out.append(float(xs[i]))
        elif a * b < 0:
            out.append(brentq(lambda t: float(f(np.array(t))), xs[i], xs[i + 1], xtol=_XTOL))
    return out


# ---------------------------------------------------------------------------
# critical manifold


def F_surface(x, z, p: Params):
    """Height ``y`` of the surface ``phi = 0`` over ``(x, z)``."""
    x = np.asarray(x, dtype=float)
    return (p.beta1 + x) * (1.0 - x - p.alpha * x * z / (p.beta2 ** 2 + x * x))


def transcritical_line(z, p: Params):
    """Points ``(0, beta1, z)`` where ``S`` meets the plane ``x = 0``."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    return np.column_stack([np.zeros_like(z), np.full_like(z, p.beta1), z])


def _require_alpha(p: Params):
    if p.alpha <= 0:
        raise ValueError("the fold curve needs alpha > 0 (S is z-independent at alpha = 0)")


def _nu_den(x, p: Params):
    b = p.beta2 ** 2
    return p.alpha * (p.beta1 * b + 2.0 * b * x - p.beta1 * x * x)


def fold_nu(x, p: Params):
    """Generalist level ``z`` of the fold curve at prey level ``x``.

    Obtained by eliminating ``y`` between ``phi = 0`` and ``phi_x = 0``.
    """
    x = np.asarray(x, dtype=float)
    q = p.beta2 ** 2 + x * x
    return (1.0 - p.beta1 - 2.0 * x) * q * q / _nu_den(x, p)


def fold_mu(x, p: Params):
    """Specialist level ``y`` of the fold curve: ``F(x, nu(x))``."""
    return F_surface(x, fold_nu(x, p), p)


def fold_x_d(p: Params) -> float:
    """Positive pole of ``nu`` (root of its denominator)."""
    b = p.beta2 ** 2
    return (b + abs(p.beta2) * np.sqrt(b + p.beta1 ** 2)) / p.beta1


def fold_nu_printed(x, p: Params):
    """Variant of ``nu`` with ``beta1**3`` in the denominator.

    Kept only to document that it does not satisfy ``phi_x = 0``.
    """
    x = np.asarray(x, dtype=float)
    q = p.beta2 ** 2 + x * x
    den = p.alpha * (p.beta1 ** 3 + 2.0 * p.beta2 ** 2 * x - p.beta1 * x * x)
    return (1.0 - p.beta1 - 2.0 * x) * q * q / den


def fold_x_d_printed(p: Params) -> float:
    """Pole of ``fold_nu_printed``."""
    b = p.beta2 ** 2
    return b / p.beta1 + np.sqrt(b * b / p.beta1 ** 2 + p.beta1 ** 2)


def _dnu_numer(x, p: Params):
    """Numerator of ``nu'`` (same sign as ``nu'`` away from the pole)."""
    b = p.beta2 ** 2
    q = b + x * x
    N = (1.0 - p.beta1 - 2.0 * x) * q * q
    dN = q * (-2.0 * q + 4.0 * x * (1.0 - p.beta1 - 2.0 * x))
    D = _nu_den(x, p)
    dD = p.alpha * (2.0 * b - 2.0 * p.beta1 * x)
    return dN * D - N * dD


def _mu_factor(x, p: Params):
    """``mu(x) / (beta1 + x)``; continuous except at ``x_d``."""
    x = np.asarray(x, dtype=float)
    return 1.0 - x - p.alpha * x * fold_nu(x, p) / (p.beta2 ** 2 + x * x)


@dataclass
class FoldCurve:
    """Fold curve geometry and its case label.

    ``extrema`` holds ``(x, "min"|"max")`` pairs of ``nu`` on ``[0, 1]``
    away from the pole; ``mu_roots`` the roots of ``mu`` there.
    ``branches`` maps ``"F-"``, ``"F0"``, ``"F+"`` (or ``"F"`` when
    monotone) to ``(n, 3)`` arrays of points in the closed positive octant.
    """

    params: Params
    x_d: float
    extrema: list
    mu_roots: list
    x1: float
    x2: float
    case: str = ""
    degenerate: bool = False
    note: str = ""
    x_m: float | None = None
    x_M: float | None = None
    branches: dict = field(default_factory=dict)

    def mu(self, x):
        return fold_mu(x, self.params)

    def nu(self, x):
        return fold_nu(x, self.params)

    def point(self, x):
        x = np.asarray(x, dtype=float)
        return np.column_stack([x, self.mu(x), self.nu(x)])

    def extrema_in(self, lo, hi, closed=True):
        if closed:
            return [e for e in self.extrema if lo <= e[0] <= hi]
        return [e for e in self.extrema if lo < e[0] < hi]


def fold_parametrization(p: Params, n_grid: int = N_GRID) -> FoldCurve:
    """Pole, extrema of ``nu`` and roots of ``mu`` on ``[0, 1]``.

    Root finding brackets on ``n_grid`` points and refines with Brent's
    method. Brackets straddling the pole are discarded.
    """
    _require_alpha(p)
    x_d = fold_x_d(p)
    xs = np.linspace(0.0, 1.0, n_grid + 1)
    # keep grid nodes off the pole so sign changes through it are visible
    xs = xs[np.abs(xs - x_d) > 1e-12]

    def off_pole(r):
        return abs(r - x_d) > 1e-9 * max(1.0, x_d)

    ext = []
    for r in _brackets(lambda t: _dnu_numer(t, p), xs):
        if not off_pole(r):
            continue
        h = 1e-7 * max(r, 1e-3)
        kind = "min" if fold_nu(r + h, p) + fold_nu(r - h, p) > 2 * fold_nu(r, p) else "max"
        ext.append((r, kind))

    roots = []
    for r in _brackets(lambda t: _mu_factor(t, p), xs):
        # the factor flips sign through the pole of nu; that is not a root
        if off_pole(r) and abs(_mu_factor(r, p)) < 1e-8:
            roots.append(r)
    x_nu0 = 0.5 * (1.0 - p.beta1)
    return FoldCurve(p, x_d, ext, roots, min(x_nu0, x_d), max(x_nu0, x_d))


def _arc(lo, hi, p: Params, n: int, open_lo=False, open_hi=False):
    if not hi > lo:
        return np.empty((0, 3))
    xs = np.linspace(lo, hi, n)
    if open_lo:
        xs = xs[1:]
    if open_hi:
        xs = xs[:-1]
    pts = np.column_stack([xs, fold_mu(xs, p), fold_nu(xs, p)])
    keep = np.all(pts >= -1e-12, axis=1) & np.all(np.isfinite(pts), axis=1)
    return pts[keep]


def classify_fold_curve(p: Params, n_grid: int = N_GRID, n_arc: int = 400) -> FoldCurve:
    """Case label of the fold curve and its branch arcs.

    ``x1 = min((1 - beta1)/2, x_d)`` and ``x2 = max(...)``. With
    ``x1 = (1 - beta1)/2`` the number of extrema of ``nu`` on ``[0, x1]``
    decides: none is Case1; two is Case2, split into Case2i (``mu`` has no
    roots) and Case2ii (two roots in ``[0, x1)``). With ``x1 = x_d`` a
    single extremum in ``(0, x_d)`` is Case3. Configurations matching none
    of these get the nearest label and ``degenerate = True``.
    """
    fc = fold_parametrization(p, n_grid)
    x1, x2, x_d = fc.x1, fc.x2, fc.x_d
    edge = 1e-6
    notes = []
    if x1 < x_d:
        ext = fc.extrema_in(0.0, x1)
        if any(abs(e[0]) < edge or abs(e[0] - x1) < edge for e in ext):
            fc.degenerate = True
            notes.append("extremum at the domain edge")
        roots = [r for r in fc.mu_roots if r != x_d]
        if len(ext) == 0:
            fc.case = "Case1"
            fc.branches["F"] = _arc(0.0, x1, p, n_arc)
        else:
            if len(ext) != 2:
                fc.degenerate = True
                notes.append(f"{len(ext)} extrema of nu on [0, x1]")
            fc.x_m = ext[0][0]
            fc.x_M = ext[1][0] if len(ext) > 1 else x1
            inside = [r for r in roots if r < x1]
            if not roots:
                fc.case = "Case2i"
                fc.branches["F-"] = _arc(0.0, fc.x_m, p, n_arc, open_hi=True)
                fc.branches["F0"] = _arc(fc.x_m, fc.x_M, p, n_arc)
                fc.branches["F+"] = _arc(fc.x_M, x1, p, n_arc, open_lo=True)
            else:
                fc.case = "Case2ii"
                if len(inside) < 2:
                    fc.degenerate = True
                    notes.append(f"{len(inside)} roots of mu in [0, x1)")
                m1 = inside[0] if inside else x1
                m2 = inside[-1] if inside else x1
                fc.branches["F-"] = _arc(0.0, fc.x_m, p, n_arc, open_hi=True)
                fc.branches["F0"] = _arc(fc.x_m, m1, p, n_arc)
                fc.branches["F+"] = _arc(m2, x1, p, n_arc)
    else:
        ext = fc.extrema_in(0.0, x_d, closed=False)
        fc.case = "Case3"
        if len(ext) != 1:
            fc.degenerate = True
            notes.append(f"{len(ext)} extrema of nu in (0, x_d)")
        mins = [e[0] for e in ext if e[1] == "min"]
        fc.x_m = mins[0] if mins else (ext[0][0] if ext else 0.0)
        below = [r for r in fc.mu_roots if r < x_d]
        above = [r for r in fc.mu_roots if r > x2]
        if not below or not above:
            fc.degenerate = True
            notes.append("mu lacks a root below x_d or above x2")
        m1 = below[0] if below else x_d
        m2 = above[0] if above else 1.0
        fc.branches["F-"] = _arc(0.0, fc.x_m, p, n_arc, open_hi=True)
        fc.branches["F0"] = _arc(fc.x_m, m1, p, n_arc)
        fc.branches["F+"] = _arc(x2, m2, p, n_arc)
    rs = fc.mu_roots
    if any(b - a < 1e-6 for a, b in zip(rs, rs[1:])):
        fc.degenerate = True
        notes.append("repeated root of mu")
    fc.note = "; ".join(notes)
    return fc


@dataclass(frozen=True)
class SheetCount:
    y: float
    attracting: int
    repelling: int
    # (x_lo, x_hi, sign of phi_x) for each sheet of the cross-section
    sheets: tuple = ()


def sheet_structure(y: float, p: Params, n_grid: int = N_GRID, x_max: float = 1.0) -> SheetCount:
    """Attracting and repelling sheets of ``S`` in the cross-section at ``y``.

    At fixed ``y`` the surface is the curve ``z = z_S(x)``; its pieces with
    ``z >= 0`` are split where ``phi_x`` changes sign (the fold) and each
    piece is attracting when ``phi_x < 0``.
    """
    _require_alpha(p)
    xs = np.linspace(x_max / n_grid * 1e-2, x_max, n_grid)
    b = p.beta2 ** 2
    zS = (1.0 - xs - y / (p.beta1 + xs)) * (b + xs * xs) / (p.alpha * xs)
    ok = zS >= 0
    px = partials(np.vstack([xs, np.full_like(xs, y), zS]), p).phi_x
    sgn = np.sign(px)
    sheets = []
    start = None
    for i in range(len(xs)):
        if ok[i] and sgn[i] != 0:
            if start is None:
                start = i
            elif sgn[i] != sgn[start]:
                sheets.append((xs[start], xs[i - 1], int(sgn[start])))
                start = i
        elif start is not None:
            sheets.append((xs[start], xs[i - 1], int(sgn[start])))
            start = None
    if start is not None:
        sheets.append((xs[start], xs[-1], int(sgn[start])))
    sheets = [s for s in sheets if s[1] > s[0]]
    return SheetCount(float(y), sum(s[2] < 0 for s in sheets),
                      sum(s[2] > 0 for s in sheets), tuple(sheets))


# ---------------------------------------------------------------------------
# superslow manifold


def y_Z(x, p: Params, clip: bool = True):
    """Specialist level on ``Z`` (``chi = 0``), clipped at 0 by default."""
    x = np.asarray(x, dtype=float)
    y = ((1.0 - p.delta1) * x - p.delta1 * p.beta1) / (p.gamma1 * (p.beta1 + x))
    return np.maximum(y, 0.0) if clip else y


def x_Z_start(p: Params) -> float:
    """Prey level where ``Z`` leaves the plane ``y = 0``."""
    return p.delta1 * p.beta1 / (1.0 - p.delta1)


def G(x, p: Params, clip: bool = True):
    """Generalist level of ``Z``: ``phi(x, y_Z(x), z) = 0`` solved for ``z``."""
    x = np.asarray(x, dtype=float)
    q = p.beta2 ** 2 + x * x
    return q * (1.0 - x - y_Z(x, p, clip) / (p.beta1 + x)) / (p.alpha * x)


def H(x, p: Params):
    """Generalist level of ``L``: ``phi(x, 0, z) = 0`` solved for ``z``."""
    x = np.asarray(x, dtype=float)
    return (1.0 - x) * (p.beta2 ** 2 + x * x) / (p.alpha * x)


def dG(x, p: Params):
    """Analytic ``G'`` from implicit differentiation of ``phi = chi = 0``."""
    x = np.asarray(x, dtype=float)
    y = y_Z(x, p, clip=False)
    z = G(x, p, clip=False)
    d = partials(np.stack([x, y, z]), p)
    on_Z = -(d.phi_x * d.chi_y - d.phi_y * d.chi_x) / (d.chi_y * d.phi_z)
    return np.where(y > 0, on_Z, dH(x, p))


def dH(x, p: Params):
    x = np.asarray(x, dtype=float)
    d = partials(np.stack([x, np.zeros_like(x), H(x, p)]), p)
    return -d.phi_x / d.phi_z


@dataclass
class HopfPointFast:
    """Hopf point of the layer problem with frozen ``z``.

    ``Delta`` is the closed-form criticality index (positive: subcritical);
    ``l1`` the first Lyapunov coefficient computed independently from the
    multilinear forms of the field (positive: subcritical). ``kind`` follows
    ``Delta``. Trace-zero points with negative determinant (only possible
    on ``L``) are reported with kind ``NeutralSaddle``.
    """

    x: float
    y: float
    z: float
    Delta: float
    kind: str
    branch: str
    l1: float = float("nan")
    omega: float = float("nan")
    det: float = float("nan")


@dataclass
class SuperslowCurve:
    which: str
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    fold_xs: list
    labels: np.ndarray
    monotone: bool = False
    x_start: float = 0.0
    hopf_points: list = field(default_factory=list)
    degenerate_nodes: list = field(default_factory=list)

    def points(self):
        return np.column_stack([self.x, self.y, self.z])

    def branch(self, label: str) -> np.ndarray:
        return self.points()[self.labels == label]


def _label_by_folds(x, folds, prefix):
    if len(folds) < 2:
        return np.full(len(x), prefix, dtype=object)
    lo, hi = folds[0], folds[-1]
    lab = np.where(x < lo, prefix + "-", np.where(x > hi, prefix + "+", prefix + "0"))
    return lab.astype(object)


def superslow_curves(p: Params, n_grid: int = N_GRID, n_samples: int = 2000):
    """Sampled ``Z`` and ``L`` with folds, layer Hopf points and degenerate nodes.

    ``Z`` uses ``y_Z`` clipped at zero, so below ``x_Z_start`` its graph
    ``G`` coincides with ``H``; sampled ``Z`` points are only those with
    ``y > 0``. Folds are sign changes of the analytic ``G'`` and ``H'`` on
    ``(0, 1)``. Fewer than two folds gives a single unlabeled branch and
    ``monotone = True``.
    """
    _require_alpha(p)
    grid = np.linspace(1.0 / n_grid * 1e-2, 1.0, n_grid)
    zf = _brackets(lambda t: dG(t, p), grid)
    lf = _brackets(lambda t: dH(t, p), grid)

    x0 = x_Z_start(p)
    xz = np.linspace(x0, 1.0, n_samples + 1)[1:]
    Zc = SuperslowCurve("Z", xz, y_Z(xz, p), G(xz, p), zf, _label_by_folds(xz, zf, "Z"),
                        len(zf) < 2, x0)
    xl = np.linspace(1.0 / n_samples, 1.0, n_samples)
    Lc = SuperslowCurve("L", xl, np.zeros_like(xl), H(xl, p), lf, _label_by_folds(xl, lf, "L"),
                        len(lf) < 2, 0.0)
    Zc.hopf_points, Lc.hopf_points = _hopf_on_Z(p, Zc, n_grid), _hopf_on_L(p, Lc, n_grid)
    Zc.degenerate_nodes = degenerate_nodes(p, n_grid)
    return Zc, Lc


def K_axis(z):
    z = np.atleast_1d(np.asarray(z, dtype=float))
    return np.column_stack([np.zeros_like(z), np.zeros_like(z), z])


# ---------------------------------------------------------------------------
# layer problem


def layer_field(xy, z: float, p: Params):
    """Fast-time ``(x, y)`` field with ``z`` frozen."""
    x, y = np.asarray(xy, dtype=float)[:2]
    f = vector_field(np.array([x, y, z]), p)
    return f[:2]


def layer_jacobian(x: float, y: float, z: float, p: Params) -> np.ndarray:
    s = (x, y, z)
    d = partials(s, p)
    return np.array([
        [phi(s, p) + x * d.phi_x, x * d.phi_y],
        [p.epsilon * y * d.chi_x, p.epsilon * (chi(s, p) + y * d.chi_y)],
    ])


@dataclass(frozen=True)
class LayerEigen:
    x: np.ndarray
    lambda_plus: np.ndarray
    lambda_minus: np.ndarray
    Lambda: np.ndarray
    trace: np.ndarray


def layer_eigenvalues(x, p: Params) -> LayerEigen:
    """Closed-form eigenvalues of the layer problem along ``Z``.

    Uses ``y = F(x, G(x))``, ``z = G(x)``. ``Lambda`` is the discriminant;
    where it is negative the eigenvalues are a complex pair.
    """
    x = np.asarray(x, dtype=float)
    z = G(x, p)
    y = F_surface(x, z, p)
    d = partials(np.stack([x, y, z]), p)
    tr = x * d.phi_x - p.epsilon * p.gamma1 * y
    Lam = tr ** 2 - 4.0 * p.epsilon * x * y * (-p.gamma1 * d.phi_x + p.beta1 / (p.beta1 + x) ** 3)
    root = np.sqrt(Lam.astype(complex))
    return LayerEigen(x, 0.5 * (tr + root), 0.5 * (tr - root), Lam, tr)


def degenerate_nodes(p: Params, n_grid: int = N_GRID, physical: bool = True) -> list[float]:
    """Roots of the discriminant along ``Z`` in ``[0, 1]``.

    With ``physical`` only the part of ``Z`` with ``y > 0`` is searched.
    """
    lo = x_Z_start(p) if physical else 0.0
    xs = np.linspace(lo, 1.0, n_grid + 1)[1:]
    return _brackets(lambda t: layer_eigenvalues(t, p).Lambda, xs)


def hopf_Delta(x: float, y: float, z: float, p: Params) -> float:
    """Closed-form criticality index of a layer Hopf point on ``Z``."""
    s = (x, y, z)
    d = partials(s, p)
    pxx, pxxx, pxy = phi_x_derivs(s, p)
    r = np.sqrt(-x * y * d.phi_y * d.chi_x)
    D1 = 2.0 * d.phi_x + x * pxx
    return float(
        -y * d.chi_y * r / (2.0 * y * d.chi_x * D1)
        - y * d.chi_y / (2.0 * r)
        + (3.0 * pxx + x * pxxx) * r / (2.0 * D1 ** 2)
        + y * d.chi_x * (d.phi_y + x * pxy) / (2.0 * D1 * r)
    )


def first_lyapunov(f, x0, A=None, h=None) -> tuple[float, float]:
    """First Lyapunov coefficient of a planar field ``f`` at a Hopf point.

    Multilinear forms come from central differences along directions. Returns
    ``(l1, omega)``; ``l1 > 0`` means subcritical.
    """
    x0 = np.asarray(x0, dtype=float)
    n = len(x0)
    scale = np.maximum(np.abs(x0), 1e-8)
    if h is None:
        h = 1e-3
    if A is None:
        A = np.empty((n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = 1e-6 * scale[j]
            A[:, j] = (f(x0 + e) - f(x0 - e)) / (2 * e[j])
    w, V = np.linalg.eig(A)
    k = int(np.argmax(w.imag))
    omega = float(w[k].imag)
    q = V[:, k]
    wl, U = np.linalg.eig(A.T)
    kk = int(np.argmin(np.abs(wl + 1j * omega)))
    pv = U[:, kk]
    pv = pv / np.conj(np.vdot(pv, q))  # <p, q> = conj(p) . q = 1

    # work in scaled coordinates so one step size suits both components
    def fs(u):
        return f(x0 + scale * u) / scale

    def d2(u):
        return (fs(h * u) - 2 * fs(0 * u) + fs(-h * u)) / h ** 2

    def d3(u):
        return (fs(2 * h * u) - 2 * fs(h * u) + 2 * fs(-h * u) - fs(-2 * h * u)) / (2 * h ** 3)

    def B(u, v):
        return 0.25 * (d2(u + v) - d2(u - v))

    def C_uuv(u, v):
        return (d3(u + v) - d3(u - v) - 2 * d3(v)) / 6.0

    As = A * scale[None, :] / scale[:, None]
    qs = q / scale
    ps = pv * scale
    a, b = qs.real, qs.imag

    def Bc(u, v):
        ur, ui, vr, vi = u.real, u.imag, v.real, v.imag
        return B(ur, vr) - B(ui, vi) + 1j * (B(ur, vi) + B(ui, vr))

    C_qqqbar = (d3(a) + C_uuv(b, a)) + 1j * (C_uuv(a, b) + d3(b))
    Bqqb = Bc(qs, np.conj(qs))
    Bqq = Bc(qs, qs)
    t1 = np.vdot(ps, C_qqqbar)
    t2 = np.vdot(ps, Bc(qs, np.linalg.solve(As, Bqqb)))
    t3 = np.vdot(ps, Bc(np.conj(qs), np.linalg.solve(2j * omega * np.eye(n) - As, Bqq)))
    l1 = float((t1 - 2 * t2 + t3).real / (2 * omega))
    return l1, omega


def _hopf_on_Z(p: Params, Zc: SuperslowCurve, n_grid: int) -> list[HopfPointFast]:
    x0 = Zc.x_start
    xs = np.linspace(x0, 1.0, n_grid + 1)[1:]

    def trace(t):
        t = np.asarray(t, dtype=float)
        y = y_Z(t, p)
        d = partials(np.stack([t, y, G(t, p)]), p)
        return t * d.phi_x + p.epsilon * y * d.chi_y

    out = []
    for xh in _brackets(trace, xs):
        y, z = float(y_Z(xh, p)), float(G(xh, p))
        if z < 0:
            continue
        J = layer_jacobian(xh, y, z, p)
        det = float(np.linalg.det(J))
        if det <= 0:
            continue
        Dl = hopf_Delta(xh, y, z, p)
        l1, om = first_lyapunov(lambda u: layer_field(u, z, p), np.array([xh, y]), A=J)
        branch = "Z" if Zc.monotone else {"Z-": "Zminus", "Z0": "Z0", "Z+": "Zplus"}[
            _label_by_folds(np.array([xh]), Zc.fold_xs, "Z")[0]]
        out.append(HopfPointFast(xh, y, z, Dl, "Subcritical" if Dl > 0 else "Supercritical",
                                 branch, l1, om, det))
    return out


def _hopf_on_L(p: Params, Lc: SuperslowCurve, n_grid: int) -> list[HopfPointFast]:
    xs = np.linspace(1.0 / n_grid * 1e-2, 1.0, n_grid)

    def trace(t):
        t = np.asarray(t, dtype=float)
        s = np.stack([t, np.zeros_like(t), H(t, p)])
        return t * partials(s, p).phi_x + p.epsilon * chi(s, p)

    out = []
    for xh in _brackets(trace, xs):
        z = float(H(xh, p))
        if z < 0:
            continue
        det = float(np.linalg.det(layer_jacobian(xh, 0.0, z, p)))
        kind = "NeutralSaddle" if det < 0 else "Degenerate"
        out.append(HopfPointFast(xh, 0.0, z, float("nan"), kind, "L", det=det))
    return out


def hopf_points_fast(p: Params, n_grid: int = N_GRID) -> list[HopfPointFast]:
    """Layer-problem Hopf points on ``Z`` followed by trace-zero points on ``L``.

    On ``Z`` the trace ``x phi_x + eps y chi_y`` is bracketed along the
    branch with ``y > 0`` and roots with positive determinant are kept.
    """
    Zc, Lc = superslow_curves(p, n_grid)
    return Zc.hopf_points + Lc.hopf_points
