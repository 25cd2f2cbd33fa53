"""Three-timescale predator-prey model: parameters, vector field, equilibria.

Nondimensional system (fast time ``t``)::

    x' = x * phi(x, y, z)
    y' = eps * y * chi(x, y)
    z' = eps * delta * z * psi(x, z)

with ``x`` the prey, ``y`` the specialist and ``z`` the generalist predator.
"""
from __future__ import annotations

import dataclasses
import enum
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq


class AssumptionWarning(UserWarning):
    """A parameter leaves the regime where the timescale analysis applies."""


class Frame(enum.Enum):
    FAST = "fast"
    INTERMEDIATE = "intermediate"
    SLOW = "slow"

    def factor(self, p: "Params") -> float:
        """Multiplier turning the fast-time field into this frame's field."""
        if self is Frame.FAST:
            return 1.0
        if self is Frame.INTERMEDIATE:
            return 1.0 / p.epsilon
        return 1.0 / (p.epsilon * p.delta)

    @classmethod
    def parse(cls, value) -> "Frame":
        if isinstance(value, Frame):
            return value
        return cls(str(value).lower())


PARAM_KEYS = ("alpha", "beta1", "beta2", "delta1", "delta2", "delta3",
              "gamma1", "gamma2", "epsilon", "delta")


@dataclass(frozen=True)
class Params:
    """Nondimensional parameters.

    ``epsilon`` is the prey/specialist timescale ratio and ``delta`` the
    specialist/generalist ratio, so the generalist evolves on ``eps*delta``.
    Out-of-regime values warn (``AssumptionWarning``) instead of raising so
    continuation can pass through them; only values that make the field
    undefined raise.
    """

    alpha: float
    beta1: float
    beta2: float
    delta1: float
    delta2: float
    delta3: float
    gamma1: float
    gamma2: float
    epsilon: float
    delta: float

    def __post_init__(self):
        for k in PARAM_KEYS:
            v = getattr(self, k)
            if not np.isfinite(v):
                raise ValueError(f"{k} must be finite, got {v!r}")
            object.__setattr__(self, k, float(v))
        if self.epsilon <= 0 or self.delta <= 0:
            raise ValueError("epsilon and delta must be positive")
        if self.gamma1 <= 0 or self.gamma2 <= 0:
            raise ValueError("gamma1 and gamma2 must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.beta1 <= 0:
            raise ValueError("beta1 must be positive")
        for msg in self.assumption_violations():
            warnings.warn(msg, AssumptionWarning, stacklevel=3)

    def assumption_violations(self) -> list[str]:
        out = []
        if self.epsilon > 0.5 or self.delta > 0.5:
            out.append(f"timescale ratios not small: epsilon={self.epsilon}, delta={self.delta}")
        for k in ("delta1", "delta2", "delta3"):
            v = getattr(self, k)
            if not 0.0 < v < 1.0:
                out.append(f"{k}={v} outside (0, 1)")
        for k in ("beta1", "beta2"):
            v = getattr(self, k)
            if not 0.0 < v < 1.0:
                out.append(f"{k}={v} outside (0, 1)")
        return out

    def replace(self, **changes) -> "Params":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in PARAM_KEYS}

    def to_text(self) -> str:
        return "".join(f"{k}={getattr(self, k)!r}\n" for k in PARAM_KEYS)

    @classmethod
    def from_text(cls, text: str, base: "Params | None" = None) -> "Params":
        """Parse ``key=value`` lines; ``#`` starts a comment.

        Keys missing from ``text`` are taken from ``base``.
        """
        vals = base.as_dict() if base is not None else {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
            k, v = (s.strip() for s in line.split("=", 1))
            if k not in PARAM_KEYS:
                raise ValueError(f"line {lineno}: unknown parameter {k!r}")
            vals[k] = float(v)
        missing = [k for k in PARAM_KEYS if k not in vals]
        if missing:
            raise ValueError(f"missing parameters: {', '.join(missing)}")
        return cls(**vals)

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path, base: "Params | None" = None) -> "Params":
        return cls.from_text(Path(path).read_text(), base=base)


REFERENCE_DEFAULTS = dict(beta1=0.1, delta1=0.15, delta2=0.35, delta3=0.65,
                      gamma1=4.1, gamma2=15.0, epsilon=0.05, delta=0.1)

PRESETS = {"paper": REFERENCE_DEFAULTS}


def paper_params(alpha: float, beta2: float, **overrides) -> Params:
    """Reference parameter set; ``alpha`` and ``beta2`` are the free pair."""
    vals = dict(REFERENCE_DEFAULTS, alpha=alpha, beta2=beta2)
    vals.update(overrides)
    return Params(**vals)


def preset(name: str, alpha: float, beta2: float, **overrides) -> Params:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
    return Params(**dict(PRESETS[name], alpha=alpha, beta2=beta2, **overrides))


# ---------------------------------------------------------------------------
# dimensional model


@dataclass(frozen=True)
class DimensionalParams:
    r: float
    K: float
    p1: float
    H1: float
    b1: float
    d1: float
    m1: float
    p2: float
    H2: float
    b2: float
    d2: float
    q: float
    d3: float
    m2: float
    alpha: float

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name == "alpha":
                if not 0.0 <= v <= 1.0:
                    raise ValueError(f"alpha must lie in [0, 1], got {v}")
            elif not (np.isfinite(v) and v > 0):
                raise ValueError(f"{f.name} must be positive, got {v!r}")

    @classmethod
    def from_text(cls, text: str) -> "DimensionalParams":
        vals = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if line:
                k, v = (s.strip() for s in line.split("=", 1))
                vals[k] = float(v)
        return cls(**vals)


@dataclass(frozen=True)
class Scales:
    epsilon1: float
    epsilon2: float
    epsilon3: float
    Y0: float
    Z0: float


def nondimensionalize(dp: DimensionalParams) -> tuple[Params, Scales]:
    """Map dimensional rates to the nondimensional ``Params`` and scales."""
    e1 = dp.b1 * dp.p1 / dp.r
    e2 = dp.b2 * dp.p2 / dp.r
    e3 = dp.q / dp.r
    Y0 = dp.r * dp.K / dp.p1
    Z0 = dp.r * dp.K / dp.p2
    if not e2 <= e1 <= 1.0:
        warnings.warn(f"timescale ordering eps2 <= eps1 <= 1 violated (eps1={e1}, eps2={e2})",
                      AssumptionWarning, stacklevel=2)
    p = Params(
        alpha=dp.alpha,
        beta1=dp.H1 / dp.K,
        beta2=dp.H2 / dp.K,
        delta1=dp.d1 / (dp.b1 * dp.p1),
        delta2=dp.d2 / (dp.b2 * dp.p2),
        delta3=dp.d3 / dp.q,
        gamma1=dp.m1 * Y0 / (dp.b1 * dp.p1),
        gamma2=dp.m2 * Z0,
        epsilon=e1,
        delta=e2 / e1,
    )
    return p, Scales(e1, e2, e3, Y0, Z0)


# ---------------------------------------------------------------------------
# vector field


class State(NamedTuple):
    x: float
    y: float
    z: float


def _xyz(s):
    s = np.asarray(s, dtype=float)
    return s[0], s[1], s[2]


def phi(s, p: Params):
    x, y, z = _xyz(s)
    b2 = p.beta2 ** 2
    return 1.0 - x - y / (p.beta1 + x) - p.alpha * x * z / (b2 + x * x)


def chi(s, p: Params):
    x, y, _ = _xyz(s)
    return x / (p.beta1 + x) - p.delta1 - p.gamma1 * y


def psi(s, p: Params):
    x, _, z = _xyz(s)
    b2 = p.beta2 ** 2
    return (p.alpha * (x * x / (b2 + x * x) - p.delta2)
            + (1.0 - p.alpha) * (1.0 / (1.0 + p.gamma2 * z) - p.delta3))


class Partials(NamedTuple):
    phi_x: np.ndarray
    phi_y: np.ndarray
    phi_z: np.ndarray
    chi_x: np.ndarray
    chi_y: np.ndarray
    psi_x: np.ndarray
    psi_z: np.ndarray


def partials(s, p: Params) -> Partials:
    x, y, z = _xyz(s)
    b2 = p.beta2 ** 2
    q = b2 + x * x
    bx = p.beta1 + x
    return Partials(
        phi_x=-1.0 + y / bx ** 2 - p.alpha * z * (b2 - x * x) / q ** 2,
        phi_y=-1.0 / bx + 0.0 * y,
        phi_z=-p.alpha * x / q + 0.0 * z,
        chi_x=p.beta1 / bx ** 2 + 0.0 * y,
        chi_y=-p.gamma1 + 0.0 * x,
        psi_x=2.0 * p.alpha * x * b2 / q ** 2 + 0.0 * z,
        psi_z=-(1.0 - p.alpha) * p.gamma2 / (1.0 + p.gamma2 * z) ** 2 + 0.0 * x,
    )


def phi_x_derivs(s, p: Params):
    """Higher x-derivatives of phi used by the Hopf criticality formula.

    Returns ``(phi_xx, phi_xxx, phi_xy)``.
    """
    x, y, z = _xyz(s)
    b = p.beta2 ** 2
    q = b + x * x
    bx = p.beta1 + x
    phi_xx = -2.0 * y / bx ** 3 - 2.0 * p.alpha * z * x * (x * x - 3.0 * b) / q ** 3
    phi_xxx = 6.0 * y / bx ** 4 + 6.0 * p.alpha * z * (x ** 4 - 6.0 * b * x * x + b * b) / q ** 4
    phi_xy = 1.0 / bx ** 2
    return phi_xx, phi_xxx, phi_xy


def vector_field(s, p: Params, frame: Frame = Frame.FAST) -> np.ndarray:
    """Right-hand side in the requested frame; accepts ``(3,)`` or ``(3, N)``."""
    x, y, z = _xyz(s)
    c = Frame.parse(frame).factor(p)
    return np.array([
        c * x * phi(s, p),
        c * p.epsilon * y * chi(s, p),
        c * p.epsilon * p.delta * z * psi(s, p),
    ])


def jacobian(s, p: Params, frame: Frame = Frame.FAST) -> np.ndarray:
    x, y, z = (float(v) for v in _xyz(s))
    d = partials((x, y, z), p)
    e, ed = p.epsilon, p.epsilon * p.delta
    J = np.array([
        [phi((x, y, z), p) + x * d.phi_x, x * d.phi_y, x * d.phi_z],
        [e * y * d.chi_x, e * (chi((x, y, z), p) + y * d.chi_y), 0.0],
        [ed * z * d.psi_x, 0.0, ed * (psi((x, y, z), p) + z * d.psi_z)],
    ])
    return Frame.parse(frame).factor(p) * J


# ---------------------------------------------------------------------------
# equilibria

EQ_KINDS = ("Origin", "PreyOnly", "E_z", "E_xy", "E_xz", "Coexistent")


@dataclass(frozen=True)
class Equilibrium:
    state: State
    kind: str
    eigenvalues: np.ndarray = field(compare=False)

    @property
    def stable(self) -> bool:
        return bool(np.all(self.eigenvalues.real < 0))


def y_on_chi_nullcline(x, p: Params):
    """Specialist density solving ``chi = 0``; may be negative."""
    return (x / (p.beta1 + x) - p.delta1) / p.gamma1


def z_on_psi_nullcline(x, p: Params):
    """Generalist density solving ``psi = 0`` at prey density ``x``.

    NaN where no nonnegative solution exists. Requires ``alpha < 1``.
    """
    x = np.asarray(x, dtype=float)
    s = x * x / (p.beta2 ** 2 + x * x)
    if p.alpha >= 1.0:
        return np.full_like(x, np.nan)
    w = p.delta3 - p.alpha * (s - p.delta2) / (1.0 - p.alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (1.0 / w - 1.0) / p.gamma2
    return np.where((w > 0) & (w <= 1.0), z, np.nan)


def _roots_1d(g, lo, hi, n):
    """Sign-change roots of a scalar function on a grid, refined by brentq.

    NaN samples break brackets, so roots are only accepted where ``g`` is
    defined on both sides.
    """
    xs = np.linspace(lo, hi, n)
    with np.errstate(all="ignore"):
        vals = np.array([g(v) for v in xs])
    roots = []
    for i in range(n - 1):
        a, b = vals[i], vals[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        if a == 0.0:
            roots.append(xs[i])
        elif a * b < 0:
            roots.append(brentq(g, xs[i], xs[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    if np.isfinite(vals[-1]) and vals[-1] == 0.0:
        roots.append(xs[-1])
    return roots


def _newton_polish(s, p: Params, active, iters=8):
    """Newton on the active coordinates with the others held at zero."""
    s = np.array(s, dtype=float)
    idx = np.flatnonzero(active)
    for _ in range(iters):
        f = vector_field(s, p)[idx]
        if np.max(np.abs(f)) < 1e-15:
            break
        J = jacobian(s, p)[np.ix_(idx, idx)]
        try:
            step = np.linalg.solve(J, f)
        except np.linalg.LinAlgError:
            break
        trial = s.copy()
        trial[idx] -= step
        if np.any(trial[idx] <= 0):
            break
        if np.max(np.abs(vector_field(trial, p)[idx])) >= np.max(np.abs(f)):
            break
        s = trial
    return s


def equilibria(p: Params, n_grid: int = 2000, x_max: float = 1.2) -> list[Equilibrium]:
    """All equilibria in the closed positive octant.

    Each family is reduced to a scalar equation in ``x`` (or ``z`` on the
    generalist axis), bracketed on ``n_grid`` points over ``(0, x_max]`` and
    refined with Brent's method and a Newton polish. Eigenvalues are those
    of the fast-frame Jacobian.
    """
    found: list[tuple[tuple[float, float, float], str]] = [
        ((0.0, 0.0, 0.0), "Origin"),
        ((1.0, 0.0, 0.0), "PreyOnly"),
    ]
    lo = x_max / n_grid * 1e-3

    # generalist alone: psi(0, z) = 0
    if p.alpha < 1.0:
        w0 = p.delta3 + p.alpha * p.delta2 / (1.0 - p.alpha)
        if 0.0 < w0 < 1.0:
            found.append(((0.0, 0.0, (1.0 / w0 - 1.0) / p.gamma2), "E_z"))

    # z = 0 plane
    def g_xy(x):
        y = y_on_chi_nullcline(x, p)
        return np.nan if y <= 0 else phi((x, y, 0.0), p)

    for x in _roots_1d(g_xy, lo, x_max, n_grid):
        found.append(((x, y_on_chi_nullcline(x, p), 0.0), "E_xy"))

    def z_of(x):
        return float(z_on_psi_nullcline(np.array(x), p))

    # y = 0 plane
    if p.alpha < 1.0:
        def g_xz(x):
            z = z_of(x)
            return np.nan if not z > 0 else phi((x, 0.0, z), p)

        for x in _roots_1d(g_xz, lo, x_max, n_grid):
            found.append(((x, 0.0, z_of(x)), "E_xz"))

        def g_int(x):
            y, z = y_on_chi_nullcline(x, p), z_of(x)
            return np.nan if not (y > 0 and z > 0) else phi((x, y, z), p)

        for x in _roots_1d(g_int, lo, x_max, n_grid):
            found.append(((x, y_on_chi_nullcline(x, p), z_of(x)), "Coexistent"))
    else:
        # psi depends on x only: the generalist fixes the prey level
        xs = p.beta2 * math.sqrt(p.delta2 / (1.0 - p.delta2))
        zL = (1.0 - xs) * (p.beta2 ** 2 + xs * xs) / (p.alpha * xs)
        if zL > 0:
            found.append(((xs, 0.0, zL), "E_xz"))
        y = y_on_chi_nullcline(xs, p)
        if y > 0:
            zc = (1.0 - xs - y / (p.beta1 + xs)) * (p.beta2 ** 2 + xs * xs) / (p.alpha * xs)
            if zc > 0:
                found.append(((xs, y, zc), "Coexistent"))

    out = []
    for s, kind in found:
        s = np.array(s)
        if kind not in ("Origin", "PreyOnly", "E_z"):
            s = _newton_polish(s, p, s > 0)
        out.append(Equilibrium(State(*map(float, s)), kind, np.linalg.eigvals(jacobian(s, p))))
    return out


def equilibrium_residual(s, p: Params) -> float:
    return float(np.max(np.abs(vector_field(s, p))))
