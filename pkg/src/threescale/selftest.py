"""Fast consistency checks used as a release gate.

Each check returns a :class:`CheckResult`. The default set only uses
properties of the model itself; ``reference=True`` adds the
benchmark labels, which the model with the reference parameters does not
all reproduce.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from . import manifolds
from .classifier import (ClassifierThresholds, classify, classify_point, initial_condition,
                         oscillations)
from .integrate import IntegratorConfig, simulate
from .model import (AssumptionWarning, Frame, jacobian, paper_params, partials, phi,
                    vector_field)


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'}  {self.name}: {self.detail} ({self.seconds:.1f}s)"


def check_jacobian(seed: int = 0, n: int = 20) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        p = paper_params(alpha=rng.uniform(0.2, 1.0), beta2=rng.uniform(0.005, 0.3))
        s = rng.uniform(0.01, 1.0, 3)
        J = jacobian(s, p)
        h = 1e-6
        Jfd = np.column_stack([(vector_field(s + h * e, p) - vector_field(s - h * e, p)) / (2 * h)
                               for e in np.eye(3)])
        worst = max(worst, float(np.max(np.abs(J - Jfd))))
    return CheckResult("jacobian vs finite differences", worst <= 1e-6, f"max error {worst:.2e}")


def check_frames() -> CheckResult:
    p = paper_params(alpha=0.75, beta2=0.09)
    s = np.array([0.3, 0.1, 0.2])
    f = vector_field(s, p, Frame.FAST)
    # equal up to the rounding of one product
    ok = (np.allclose(vector_field(s, p, Frame.INTERMEDIATE), f / p.epsilon, rtol=1e-15, atol=0)
          and np.allclose(vector_field(s, p, Frame.SLOW), f / (p.epsilon * p.delta),
                          rtol=1e-15, atol=0))
    return CheckResult("frame scaling", bool(ok), "to rounding" if ok else "mismatch")


def check_invariant_planes(cfg: IntegratorConfig) -> CheckResult:
    p = paper_params(alpha=0.75, beta2=0.09)
    bad = []
    for k, s0 in enumerate(([0.0, 0.2, 0.1], [0.3, 0.0, 0.1], [0.3, 0.1, 0.0])):
        tr = simulate(p, s0, 200.0, cfg)
        if np.any(tr.states[:, k] != 0.0):
            bad.append("xyz"[k])
    return CheckResult("invariant coordinate planes", not bad,
                       "all preserved" if not bad else f"left plane(s) {bad}")


def check_fold_curve() -> CheckResult:
    worst = 0.0
    for b2, a in ((0.005, 0.6), (0.048, 0.6), (0.0245, 0.8), (0.2, 0.6)):
        p = paper_params(alpha=a, beta2=b2)
        x_d = manifolds.fold_x_d(p)
        xs = np.linspace(0.01, 0.9, 200)
        xs = xs[np.abs(xs - x_d) > 1e-3]
        pts = np.stack([xs, manifolds.fold_mu(xs, p), manifolds.fold_nu(xs, p)])
        d = partials(pts, p)
        worst = max(worst, float(np.max(np.abs(phi(pts, p)))), float(np.max(np.abs(d.phi_x))))
    return CheckResult("fold parametrization solves phi = phi_x = 0", worst <= 1e-10,
                       f"max residual {worst:.2e}")


def check_nu_root() -> CheckResult:
    p = paper_params(alpha=0.6, beta2=0.005)
    x = 0.5 * (1.0 - p.beta1)
    v = float(manifolds.fold_nu(x, p))
    return CheckResult("nu vanishes at (1 - beta1)/2", abs(v) <= 1e-12, f"nu = {v:.2e}")


def check_layer_hopf() -> CheckResult:
    p = paper_params(alpha=0.6, beta2=0.005)
    hs = manifolds.hopf_points_fast(p)
    agree = all(np.sign(h.Delta) == np.sign(h.l1) for h in hs if h.kind != "NeutralSaddle")
    return CheckResult("layer Hopf criticality index agrees with l1", bool(hs) and agree,
                       f"{len(hs)} point(s), Delta {[round(h.Delta, 3) for h in hs]}")


def check_floquet() -> CheckResult:
    from .bifurcation import periodic_seed_from_simulation

    p = paper_params(alpha=0.9, beta2=0.2)
    orb = periodic_seed_from_simulation(p, initial_condition(p)[0], t_transient=1000.0,
                                        t_search=300.0)
    err = abs(orb.trivial_multiplier - 1.0)
    liou = abs(np.prod(orb.multipliers).real / math.exp(orb.trace_integral) - 1.0)
    ok = err <= 1e-6 and liou <= 1e-6
    return CheckResult("trivial Floquet multiplier and Liouville identity", ok,
                       f"|mu - 1| = {err:.1e}, det/exp(int tr) - 1 = {liou:.1e}")


def check_funnel(seed: int = 0, n: int = 10) -> CheckResult:
    from .reduced import flows_to, folded_singularities, strong_canard

    p = paper_params(alpha=0.6, beta2=0.048)
    nodes = [f for f in folded_singularities(p) if f.kind == "FoldedNode"]
    if not nodes:
        return CheckResult("funnel points reach the folded node", False, "no folded node")
    fun = strong_canard(nodes[0], p)
    pts = fun.sample(n, np.random.default_rng(seed))
    hits = sum(flows_to(x, z, nodes[0], p) for x, z in pts)
    return CheckResult("funnel points reach the folded node", hits == n, f"{hits}/{n}")


# the model's own MMO: a 1^5 orbit; its smallest SAOs are exponentially small
SAO_POINT = (0.09, 0.75)
SAO_SIGNATURE = [(1, 5)]


def check_sao(cfg: IntegratorConfig) -> CheckResult:
    """SAO-dependent check: signature and smallest SAO size must be converged.

    The run at the configured tolerances is compared with one at 1/10 of
    them. Loose tolerances blur the exponentially small SAOs first.
    """
    p = paper_params(alpha=SAO_POINT[1], beta2=SAO_POINT[0])
    s0 = initial_condition(p)[0]
    th = ClassifierThresholds()
    res = []
    for c in (cfg, cfg.replace(rtol=max(cfg.rtol / 10, 1e-13), atol=max(cfg.atol / 10, 1e-16))):
        tr = simulate(p, s0, 3000.0, c).attractor(0.5)
        lab = classify(tr, th, p)
        small = [o.excursion for o in oscillations(tr, th) if not o.large]
        res.append((lab, min(small) if small else math.nan))
    (l1, m1), (l2, m2) = res
    same = l1.kind == l2.kind == "MMO" and l1.mmo_signature == l2.mmo_signature == SAO_SIGNATURE
    rel = abs(m1 - m2) / abs(m2) if m2 else math.inf
    ok = same and rel <= 1e-2
    if ok:
        detail = f"signature {l1.signature_text}, smallest SAO {m1:.3e}"
    else:
        detail = (f"labels {l1.kind} {l1.signature_text} vs {l2.kind} {l2.signature_text}, "
                  f"smallest SAO {m1:.3e} vs {m2:.3e}: the SAOs are not resolved at "
                  f"rtol={cfg.rtol:g}, atol={cfg.atol:g}")
    return CheckResult("small-oscillation signature converged", ok, detail)


def check_reference_labels() -> list[CheckResult]:
    """Benchmark labels (fold cases and degenerate-node count)."""
    out = []
    cases = {(0.048, 0.6): "Case2i", (0.025, 0.6): "Case2ii", (0.005, 0.6): "Case3",
             (0.0245, 0.8): "Case2ii"}
    for (b2, a), want in cases.items():
        got = manifolds.classify_fold_curve(paper_params(alpha=a, beta2=b2)).case
        out.append(CheckResult(f"fold case at ({b2}, {a})", got == want, f"{got}, expected {want}"))
    roots = manifolds.degenerate_nodes(paper_params(alpha=0.6, beta2=0.005))
    out.append(CheckResult("four degenerate nodes at (0.005, 0.6)", len(roots) == 4,
                           f"{len(roots)} root(s)"))
    lab, _, _ = classify_point(paper_params(alpha=0.75, beta2=0.01), 3000.0)
    out.append(CheckResult("MMO at (0.01, 0.75)", lab.kind == "MMO", lab.kind))
    return out


def run(tolerance_scale: float = 1.0, reference: bool = False, seed: int = 0) -> list[CheckResult]:
    cfg = IntegratorConfig()
    cfg = cfg.replace(rtol=cfg.rtol * tolerance_scale, atol=cfg.atol * tolerance_scale)
    checks = [lambda: check_jacobian(seed), check_frames, lambda: check_invariant_planes(cfg),
              check_fold_curve, check_nu_root, check_layer_hopf, check_floquet,
              lambda: check_funnel(seed), lambda: check_sao(cfg)]
    if reference:
        checks.append(check_reference_labels)
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AssumptionWarning)
        for c in checks:
            t0 = time.perf_counter()
            try:
                r = c()
            except Exception as exc:  # report, do not abort the remaining checks
                r = CheckResult(getattr(c, "__name__", "check"), False,
                                f"{type(exc).__name__}: {exc}")
            dt = time.perf_counter() - t0
            for item in (r if isinstance(r, list) else [r]):
                item.seconds = dt
                out.append(item)
    return out
