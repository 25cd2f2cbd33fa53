"""Classification of attractor trajectories into oscillation patterns.

Oscillations are read off the ``XMax``/``XMin`` events of the prey
coordinate. Each maximum gets an excursion, the drop from the peak to the
higher of its two neighbouring minima; excursions of at least
``sao_lao_amplitude_fraction`` of the global x-range are large (LAO, symbol
``L``), the rest small (SAO, symbol ``s``). Labels are decided from the
symbol sequence, the spacing of the large peaks and the split of time into
slow and fast segments.
"""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .integrate import IntegratorConfig, Trajectory, simulate
from .manifolds import classify_fold_curve
from .model import Frame, Params, equilibria, paper_params

KINDS = ("SteadyState", "HopfCycle", "RelaxationOscillation", "MMO", "Bursting",
         "Spiking", "AmplitudeModulated")

HINTS = {"F0": "F0", "F+": "Fplus", "F-": "Fminus", "F": "F"}


@dataclass(frozen=True)
class ClassifierThresholds:
    """Tunable cut-offs; times are in intermediate units."""

    sao_lao_amplitude_fraction: float = 0.2
    # extrema with excursion below this fraction of the range are noise
    spike_prominence: float = 1e-7
    burst_quiescence_gap: float = 3.0
    periodicity_tolerance: float = 0.02
    steady_range: float = 1e-6
    relaxation_ratio: float = 10.0
    # a slow/fast split needs |dx/dt| above this multiple of the x-range
    fast_rate: float = 1.0
    # amplitude of a near-Hopf cycle relative to its mean
    hopf_relative_amplitude: float = 0.5

    def __post_init__(self):
        for name in ("sao_lao_amplitude_fraction", "spike_prominence", "periodicity_tolerance"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        for name in ("burst_quiescence_gap", "steady_range", "relaxation_ratio",
                     "fast_rate", "hopf_relative_amplitude"):
            v = getattr(self, name)
            if not v > 0:
                raise ValueError(f"{name} must be positive, got {v}")


@dataclass
class PatternLabel:
    kind: str
    mmo_signature: list = field(default_factory=list)
    spikes_per_burst: int | None = None
    sao_location_hint: str | None = None
    candidates: tuple = ()
    subtag: str = ""
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown pattern kind {self.kind!r}")
        if bool(self.mmo_signature) != (self.kind == "MMO"):
            raise ValueError("an MMO signature is required for, and only for, kind MMO")
        if (self.spikes_per_burst is not None) != (self.kind == "Bursting"):
            raise ValueError("spikes_per_burst is set for, and only for, kind Bursting")

    @property
    def signature_text(self) -> str:
        return " ".join(f"{L}^{s}" for L, s in self.mmo_signature)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["mmo_signature"] = [list(g) for g in self.mmo_signature]
        d["candidates"] = list(self.candidates)
        return d


@dataclass
class Oscillation:
    time: float
    peak: float
    excursion: float
    state: tuple
    large: bool = False


def oscillations(traj: Trajectory, th: ClassifierThresholds | None = None) -> list[Oscillation]:
    """Maxima of x with their excursions, noise-level wiggles removed."""
    th = th or ClassifierThresholds()
    R = float(np.ptp(traj.x)) if len(traj.x) else 0.0
    ev = [e for e in traj.events if e.kind in ("XMax", "XMin")]
    if not ev:
        return []
    # merge runs of equal kind (events lost at the window edges)
    seq = [ev[0]]
    for e in ev[1:]:
        if e.kind == seq[-1].kind:
            better = (e.state[0] > seq[-1].state[0]) == (e.kind == "XMax")
            if better:
                seq[-1] = e
        else:
            seq.append(e)
    # drop max-min pairs below the noise floor so that neighbours rejoin
    floor = th.spike_prominence * R
    changed = True
    while changed and len(seq) > 2:
        changed = False
        for i in range(len(seq) - 1):
            if abs(seq[i].state[0] - seq[i + 1].state[0]) < floor:
                del seq[i:i + 2]
                changed = True
                break
    out = []
    for i, e in enumerate(seq):
        if e.kind != "XMax":
            continue
        lows = [seq[j].state[0] for j in (i - 1, i + 1) if 0 <= j < len(seq)]
        if len(lows) < 2:
            continue
        exc = e.state[0] - max(lows)
        out.append(Oscillation(e.time, e.state[0], exc, tuple(e.state),
                               exc >= th.sao_lao_amplitude_fraction * R))
    return out


def _period_of(osc: list[Oscillation], R: float, tol: float):
    """Smallest shift under which the peak sequence repeats, or ``None``.

    The peak heights act as a return map on the section ``x' = 0``; a shift
    ``q`` is accepted when the last ``2q`` peaks repeat within ``tol * R``.
    """
    n = len(osc)
    h = np.array([o.peak for o in osc])
    big = np.array([o.large for o in osc])
    for q in range(1, n // 2 + 1):
        m = min(n - q, max(2 * q, n // 2))
        a = slice(n - q - m, n - q)
        b = slice(n - m, n)
        if np.all(big[a] == big[b]) and np.all(np.abs(h[a] - h[b]) <= tol * R):
            return q
    return None


def _groups(symbols: list[bool]):
    """Split a cyclic L/s word into ``(L_k, s_k)`` groups starting at an L."""
    if not any(symbols):
        return []
    k = symbols.index(True)
    word = symbols[k:] + symbols[:k]
    groups = []
    for big in word:
        if big:
            if groups and groups[-1][1] == 0:
                groups[-1][0] += 1
            else:
                groups.append([1, 0])
        else:
            groups[-1][1] += 1
    return [tuple(g) for g in groups]


def _split_times(traj: Trajectory, R: float, th: ClassifierThresholds):
    """Time spent with ``|dx/dt|`` below and above ``fast_rate * R``."""
    t, x = traj.times, traj.x
    if len(t) < 3:
        return float(t[-1] - t[0]) if len(t) else 0.0, 0.0
    # the trajectory may use any frame; rates are measured per intermediate unit
    dt = np.diff(t)
    dx = np.diff(x)
    rate = np.abs(dx) / np.maximum(dt, 1e-300)
    fast = rate >= th.fast_rate * R
    return float(dt[~fast].sum()), float(dt[fast].sum())


def _active_time(traj: Trajectory, osc: list[Oscillation]) -> float:
    """Total time x spends above the half-excursion level of each large peak."""
    t, x = traj.times, traj.x
    total = 0.0
    for o in osc:
        if not o.large:
            continue
        level = o.peak - 0.5 * o.excursion
        i = int(np.clip(np.searchsorted(t, o.time), 0, len(t) - 1))
        lo = i
        while lo > 0 and x[lo] > level:
            lo -= 1
        hi = i
        while hi < len(t) - 1 and x[hi] > level:
            hi += 1
        total += t[hi] - t[lo]
    return float(total)


def _closed_curve(points: np.ndarray) -> bool:
    """Whether section points wind around their centroid like a torus section.

    The points are ordered by angle about the centroid; a closed invariant
    curve fills the angles without a large gap and keeps the radius bounded
    away from zero.
    """
    if len(points) < 12:
        return False
    P = points - points.mean(axis=0)
    # principal plane of the section points
    _, _, Vt = np.linalg.svd(P, full_matrices=False)
    Q = P @ Vt[:2].T
    scale = np.abs(Q).max(axis=0)
    if np.any(scale == 0):
        return False
    Q = Q / scale
    r = np.hypot(Q[:, 0], Q[:, 1])
    ang = np.sort(np.arctan2(Q[:, 1], Q[:, 0]))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
    return bool(gaps.max() < np.pi / 2 and r.min() > 0.2 * r.max())


def classify(traj: Trajectory, th: ClassifierThresholds | None = None,
             p: Params | None = None) -> PatternLabel:
    """Pattern label of a trajectory already past its transient.

    ``p`` (defaults to the trajectory's parameters) enables the SAO
    location hint for MMO and bursting patterns.
    """
    th = th or ClassifierThresholds()
    p = p or traj.params
    if traj.frame != Frame.INTERMEDIATE:
        if p is None:
            raise ValueError("parameters are needed to rescale the trajectory")
        traj = traj.rescaled(Frame.INTERMEDIATE, p)
    x = traj.x
    if len(x) < 2:
        raise ValueError("trajectory has fewer than two samples")
    span = float(traj.times[-1] - traj.times[0])
    R = float(np.ptp(x))
    tail = traj.after(traj.times[0] + 0.5 * span)
    diag = {"x_range": R, "x_mean": float(np.mean(x)), "duration": span}
    if float(np.ptp(tail.x)) <= th.steady_range:
        return PatternLabel("SteadyState", diagnostics=diag)

    osc = oscillations(traj, th)
    n_big = sum(o.large for o in osc)
    diag.update(n_peaks=len(osc), n_lao=n_big, n_sao=len(osc) - n_big)
    if n_big < 2:
        # too few oscillations to tell a slow transient from a long period
        diag["note"] = "fewer than two large oscillations in the window"
        return PatternLabel("SteadyState", candidates=("SteadyState", "RelaxationOscillation"),
                            diagnostics=diag)

    slow, fast = _split_times(traj, R, th)
    ratio = slow / fast if fast > 0 else math.inf
    diag["time_ratio"] = ratio
    # quiescence over whole large-oscillation cycles only
    first = next(o for o in osc if o.large)
    last = [o for o in osc if o.large][-1]
    core = [o for o in osc if first.time <= o.time < last.time]
    cycle_time = last.time - first.time
    diag["quiescence_fraction"] = (1.0 - _active_time(traj, core) / cycle_time
                                   if cycle_time > 0 else 0.0)

    q = _period_of(osc, R, th.periodicity_tolerance)
    diag["periodic"] = q is not None
    if q is not None:
        word = [o.large for o in osc[-q:]]
        t_last = [o.time for o in osc]
        diag["period"] = float(np.mean(np.diff(t_last[len(t_last) - 1 - q::q]))) \
            if len(osc) > q else float("nan")
    else:
        # whole groups only: from the first large peak up to the last one
        word = [o.large for o in osc if first.time <= o.time < last.time]
    groups = _groups(word)
    diag["groups"] = [list(g) for g in groups]

    has_sao = any(s > 0 for _, s in groups)
    big_t = np.array([o.time for o in osc if o.large])
    isi = np.diff(big_t)
    label = None
    if has_sao:
        # several spikes in a row followed by an SAO or flat phase
        bursts = _burst_lengths(osc, th)
        if bursts and max(bursts) >= 2:
            label = _bursting(bursts, diag)
        else:
            label = PatternLabel("MMO", mmo_signature=groups, diagnostics=diag)
    else:
        bursts = _burst_lengths(osc, th)
        if bursts and max(bursts) >= 2 and len(set(bursts)) <= 2:
            label = _bursting(bursts, diag)
        elif q is None and _modulated(osc, R, th):
            pts = np.array([o.state for o in osc])
            sub = "torus" if _closed_curve(pts[:, 1:]) else "irregular"
            label = PatternLabel("AmplitudeModulated", subtag=sub, diagnostics=diag)
        elif fast == 0 and R <= th.hopf_relative_amplitude * float(np.mean(x)):
            label = PatternLabel("HopfCycle", diagnostics=diag)
        elif fast > 0 and ratio >= th.relaxation_ratio:
            label = PatternLabel("RelaxationOscillation", diagnostics=diag)
        else:
            label = PatternLabel("Spiking", diagnostics=diag)
        if label.kind in ("RelaxationOscillation", "Spiking") and \
                0.8 * th.relaxation_ratio <= ratio < 1.25 * th.relaxation_ratio:
            label.candidates = ("RelaxationOscillation", "Spiking") \
                if label.kind == "RelaxationOscillation" else ("Spiking", "RelaxationOscillation")
    diag["isi_cv"] = float(np.std(isi) / np.mean(isi)) if len(isi) > 1 else 0.0
    if label.kind in ("MMO", "Bursting") and p is not None:
        label.sao_location_hint = sao_locator(traj, p, th, osc)
    return label


def _bursting(bursts, diag) -> PatternLabel:
    vals, counts = np.unique(bursts, return_counts=True)
    diag["burst_lengths"] = [int(b) for b in bursts]
    return PatternLabel("Bursting", spikes_per_burst=int(vals[np.argmax(counts)]),
                        diagnostics=diag)


def _burst_lengths(osc: list[Oscillation], th: ClassifierThresholds) -> list[int]:
    """Lengths of runs of large spikes separated by quiescent gaps.

    A gap is an interval between consecutive large peaks that is at least
    ``burst_quiescence_gap`` long and three times the median spacing inside
    runs. Returns an empty list when no such gap exists. Runs cut by the
    window edges are discarded.
    """
    t = np.array([o.time for o in osc if o.large])
    if len(t) < 3:
        return []
    isi = np.diff(t)
    short = np.median(isi[isi <= np.median(isi)])
    gap = (isi >= th.burst_quiescence_gap) & (isi >= 3.0 * short)
    if not gap.any() or gap.all():
        return []
    edges = np.flatnonzero(gap)
    return [int(b - a) for a, b in zip(edges, edges[1:])]


def _modulated(osc, R, th) -> bool:
    h = np.array([o.peak for o in osc if o.large])
    return len(h) >= 4 and float(np.ptp(h)) > th.periodicity_tolerance * R


def sao_locator(traj: Trajectory, p: Params, th: ClassifierThresholds | None = None,
                osc: list[Oscillation] | None = None) -> str | None:
    """Fold branch nearest to the centroid of the small oscillations.

    Distance is measured in the ``(x, z)`` projection. Returns ``"F0"``,
    ``"Fplus"`` (or ``"Fminus"``/``"F"`` for the other branch names), and
    ``None`` when there are no small oscillations.
    """
    th = th or ClassifierThresholds()
    osc = oscillations(traj, th) if osc is None else osc
    small = np.array([o.state for o in osc if not o.large])
    if len(small) == 0:
        return None
    c = small[:, [0, 2]].mean(axis=0)
    fc = classify_fold_curve(p)
    best, dist = None, math.inf
    for name, pts in fc.branches.items():
        if len(pts) == 0:
            continue
        d = float(np.min(np.hypot(pts[:, 0] - c[0], pts[:, 2] - c[1])))
        if d < dist:
            best, dist = name, d
    return HINTS.get(best) if best else None


# regime maps

FALLBACK_IC = (0.3, 0.1, 0.1)


def initial_condition(p: Params, perturbation: float = 0.01) -> tuple[np.ndarray, str]:
    """Deterministic start: the coexistence equilibrium scaled by ``1 + perturbation``
    when it exists in the open octant, else a fixed interior point."""
    for e in equilibria(p):
        if e.kind == "Coexistent" and np.all(np.asarray(e.state) > 0):
            return np.asarray(e.state, float) * (1.0 + perturbation), "perturbed E*"
    return np.array(FALLBACK_IC), "fallback"


@dataclass
class RegimeCell:
    beta2: float
    alpha: float
    label: str
    ic_policy: str
    error: str = ""
    diagnostics: dict = field(default_factory=dict)


@dataclass
class RegimeMap:
    beta2: np.ndarray
    alpha: np.ndarray
    cells: list  # row-major, alpha outer
    metadata: dict

    def labels(self) -> np.ndarray:
        return np.array([c.label for c in self.cells], dtype=object).reshape(
            len(self.alpha), len(self.beta2))

    def boundaries(self) -> list[tuple[tuple[float, float], tuple[float, float]]]:
        """Cell-edge segments separating differently labelled cells."""
        L = self.labels()
        b, a = self.beta2, self.alpha
        mb = np.concatenate([[b[0] - (b[1] - b[0]) / 2 if len(b) > 1 else b[0]],
                             (b[1:] + b[:-1]) / 2,
                             [b[-1] + (b[-1] - b[-2]) / 2 if len(b) > 1 else b[-1]]])
        ma = np.concatenate([[a[0] - (a[1] - a[0]) / 2 if len(a) > 1 else a[0]],
                             (a[1:] + a[:-1]) / 2,
                             [a[-1] + (a[-1] - a[-2]) / 2 if len(a) > 1 else a[-1]]])
        segs = []
        for i in range(len(a)):
            for j in range(len(b)):
                if j + 1 < len(b) and L[i, j] != L[i, j + 1]:
                    segs.append(((mb[j + 1], ma[i]), (mb[j + 1], ma[i + 1])))
                if i + 1 < len(a) and L[i, j] != L[i + 1, j]:
                    segs.append(((mb[j], ma[i + 1]), (mb[j + 1], ma[i + 1])))
        return segs

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["beta2", "alpha", "label", "ic_policy", "error", "diagnostics"])
            for c in self.cells:
                w.writerow([repr(c.beta2), repr(c.alpha), c.label, c.ic_policy, c.error,
                            json.dumps(_jsonable(c.diagnostics), sort_keys=True)])


def _jsonable(d):
    if isinstance(d, dict):
        return {k: _jsonable(v) for k, v in d.items()}
    if isinstance(d, (list, tuple)):
        return [_jsonable(v) for v in d]
    if isinstance(d, float) and not math.isfinite(d):
        return str(d)
    if isinstance(d, (np.floating, np.integer, np.bool_)):
        return _jsonable(d.item())
    return d


def classify_point(p: Params, t_end: float = 4000.0, cfg: IntegratorConfig | None = None,
                   th: ClassifierThresholds | None = None, transient_fraction: float = 0.5):
    """Simulate from the deterministic start and classify the attractor part."""
    cfg = cfg or IntegratorConfig()
    s0, policy = initial_condition(p)
    tr = simulate(p, s0, t_end, cfg)
    if not tr.success:
        raise RuntimeError(f"integration failed: {tr.message}")
    return classify(tr.attractor(transient_fraction), th, p), policy, tr


def _cell(args):
    base, b2, a, t_end, cfg, th = args
    p = base.replace(beta2=b2, alpha=a)
    try:
        lab, policy, _ = classify_point(p, t_end, cfg, th)
        return RegimeCell(b2, a, lab.kind, policy, diagnostics=lab.diagnostics)
    except Exception as exc:  # recorded per cell
        return RegimeCell(b2, a, "Failed", "", error=f"{type(exc).__name__}: {exc}")


def regime_map(beta2, alpha, th: ClassifierThresholds | None = None,
               cfg: IntegratorConfig | None = None, t_end: float = 4000.0,
               base: Params | None = None, workers: int | None = None) -> RegimeMap:
    """Label every ``(beta2, alpha)`` grid cell.

    Cells are simulated in parallel; results are assembled in grid order
    (alpha outer, beta2 inner) so the output does not depend on scheduling.
    """
    b = np.asarray(beta2, float)
    a = np.asarray(alpha, float)
    if np.any((b <= 0) | (b >= 1)) or np.any((a <= 0) | (a > 1)):
        raise ValueError("grid must lie in (0, 1) x (0, 1]")
    base = base or paper_params(alpha=float(a[0]), beta2=float(b[0]))
    th = th or ClassifierThresholds()
    cfg = cfg or IntegratorConfig()
    jobs = [(base, float(bb), float(aa), t_end, cfg, th) for aa in a for bb in b]
    workers = workers if workers is not None else min(len(jobs), os.cpu_count() or 1)
    if workers <= 1:
        cells = [_cell(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            cells = list(ex.map(_cell, jobs))
    meta = {"ic_policy": f"coexistence equilibrium times 1.01, else {list(FALLBACK_IC)}",
            "t_end": t_end, "transient_fraction": 0.5, "frame": cfg.frame.value,
            "rtol": cfg.rtol, "atol": cfg.atol, "thresholds": asdict(th),
            "base_params": base.as_dict()}
    return RegimeMap(b, a, cells, meta)
