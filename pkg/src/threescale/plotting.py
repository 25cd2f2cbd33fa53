"""Quick-look SVG figures. CSV exports remain the reference data."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import ListedColormap  # noqa: E402
from matplotlib.patches import Patch  # noqa: E402

# fixed salt and no date keep SVG output byte-identical across runs
matplotlib.rcParams["svg.hashsalt"] = "threescale"
matplotlib.rcParams["svg.fonttype"] = "none"

MARKERS = {"Hopf": "o", "SaddleNode": "s", "Transcritical": "x", "PeriodDoubling": "D",
           "Torus": "^", "CyclicFold": "v", "HomoclinicApprox": "*", "BogdanovTakens": "P",
           "Cusp": "X", "GeneralizedHopf": "h", "Endpoint": "."}

REGIME_COLORS = {"SteadyState": "#d9d9d9", "HopfCycle": "#a6cee3",
                 "RelaxationOscillation": "#1f78b4", "MMO": "#33a02c", "Bursting": "#e31a1c",
                 "Spiking": "#ff7f00", "AmplitudeModulated": "#6a3d9a", "Failed": "#000000"}


def _save(fig, path, description=None):
    meta = {"Date": None}
    if description:
        meta["Description"] = description
    fig.savefig(path, format="svg", metadata=meta)
    plt.close(fig)


def plot_trajectory(traj, path, title: str = "", description=None) -> None:
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(7, 6))
    for ax, name, col in zip(axes, "xyz", traj.states.T):
        ax.plot(traj.times, col, lw=0.7)
        ax.set_ylabel(name)
    axes[-1].set_xlabel(f"t ({traj.frame.value})")
    axes[0].set_title(title)
    _save(fig, path, description)


def plot_branch(branch, path, coord: int = 0, title: str = "", description=None) -> None:
    """Branch in ``(parameter, state[coord])``; stable solid, unstable dashed.

    Periodic branches show ``x_max`` and ``x_min`` when ``coord`` is 0.
    """
    fig, ax = plt.subplots(figsize=(7, 4.5))
    v = branch.values()
    if branch.kind == "PeriodicOrbit" and coord == 0:
        ys = [np.array([pt.x_max for pt in branch.points]),
              np.array([pt.x_min for pt in branch.points])]
    else:
        ys = [np.array([np.ravel(pt.state)[coord] for pt in branch.points])]
    st = np.array([pt.stable for pt in branch.points])
    for y in ys:
        for mask, ls in ((st, "-"), (~st, "--")):
            ax.plot(v, np.where(mask, y, np.nan), ls, color="k", lw=1)
    for b in branch.detected:
        ax.plot(b.params[branch.vary], np.ravel(b.state)[coord],
                MARKERS.get(b.kind, "o"), color="C3", label=b.kind)
    _dedupe_legend(ax)
    ax.set_xlabel(branch.vary)
    ax.set_ylabel("xyz"[coord])
    ax.set_title(title)
    _save(fig, path, description)


def plot_fold_curve(fc, path, title: str = "", description=None) -> None:
    """Fold branches in the ``(x, z)`` projection."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for name, pts in sorted(fc.branches.items()):
        if len(pts):
            ax.plot(pts[:, 0], pts[:, 2], lw=1.5, label=name)
    ax.set_xlabel("x")
    ax.set_ylabel("z")
    ax.legend()
    ax.set_title(title or fc.case)
    _save(fig, path, description)


def plot_fast_diagram(diag, path, title: str = "", description=None) -> None:
    """Layer equilibria and cycle extrema against ``z``."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for b in diag.branches:
        for mask, ls in ((b.stable, "-"), (~b.stable, "--")):
            ax.plot(b.z, np.where(mask, b.x, np.nan), ls, color="k", lw=1)
    for c in diag.cycles:
        for y in (c.x_max, c.x_min):
            for mask, ls in ((c.stable, "-"), (~c.stable, ":")):
                ax.plot(c.z, np.where(mask, y, np.nan), ls, color="C0", lw=1)
    for h in diag.hopf:
        ax.plot(h.z, h.x, "o", color="C3", label="Hopf")
    _dedupe_legend(ax)
    ax.set_xlabel("z")
    ax.set_ylabel("x")
    ax.set_title(title)
    _save(fig, path, description)


def plot_curves_2par(curves, points, path, xlabel="z", ylabel="beta2", title="",
                     description=None) -> None:
    """Two-parameter curves given as ``(label, x, y)`` with special points."""
    fig, ax = plt.subplots(figsize=(6.5, 5))
    for i, (label, xs, ys) in enumerate(curves):
        ax.plot(xs, ys, lw=1, color=f"C{i % 10}", label=label)
    for b in points:
        ax.plot(*b[1:], MARKERS.get(b[0], "o"), color="k", label=b[0])
    _dedupe_legend(ax)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    _save(fig, path, description)


def plot_regime_map(rm, path, title: str = "", description=None) -> None:
    """Labelled raster over ``(beta2, alpha)`` with one legend entry per label."""
    L = rm.labels()
    names = list(REGIME_COLORS)
    idx = np.vectorize(lambda s: names.index(s) if s in names else len(names) - 1)(L)
    fig, ax = plt.subplots(figsize=(7, 5))
    b, a = rm.beta2, rm.alpha
    ax.pcolormesh(b, a, idx, cmap=ListedColormap(list(REGIME_COLORS.values())),
                  vmin=-0.5, vmax=len(names) - 0.5, shading="nearest")
    present = [n for n in names if n in set(L.ravel())]
    ax.legend(handles=[Patch(color=REGIME_COLORS[n], label=n) for n in present],
              loc="upper left", bbox_to_anchor=(1.01, 1.0), fontsize=8)
    ax.set_xlabel("beta2")
    ax.set_ylabel("alpha")
    ax.set_title(title)
    fig.tight_layout()
    _save(fig, path, description)


def _dedupe_legend(ax):
    h, lab = ax.get_legend_handles_labels()
    seen = {}
    for hh, ll in zip(h, lab):
        seen.setdefault(ll, hh)
    if seen:
        ax.legend(seen.values(), seen.keys(), fontsize=8)
