"""Command-line entry point: ``threescale <command> [options]``.

Every command writes its artifacts to ``--outdir`` (default
``$THREESCALE_OUTDIR`` or ``./threescale-out``), stamps them with the
resolved parameters, tool version and seed, and prints a one-line summary.
Exit codes: 0 success, 2 invalid input, 3 numerical failure (partial
artifacts are kept), 1 selftest failure.
"""
from __future__ import annotations

import argparse
import io
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .model import PARAM_KEYS, AssumptionWarning, Frame, Params, preset

EXIT_OK, EXIT_SELFTEST, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2, 3
OUTDIR_ENV = "THREESCALE_OUTDIR"
FORMATS = ("csv", "json", "svg")


class NumericalFailure(RuntimeError):
    """Computation ran but did not complete; artifacts written so far are kept."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# run context


class Run:
    """Resolved configuration plus artifact writers for one command."""

    def __init__(self, args, params: Params | None):
        self.args = args
        self.params = params
        self.outdir = Path(args.outdir)
        self.outdir.mkdir(parents=True, exist_ok=True)
        self.formats = set(args.formats)
        self.seed = args.seed
        self.written: list[str] = []

    def meta(self) -> dict:
        opts = {k: v for k, v in sorted(vars(self.args).items())
                if k not in ("func", "outdir", "config", "params_file")
                and k not in PARAM_KEYS and not k.startswith("_")}
        return {"tool": "threescale", "version": __version__, "command": self.args.command,
                "seed": self.seed, "params": self.params.as_dict() if self.params else None,
                "options": _plain(opts)}

    def header(self) -> str:
        return "# " + json.dumps(self.meta(), sort_keys=True)

    def path(self, name: str) -> Path:
        return self.outdir / name

    def csv(self, name: str, writer) -> None:
        """``writer(path)`` produces the CSV body; the metadata line is prepended."""
        if "csv" not in self.formats:
            return
        p = self.path(name)
        writer(p)
        body = p.read_text()
        p.write_text(self.header() + "\n" + body)
        self.written.append(str(p))

    def rows(self, name: str, header, rows) -> None:
        def w(p):
            buf = io.StringIO()
            buf.write(",".join(header) + "\n")
            for r in rows:
                buf.write(",".join(_cell(v) for v in r) + "\n")
            p.write_text(buf.getvalue())
        self.csv(name, w)

    def json(self, name: str, payload) -> None:
        if "json" not in self.formats:
            return
        p = self.path(name)
        doc = {"meta": self.meta(), "result": _plain(payload)}
        p.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        self.written.append(str(p))

    def svg(self, name: str, plot, *a, **kw) -> None:
        if "svg" not in self.formats:
            return
        p = self.path(name)
        plot(*a, p, description=json.dumps(self.meta(), sort_keys=True), **kw)
        self.written.append(str(p))


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if not np.isfinite(v) else repr(float(v))
    return str(v)


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, Frame):
        return v.value
    return v


def resolve_params(args) -> Params:
    """Preset, then params file, then config file, then explicit flags."""
    vals = dict(preset(args.preset, alpha=0.75, beta2=0.01).as_dict())
    if args.params_file:
        vals.update(Params.from_text(Path(args.params_file).read_text(),
                                     base=Params(**vals)).as_dict())
    vals.update({k: v for k, v in getattr(args, "_config_params", {}).items()})
    for k in PARAM_KEYS:
        v = getattr(args, k, None)
        if v is not None:
            vals[k] = v
    return Params(**vals)


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(run: Run) -> str:
    from .classifier import initial_condition
    from .integrate import IntegratorConfig, simulate
    from .plotting import plot_trajectory

    a, p = run.args, run.params
    cfg = IntegratorConfig(rtol=a.rtol, atol=a.atol, frame=Frame.parse(a.frame), method=a.method)
    s0, policy = (np.array(a.initial), "given") if a.initial else initial_condition(p)
    tr = simulate(p, s0, a.t_end, cfg)
    run.csv("trajectory.csv", tr.to_csv)
    run.json("events.json", {"initial_state": s0, "initial_policy": policy,
                             "success": tr.success, "message": tr.message,
                             "events": json.loads(tr.events_json())})
    run.svg("trajectory.svg", plot_trajectory, tr, title=f"beta2={p.beta2}, alpha={p.alpha}")
    if not tr.success:
        raise NumericalFailure(f"integration stopped at t={tr.t_end:g}: {tr.message}")
    return f"simulated to t={tr.t_end:g} ({a.frame}), {len(tr.times)} samples, {len(tr.events)} events"


def cmd_equilibria(run: Run) -> str:
    from .model import equilibria

    eqs = equilibria(run.params)
    run.rows("equilibria.csv", ["kind", "x", "y", "z", "stable", "max_real_eig"],
             [[e.kind, *e.state, e.stable, float(np.max(e.eigenvalues.real))] for e in eqs])
    run.json("equilibria.json", [{"kind": e.kind, "state": list(e.state), "stable": e.stable,
                                  "eigenvalues": e.eigenvalues} for e in eqs])
    return "; ".join(f"{e.kind}{' (stable)' if e.stable else ''}" for e in eqs)


def cmd_fold_classify(run: Run) -> str:
    from .manifolds import classify_fold_curve
    from .plotting import plot_fold_curve

    fc = classify_fold_curve(run.params)
    rows = [[name, *pt] for name, pts in sorted(fc.branches.items()) for pt in pts]
    run.rows("fold_branches.csv", ["branch", "x", "y", "z"], rows)
    run.json("fold.json", {"case": fc.case, "degenerate": fc.degenerate, "note": fc.note,
                           "x_d": fc.x_d, "x1": fc.x1, "x2": fc.x2, "extrema": fc.extrema,
                           "mu_roots": fc.mu_roots, "x_m": fc.x_m, "x_M": fc.x_M})
    run.svg("fold.svg", plot_fold_curve, fc)
    print(fc.case)
    return f"fold curve {fc.case}" + (f" (degenerate: {fc.note})" if fc.degenerate else "")


def cmd_manifold_export(run: Run) -> str:
    from .manifolds import classify_fold_curve, superslow_curves

    p = run.params
    fc = classify_fold_curve(p)
    Z, L = superslow_curves(p, n_samples=run.args.samples)
    run.rows("fold_branches.csv", ["branch", "x", "y", "z"],
             [[n, *pt] for n, pts in sorted(fc.branches.items()) for pt in pts])
    run.rows("superslow.csv", ["curve", "label", "x", "y", "z"],
             [[c.which, lab, x, y, z] for c in (Z, L)
              for lab, x, y, z in zip(c.labels, c.x, c.y, c.z)])
    run.json("superslow.json", {
        "fold_case": fc.case,
        "Z": {"folds": Z.fold_xs, "x_start": Z.x_start, "degenerate_nodes": Z.degenerate_nodes,
              "hopf": [vars(h) for h in Z.hopf_points]},
        "L": {"folds": L.fold_xs, "hopf": [vars(h) for h in L.hopf_points]}})
    return (f"fold {fc.case}; Z folds {len(Z.fold_xs)}, Z Hopf {len(Z.hopf_points)}; "
            f"L folds {len(L.fold_xs)}")


def cmd_foldsing(run: Run) -> str:
    from .reduced import flows_to, folded_singularities, strong_canard

    p = run.params
    fs = folded_singularities(p)
    out = []
    for k, f in enumerate(fs):
        d = {"kind": f.kind, "branch": f.branch, "x": f.x, "y": f.y, "z": f.z,
             "eigenvalues": f.eigenvalues, "mu_ratio": f.mu_ratio}
        if f.kind == "FoldedNode" and run.args.funnel_samples > 0:
            fun = strong_canard(f, p)
            run.rows(f"funnel_{k}.csv", ["x", "z"], fun.polygon)
            pts = fun.sample(run.args.funnel_samples, np.random.default_rng(run.seed))
            d["funnel_hits"] = int(sum(flows_to(x, z, f, p) for x, z in pts))
            d["funnel_samples"] = run.args.funnel_samples
            d["funnel_truncated"] = fun.truncated
        out.append(d)
    run.json("folded_singularities.json", out)
    return f"{len(fs)} folded singularit{'y' if len(fs) == 1 else 'ies'}: " + \
        ", ".join(f"{f.kind} on {f.branch} at x={f.x:.5g}" for f in fs)


def cmd_fastbif(run: Run) -> str:
    from .bifurcation import fast_subsystem_2par, fast_subsystem_diagram
    from .plotting import plot_curves_2par, plot_fast_diagram

    a, p = run.args, run.params
    if a.two_parameter:
        d2 = fast_subsystem_2par(alpha=p.alpha, base=p, max_points=a.max_points)
        curves = d2.sn_f + d2.hopf
        run.rows("fast2par_curves.csv", ["curve", "z", "beta2", "x", "physical"],
                 [[c.name, z, b, x, ph] for c in curves
                  for z, b, x, ph in zip(c.z, c.beta2, c.x, c.physical)])
        run.json("fast2par.json", {"points": [b.as_dict() for b in d2.points],
                                   "self_intersections": d2.self_intersections})
        run.svg("fast2par.svg", plot_curves_2par, [(c.name, c.z, c.beta2) for c in curves],
                [(b.kind, b.params["z"], b.params["beta2"]) for b in d2.points])
        kinds = sorted({b.kind for b in d2.points})
        return (f"{len(d2.sn_f)} fold and {len(d2.hopf)} Hopf curve(s); " +
                ", ".join(f"{k} x{len(d2.of_kind(k))}" for k in kinds) +
                f"; {len(d2.self_intersections)} self-intersection(s)")
    d = fast_subsystem_diagram(p, z_range=(a.z_min, a.z_max), cycles=not a.no_cycles)
    run.rows("fast_equilibria.csv", ["branch", "z", "x", "y", "stable"],
             [[b.name, z, x, y, st] for b in d.branches
              for z, x, y, st in zip(b.z, b.x, b.y, b.stable)])
    run.rows("fast_cycles.csv", ["hopf_x", "z", "period", "x_min", "x_max", "stable"],
             [[c.hopf_x, *r] for c in d.cycles
              for r in zip(c.z, c.period, c.x_min, c.x_max, c.stable)])
    run.json("fastbif.json", {"hopf": [vars(h) for h in d.hopf],
                              "cycles": [{"hopf_x": c.hopf_x, "end": c.end, "loop": c.loop,
                                          "detected": [b.as_dict() for b in c.detected]}
                                         for c in d.cycles],
                              "bistable_z": d.bistable_z()})
    run.svg("fastbif.svg", plot_fast_diagram, d)
    ends = ", ".join(f"{c.end}{' (' + c.loop + ')' if c.loop else ''}" for c in d.cycles)
    return f"{len(d.hopf)} layer Hopf point(s); cycle branch ends: {ends or 'none'}"


def cmd_continue(run: Run) -> str:
    from .bifurcation import continue_equilibrium, continue_periodic_from_hopf
    from .plotting import plot_branch

    a, p = run.args, run.params
    start = a.hi if a.start is None else a.start
    p = run.params = p.replace(**{a.vary: start})
    br = continue_equilibrium(p, vary=a.vary, bounds=(a.lo, a.hi), max_points=a.max_points)
    run.csv("equilibrium_branch.csv", br.to_csv)
    run.json("equilibrium_branch.json", br.summary())
    run.svg("equilibrium_branch.svg", plot_branch, br)
    msg = "; ".join(f"{b.kind} at {a.vary}={b.params[a.vary]:.6g}" for b in br.detected)
    msg = f"equilibrium branch: {msg or 'no bifurcations'}"
    if a.periodic:
        hopfs = br.of_kind("Hopf")
        if not hopfs:
            raise NumericalFailure(msg + "; no Hopf point to start a cycle branch")
        pb = continue_periodic_from_hopf(p, hopfs[0], vary=a.vary, bounds=(a.lo, a.hi),
                                         max_points=a.max_orbit_points)
        run.csv("periodic_branch.csv", pb.to_csv)
        run.json("periodic_branch.json", pb.summary())
        run.svg("periodic_branch.svg", plot_branch, pb)
        pm = "; ".join(f"{b.kind} at {b.params[a.vary]:.6g}" for b in pb.detected)
        msg += f"; cycle branch ({len(pb.points)} orbits): {pm or 'no bifurcations'}"
        if not pb.points:
            raise NumericalFailure(msg)
    return msg


def cmd_hopf2par(run: Run) -> str:
    from .bifurcation import continue_equilibrium, continue_hopf_2par
    from .plotting import plot_curves_2par

    a, p = run.args, run.params
    p = run.params = p.replace(beta2=a.hi if a.start is None else a.start)
    br = continue_equilibrium(p, vary="beta2", bounds=(a.lo, a.hi))
    hopfs = br.of_kind("Hopf")
    if not hopfs:
        raise NumericalFailure("no Hopf point on the equilibrium branch")
    curve = continue_hopf_2par(p, hopfs[0], max_points=a.max_points)
    run.csv("hopf_curve.csv", curve.to_csv)
    run.json("hopf_curve.json", {"closed": curve.closed, "note": curve.note,
                                 "endpoints": [b.as_dict() for b in curve.endpoints]})
    run.svg("hopf_curve.svg", plot_curves_2par, [("Hopf", curve.params[:, 0], curve.params[:, 1])],
            [(b.kind, b.params["beta2"], b.params["alpha"]) for b in curve.endpoints],
            xlabel="beta2", ylabel="alpha")
    ends = ", ".join(b.kind for b in curve.endpoints)
    return (f"Hopf curve from beta2={hopfs[0].params['beta2']:.6g}: {len(curve.params)} points, "
            f"{'closed' if curve.closed else 'ends: ' + (ends or 'none')}")


def cmd_classify(run: Run) -> str:
    from .classifier import ClassifierThresholds, classify, initial_condition
    from .integrate import IntegratorConfig, simulate

    a, p = run.args, run.params
    th = ClassifierThresholds(sao_lao_amplitude_fraction=a.sao_fraction)
    s0, policy = (np.array(a.initial), "given") if a.initial else initial_condition(p)
    tr = simulate(p, s0, a.t_end, IntegratorConfig(rtol=a.rtol, atol=a.atol))
    if not tr.success:
        raise NumericalFailure(f"integration failed: {tr.message}")
    lab = classify(tr.attractor(a.transient_fraction), th, p)
    run.json("label.json", dict(lab.as_dict(), initial_state=s0, initial_policy=policy))
    extra = []
    if lab.mmo_signature:
        extra.append(f"signature {lab.signature_text}")
    if lab.spikes_per_burst is not None:
        extra.append(f"{lab.spikes_per_burst} spikes per burst")
    if lab.sao_location_hint:
        extra.append(f"SAOs near {lab.sao_location_hint}")
    if lab.candidates:
        extra.append(f"candidates {'/'.join(lab.candidates)}")
    return lab.kind + (f" ({', '.join(extra)})" if extra else "")


def _grid(text: str) -> np.ndarray:
    try:
        lo, hi, n = text.split(":")
        return np.linspace(float(lo), float(hi), int(n))
    except ValueError:
        raise ValueError(f"grid must be lo:hi:n, got {text!r}") from None


def cmd_regime_map(run: Run) -> str:
    from .classifier import regime_map
    from .integrate import IntegratorConfig
    from .plotting import plot_regime_map

    a = run.args
    rm = regime_map(_grid(a.beta2_grid), _grid(a.alpha_grid), t_end=a.t_end,
                    cfg=IntegratorConfig(rtol=a.rtol, atol=a.atol), base=run.params,
                    workers=a.workers)
    run.csv("regime_map.csv", rm.to_csv)
    run.json("regime_map.json", {"metadata": rm.metadata, "boundaries": rm.boundaries(),
                                 "labels": rm.labels().tolist()})
    run.svg("regime_map.svg", plot_regime_map, rm)
    counts = {}
    for c in rm.cells:
        counts[c.label] = counts.get(c.label, 0) + 1
    failed = counts.get("Failed", 0)
    msg = f"{len(rm.cells)} cells: " + ", ".join(f"{k} {v}" for k, v in sorted(counts.items()))
    if failed:
        raise NumericalFailure(msg)
    return msg


def cmd_nondim(run: Run) -> str:
    from .model import DimensionalParams, nondimensionalize

    dp = DimensionalParams.from_text(Path(run.args.input).read_text())
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", AssumptionWarning)
        p, sc = nondimensionalize(dp)
    run.params = p
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    (run.path("params.txt")).write_text(p.to_text())
    run.written.append(str(run.path("params.txt")))
    run.json("nondim.json", {"params": p.as_dict(), "scales": vars(sc),
                             "warnings": [str(w.message) for w in caught]})
    return "nondimensional parameters: " + ", ".join(f"{k}={v:.6g}" for k, v in p.as_dict().items())


def cmd_selftest(run: Run) -> str:
    from . import selftest

    res = selftest.run(tolerance_scale=run.args.tolerance_scale,
                       reference=run.args.reference, seed=run.seed)
    for r in res:
        print(r.line())
    run.json("selftest.json", [vars(r) for r in res])
    bad = [r for r in res if not r.ok]
    if bad:
        raise _SelftestFailed(f"{len(bad)} of {len(res)} checks failed")
    return f"all {len(res)} checks passed"


class _SelftestFailed(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# parser


def _common(sp, params=True):
    sp.add_argument("--outdir", default=os.environ.get(OUTDIR_ENV, "threescale-out"),
                    help=f"artifact directory (default ${OUTDIR_ENV} or ./threescale-out)")
    sp.add_argument("--formats", type=lambda s: [f for f in s.split(",") if f],
                    default=list(FORMATS), help="comma list of csv,json,svg")
    sp.add_argument("--seed", type=int, default=0, help="seed for sampled initial conditions")
    sp.add_argument("--config", help="JSON file with parameter and option values")
    if params:
        sp.add_argument("--preset", default="paper", help="parameter preset (default: paper)")
        sp.add_argument("--params-file", help="key=value parameter file")
        for k in PARAM_KEYS:
            sp.add_argument(f"--{k}", type=float, default=None)


def _integrator(sp):
    sp.add_argument("--rtol", type=float, default=1e-9)
    sp.add_argument("--atol", type=float, default=1e-11)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="threescale", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"threescale {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("simulate", help="integrate the full system")
    _common(sp)
    _integrator(sp)
    sp.add_argument("--t-end", type=float, default=2000.0)
    sp.add_argument("--frame", default="intermediate", choices=[f.value for f in Frame])
    sp.add_argument("--method", default="auto", choices=["auto", "explicit", "implicit"])
    sp.add_argument("--initial", type=float, nargs=3, metavar=("X", "Y", "Z"))
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("equilibria", help="equilibria and their stability")
    _common(sp)
    sp.set_defaults(func=cmd_equilibria)

    sp = sub.add_parser("fold-classify", help="fold curve case and branches")
    _common(sp)
    sp.set_defaults(func=cmd_fold_classify)

    sp = sub.add_parser("manifold-export", help="fold curve and superslow curves")
    _common(sp)
    sp.add_argument("--samples", type=int, default=2000)
    sp.set_defaults(func=cmd_manifold_export)

    sp = sub.add_parser("foldsing", help="folded singularities and funnels")
    _common(sp)
    sp.add_argument("--funnel-samples", type=int, default=20)
    sp.set_defaults(func=cmd_foldsing)

    sp = sub.add_parser("fastbif", help="layer-problem bifurcation diagram")
    _common(sp)
    sp.add_argument("--z-min", type=float, default=0.0)
    sp.add_argument("--z-max", type=float, default=0.5)
    sp.add_argument("--no-cycles", action="store_true")
    sp.add_argument("--two-parameter", action="store_true",
                    help="fold and Hopf curves in (z, beta2) at the given alpha")
    sp.add_argument("--max-points", type=int, default=3000)
    sp.set_defaults(func=cmd_fastbif)

    sp = sub.add_parser("continue", help="equilibrium and cycle continuation")
    _common(sp)
    sp.add_argument("--vary", default="beta2", choices=list(PARAM_KEYS))
    sp.add_argument("--lo", type=float, default=0.001)
    sp.add_argument("--hi", type=float, default=0.1)
    sp.add_argument("--start", type=float, default=None,
                    help="parameter value of the seed equilibrium (default: --hi)")
    sp.add_argument("--max-points", type=int, default=5000)
    sp.add_argument("--periodic", action="store_true", help="also follow cycles from the first Hopf")
    sp.add_argument("--max-orbit-points", type=int, default=150)
    sp.set_defaults(func=cmd_continue)

    sp = sub.add_parser("hopf2par", help="Hopf curve in (beta2, alpha)")
    _common(sp)
    sp.add_argument("--lo", type=float, default=0.001)
    sp.add_argument("--hi", type=float, default=0.1)
    sp.add_argument("--start", type=float, default=None,
                    help="parameter value of the seed equilibrium (default: --hi)")
    sp.add_argument("--max-points", type=int, default=4000)
    sp.set_defaults(func=cmd_hopf2par)

    sp = sub.add_parser("classify", help="simulate and label the attractor")
    _common(sp)
    _integrator(sp)
    sp.add_argument("--t-end", type=float, default=4000.0)
    sp.add_argument("--transient-fraction", type=float, default=0.5)
    sp.add_argument("--sao-fraction", type=float, default=0.2)
    sp.add_argument("--initial", type=float, nargs=3, metavar=("X", "Y", "Z"))
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("regime-map", help="pattern labels over a (beta2, alpha) grid")
    _common(sp)
    _integrator(sp)
    sp.add_argument("--beta2-grid", default="0.005:0.3:12", help="lo:hi:n")
    sp.add_argument("--alpha-grid", default="0.4:1.0:7", help="lo:hi:n")
    sp.add_argument("--t-end", type=float, default=4000.0)
    sp.add_argument("--workers", type=int, default=None)
    sp.set_defaults(func=cmd_regime_map)

    sp = sub.add_parser("nondim", help="dimensional to nondimensional parameters")
    _common(sp, params=False)
    sp.add_argument("--input", required=True, help="key=value file of dimensional rates")
    sp.set_defaults(func=cmd_nondim)

    sp = sub.add_parser("selftest", help="fast consistency checks")
    _common(sp, params=False)
    sp.add_argument("--tolerance-scale", type=float, default=1.0,
                    help="multiply integrator tolerances (sensitivity run)")
    sp.add_argument("--reference", action="store_true",
                    help="also check the benchmark labels")
    sp.set_defaults(func=cmd_selftest)
    return ap


def parse(argv) -> argparse.Namespace:
    """Parse with config-file values as defaults below explicit flags."""
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            ap.error(f"cannot read config {args.config}: {exc}")
        if not isinstance(cfg, dict):
            ap.error("config must be a JSON object")
        params = {k: float(v) for k, v in cfg.items() if k in PARAM_KEYS}
        opts = {k.replace("-", "_"): v for k, v in cfg.items() if k not in PARAM_KEYS}
        sub = ap._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(opts) - known)
        if unknown:
            ap.error(f"unknown config key(s): {', '.join(unknown)}")
        sub.set_defaults(**opts)
        args = ap.parse_args(argv)
        # explicit parameter flags win over the config file
        args._config_params = params
    return args


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parse(argv)
    try:
        bad = set(args.formats) - set(FORMATS)
        if bad:
            raise ValueError(f"unknown format(s): {', '.join(sorted(bad))}")
        params = resolve_params(args) if hasattr(args, "preset") else None
        run = Run(args, params)
    except (ValueError, KeyError, OSError) as exc:
        print(f"threescale {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        with warnings.catch_warnings():
            if args.command != "nondim":
                warnings.simplefilter("default", AssumptionWarning)
            msg = args.func(run)
    except _SelftestFailed as exc:
        print(f"selftest: {exc}")
        return EXIT_SELFTEST
    except NumericalFailure as exc:
        print(f"threescale {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"threescale {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (RuntimeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"threescale {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"{args.command}: {msg}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
