"""Command-line front end.

Subcommands: classify, capacity, green, monopole, heatmass, walk,
bridge, boundary, verify, gen.  Reports go to standard output as JSON,
CSV (one row per window per quantity), or a human summary; ``--plot-dir``
additionally renders one figure per evidence sequence next to a copy of
the CSV.  Exit codes: 0 success, 1 inconclusive verdict under
``--strict``, 2 input error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import __version__
from .config import Settings, load_settings
from .errors import GraphPotentialError, InputError, SolverError
from .exhaustion import auto_radii, exhaust, solve_resolvent
from .graphs import GraphFunction, from_spec
from .heat import completeness_probe
from .potential import capacity_sequence, classify, green_alpha_sweep, green_estimate, monopole_solve
from .reporting import RunReport, emit_report, render_figures
from .rngstream import RNG_VERSION
from .walk import WalkConfig, bridge_residual, green_series, simulate
from . import forms, verification


def _field_spec(text: str | None):
    if text is None:
        return None
    form, _, value = text.partition(":")
    if form not in ("const", "pow") or not value:
        raise InputError(f"bad field spec {text!r} (use const:<v> or pow:<gamma>)")
    return (form, float(value))


def _parse_radii(text: str | None):
    if text is None:
        return None
    radii = [int(t) for t in text.split(",") if t]
    return radii


def _default_root(g):
    if g.kind == "lattice":
        return tuple([0] * g.params["d"])
    if g.kind == "regular_tree":
        return 1
    if g.kind == "birth_death":
        return 0
    if g.vertices:
        return g.vertices[0]
    raise InputError("no default root for this graph; pass --root")


def _build_graph(args):
    g = from_spec(args.graph, _field_spec(args.measure), _field_spec(args.potential))
    root = g.vertex_of(args.root) if args.root is not None else _default_root(g)
    return g, root


def _build_exhaustion(g, root, args, settings):
    radii = _parse_radii(args.radii)
    if radii is None:
        radii = auto_radii(g, root, settings)
    return exhaust(g, root, radii, shape=args.shape)


def _settings_from(args) -> Settings:
    overrides = {
        "direct_threshold": getattr(args, "direct_threshold", None),
        "solve_tol": getattr(args, "solve_tol", None),
        "window_cap": getattr(args, "window_cap", None),
        "threads": getattr(args, "threads", None),
    }
    return load_settings(getattr(args, "config", None), overrides)


def _base_config(args, g, root, settings: Settings, **extra) -> dict:
    cfg = {
        "graph": g.spec_string(),
        "measure": g.params.get("measure", "default"),
        "potential": g.params.get("potential", "default"),
        "root": g.key_of(root),
        "shape": args.shape,
        "seed": args.seed,
        "settings": settings.as_dict(),
    }
    cfg.update(extra)
    return cfg


def _finish(report: RunReport, args, exit_code: int = 0) -> int:
    if args.no_timings:
        report.timings = None
    sys.stdout.write(emit_report(report, args.format))
    if args.plot_dir:
        render_figures(report, args.plot_dir)
    return exit_code


# ---------------------------------------------------------------------------
# subcommands


def _cmd_classify(args) -> int:
    settings = _settings_from(args)
    g, root = _build_graph(args)
    t0 = time.perf_counter()
    ex = _build_exhaustion(g, root, args, settings)
    rep = classify(g, root, ex, settings=settings, measure_check=not args.no_measure_check)
    out = RunReport("classify", _base_config(args, g, root, settings, radii=list(ex.radii)))
    out.verdicts["classification"] = rep.verdict
    out.add_limit("capacity", rep.evidence["capacity"])
    out.add_limit("green_diagonal", rep.evidence["green_diagonal"])
    out.notes.update(rep.notes)
    out.timings = {"total_s": time.perf_counter() - t0}
    code = 1 if (args.strict and rep.verdict == "inconclusive") else 0
    return _finish(out, args, code)


def _cmd_capacity(args) -> int:
    settings = _settings_from(args)
    g, root = _build_graph(args)
    t0 = time.perf_counter()
    ex = _build_exhaustion(g, root, args, settings)
    rep = capacity_sequence(g, root, ex, settings=settings)
    out = RunReport("capacity", _base_config(args, g, root, settings, radii=list(ex.radii)))
    out.add_limit("capacity", rep)
    out.verdicts["capacity"] = rep.verdict
    out.timings = {"total_s": time.perf_counter() - t0}
    code = 1 if (args.strict and rep.verdict == "undetermined") else 0
    return _finish(out, args, code)


def _cmd_green(args) -> int:
    settings = _settings_from(args)
    g, root = _build_graph(args)
    x = g.vertex_of(args.x) if args.x else root
    y = g.vertex_of(args.y) if args.y else root
    t0 = time.perf_counter()
    ex = _build_exhaustion(g, root, args, settings)
    rep = green_estimate(g, x, y, ex, settings=settings)
    sweep = green_alpha_sweep(g, x, y, ex, settings=settings)
    out = RunReport(
        "green",
        _base_config(args, g, root, settings, radii=list(ex.radii), x=g.key_of(x), y=g.key_of(y)),
    )
    out.add_limit("green", rep)
    out.add_sequence(
        "green_shift_sweep",
        range(1, len(sweep.values) + 1),
        sweep.values,
        alphas=sweep.extra["alphas"],
        verdict=sweep.verdict,
    )
    out.verdicts["green"] = rep.verdict
    out.timings = {"total_s": time.perf_counter() - t0}
    code = 1 if (args.strict and rep.verdict == "undetermined") else 0
    return _finish(out, args, code)


def _cmd_monopole(args) -> int:
    settings = _settings_from(args)
    g, root = _build_graph(args)
    w = g.vertex_of(args.w) if args.w else root
    t0 = time.perf_counter()
    ex = _build_exhaustion(g, root, args, settings)
    solutions, rep = monopole_solve(g, w, ex, settings=settings)
    out = RunReport(
        "monopole", _base_config(args, g, root, settings, radii=list(ex.radii), w=g.key_of(w))
    )
    out.add_limit("monopole_energy", rep)
    out.verdicts["monopole_energy"] = rep.verdict
    from .forms import superharmonic_residuals

    violations = superharmonic_residuals(g, solutions[-1], ex.window(len(ex) - 1))
    out.notes["superharmonic_violations"] = len(
        [v for v in violations if g.key_of(v[0]) != g.key_of(w)]
    )
    out.timings = {"total_s": time.perf_counter() - t0}
    code = 1 if (args.strict and rep.verdict == "undetermined") else 0
    return _finish(out, args, code)


def _cmd_heatmass(args) -> int:
    settings = _settings_from(args)
    g, root = _build_graph(args)
    probes = [g.vertex_of(k) for k in args.probes.split(",")] if args.probes else None
    t0 = time.perf_counter()
    ex = _build_exhaustion(g, root, args, settings)
    rep = completeness_probe(g, ex, probes=probes, settings=settings)
    out = RunReport("heatmass", _base_config(args, g, root, settings, radii=list(ex.radii)))
    for key, values in rep.mass.items():
        out.add_sequence(f"heat_mass[{key}]", ex.radii, values, defect=rep.defect[key])
    out.verdicts["completeness"] = rep.verdict
    out.notes["defect"] = rep.defect
    out.timings = {"total_s": time.perf_counter() - t0}
    code = 1 if (args.strict and rep.verdict == "inconclusive") else 0
    return _finish(out, args, code)


def _cmd_walk(args) -> int:
    settings = _settings_from(args)
    g, root = _build_graph(args)
    t0 = time.perf_counter()
    ex = exhaust(g, root, [args.radius], shape=args.shape)
    op = ex.operator(0)
    cfg = WalkConfig(start=root, steps=args.steps, trials=args.trials, seed=args.seed)
    res = simulate(op, cfg, settings=settings)
    partials, settled = green_series(op, root, root, max_steps=args.steps, settings=settings)
    series_visits = float(partials[-1]) * (op.bsum + op.c)[op.index_of(root)]
    out = RunReport(
        "walk",
        _base_config(
            args, g, root, settings,
            radius=args.radius, trials=args.trials, steps=args.steps,
            rng_version=RNG_VERSION,
        ),
    )
    stats = res.probe_stats[g.key_of(root)]
    out.verdicts["visits_match_series"] = str(
        abs(stats["mean"] - series_visits) <= 3.0 * stats["halfwidth_95"]
    )
    out.notes.update(
        {
            "mean_visits_at_root": stats["mean"],
            "halfwidth_95": stats["halfwidth_95"],
            "series_expected_visits": series_visits,
            "series_settled": settled,
            "absorbed_fraction": res.absorbed_fraction,
            "mean_lifetime": res.mean_lifetime,
        }
    )
    out.add_sequence(
        "visit_series_partial_sums",
        range(len(partials)),
        partials,
    )
    out.timings = {"total_s": time.perf_counter() - t0}
    return _finish(out, args)


def _cmd_bridge(args) -> int:
    settings = _settings_from(args)
    g, root = _build_graph(args)
    x = g.vertex_of(args.x) if args.x else root
    y = g.vertex_of(args.y) if args.y else root
    t0 = time.perf_counter()
    ex = exhaust(g, root, [args.radius], shape=args.shape)
    op = ex.operator(0)
    res = bridge_residual(op, x, y, settings=settings)
    out = RunReport(
        "bridge",
        _base_config(
            args, g, root, settings, radius=args.radius, x=g.key_of(x), y=g.key_of(y)
        ),
    )
    out.verdicts["bridge_within_tolerance"] = str(res["residual"] <= 1e-6)
    out.notes.update(res)
    out.timings = {"total_s": time.perf_counter() - t0}
    code = 0 if res["residual"] <= 1e-6 else 3
    return _finish(out, args, code)


def _cmd_boundary(args) -> int:
    settings = _settings_from(args)
    g, root = _build_graph(args)
    t0 = time.perf_counter()
    ex = _build_exhaustion(g, root, args, settings)
    kind, _, key = args.v.partition(":")
    if kind == "delta":
        v = GraphFunction.delta(g.vertex_of(key or g.key_of(root)))
    elif kind == "monopole":
        w = g.vertex_of(key or g.key_of(root))
        op = ex.operator(len(ex) - 1)
        sol = solve_resolvent(op, 0.0, {w: 1.0}, settings=settings)
        v = op.as_dict(sol)
    else:
        raise InputError(f"bad --v spec {args.v!r} (use delta:<key> or monopole:<key>)")
    ukind, _, uval = args.u.partition(":")
    if ukind != "const":
        raise InputError(f"bad --u spec {args.u!r} (use const:<value>)")
    u = float(uval or 1.0)
    entries = forms.boundary_term_sequence(g, u, v, ex)
    out = RunReport(
        "boundary",
        _base_config(args, g, root, settings, radii=list(ex.radii), u=args.u, v=args.v),
    )
    out.add_sequence("boundary_term", ex.radii, entries)
    out.timings = {"total_s": time.perf_counter() - t0}
    return _finish(out, args)


def _cmd_verify(args) -> int:
    settings = _settings_from(args)
    t0 = time.perf_counter()
    results = verification.run_all(seed=args.seed, scale=args.scale, settings=settings)
    out = RunReport(
        "verify",
        {"seed": args.seed, "scale": args.scale, "settings": settings.as_dict()},
    )
    failed = [r for r in results if not r.passed]
    out.verdicts["all_passed"] = str(not failed)
    for r in results:
        out.notes[r.name] = r.line()
    out.timings = {"total_s": time.perf_counter() - t0}
    if args.format == "human":
        for r in results:
            sys.stdout.write(r.line() + "\n")
        sys.stdout.write(f"{len(results) - len(failed)}/{len(results)} groups passed\n")
        if args.plot_dir:
            render_figures(out, args.plot_dir)
        return 0 if not failed else 1
    return _finish(out, args, 0 if not failed else 1)


def _cmd_gen(args) -> int:
    from .graphs import serialize

    g, root = _build_graph(args)
    ex = exhaust(g, root, [args.radius], shape=args.shape)
    text = serialize(g, ex.window(0))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphpotential",
        description="Potential-theoretic invariants of weighted graphs via finite exhaustions",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "csv", "human"], default="human")
    common.add_argument("--no-timings", action="store_true", help="omit wall-clock timings from reports")
    common.add_argument("--strict", action="store_true", help="exit 1 on inconclusive verdicts")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--plot-dir", default=None, help="render figures and CSV into this directory")
    common.add_argument("--config", default=None, help="JSON settings file (flags win)")
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--direct-threshold", type=int, default=None, dest="direct_threshold")
    common.add_argument("--solve-tol", type=float, default=None, dest="solve_tol")
    common.add_argument("--window-cap", type=int, default=None, dest="window_cap")

    graphopts = argparse.ArgumentParser(add_help=False)
    graphopts.add_argument("--graph", required=True, help="lattice:<d> | tree:<k> | bd:<beta> | file:<path>")
    graphopts.add_argument("--measure", default=None, help="const:<v> or pow:<gamma> (birth-death)")
    graphopts.add_argument("--potential", default=None, help="const:<v> or pow:<gamma> (birth-death)")
    graphopts.add_argument("--root", default=None, help="vertex key (family default: origin/root/0)")
    graphopts.add_argument("--radii", default=None, help="comma-separated window radii")
    graphopts.add_argument("--shape", choices=["hop", "euclidean"], default="hop")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[common, graphopts], help="recurrent/transient verdict")
    p.add_argument("--no-measure-check", action="store_true")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("capacity", parents=[common, graphopts], help="window capacity sequence")
    p.set_defaults(func=_cmd_capacity)

    p = sub.add_parser("green", parents=[common, graphopts], help="window Green values")
    p.add_argument("--x", default=None)
    p.add_argument("--y", default=None)
    p.set_defaults(func=_cmd_green)

    p = sub.add_parser("monopole", parents=[common, graphopts], help="monopole energies")
    p.add_argument("--w", default=None, help="source vertex key")
    p.set_defaults(func=_cmd_monopole)

    p = sub.add_parser("heatmass", parents=[common, graphopts], help="stochastic completeness probe")
    p.add_argument("--probes", default=None, help="comma-separated vertex keys")
    p.set_defaults(func=_cmd_heatmass)

    p = sub.add_parser("walk", parents=[common, graphopts], help="Monte Carlo walk + visit series")
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--steps", type=int, default=1000)
    p.set_defaults(func=_cmd_walk)

    p = sub.add_parser("bridge", parents=[common, graphopts], help="discrete vs continuous Green values")
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--x", default=None)
    p.add_argument("--y", default=None)
    p.set_defaults(func=_cmd_bridge)

    p = sub.add_parser("boundary", parents=[common, graphopts], help="window boundary term sequence")
    p.add_argument("--u", default="const:1")
    p.add_argument("--v", default="delta:")
    p.set_defaults(func=_cmd_boundary)

    p = sub.add_parser("verify", parents=[common], help="run all identity suites")
    p.add_argument("--scale", type=float, default=1.0, help="multiplier on randomized instance counts")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("gen", parents=[common, graphopts], help="emit an edge-list truncation")
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_gen)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    fmt = getattr(args, "format", "human")
    try:
        return args.func(args)
    except InputError as exc:
        _emit_error(fmt, exc)
        return 2
    except SolverError as exc:
        _emit_error(fmt, exc)
        return 3
    except GraphPotentialError as exc:
        _emit_error(fmt, exc)
        return 2
    except (ValueError, OSError) as exc:
        _emit_error(fmt, exc)
        return 2


def _emit_error(fmt: str, exc: Exception) -> None:
    if fmt == "json":
        sys.stdout.write(
            json.dumps(
                {"schema_version": "1", "error": {"type": type(exc).__name__, "message": str(exc)}},
                sort_keys=True,
            )
            + "\n"
        )
    else:
        sys.stderr.write(f"error [{type(exc).__name__}]: {exc}\n")


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
