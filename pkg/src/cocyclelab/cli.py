"""Command line laboratory: one subcommand per standard experiment.

Every run emits a single JSON report (stdout or --out) whose config and
results payloads are bitwise reproducible for a fixed seed, whatever the
worker count.  Exit codes: 0 success, 1 bad configuration, 2 numeric or
convergence failure, 3 an embedded cross-check failed.
"""

from __future__ import annotations

import argparse
import json
import math
import statistics
import sys
from dataclasses import replace

from . import __version__
from .circle import ExpandingMap, BackwardItinerary, periodic_orbits
from .cocycle import (
    DEFAULT_SEED,
    CocycleSpec,
    TwistTerm,
    c0_distance,
    evaluate,
    full_twist_spec,
    lyapunov_furstenberg,
    lyapunov_norm_growth,
    perturb,
    spec_from_json,
    spec_to_json,
    u_bunching_check,
)
from .errors import (
    HolonomyDivergedError,
    LeafMismatchError,
    NoHyperbolicityError,
    NumericOverflowError,
)
from .holonomy import holonomy_equivariance_residual, u_holonomy
from .natext import build_realization, conjugacy_residual
from .reports import dump_report, make_report, utc_now, write_csv
from .sections import (
    degree_obstruction,
    section_consistency_search,
    stable_direction_loop,
    twist_degree,
)
from .sl2 import Mat2, is_hyperbolic

CROSS_CHECK_FLOOR = 1e-9

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2
EXIT_CROSS_CHECK = 3


class _Parser(argparse.ArgumentParser):
    # usage problems are configuration problems: exit 1, not argparse's 2
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


class ConfigError(Exception):
    pass


DEFAULTS: dict[str, dict] = {
    "lyap": {"steps": 100_000, "samples": 32, "direction_steps": 256,
             "method": "both", "burn_in": None},
    "robustness": {"epsilon": 0.05, "trials": 200, "steps": 10_000,
                   "samples": 8, "burn_in": None, "c0_grid": 2048},
    "continuity": {"steps": 30_000, "samples": 16, "j_values": [10, 30, 100, 300],
                   "burn_in": None, "c0_grid": 2048},
    "scan-periodic": {"max_period": 5, "tol": 1e-9},
    "holonomy": {"pairs": 20, "tol": 1e-8, "max_depth": 60},
    "bunching": {"grid": 4096, "theta": None},
    "degree": {"grid": 4096},
    "section": {"grid": 4096, "iterations": 40, "direction_steps": 256, "restarts": 4},
    "natext": {"grid": 4096, "samples": 200, "depth": 20},
}

COMMON_DEFAULTS = {"k": 8, "seed": DEFAULT_SEED, "workers": 1}


def build_parser() -> _Parser:
    p = _Parser(prog="cocyclelab", description=__doc__)
    p.add_argument("--version", action="version", version=f"cocyclelab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file of settings; flags override it")
        sp.add_argument("--spec", help="JSON file describing the cocycle "
                        "(default: diag(2, 1/2) with a full twist)")
        sp.add_argument("--k", type=int, help="degree of the base map x -> kx mod 1")
        sp.add_argument("--seed", type=int, help="root seed for all randomness")
        sp.add_argument("--workers", type=int, help="sampling threads; results do not depend on this")
        sp.add_argument("--out", help="write the JSON report here instead of stdout")
        sp.add_argument("--csv", help="also write the tabular results as CSV")

    sp = sub.add_parser("lyap", help="Lyapunov exponent, two independent estimators")
    common(sp)
    sp.add_argument("--steps", type=int, help="orbit steps per norm-growth sample")
    sp.add_argument("--samples", type=int, help="independent samples per estimator")
    sp.add_argument("--direction-steps", dest="direction_steps", type=int,
                    help="product length fixing the stable direction")
    sp.add_argument("--burn-in", dest="burn_in", type=int,
                    help="alignment steps before averaging begins")
    sp.add_argument("--method", choices=["both", "norm-growth", "furstenberg"])

    sp = sub.add_parser("robustness", help="exponent under many C0-small perturbations")
    common(sp)
    sp.add_argument("--epsilon", type=float, help="perturbation size")
    sp.add_argument("--trials", type=int, help="number of perturbations")
    sp.add_argument("--steps", type=int)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--burn-in", dest="burn_in", type=int)

    sp = sub.add_parser("continuity", help="exponent along a C0-converging sequence")
    common(sp)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--burn-in", dest="burn_in", type=int)
    sp.add_argument("--j-values", dest="j_values",
                    help="comma separated twist denominators, e.g. 10,30,100,300")

    sp = sub.add_parser("scan-periodic", help="hyperbolicity of periodic orbit products")
    common(sp)
    sp.add_argument("--max-period", dest="max_period", type=int)
    sp.add_argument("--tol", type=float, help="margin in |trace| > 2 + tol")

    sp = sub.add_parser("holonomy", help="u-holonomies over random unstable pairs")
    common(sp)
    sp.add_argument("--pairs", type=int, help="number of random pairs")
    sp.add_argument("--tol", type=float, help="Cauchy stopping tolerance")
    sp.add_argument("--max-depth", dest="max_depth", type=int)

    sp = sub.add_parser("bunching", help="certified fiber-bunching inequality")
    common(sp)
    sp.add_argument("--grid", type=int)
    sp.add_argument("--theta", type=float, help="Holder exponent (default: from the spec)")

    sp = sub.add_parser("degree", help="twist degree and the section obstruction")
    common(sp)
    sp.add_argument("--grid", type=int)

    sp = sub.add_parser("section", help="search for an invariant projective section")
    common(sp)
    sp.add_argument("--grid", type=int)
    sp.add_argument("--iterations", type=int)
    sp.add_argument("--direction-steps", dest="direction_steps", type=int)
    sp.add_argument("--restarts", type=int, help="independent jittered searches")

    sp = sub.add_parser("natext", help="smooth natural-extension realization checks")
    common(sp)
    sp.add_argument("--grid", type=int, help="grid certifying the separation constant")
    sp.add_argument("--samples", type=int, help="random itineraries for the conjugacy check")
    sp.add_argument("--depth", type=int, help="itinerary depth for the conjugacy check")

    return p


def resolve_config(args: argparse.Namespace) -> tuple[dict, CocycleSpec, ExpandingMap]:
    """defaults <- config file <- explicit flags, plus the resolved spec."""
    cmd = args.command
    cfg = dict(COMMON_DEFAULTS)
    cfg.update(DEFAULTS[cmd])

    file_cfg = {}
    if args.config:
        try:
            with open(args.config) as f:
                file_cfg = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config file: {e}") from e
        unknown = set(file_cfg) - set(cfg) - {"spec"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update({k: v for k, v in file_cfg.items() if k != "spec"})

    for key in cfg:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val

    if isinstance(cfg.get("j_values"), str):
        try:
            cfg["j_values"] = [int(t) for t in cfg["j_values"].split(",") if t]
        except ValueError as e:
            raise ConfigError(f"bad --j-values: {e}") from e

    spec_data = None
    if args.spec:
        try:
            with open(args.spec) as f:
                spec_data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read spec file: {e}") from e
    elif "spec" in file_cfg:
        spec_data = file_cfg["spec"]

    try:
        if spec_data is None:
            spec = full_twist_spec(Mat2.diagonal(2.0))
        else:
            spec = spec_from_json(spec_data)
        map_ = ExpandingMap(int(cfg["k"]))
    except ValueError as e:
        raise ConfigError(str(e)) from e

    cfg["spec"] = spec_to_json(spec)
    cfg["command"] = cmd
    return cfg, spec, map_


def _estimate_block(est) -> dict:
    return est.to_dict()


def cmd_lyap(cfg, spec, map_):
    method = cfg["method"]
    estimates = {}
    if method in ("both", "norm-growth"):
        est = lyapunov_norm_growth(spec, map_, cfg["steps"], cfg["samples"],
                                   seed=(cfg["seed"], 0), workers=cfg["workers"],
                                   burn_in=cfg["burn_in"])
        estimates["norm_growth"] = _estimate_block(est)
    if method in ("both", "furstenberg"):
        est = lyapunov_furstenberg(spec, map_, cfg["direction_steps"], cfg["samples"],
                                   seed=(cfg["seed"], 1), workers=cfg["workers"])
        estimates["furstenberg"] = _estimate_block(est)
    results = {"estimates": estimates}
    code = EXIT_OK
    if method == "both":
        ng, fb = estimates["norm_growth"], estimates["furstenberg"]
        delta = abs(ng["value"] - fb["value"])
        tol = max(3.0 * math.hypot(ng["std_error"], fb["std_error"]), CROSS_CHECK_FLOOR)
        ok = delta <= tol
        results["cross_check"] = {"delta": delta, "tolerance": tol, "pass": ok}
        if not ok:
            code = EXIT_CROSS_CHECK
    rows = [[m, e["value"], e["std_error"], e["n_steps"], e["n_samples"]]
            for m, e in sorted(estimates.items())]
    csv = (["method", "value", "std_error", "n_steps", "n_samples"], rows)
    return results, code, csv


def cmd_robustness(cfg, spec, map_):
    base = lyapunov_norm_growth(spec, map_, cfg["steps"], cfg["samples"],
                                seed=(cfg["seed"], 0), workers=cfg["workers"],
                                burn_in=cfg["burn_in"])
    threshold = 0.5 * base.value
    trials = []
    values = []
    for t in range(cfg["trials"]):
        pspec = perturb(spec, cfg["epsilon"], seed=(cfg["seed"], t + 1, 0))
        gap = c0_distance(spec, pspec, grid_n=cfg["c0_grid"])
        est = lyapunov_norm_growth(pspec, map_, cfg["steps"], cfg["samples"],
                                   seed=(cfg["seed"], t + 1, 1), workers=cfg["workers"],
                                   burn_in=cfg["burn_in"])
        values.append(est.value)
        trials.append({"trial": t, "c0_grid": gap.grid, "c0_certified": gap.certified,
                       "value": est.value, "std_error": est.std_error})
    n_below = sum(1 for v in values if v < threshold)
    results = {
        "baseline": _estimate_block(base),
        "threshold": threshold,
        "trials": trials,
        "summary": {
            "min": min(values),
            "median": statistics.median(values),
            "max": max(values),
            "n_below_threshold": n_below,
            "pass": n_below == 0,
        },
    }
    rows = [[t["trial"], t["c0_grid"], t["c0_certified"], t["value"], t["std_error"]]
            for t in trials]
    csv = (["trial", "c0_grid", "c0_certified", "value", "std_error"], rows)
    return results, EXIT_OK if n_below == 0 else EXIT_CROSS_CHECK, csv


def _spearman(xs: list[float], ys: list[float]) -> float:
    def ranks(vs):
        order = sorted(range(len(vs)), key=lambda i: vs[i])
        r = [0.0] * len(vs)
        i = 0
        while i < len(order):
            j = i
            while j + 1 < len(order) and vs[order[j + 1]] == vs[order[i]]:
                j += 1
            avg = (i + j) / 2.0
            for t in range(i, j + 1):
                r[order[t]] = avg
            i = j + 1
        return r

    rx, ry = ranks(xs), ranks(ys)
    mx = sum(rx) / len(rx)
    my = sum(ry) / len(ry)
    num = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    dx = math.sqrt(sum((a - mx) ** 2 for a in rx))
    dy = math.sqrt(sum((b - my) ** 2 for b in ry))
    if dx == 0.0 or dy == 0.0:
        return 0.0
    return num / (dx * dy)


def cmd_continuity(cfg, spec, map_):
    base = lyapunov_norm_growth(spec, map_, cfg["steps"], cfg["samples"],
                                seed=(cfg["seed"], 0), workers=cfg["workers"],
                                burn_in=cfg["burn_in"])
    rows = []
    for idx, j in enumerate(cfg["j_values"]):
        if j < 1:
            raise ConfigError("j values must be positive integers")
        jspec = replace(spec, terms=spec.terms + (TwistTerm(1, 1.0 / j, 0.0),))
        gap = c0_distance(spec, jspec, grid_n=cfg["c0_grid"])
        est = lyapunov_norm_growth(jspec, map_, cfg["steps"], cfg["samples"],
                                   seed=(cfg["seed"], 1, idx), workers=cfg["workers"],
                                   burn_in=cfg["burn_in"])
        rows.append({"j": j, "c0_certified": gap.certified, "value": est.value,
                     "std_error": est.std_error, "delta": abs(est.value - base.value)})
    sp = _spearman([r["c0_certified"] for r in rows], [r["delta"] for r in rows])
    ok = sp > 0.0
    results = {"baseline": _estimate_block(base), "rows": rows,
               "trend": {"spearman": sp, "pass": ok}}
    csv = (["j", "c0_certified", "value", "std_error", "delta"],
           [[r["j"], r["c0_certified"], r["value"], r["std_error"], r["delta"]] for r in rows])
    return results, EXIT_OK if ok else EXIT_CROSS_CHECK, csv


def cmd_scan_periodic(cfg, spec, map_):
    orbits = periodic_orbits(map_, cfg["max_period"])
    table = []
    witness = None
    n_hyp = 0
    for orbit in orbits:
        m = Mat2.identity()
        for p in orbit:
            m = evaluate(spec, p.as_float()) @ m
        hyp = is_hyperbolic(m, cfg["tol"])
        n_hyp += hyp
        entry = {"period": orbit[0].period, "representative": str(orbit[0].x),
                 "trace": m.trace(), "hyperbolic": hyp}
        table.append(entry)
        if hyp and witness is None:
            witness = dict(entry, x_float=orbit[0].as_float())
    results = {
        "max_period": cfg["max_period"],
        "n_points": sum(len(o) for o in orbits),
        "n_orbits": len(orbits),
        "n_hyperbolic": n_hyp,
        "witness": witness,
        "orbits": table[:500],
        "orbits_truncated": len(table) > 500,
    }
    csv = (["period", "representative", "trace", "hyperbolic"],
           [[e["period"], e["representative"], e["trace"], int(e["hyperbolic"])] for e in table])
    return results, EXIT_OK, csv


def cmd_holonomy(cfg, spec, map_):
    from .cocycle import rng_from

    k = map_.k
    pairs = []
    n_conv = 0
    max_equiv = None
    max_resid = 0.0
    for i in range(cfg["pairs"]):
        rng = rng_from(cfg["seed"], i)
        cell = int(rng.integers(0, k))
        u = 0.05 + 0.65 * rng.random()
        x0 = (cell + u) / k
        offset = (1.0 + 3.0 * rng.random()) / (8.0 * k * k)
        digits = tuple(int(d) for d in rng.integers(0, k, size=cfg["max_depth"]))
        x_it = BackwardItinerary(k, x0, digits)
        y_it = BackwardItinerary(k, x0 + offset, digits)
        res = u_holonomy(spec, map_, x_it, y_it, tol=cfg["tol"], max_depth=cfg["max_depth"])
        entry = {"pair": i, "x0": x0, "y0": x0 + offset,
                 "converged": res.converged, "depth_used": res.depth_used,
                 "cauchy_residual": res.cauchy_residual,
                 "equivariance_residual": None}
        if res.converged:
            n_conv += 1
            try:
                eq = holonomy_equivariance_residual(spec, map_, x_it, y_it,
                                                    tol=cfg["tol"], max_depth=cfg["max_depth"])
                entry["equivariance_residual"] = eq
                max_equiv = eq if max_equiv is None else max(max_equiv, eq)
            except (HolonomyDivergedError, LeafMismatchError):
                pass
        max_resid = max(max_resid, res.cauchy_residual)
        pairs.append(entry)
    results = {
        "pairs": pairs,
        "summary": {"n_pairs": len(pairs), "n_converged": n_conv,
                    "max_cauchy_residual": max_resid,
                    "max_equivariance_residual": max_equiv},
    }
    rows = [[p["pair"], p["x0"], p["y0"], int(p["converged"]), p["depth_used"],
             p["cauchy_residual"], p["equivariance_residual"]] for p in pairs]
    csv = (["pair", "x0", "y0", "converged", "depth_used", "cauchy_residual",
            "equivariance_residual"], rows)
    return results, EXIT_OK, csv


def cmd_bunching(cfg, spec, map_):
    rep = u_bunching_check(spec, map_, theta=cfg["theta"], grid_n=cfg["grid"])
    results = {"k": map_.k, "sigma": map_.sigma, "theta": rep.theta,
               "bunched": rep.bunched, "margin": rep.margin,
               "sup_certified": rep.sup_certified, "sup_grid": rep.sup_grid}
    csv = (["k", "theta", "bunched", "margin", "sup_certified", "sup_grid"],
           [[map_.k, rep.theta, int(rep.bunched), rep.margin, rep.sup_certified, rep.sup_grid]])
    return results, EXIT_OK, csv


def cmd_degree(cfg, spec, map_):
    d = twist_degree(spec, grid_n=cfg["grid"])
    rep = degree_obstruction(map_.k, d)
    results = {"k": map_.k, "twist_degree": d, "obstruction": rep.to_dict()}
    csv = (["k", "twist_degree", "single_solvable", "single_degree",
            "pair_solvable", "pair_degree", "obstructed"],
           [[map_.k, d, int(rep.single_section_solvable), str(rep.single_degree),
             int(rep.pair_section_solvable), str(rep.pair_degree), int(rep.obstructed)]])
    return results, EXIT_OK, csv


def cmd_section(cfg, spec, map_):
    init = stable_direction_loop(spec, map_, cfg["grid"], cfg["direction_steps"])
    runs = []
    for r in range(cfg["restarts"]):
        seed = None if r == 0 else (cfg["seed"], r)
        _, residual = section_consistency_search(
            spec, map_, grid_n=cfg["grid"], n_iterations=cfg["iterations"],
            direction_steps=cfg["direction_steps"], seed=seed, init=init)
        runs.append({"restart": r, "jittered": r > 0, "residual": residual})
    residuals = [r["residual"] for r in runs]
    d = twist_degree(spec, grid_n=cfg["grid"])
    results = {
        "runs": runs,
        "min_residual": min(residuals),
        "max_residual": max(residuals),
        "obstruction": degree_obstruction(map_.k, d).to_dict(),
    }
    csv = (["restart", "jittered", "residual"],
           [[r["restart"], int(r["jittered"]), r["residual"]] for r in runs])
    return results, EXIT_OK, csv


def cmd_natext(cfg, spec, map_):
    from .cocycle import rng_from
    from .natext import aligned_anchor

    real = build_realization(map_, grid_n=cfg["grid"])
    depth = cfg["depth"]
    max_resid = 0.0
    bound = real.lam**depth
    for i in range(cfg["samples"]):
        rng = rng_from(cfg["seed"], i)
        x0 = aligned_anchor(real, rng)
        digits = tuple(int(d) for d in rng.integers(0, map_.k, size=depth))
        it = BackwardItinerary(map_.k, x0, digits)
        resid, b = conjugacy_residual(real, it)
        max_resid = max(max_resid, resid)
    ok = max_resid <= bound
    results = {
        "k": map_.k,
        "n_charts": real.n_charts,
        "ambient_dim": real.ambient_dim,
        "delta": real.delta,
        "lambda": real.lam,
        "lambda_bound_ok": real.lam < real.delta / (4 * real.n_charts),
        "conjugacy": {"n_samples": cfg["samples"], "depth": depth,
                      "max_residual": max_resid, "bound": bound, "pass": ok},
    }
    csv = (["k", "n_charts", "delta", "lambda", "conjugacy_max_residual", "bound"],
           [[map_.k, real.n_charts, real.delta, real.lam, max_resid, bound]])
    return results, EXIT_OK if ok else EXIT_CROSS_CHECK, csv


RUNNERS = {
    "lyap": cmd_lyap,
    "robustness": cmd_robustness,
    "continuity": cmd_continuity,
    "scan-periodic": cmd_scan_periodic,
    "holonomy": cmd_holonomy,
    "bunching": cmd_bunching,
    "degree": cmd_degree,
    "section": cmd_section,
    "natext": cmd_natext,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg, spec, map_ = resolve_config(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    started = utc_now()
    try:
        results, code, csv = RUNNERS[args.command](cfg, spec, map_)
    except (NumericOverflowError, NoHyperbolicityError, HolonomyDivergedError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError, OverflowError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    # thread count is execution detail, not experiment identity: reports
    # from different --workers must be byte-identical
    report_cfg = {key: val for key, val in cfg.items() if key != "workers"}
    report = make_report(args.command, report_cfg, results, started)
    dump_report(report, args.out)
    if args.csv:
        header, rows = csv
        write_csv(args.csv, header, rows)
    return code


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
