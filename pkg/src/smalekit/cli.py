"""Command-line entry point.

Subcommands: exponents, connectivity, pinch, metric, hypgraph, limits,
mather, codim1, selfcheck.  Reports are UTF-8 JSON (stdout or --out);
floats are rendered with 12 significant digits; results are reproducible
bit-for-bit for a fixed (config, seed) with timing excluded.

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import (
    __version__,
    exponents,
    hypgraph,
    kernel_backend,
    leafgraph,
    linear,
    logscale,
    metrics,
    models,
    selfcheck,
)
from .errors import NumericalError, SmaleKitError, ValidationError

DEFAULT_CONFIG = {
    "system": None,
    "logscale": {"epsilon0": 0.05, "n_max": 40},
    "sampling": {"window": 0.2, "spacing": None, "depth": 4},
    "exponents": {"n_lo": 2, "n_hi": 12, "anchor": 0, "min_pairs": 20, "n_pairs": 24},
    "seed": 0,
}

_KNOWN_KEYS = set(DEFAULT_CONFIG)


def _load_config(path):
    if path is None:
        return json.loads(json.dumps(DEFAULT_CONFIG))
    with open(path, "r", encoding="utf-8") as fh:
        user = json.load(fh)
    if not isinstance(user, dict):
        raise ValidationError("config must be a JSON object")
    unknown = sorted(set(user) - _KNOWN_KEYS)
    if unknown:
        raise ValidationError(f"unknown config keys: {unknown}")
    cfg = json.loads(json.dumps(DEFAULT_CONFIG))
    for key, value in user.items():
        if isinstance(value, dict) and isinstance(cfg.get(key), dict):
            cfg[key].update(value)
        else:
            cfg[key] = value
    return cfg


def _require_system(cfg, args):
    desc = None
    if getattr(args, "system", None):
        desc = args.system
    elif cfg.get("system"):
        desc = cfg["system"]
    if desc is None:
        raise ValidationError("missing keys: system (pass --system FILE or config)")
    system = models.load_system(desc)
    if isinstance(desc, str):
        with open(desc, "r", encoding="utf-8") as fh:
            cfg["system"] = json.load(fh)
    return system


def _logscale_config(cfg):
    ls = cfg["logscale"]
    missing = [k for k in ("epsilon0", "n_max") if k not in ls]
    if missing:
        raise ValidationError(f"missing keys: logscale.{missing}")
    return logscale.LogScaleConfig(epsilon0=float(ls["epsilon0"]),
                                   n_max=int(ls["n_max"]))


def _pick(flag, fallback):
    return fallback if flag is None else flag


def _exp_config(cfg, args):
    sampling = cfg["sampling"]
    exp = cfg["exponents"]
    spacing = _pick(getattr(args, "spacing", None), sampling["spacing"])
    kwargs = dict(
        logscale=_logscale_config(cfg),
        window=float(_pick(getattr(args, "window", None), sampling["window"])),
        spacing=None if spacing is None else float(spacing),
        n_lo=int(_pick(getattr(args, "n_lo", None), exp["n_lo"])),
        n_hi=int(_pick(getattr(args, "n_hi", None), exp["n_hi"])),
        anchor=int(exp.get("anchor", 0)),
        min_pairs=int(exp.get("min_pairs", 20)),
        n_pairs=int(exp.get("n_pairs", 24)),
        depth=int(sampling.get("depth", 4)),
    )
    return exponents.ExponentConfig(**kwargs)


def _round_floats(obj):
    if isinstance(obj, float):
        if math.isinf(obj) or math.isnan(obj):
            return str(obj)
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, np.generic):
        return _round_floats(obj.item())
    if isinstance(obj, np.ndarray):
        return _round_floats(obj.tolist())
    return obj


def _emit(report, args):
    text = json.dumps(_round_floats(report), indent=2)
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _report(command, cfg, results, started, args=None):
    if args is not None:
        skip = {"func", "command", "config", "out", "system"}
        cfg = dict(cfg)
        cfg["command_options"] = {
            k: v for k, v in sorted(vars(args).items()) if k not in skip
        }
    return {
        "command": command,
        "config": cfg,
        "results": results,
        "timing": {"seconds": time.time() - started},
        "version": __version__,
        "kernel_backend": kernel_backend,
    }


# ---------------------------------------------------------------------------
# commands


def cmd_exponents(args):
    started = time.time()
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    system = _require_system(cfg, args)
    econf = _exp_config(cfg, args)
    sides = ["stable", "unstable"] if args.side == "both" else [args.side]

    def run_side(side):
        lower, upper, diag = exponents.critical_exponents(
            system, side, econf, seed=cfg["seed"]
        )
        return side, lower, upper, diag

    if args.threads > 1 and len(sides) > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            rows = list(pool.map(run_side, sides))
    else:
        rows = [run_side(s) for s in sides]

    results = {}
    csv_rows = []
    for side, lower, upper, diag in rows:
        results[side] = {
            "lower": lower,
            "upper": upper,
            "slopes": diag["slopes"],
            "rays": diag["rays"],
        }
        csv_rows += [(f"{side}-{pid}", n, d) for pid, n, d in diag["dn_rows"]]
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write("pair_id,n,dn\n")
            for pid, n, d in csv_rows:
                fh.write(f"{pid},{n},{'inf' if math.isinf(d) else int(d)}\n")
    _emit(_report("exponents", cfg, results, started, args), args)
    return 0


def cmd_pinch(args):
    started = time.time()
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    system = _require_system(cfg, args)
    econf = _exp_config(cfg, args)
    report = exponents.exponent_report(system, econf, seed=cfg["seed"])
    check = exponents.pinched_check(report)
    results = {
        "a0": report.a0,
        "a1": report.a1,
        "b0": report.b0,
        "b1": report.b1,
        "spreads": report.spreads,
        "pinched_margin": check["margin"],
        "pinched": check["pinched"],
    }
    _emit(_report("pinch", cfg, results, started, args), args)
    return 0


def cmd_connectivity(args):
    started = time.time()
    cfg = _load_config(args.config)
    system = _require_system(cfg, args)
    lconf = _logscale_config(cfg)
    sampling = cfg["sampling"]
    window = _pick(args.window, sampling["window"])
    spacing = _pick(args.spacing, sampling["spacing"])
    if system.kind == "torus" and spacing is None:
        # resolve levels up to n_hi: spacing <= eps0 * rate^-n_hi / 4
        rate = exponents._ray_rate(
            system, args.side, models.leaf_directions(system, args.side)[0]
        )
        spacing = lconf.epsilon0 * rate ** (-args.n_hi) / 4
        max_pts = 200_000
        window = min(window, max_pts * spacing / 2)
    report = leafgraph.connectivity_report(
        system,
        args.side,
        lconf,
        range(args.n_lo, args.n_hi + 1),
        window=window,
        spacing=spacing,
        depth=int(_pick(args.depth, sampling.get("depth", 3))),
    )
    results = {
        "entries": [
            {**e, "diameter": ("inf" if math.isinf(e["diameter"]) else e["diameter"])}
            for e in report.entries
        ],
        "sample_size": report.sample_size,
        "method": report.method,
        "window": window,
        "spacing": spacing,
    }
    _emit(_report("connectivity", cfg, results, started, args), args)
    return 0


def cmd_metric(args):
    started = time.time()
    cfg = _load_config(args.config)
    system = _require_system(cfg, args)
    lconf = _logscale_config(cfg)
    base = models.default_base(system)
    if system.kind == "torus":
        sample = models.leaf_sample(system, base, args.side, window=args.window,
                                    spacing=args.spacing)
    else:
        sample = models.leaf_sample(system, base, args.side,
                                    depth=int(cfg["sampling"].get("depth", 4)))
    ell = logscale.ell_matrix(system, sample, args.side, lconf)
    metric = metrics.synthesize_metric(sample, ell, args.beta)
    fit = metrics.verify_sandwich(metric, ell, args.beta)
    if args.matrix_csv:
        np.savetxt(args.matrix_csv, metric.pairwise, delimiter=",")
    results = {
        "beta": args.beta,
        "points": len(sample),
        "c_lower": fit.c_lower,
        "c_upper": fit.c_upper,
        "ratio": fit.ratio,
        "violations": fit.violations,
    }
    _emit(_report("metric", cfg, results, started, args), args)
    return 0


def cmd_hypgraph(args):
    started = time.time()
    cfg = _load_config(args.config)
    if args.matrix:
        entries = [int(v) for v in args.matrix.split(",")]
        d = int(math.isqrt(len(entries)))
        if d * d != len(entries):
            raise ValidationError("--matrix needs d*d comma-separated integers")
        matrix = np.array(entries).reshape(d, d)
    else:
        system = _require_system(cfg, args)
        if system.kind != "torus":
            raise ValidationError("hypgraph needs a toral system or --matrix")
        matrix = system.matrix
    data = hypgraph.GroupData(dim=matrix.shape[0], phi=matrix,
                              gen_radius=args.s_rad, tube_radius=args.tube)
    graph = hypgraph.build_xi(data, args.levels, args.rho)
    est = hypgraph.delta_hyperbolicity(graph, n_quadruples=args.quadruples,
                                       seed=args.seed or 0)
    if args.edges_csv:
        import scipy.sparse as sp

        coo = sp.triu(graph.adjacency, k=1).tocoo()
        with open(args.edges_csv, "w", encoding="utf-8") as fh:
            fh.write("i,j\n")
            for i, j in zip(coo.row, coo.col):
                fh.write(f"{i},{j}\n")
    results = {
        "delta": est.delta,
        "quadruples_tested": est.quadruples_tested,
        "vertices": graph.n_vertices,
        "tube_points": graph.n_tube_points,
        "truncation": list(est.truncation),
        "restricted_to_component": est.restricted_to_component,
    }
    _emit(_report("hypgraph", cfg, results, started, args), args)
    return 0


def cmd_limits(args):
    started = time.time()
    cfg = _load_config(args.config)
    if args.matrix:
        entries = [int(v) for v in args.matrix.split(",")]
        d = int(math.isqrt(len(entries)))
        matrix = np.array(entries).reshape(d, d)
    else:
        system = _require_system(cfg, args)
        matrix = system.matrix
    split = linear.spectral_split(matrix)
    rng = np.random.default_rng(args.seed or cfg["seed"])
    k = split.stable_dim
    errors = []
    boundary_errors = []
    data = hypgraph.GroupData(dim=split.dim, phi=matrix, gen_radius=args.s_rad,
                              tube_radius=1.5)
    for _ in range(args.count):
        coeff = (rng.random(k) - 0.5) * 0.9
        target = split.e_plus_basis @ coeff
        expansion = linear.digit_expand(split, target, s_rad=args.s_rad, n=args.n)
        err = float(np.linalg.norm(linear.reconstruct(split, expansion, args.n) - target))
        errors.append(err)
        path = hypgraph.path_from_expansion(data, expansion)
        bpt = hypgraph.boundary_point(data, path, args.n)
        boundary_errors.append(float(np.linalg.norm(bpt - target)))
    results = {
        "targets": args.count,
        "digits": args.n,
        "max_reconstruction_error": max(errors),
        "max_boundary_error": max(boundary_errors),
    }
    _emit(_report("limits", cfg, results, started, args), args)
    return 0


def cmd_mather(args):
    started = time.time()
    cfg = _load_config(args.config)
    vals = [float(v) for v in args.bounds.split(",")]
    if len(vals) != 4:
        raise ValidationError("--bounds needs lambda1,lambda2,mu2,mu1")
    res = linear.mather_check(linear.MatherBounds(*vals))
    _emit(_report("mather", cfg, res, started, args), args)
    return 0


def cmd_codim1(args):
    started = time.time()
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    system = _require_system(cfg, args)
    econf = _exp_config(cfg, args)
    res = exponents.codim_one_check(system, side=args.side, config=econf,
                                    seed=cfg["seed"])
    lconf = _logscale_config(cfg)
    base = models.default_base(system)
    sample = models.leaf_sample(system, base, args.side, window=econf.window,
                                spacing=econf.spacing or 1e-4)
    measure = metrics.leaf_measure_check(system, sample, lconf)
    results = {
        "a0": res["a0"],
        "a1": res["a1"],
        "eta": res["eta"],
        "relative_gap": res["relative_gap"],
        "eta_gap": res["eta_gap"],
        "measure": measure,
    }
    _emit(_report("codim1", cfg, results, started, args), args)
    return 0


def cmd_selfcheck(args):
    started = time.time()
    cfg = _load_config(args.config)
    rows = selfcheck.run_selfcheck(name_filter=args.filter,
                                   seed=args.seed or cfg["seed"])
    for row in rows:
        sys.stderr.write(
            f"[{'PASS' if row['passed'] else 'FAIL'}] {row['name']}: {row['detail']}\n"
        )
    results = {"properties": rows, "all_passed": all(r["passed"] for r in rows)}
    _emit(_report("selfcheck", cfg, results, started, args), args)
    if not results["all_passed"]:
        raise NumericalError("selfcheck property failure")
    return 0


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="smalekit",
        description="hyperbolic-dynamics toolkit on concrete Smale spaces",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--system", help="system description JSON file")
        p.add_argument("--config", help="run configuration JSON file")
        p.add_argument("--out", help="write the JSON report here instead of stdout")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    p = sub.add_parser("exponents", help="estimate critical exponents")
    common(p)
    p.add_argument("--side", choices=["stable", "unstable", "both"], default="both")
    p.add_argument("--window", type=float, default=None)
    p.add_argument("--spacing", type=float, default=None)
    p.add_argument("--n-lo", dest="n_lo", type=int, default=None)
    p.add_argument("--n-hi", dest="n_hi", type=int, default=None)
    p.add_argument("--csv", help="write (pair_id, n, dn) rows here")
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("pinch", help="four exponents and the pinched margin")
    common(p)
    p.add_argument("--window", type=float, default=None)
    p.add_argument("--spacing", type=float, default=None)
    p.add_argument("--n-lo", dest="n_lo", type=int, default=None)
    p.add_argument("--n-hi", dest="n_hi", type=int, default=None)
    p.set_defaults(func=cmd_pinch)

    p = sub.add_parser("connectivity", help="per-level graph connectivity")
    common(p)
    p.add_argument("--side", choices=["stable", "unstable"], default="stable")
    p.add_argument("--n-lo", dest="n_lo", type=int, default=0)
    p.add_argument("--n-hi", dest="n_hi", type=int, default=8)
    p.add_argument("--window", type=float, default=None)
    p.add_argument("--spacing", type=float, default=None)
    p.add_argument("--depth", type=int, default=None)
    p.set_defaults(func=cmd_connectivity)

    p = sub.add_parser("metric", help="synthesize d_beta and its sandwich fit")
    common(p)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--side", choices=["stable", "unstable"], default="stable")
    p.add_argument("--window", type=float, default=0.2)
    p.add_argument("--spacing", type=float, default=1e-3)
    p.add_argument("--matrix-csv", dest="matrix_csv")
    p.set_defaults(func=cmd_metric)

    p = sub.add_parser("hypgraph", help="levelled graph hyperbolicity estimate")
    common(p)
    p.add_argument("--matrix", help="d*d comma-separated integer entries")
    p.add_argument("--s-rad", dest="s_rad", type=int, default=1)
    p.add_argument("--tube", type=float, default=1.5)
    p.add_argument("--levels", type=int, default=6)
    p.add_argument("--rho", type=int, default=40)
    p.add_argument("--quadruples", type=int, default=4000)
    p.add_argument("--edges-csv", dest="edges_csv")
    p.set_defaults(func=cmd_hypgraph)

    p = sub.add_parser("limits", help="digit-expansion round trips")
    common(p)
    p.add_argument("--matrix", help="d*d comma-separated integer entries")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--n", type=int, default=40)
    p.add_argument("--s-rad", dest="s_rad", type=int, default=2)
    p.set_defaults(func=cmd_limits)

    p = sub.add_parser("mather", help="Brin/pinched inequality comparators")
    common(p)
    p.add_argument("--bounds", required=True,
                   help="lambda1,lambda2,mu2,mu1 (comma separated)")
    p.set_defaults(func=cmd_mather)

    p = sub.add_parser("codim1", help="codimension-one entropy comparison")
    common(p)
    p.add_argument("--side", choices=["stable", "unstable"], default="stable")
    p.add_argument("--window", type=float, default=None)
    p.add_argument("--spacing", type=float, default=None)
    p.add_argument("--n-lo", dest="n_lo", type=int, default=None)
    p.add_argument("--n-hi", dest="n_hi", type=int, default=None)
    p.set_defaults(func=cmd_codim1)

    p = sub.add_parser("selfcheck", help="run the fast invariant suite")
    common(p)
    p.add_argument("--filter", help="run only properties matching this name/group")
    p.set_defaults(func=cmd_selfcheck)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        sys.stderr.write(f"validation error: {exc}\n")
        return 2
    except NumericalError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 3
    except SmaleKitError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
