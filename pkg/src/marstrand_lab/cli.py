"""Command line entry point: ``marstrand-lab <command> config.json``.

Every command reads one JSON config, writes JSON (and CSV, and SVG where a
figure makes sense) into the config's output directory and prints the paths.
Exit codes: 0 success, 1 a geometry check failed, 2 bad input or I/O,
3 numerical solver failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .dimension import box_dimension, correlation_dimension
from .errors import MarstrandError, PreconditionError
from .fractals import fit_into_ball, metric_resolution, uniform_measure
from .harness import ExperimentConfig, build_family, build_set, emit_report, run_marstrand
from .projections import project_many
from .transversality import DEFAULT_DELTAS, fit_transversality, lambda_grid, lemma_L1_eta

COMMANDS = ("gen", "dim", "project", "transversality", "l1-eta", "geom-check", "marstrand")


def _seed(cfg, override):
    seed = cfg.get("seed") if override is None else override
    if seed is None:
        raise PreconditionError("config needs a 'seed' (or pass --seed)")
    return int(seed)


def _output(cfg, command, out_dir):
    out = cfg.get("output", {})
    directory = Path(out_dir if out_dir is not None else out.get("dir", "."))
    return directory, str(out.get("stem", command.replace("-", "_")))


def _cloud(cfg, seed, family=None):
    """Cloud from ``set`` (a recipe) or ``cloud`` (a CSV path), shrunk into a
    ball when ``fit_into_ball`` is set."""
    if "set" in cfg:
        spec = cfg["set"]
    elif "cloud" in cfg:
        spec = {"cloud": cfg["cloud"]}
    else:
        raise PreconditionError("config needs a 'set' recipe or a 'cloud' path")
    cloud, oracle = build_set(spec, seed)
    if cfg.get("fit_into_ball") is not None:
        cloud = fit_into_ball(cloud, float(cfg["fit_into_ball"]))
    if family is not None and not all(family.context.contains(q) for q in cloud.points):
        raise PreconditionError("cloud leaves the family's domain; set fit_into_ball")
    return cloud, oracle


def _delta_grid(cfg):
    grid = cfg.get("delta_grid", DEFAULT_DELTAS)
    if isinstance(grid, dict):
        grid = np.geomspace(grid["start"], grid["stop"], int(grid["num"]))
    return tuple(float(g) for g in grid)


def cmd_gen(cfg, seed, out_dir, stem):
    cloud, oracle = _cloud(cfg, seed)
    csv_path, json_path = io.write_cloud(out_dir / stem, cloud, {"moran_oracle": oracle, "seed": seed})
    return {"csv": csv_path, "json": json_path}


def cmd_dim(cfg, seed, out_dir, stem):
    from .plotting import loglog

    cloud, oracle = _cloud(cfg, seed)
    window = cfg.get("window")
    method = cfg.get("method", "both")
    if method not in ("box", "correlation", "both"):
        raise PreconditionError("method must be 'box', 'correlation' or 'both'")
    estimates = {}
    if method in ("box", "both"):
        estimates["box"] = box_dimension(cloud, window, seed=seed)
    if method in ("correlation", "both"):
        estimates["correlation"] = correlation_dimension(uniform_measure(cloud), window)
    rows = []
    for name, est in estimates.items():
        for scale, count in est.counts:
            log_count = math.log(count) if count > 0 else float("nan")
            rows.append((name, scale, math.log(scale), count, log_count))
    paths = {
        "json": io.write_json(out_dir / f"{stem}.json", {
            "estimates": {k: v.to_dict() for k, v in estimates.items()},
            "moran_oracle": oracle,
            "n_points": len(cloud),
            "resolution": cloud.resolution,
            "seed": seed,
        }),
        "csv": io.write_csv(out_dir / f"{stem}.csv", ["method", "scale", "log_scale", "count", "log_count"], rows),
    }
    if "box" in estimates:
        est = estimates["box"]
        eps = np.array([c[0] for c in est.counts])
        n = np.array([c[1] for c in est.counts])
        intercept = float(np.mean(np.log(n) - est.value * np.log(1.0 / eps)))
        paths["svg"] = loglog(1.0 / eps, n, out_dir / f"{stem}.svg", "1 / eps", "N(eps)",
                              slope=est.value, intercept=intercept)
    return paths


def cmd_project(cfg, seed, out_dir, stem):
    family = build_family(cfg.get("family", {"kind": "euclidean"}))
    cloud, _ = _cloud(cfg, seed, family)
    lams = cfg.get("lambdas", {"n": 8})
    lams = lambda_grid(int(lams["n"]), *family.param_range) if isinstance(lams, dict) else np.asarray(lams, float)
    res = metric_resolution(cloud, family.context)
    paths, summary = {}, []
    for k, lam in enumerate(lams):
        coords = project_many(family, float(lam), cloud.points)
        name = f"{stem}_{k:04d}"
        paths[name] = io.write_csv(out_dir / f"{name}.csv", ["index", "coordinate"], list(enumerate(coords.tolist())))
        summary.append({"index": k, "lambda": float(lam), "file": f"{name}.csv",
                        "resolution": res * family.lipschitz(float(lam))})
    paths["json"] = io.write_json(out_dir / f"{stem}.json", {
        "family": family.kind, "n_points": len(cloud), "seed": seed, "projections": summary})
    return paths


def cmd_transversality(cfg, seed, out_dir, stem):
    from .plotting import loglog

    family = build_family(cfg.get("family", {"kind": "euclidean"}))
    cloud, _ = _cloud(cfg, seed, family)
    report = fit_transversality(family, cloud, cfg.get("alpha"), _delta_grid(cfg),
                                int(cfg.get("n_pairs", 200)), int(cfg.get("n_lambda", 2000)), seed)
    rows = [(d, p, math.log(d), math.log(p) if p > 0 else float("nan"), int(u))
            for d, p, u in zip(report.delta_grid, report.probabilities, report.used)]
    return {
        "json": io.write_json(out_dir / f"{stem}.json", report.to_dict()),
        "csv": io.write_csv(out_dir / f"{stem}.csv", ["delta", "probability", "log_delta", "log_probability", "used"], rows),
        "svg": loglog(report.delta_grid, report.probabilities, out_dir / f"{stem}.svg", "delta",
                      "worst-pair probability", report.used, report.fitted.kappa, math.log(report.C_lsq)),
    }


def cmd_l1_eta(cfg, seed, out_dir, stem):
    family = build_family(cfg.get("family", {"kind": "hyperbolic"}))
    cloud, _ = _cloud(cfg, seed, family)
    n = int(cfg.get("n_lambda", 1000))
    R = cfg.get("R")
    max_pairs = cfg.get("max_pairs")
    runs = [lemma_L1_eta(family, cloud, m, seed, R, max_pairs) for m in (n, 2 * n)]
    change = abs(runs[1].eta - runs[0].eta) / runs[0].eta if runs[0].eta > 0 else float("inf")
    rows = [(r.lambda_samples, r.eta, r.excluded_fraction, r.pairs) for r in runs]
    return {
        "json": io.write_json(out_dir / f"{stem}.json", {
            "eta": runs[0].eta, "runs": [r.to_dict() for r in runs],
            "relative_change_on_doubling": change, "R": R, "seed": seed}),
        "csv": io.write_csv(out_dir / f"{stem}.csv", ["lambda_samples", "eta", "excluded_fraction", "pairs"], rows),
    }


def cmd_geom_check(cfg, seed, out_dir, stem):
    from .geometry.checks import run_geometry_checks

    keys = ("n_nearest", "n_triples", "n_agree", "n_claim", "n_frames", "ode_triples", "ode_nearest")
    results = run_geometry_checks(seed, **{k: int(cfg[k]) for k in keys if k in cfg})
    passed = all(r.passed for r in results)
    rows = [(r.name, r.backend, r.n, r.failures, r.worst_residual, r.tol, int(r.passed)) for r in results]
    paths = {
        "json": io.write_json(out_dir / f"{stem}.json", {
            "passed": passed, "seed": seed, "checks": [r.to_dict() for r in results]}),
        "csv": io.write_csv(out_dir / f"{stem}.csv",
                            ["check", "backend", "n", "failures", "worst_residual", "tol", "passed"], rows),
    }
    return paths, (0 if passed else 1)


def cmd_marstrand(cfg, seed, out_dir, stem):
    cfg = dict(cfg, seed=seed, output={"dir": str(out_dir), "stem": stem})
    report = run_marstrand(ExperimentConfig.from_dict(cfg))
    return emit_report(report, out_dir, stem)


HANDLERS = {
    "gen": cmd_gen,
    "dim": cmd_dim,
    "project": cmd_project,
    "transversality": cmd_transversality,
    "l1-eta": cmd_l1_eta,
    "geom-check": cmd_geom_check,
    "marstrand": cmd_marstrand,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="marstrand-lab", description="Numerical Marstrand projection experiments driven by JSON configs.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", help="JSON configuration file")
        p.add_argument("--seed", type=int, default=None, help="override the config's seed")
        p.add_argument("--output-dir", default=None, help="override the config's output directory")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = io.read_json(args.config)
        if not isinstance(cfg, dict):
            raise PreconditionError("config must be a JSON object")
        seed = _seed(cfg, args.seed)
        out_dir, stem = _output(cfg, args.command, args.output_dir)
        result = HANDLERS[args.command](cfg, seed, out_dir, stem)
    except MarstrandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (KeyError, TypeError, ValueError) as exc:
        # malformed config entries
        print(f"error: bad config: {exc!r}", file=sys.stderr)
        return 2
    paths, code = result if isinstance(result, tuple) else (result, 0)
    for key, path in paths.items():
        print(f"{key}\t{path}")
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
