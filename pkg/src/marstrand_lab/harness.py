"""End-to-end experiments: build a set, sweep projections, aggregate verdicts.

A configuration is one JSON document. ``seed`` is mandatory; nothing reads
the clock or the environment, so equal configs give byte-identical reports.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .dimension import DimensionEstimate, box_dimension, projected_length
from .errors import MarstrandError, PreconditionError, SizeError
from .fractals import (
    CATALOG,
    PointCloud,
    catalog_ifs,
    disk_cloud,
    fit_into_ball,
    generate,
    metric_resolution,
    moran_dimension,
    product_cloud,
    singleton,
    uniform_segment,
)
from .metric import EUCLIDEAN_CTX, POINCARE_CTX, ConformalMetricSpec, conformal_context
from .projections import EUCLIDEAN_ANGLE, HYPERBOLIC, SYNTHETIC, ProjectionFamily, project_many
from .transversality import DEFAULT_DELTAS, lambda_grid

MAX_LAMBDA = 10**5
DIM_TOL = 0.1
LENGTH_QUANTILE = 0.95


@dataclass(frozen=True)
class ExperimentConfig:
    set_spec: dict
    seed: int
    family_spec: dict = field(default_factory=lambda: {"kind": EUCLIDEAN_ANGLE})
    fit_into_ball: Optional[float] = None
    n_lambda: int = 100
    window: Optional[tuple] = None
    length_eps: Optional[float] = None
    length_threshold: float = 0.1
    delta_grid: tuple = DEFAULT_DELTAS
    n_pairs: int = 200
    output_dir: str = "."
    stem: str = "report"
    extra: dict = field(default_factory=dict)

    _KEYS = ("set", "seed", "family", "fit_into_ball", "n_lambda", "window", "length_eps",
             "length_threshold", "delta_grid", "n_pairs", "output")

    @classmethod
    def from_dict(cls, d: dict, seed: Optional[int] = None) -> "ExperimentConfig":
        if "set" not in d and "cloud" not in d:
            raise PreconditionError("config needs a 'set' (or 'cloud') entry")
        seed = d.get("seed") if seed is None else seed
        if seed is None:
            raise PreconditionError("config needs a 'seed' (or pass --seed)")
        n_lambda = int(d.get("n_lambda", 100))
        if not 1 <= n_lambda <= MAX_LAMBDA:
            raise SizeError(f"n_lambda must lie in [1, {MAX_LAMBDA}]")
        grid = d.get("delta_grid", DEFAULT_DELTAS)
        if isinstance(grid, dict):
            grid = np.geomspace(grid["start"], grid["stop"], int(grid["num"])).tolist()
        out = d.get("output", {})
        window = d.get("window")
        set_spec = d.get("set", {"cloud": d.get("cloud")})
        return cls(
            set_spec=set_spec,
            seed=int(seed),
            family_spec=d.get("family", {"kind": EUCLIDEAN_ANGLE}),
            fit_into_ball=d.get("fit_into_ball"),
            n_lambda=n_lambda,
            window=None if window is None else tuple(float(w) for w in window),
            length_eps=d.get("length_eps"),
            length_threshold=float(d.get("length_threshold", 0.1)),
            delta_grid=tuple(float(g) for g in grid),
            n_pairs=int(d.get("n_pairs", 200)),
            output_dir=str(out.get("dir", ".")),
            stem=str(out.get("stem", "report")),
            extra={k: v for k, v in d.items() if k not in cls._KEYS and k != "cloud"},
        )

    def to_dict(self):
        return {
            "set": self.set_spec,
            "seed": self.seed,
            "family": self.family_spec,
            "fit_into_ball": self.fit_into_ball,
            "n_lambda": self.n_lambda,
            "window": None if self.window is None else list(self.window),
            "length_eps": self.length_eps,
            "length_threshold": self.length_threshold,
            "delta_grid": list(self.delta_grid),
            "n_pairs": self.n_pairs,
            "output": {"dir": self.output_dir, "stem": self.stem},
            **self.extra,
        }


def build_set(spec: dict, seed: int):
    """``(cloud, moran_oracle)`` for a set recipe; the oracle is None when unknown."""
    if "cloud" in spec:
        from .io import read_cloud, read_json

        cloud = read_cloud(spec["cloud"])
        sidecar = read_json(Path(spec["cloud"]).with_suffix(".json"))
        return cloud, spec.get("oracle", sidecar.get("moran_oracle"))
    if "ifs" in spec:
        ifs = catalog_ifs(spec["ifs"], **spec.get("params", {}))
        return generate(ifs, int(spec["depth"])), moran_dimension(ifs)
    if "product" in spec:
        (a, oa), (b, ob) = (build_set(s, seed) for s in spec["product"])
        oracle = None if oa is None or ob is None else oa + ob
        return product_cloud(a, b), oracle
    if "point" in spec:
        return singleton(float(spec["point"]), float(spec.get("resolution", 1e-12))), 0.0
    if "segment" in spec:
        seg = spec["segment"]
        return uniform_segment(int(seg["n"]), seg.get("seed")), 1.0
    if "disk" in spec:
        dk = spec["disk"]
        return disk_cloud(int(dk["n"]), float(dk.get("radius", 1.0)), int(dk.get("seed", seed))), 2.0
    raise PreconditionError(f"unknown set recipe {sorted(spec)}; catalog IFS: {sorted(CATALOG)}")


def build_family(spec: dict) -> ProjectionFamily:
    kind = spec.get("kind", EUCLIDEAN_ANGLE)
    if kind == EUCLIDEAN_ANGLE:
        return ProjectionFamily.euclidean()
    if kind == HYPERBOLIC:
        metric = spec.get("metric", {"kind": "poincare"})
        if metric.get("kind", "poincare") == "poincare" and not metric.get("ode", False):
            return ProjectionFamily.hyperbolic(POINCARE_CTX)
        cf = ConformalMetricSpec(metric["kind"], tuple(metric.get("bounds", (-1.0, 1.0, -1.0, 1.0))),
                                 tuple(map(tuple, metric.get("coeffs", ()))))
        return ProjectionFamily.hyperbolic(conformal_context(cf))
    if kind == SYNTHETIC:
        return ProjectionFamily.synthetic(float(spec["C"]), float(spec.get("kappa", 1.0)))
    raise PreconditionError(f"unknown family kind {kind!r}")


def prepare(config: ExperimentConfig):
    """Cloud (placed in the family's domain), its oracle dimension and the family."""
    cloud, oracle = build_set(config.set_spec, config.seed)
    family = build_family(config.family_spec)
    if config.fit_into_ball is not None:
        cloud = fit_into_ball(cloud, float(config.fit_into_ball))
    if family.context.kind != EUCLIDEAN_CTX.kind:
        if not all(family.context.contains(q) for q in cloud.points):
            raise PreconditionError("cloud leaves the family's domain; set fit_into_ball")
    return cloud, oracle, family


@dataclass(frozen=True)
class LambdaResult:
    lam: float
    dimension: DimensionEstimate
    length: float

    def to_dict(self):
        return {"lambda": self.lam, "dimension": self.dimension.to_dict(), "length": self.length}

    @classmethod
    def from_dict(cls, d):
        return cls(d["lambda"], DimensionEstimate.from_dict(d["dimension"]), d["length"])


@dataclass(frozen=True)
class ExperimentReport:
    config: dict
    dim_X: DimensionEstimate
    moran_oracle: Optional[float]
    per_lambda: tuple
    aggregate: dict
    verdict: dict

    def to_dict(self):
        return {
            "config": self.config,
            "dim_X": self.dim_X.to_dict(),
            "moran_oracle": self.moran_oracle,
            "per_lambda": [r.to_dict() for r in self.per_lambda],
            "aggregate": self.aggregate,
            "verdict": self.verdict,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["config"], DimensionEstimate.from_dict(d["dim_X"]), d["moran_oracle"],
                   tuple(LambdaResult.from_dict(r) for r in d["per_lambda"]),
                   d["aggregate"], d["verdict"])


def _stage_error(exc, stage, k=None, lam=None):
    where = stage if k is None else f"{stage} at lambda[{k}] = {lam:.9g}"
    return type(exc)(f"{where}: {exc}", **getattr(exc, "diagnostics", {}))


def verdicts(dim_ref, median_dim, length_fraction, alpha=1.0, kappa=1.0):
    """Compare sweep aggregates with ``min(kappa, dim X / alpha)``.

    Sets with ``dim X > alpha kappa`` must project with positive length for
    at least 95% of parameters; smaller sets must keep their dimension.
    """
    target = min(kappa, dim_ref / alpha)
    above = dim_ref > alpha * kappa
    bound = bool(median_dim >= target - DIM_TOL)
    match = bool(abs(median_dim - target) <= DIM_TOL)
    positive = bool(length_fraction >= LENGTH_QUANTILE) if above else None
    return {
        "target_dimension": target,
        "dimension_reference": dim_ref,
        "regime": "above_alpha_kappa" if above else "at_most_alpha_kappa",
        "dimension_bound_holds": bound,
        "dimension_matches_target": match,
        "positive_length_holds": positive,
        "passed": bool(positive and bound) if above else match,
    }


def run_marstrand(config: ExperimentConfig) -> ExperimentReport:
    """Estimate dim X, then projected box dimension and length at every
    stratified lambda; aggregate median dimension, the share of lambda with
    length above the threshold and the harmonic mean of lengths."""
    try:
        cloud, oracle, family = prepare(config)
    except MarstrandError as exc:
        raise _stage_error(exc, "set construction") from exc
    try:
        dim_X = box_dimension(cloud, config.window, seed=config.seed)
    except MarstrandError as exc:
        raise _stage_error(exc, "set dimension") from exc
    res = metric_resolution(cloud, family.context)
    lams = lambda_grid(config.n_lambda, *family.param_range)
    rows = []
    for k, lam in enumerate(lams):
        try:
            coords = project_many(family, float(lam), cloud.points)
            p_res = res * family.lipschitz(float(lam))
            eps = config.length_eps if config.length_eps is not None else 2.0 * p_res
            proj = PointCloud(np.c_[coords, np.zeros(len(coords))], p_res, {"lambda": float(lam)})
            est = box_dimension(proj, config.window, seed=config.seed)
            length = projected_length(coords, eps, p_res)
        except MarstrandError as exc:
            raise _stage_error(exc, "projection sweep", k, float(lam)) from exc
        rows.append(LambdaResult(float(lam), est, length))
    dims = np.array([r.dimension.value for r in rows])
    lengths = np.array([r.length for r in rows])
    frac = float(np.mean(lengths >= config.length_threshold))
    aggregate = {
        "median_projected_dimension": float(np.median(dims)),
        "length_fraction": frac,
        "length_threshold": config.length_threshold,
        "harmonic_mean_length": float(len(lengths) / np.sum(1.0 / lengths)),
        "n_lambda": config.n_lambda,
        "projected_resolution": res,
    }
    dim_ref = oracle if oracle is not None else dim_X.value
    verdict = verdicts(dim_ref, aggregate["median_projected_dimension"], frac,
                       family.alpha, family.kappa)
    return ExperimentReport(config.to_dict(), dim_X, oracle, tuple(rows), aggregate, verdict)


def emit_report(report: ExperimentReport, out_dir, stem: str = "report",
                formats=("json", "csv", "svg")) -> dict:
    """Write the report as JSON, the per-lambda table as CSV and an SVG scatter."""
    from . import io

    out_dir = Path(out_dir)
    paths = {}
    if "json" in formats:
        paths["json"] = io.write_json(out_dir / f"{stem}.json", report.to_dict())
    if "csv" in formats:
        rows = [(k, r.lam, r.dimension.value, r.dimension.r_squared, r.length)
                for k, r in enumerate(report.per_lambda)]
        paths["csv"] = io.write_csv(out_dir / f"{stem}.csv",
                                    ["index", "lambda", "projected_dimension", "r_squared", "length"], rows)
    if "svg" in formats:
        from .plotting import sweep_scatter

        paths["svg"] = sweep_scatter(report, out_dir / f"{stem}.svg")
    return paths

