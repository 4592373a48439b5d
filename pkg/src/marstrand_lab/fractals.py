"""Finite approximations of self-similar sets with known similarity dimension."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._rng import rng_for
from .errors import PreconditionError, SizeError
from .metric import EUCLIDEAN_CTX, POINCARE_CTX, DiscreteMeasure, MetricContext

MAX_POINTS = 10**7


@dataclass(frozen=True)
class SimilarityMap:
    ratio: float
    angle: float = 0.0
    translation: tuple = (0.0, 0.0)

    def matrix(self):
        c, s = math.cos(self.angle), math.sin(self.angle)
        return self.ratio * np.array([[c, -s], [s, c]])

    def fixed_point(self):
        return np.linalg.solve(np.eye(2) - self.matrix(), np.asarray(self.translation, dtype=float))

    def __call__(self, pts):
        return pts @ self.matrix().T + np.asarray(self.translation, dtype=float)


@dataclass(frozen=True)
class SimilarityIFS:
    maps: tuple
    name: str = "ifs"

    def __post_init__(self):
        maps = tuple(m if isinstance(m, SimilarityMap) else SimilarityMap(*m) for m in self.maps)
        if len(maps) < 2:
            raise PreconditionError("an IFS needs at least two maps")
        if not all(0.0 < m.ratio < 1.0 for m in maps):
            raise PreconditionError("every contraction ratio must lie in (0, 1)")
        object.__setattr__(self, "maps", maps)

    @property
    def ratios(self):
        return np.array([m.ratio for m in self.maps])


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    resolution: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0:
            raise PreconditionError("a cloud is a nonempty (N, 2) array")
        if not self.resolution > 0:
            raise PreconditionError("resolution must be positive")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    @property
    def on_line(self) -> bool:
        return bool(np.all(self.points[:, 1] == self.points[0, 1]))

    def diameter(self) -> float:
        return diameter(self.points)


def diameter(points) -> float:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        return float(pts.max() - pts.min()) if len(pts) else 0.0
    if len(pts) <= 1:
        return 0.0
    span = np.ptp(pts, axis=0)
    if span[0] == 0 or span[1] == 0:
        return float(span.max())
    if len(pts) > 3:
        from scipy.spatial import ConvexHull, QhullError

        try:
            pts = pts[ConvexHull(pts).vertices]
        except QhullError:
            # collinear: the diameter is the extent along the common direction
            centred = pts - pts.mean(axis=0)
            direction = np.linalg.svd(centred, full_matrices=False)[2][0]
            return float(np.ptp(centred @ direction))
    best = 0.0
    for start in range(0, len(pts), 1024):
        d = pts[start:start + 1024, None, :] - pts[None, :, :]
        best = max(best, float(np.sqrt(np.max(np.sum(d * d, axis=-1)))))
    return best


def moran_dimension(ifs: SimilarityIFS, tol=1e-12) -> float:
    """Unique s with ``sum(rho_i ** s) == 1``, by bisection."""
    rho = ifs.ratios

    def excess(s):
        return float(np.sum(rho**s)) - 1.0

    lo, hi = 0.0, 1.0
    while excess(hi) > 0:
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _enumerate(ifs, depth, seed):
    pts = seed[None, :]
    for _ in range(depth):
        # new outermost map index is the most significant letter of the word
        pts = np.concatenate([m(pts) for m in ifs.maps])
    return pts


def attractor_diameter(ifs: SimilarityIFS) -> float:
    """Upper bound on the attractor's diameter.

    Enumerated points lie in the attractor, and every attractor point is within
    ``max_rho**k * diam`` of the depth-k set, so the bound exceeds the true
    diameter by a relative ``2 max_rho**k`` at most (k chosen so that the
    depth-k set has about 65536 points).
    """
    m = len(ifs.maps)
    rmax = float(ifs.ratios.max())
    k = max(1, min(int(math.log(65536) / math.log(m) + 1e-9), 60))
    c = ifs.maps[0].fixed_point()
    d = diameter(_enumerate(ifs, k, c))
    # ball around c mapped into itself by every map
    ball = 2.0 * max(float(np.hypot(*(m(c[None, :])[0] - c))) / (1.0 - m.ratio) for m in ifs.maps)
    if 2.0 * rmax**k < 1.0:
        return min(d / (1.0 - 2.0 * rmax**k), ball)
    return ball


def generate(ifs: SimilarityIFS, depth: int) -> PointCloud:
    """All images of the first map's fixed point under words of length ``depth``,
    in lexicographic word order."""
    if depth < 1:
        raise PreconditionError("depth must be at least 1")
    n = len(ifs.maps) ** depth
    if n > MAX_POINTS:
        raise SizeError(f"{len(ifs.maps)}**{depth} = {n} points exceeds the budget of {MAX_POINTS}")
    pts = _enumerate(ifs, depth, ifs.maps[0].fixed_point())
    res = attractor_diameter(ifs) * float(ifs.ratios.max()) ** depth
    return PointCloud(pts, res, {"generator": ifs.name, "depth": depth, "maps": len(ifs.maps)})


def chaos_game(ifs: SimilarityIFS, n_points: int, seed: int, burn_in: int = 50) -> PointCloud:
    """Seeded random-iteration approximation; not used by acceptance checks.

    The reported resolution is a heuristic covering scale
    ``diam * n ** (-1 / dim)``, not a guarantee.
    """
    if n_points > MAX_POINTS:
        raise SizeError(f"{n_points} points exceeds the budget of {MAX_POINTS}")
    rng = rng_for(seed, 1)
    p = np.asarray(ifs.maps[0].fixed_point(), dtype=float)
    mats = [m.matrix() for m in ifs.maps]
    shifts = [np.asarray(m.translation, dtype=float) for m in ifs.maps]
    idx = rng.integers(0, len(ifs.maps), n_points + burn_in)
    out = np.empty((n_points, 2))
    for i, k in enumerate(idx):
        p = mats[k] @ p + shifts[k]
        if i >= burn_in:
            out[i - burn_in] = p
    diam = attractor_diameter(ifs)
    res = diam * n_points ** (-1.0 / moran_dimension(ifs))
    return PointCloud(out, res, {"generator": ifs.name, "chaos_game": n_points, "seed": seed})


def product_cloud(a: PointCloud, b: PointCloud) -> PointCloud:
    """Cartesian product of two line-supported clouds, x from ``a`` and y from ``b``."""
    if not (a.on_line and b.on_line):
        raise PreconditionError("product_cloud needs two clouds supported on a horizontal line")
    n = len(a) * len(b)
    if n > MAX_POINTS:
        raise SizeError(f"product of {len(a)} x {len(b)} points exceeds the budget")
    xs, ys = np.meshgrid(a.points[:, 0], b.points[:, 0], indexing="ij")
    pts = np.c_[xs.ravel(), ys.ravel()]
    return PointCloud(pts, max(a.resolution, b.resolution),
                      {"product": [a.provenance, b.provenance]})


def singleton(x: float = 0.0, resolution: float = 1e-12) -> PointCloud:
    return PointCloud(np.array([[x, 0.0]]), resolution, {"generator": "point"})


def uniform_segment(n: int, seed: Optional[int] = None) -> PointCloud:
    """n points on [0, 1] x {0}: evenly spaced cell midpoints, or seeded uniform
    draws when ``seed`` is given (resolution = largest uncovered gap)."""
    if seed is None:
        xs = (np.arange(n) + 0.5) / n
        res = 0.5 / n
    else:
        xs = np.sort(rng_for(seed, 2).random(n))
        gaps = np.diff(np.concatenate([[0.0], xs, [1.0]]))
        res = float(max(gaps[1:-1].max() / 2.0, gaps[0], gaps[-1]))
    return PointCloud(np.c_[xs, np.zeros(n)], res, {"generator": "segment", "n": n, "seed": seed})


def cantor_ifs(ratio: float = 1.0 / 3.0) -> SimilarityIFS:
    """Two-map Cantor set on [0, 1] x {0}."""
    return SimilarityIFS(((ratio, 0.0, (0.0, 0.0)), (ratio, 0.0, (1.0 - ratio, 0.0))),
                         name=f"cantor({ratio:g})")


def four_corner_ifs(ratio: float = 0.25) -> SimilarityIFS:
    t = 1.0 - ratio
    return SimilarityIFS(tuple((ratio, 0.0, c) for c in ((0, 0), (t, 0), (0, t), (t, t))),
                         name=f"four_corner({ratio:g})")


CATALOG = {
    "cantor": cantor_ifs,
    "four_corner": four_corner_ifs,
    "halves": lambda: cantor_ifs(0.5),
}


def catalog_ifs(name: str, **params) -> SimilarityIFS:
    try:
        factory = CATALOG[name]
    except KeyError:
        raise PreconditionError(f"unknown IFS {name!r}; known: {sorted(CATALOG)}") from None
    return factory(**params)


def metric_resolution(cloud: PointCloud, context: MetricContext = EUCLIDEAN_CTX) -> float:
    """The cloud's resolution converted to the context's metric, using the
    largest conformal factor over the cloud's neighbourhood."""
    res = cloud.resolution
    if context.kind == EUCLIDEAN_CTX.kind:
        return res
    if context.kind == POINCARE_CTX.kind:
        r = float(np.sqrt(np.max(np.sum(cloud.points**2, axis=1)))) + res
        return res * 2.0 / (1.0 - min(r, 1.0 - 1e-12) ** 2)
    spec = context.conformal_factor
    pts = cloud.points
    return res * float(np.exp(np.max(spec.phi(pts[:, 0], pts[:, 1]))))


def uniform_measure(cloud: PointCloud, context: MetricContext = EUCLIDEAN_CTX) -> DiscreteMeasure:
    """Equal weights 1/N on the cloud, with the resolution expressed in the
    context's metric."""
    n = len(cloud)
    return DiscreteMeasure(cloud.points, np.full(n, 1.0 / n), context, metric_resolution(cloud, context))


def disk_cloud(n: int, hyperbolic_radius: float, seed: int) -> PointCloud:
    """n seeded points uniform (in area) in the disk-model ball B_R(0).

    Not a fractal: the resolution is the largest nearest-neighbour gap, a
    heuristic covering scale.
    """
    from scipy.spatial import cKDTree

    rng = rng_for(seed, 4)
    rad = math.tanh(hyperbolic_radius / 2.0) * np.sqrt(rng.random(n))
    ang = rng.random(n) * 2.0 * math.pi
    pts = np.c_[rad * np.cos(ang), rad * np.sin(ang)]
    gap = float(cKDTree(pts).query(pts, k=2)[0][:, 1].max()) if n > 1 else 1e-12
    return PointCloud(pts, gap, {"generator": "disk", "n": n, "radius": hyperbolic_radius, "seed": seed})


def fit_into_ball(cloud: PointCloud, hyperbolic_radius: float, margin: float = 0.98) -> PointCloud:
    """Similarity image of the cloud centred at the origin and inside the disk
    ball B_R(0) (Euclidean radius ``tanh(R/2)``), scaled by ``margin``."""
    pts = cloud.points
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    centre = (lo + hi) / 2.0
    half = float(np.max(np.sqrt(np.sum((pts - centre) ** 2, axis=1))))
    target = margin * math.tanh(hyperbolic_radius / 2.0)
    scale = target / half if half > 0 else 1.0
    prov = dict(cloud.provenance, fit_into_ball=hyperbolic_radius, scale=scale)
    return PointCloud((pts - centre) * scale, cloud.resolution * scale, prov)
