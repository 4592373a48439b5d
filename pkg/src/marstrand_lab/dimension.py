"""Box-counting and correlation dimension, and projected length."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ._rng import rng_for
from .errors import DegenerateFitError, PreconditionError, ResolutionError
from .fractals import PointCloud, diameter
from .metric import EUCLIDEAN, DiscreteMeasure, _distance_block

BOX_COUNT = "box_count"
CORRELATION = "correlation"
MIN_SCALES = 4
FLOOR_FACTOR = 3.0
N_OFFSETS = 8


@dataclass(frozen=True)
class DimensionEstimate:
    value: float
    r_squared: float
    scale_window: tuple
    method: str
    counts: tuple

    def to_dict(self):
        return {
            "value": self.value,
            "r_squared": self.r_squared,
            "scale_window": list(self.scale_window),
            "method": self.method,
            "counts": [list(c) for c in self.counts],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["value"], d["r_squared"], tuple(d["scale_window"]), d["method"],
                   tuple(tuple(c) for c in d["counts"]))


def loglog_fit(x, y):
    """Least-squares line through (x, y); returns ``(slope, intercept, r_squared)``.

    A perfect fit (including a flat one) has r_squared 1.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot <= 1e-300:
        r2 = 1.0
    else:
        r2 = min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)
    return float(slope), float(intercept), r2


def _window(resolution, diam, window):
    floor = FLOOR_FACTOR * resolution
    if window is None:
        if diam <= floor:
            # a single atom at this resolution: every box above the floor sees one
            return floor, floor * 2.0 ** (MIN_SCALES + 1)
        return floor, diam / 4.0
    lo, hi = float(window[0]), float(window[1])
    if lo < floor * (1 - 1e-12):
        raise ResolutionError(f"window start {lo:.3g} below 3x resolution {floor:.3g}")
    if diam > 0 and hi > diam / 2.0 * (1 + 1e-12):
        raise PreconditionError(f"window end {hi:.3g} above half the diameter {diam / 2.0:.3g}")
    if not lo < hi:
        raise PreconditionError("empty scale window")
    return lo, hi


def dyadic_scales(lo, hi):
    """Powers of two in [lo, hi], increasing."""
    if not (lo > 0 and hi > lo):
        return np.array([])
    k = np.arange(np.ceil(np.log2(lo) - 1e-12), np.floor(np.log2(hi) + 1e-12) + 1)
    return 2.0**k


def _as_plane(points):
    pts = np.asarray(points, dtype=float)
    return np.c_[pts, np.zeros(len(pts))] if pts.ndim == 1 else pts


def box_counts(points, scales, n_offsets=N_OFFSETS, seed=0):
    """Occupied-box counts at each scale, averaged over random grid offsets."""
    pts = _as_plane(points)
    origin = pts.min(axis=0)
    # points on a horizontal line: occupied boxes are the jumps of the sorted index
    line = np.sort(pts[:, 0]) - origin[0] if np.ptp(pts[:, 1]) == 0 else None
    out = []
    for i, eps in enumerate(scales):
        offsets = rng_for(seed, 3, i).random((n_offsets, 2)) * eps
        total = 0
        for off in offsets:
            if line is not None:
                idx = np.floor((line + off[0]) / eps)
                total += 1 + np.count_nonzero(np.diff(idx))
                continue
            idx = np.floor((pts - origin + off) / eps).astype(np.int64)
            total += len(np.unique(idx[:, 0] * (idx[:, 1].max() + 2) + idx[:, 1]))
        out.append(total / n_offsets)
    return np.array(out)


def box_dimension(cloud: PointCloud, window=None, n_offsets=N_OFFSETS, seed=0) -> DimensionEstimate:
    """Slope of log N(eps) against log(1/eps) over dyadic grids in the window.

    Default window is [3 * resolution, diam / 4].
    """
    diam = cloud.diameter()
    lo, hi = _window(cloud.resolution, diam, window)
    scales = dyadic_scales(lo, hi)
    if len(scales) < MIN_SCALES:
        raise DegenerateFitError(f"only {len(scales)} dyadic scales in window [{lo:.3g}, {hi:.3g}]")
    counts = box_counts(cloud.points, scales, n_offsets, seed)
    slope, _, r2 = loglog_fit(np.log(1.0 / scales), np.log(counts))
    return DimensionEstimate(max(slope, 0.0), r2, (lo, hi), BOX_COUNT,
                             tuple(zip(scales.tolist(), counts.tolist())))


def correlation_sums(mu: DiscreteMeasure, radii):
    """``sum_{i != j} w_i w_j [d_ij <= r]`` for each radius."""
    radii = np.asarray(radii, dtype=float)
    w = mu.weights
    self_mass = float(np.sum(w * w))
    if mu.on_line:
        order = np.argsort(mu.points)
        x, ws = mu.points[order], w[order]
        cum = np.concatenate([[0.0], np.cumsum(ws)])
        out = []
        for r in radii:
            lo = np.searchsorted(x, x - r, side="left")
            hi = np.searchsorted(x, x + r, side="right")
            out.append(float(np.sum(ws * (cum[hi] - cum[lo]))) - self_mass)
        return np.maximum(np.array(out), 0.0)
    if mu.context.kind == EUCLIDEAN:
        tree = cKDTree(mu.points)
        counts = tree.count_neighbors(tree, radii, weights=(w, w), cumulative=True)
        return np.maximum(np.asarray(counts, dtype=float) - self_mass, 0.0)
    out = np.zeros(len(radii))
    for start in range(0, len(w), 1024):
        stop = min(start + 1024, len(w))
        d = _distance_block(mu.context, mu.points[start:stop], mu.points)
        idx = np.arange(start, stop)
        d[idx - start, idx] = np.inf
        ww = w[start:stop, None] * w[None, :]
        for k, r in enumerate(radii):
            out[k] += float(ww[d <= r].sum())
    return out


def _measure_diameter(mu: DiscreteMeasure):
    if mu.on_line or mu.context.kind == EUCLIDEAN:
        return diameter(mu.points)
    best = 0.0
    for start in range(0, len(mu), 1024):
        best = max(best, float(_distance_block(mu.context, mu.points[start:start + 1024], mu.points).max()))
    return best


def correlation_dimension(mu: DiscreteMeasure, window=None, resolution=None) -> DimensionEstimate:
    """Slope of log C(r) against log r over dyadic radii in the window.

    Radii where the correlation sum vanishes are dropped; when it vanishes at
    every radius the measure is atomic at these scales and the value is 0.
    """
    res = resolution if resolution is not None else mu.resolution
    if res is None:
        raise PreconditionError("correlation dimension needs the measure's resolution")
    diam = _measure_diameter(mu)
    lo, hi = _window(res, diam, window)
    radii = dyadic_scales(lo, hi)
    if len(radii) < MIN_SCALES:
        raise DegenerateFitError(f"only {len(radii)} dyadic radii in window [{lo:.3g}, {hi:.3g}]")
    sums = correlation_sums(mu, radii)
    pairs = tuple(zip(radii.tolist(), sums.tolist()))
    keep = sums > 0
    if not np.any(keep):
        return DimensionEstimate(0.0, 1.0, (lo, hi), CORRELATION, pairs)
    if keep.sum() < MIN_SCALES:
        raise DegenerateFitError("fewer than four radii with a positive correlation sum")
    slope, _, r2 = loglog_fit(np.log(radii[keep]), np.log(sums[keep]))
    return DimensionEstimate(max(slope, 0.0), r2, (lo, hi), CORRELATION, pairs)


def projected_length(line_points, eps: float, resolution=None) -> float:
    """Length of the union of the intervals [p - eps/2, p + eps/2]."""
    if not eps > 0:
        raise PreconditionError("eps must be positive")
    if resolution is not None and eps < resolution * (1 - 1e-12):
        raise ResolutionError(f"eps {eps:.3g} below the source resolution {resolution:.3g}")
    x = np.sort(np.asarray(line_points, dtype=float).ravel())
    if len(x) == 0:
        return 0.0
    gaps = np.diff(x)
    return float(eps + np.sum(np.minimum(gaps, eps)))
