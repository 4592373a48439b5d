"""Points, metric contexts, discrete measures and the quantities built on them.

Points are plain numpy arrays: shape ``(2,)`` for plane points, shape ``(N, 2)``
for point sets, and shape ``(N,)`` for measures supported on a line (projected
coordinates). All functions here are pure.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import DomainError, InfiniteEnergyError, PreconditionError, ResolutionError

EUCLIDEAN = "euclidean"
POINCARE = "poincare"
CONFORMAL = "conformal"

# points of the Poincare catalog entry are kept this far inside the unit circle
POINCARE_RMAX = 0.995
_CURVATURE_TOL = 1e-9
_CHUNK = 2048


@dataclass(frozen=True)
class ConformalMetricSpec:
    """Conformal metric ``e^{2 phi} (dx^2 + dy^2)`` drawn from a closed catalog.

    ``kind`` is one of ``"flat"``, ``"poincare"`` or ``"polynomial"``; for the
    polynomial entry ``coeffs[i][j]`` multiplies ``x**i * y**j``.
    ``bounds`` is ``(xmin, xmax, ymin, ymax)``.
    """

    kind: str
    bounds: tuple = (-1.0, 1.0, -1.0, 1.0)
    coeffs: tuple = ()
    grid: int = 41

    def __post_init__(self):
        if self.kind not in ("flat", "poincare", "polynomial"):
            raise PreconditionError(f"unknown conformal factor {self.kind!r}")
        xmin, xmax, ymin, ymax = self.bounds
        if not (xmin < xmax and ymin < ymax):
            raise PreconditionError(f"empty domain {self.bounds}")
        if self.kind == "polynomial":
            c = np.asarray(self.coeffs, dtype=float)
            if c.ndim != 2 or c.size == 0:
                raise PreconditionError("polynomial factor needs a 2-D coefficient table")
            object.__setattr__(self, "coeffs", tuple(map(tuple, c.tolist())))
        worst = self.max_curvature()
        if worst > _CURVATURE_TOL:
            raise PreconditionError(
                f"conformal factor {self.kind!r} has positive curvature {worst:.3g} on its domain"
            )

    @classmethod
    def flat(cls, bounds=(-10.0, 10.0, -10.0, 10.0)):
        return cls("flat", bounds)

    @classmethod
    def poincare(cls):
        return cls("poincare", (-1.0, 1.0, -1.0, 1.0))

    @classmethod
    def polynomial(cls, coeffs, bounds):
        return cls("polynomial", tuple(bounds), tuple(map(tuple, coeffs)))

    @property
    def coeff_array(self):
        if self.kind != "polynomial":
            return np.zeros((1, 1))
        return np.asarray(self.coeffs, dtype=float)

    @property
    def rmax(self):
        return POINCARE_RMAX if self.kind == "poincare" else np.inf

    def contains(self, q) -> bool:
        x, y = float(q[0]), float(q[1])
        xmin, xmax, ymin, ymax = self.bounds
        if not (xmin <= x <= xmax and ymin <= y <= ymax):
            return False
        return x * x + y * y < self.rmax**2

    def phi(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "flat":
            return np.zeros(np.broadcast(x, y).shape)
        if self.kind == "poincare":
            return np.log(2.0 / (1.0 - x * x - y * y))
        return npoly.polyval2d(x, y, self.coeff_array)

    def laplacian(self, x, y):
        """Closed-form Laplacian of phi."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "flat":
            return np.zeros(np.broadcast(x, y).shape)
        if self.kind == "poincare":
            return 4.0 / (1.0 - x * x - y * y) ** 2
        c = self.coeff_array
        cxx = npoly.polyder(c, 2, axis=0) if c.shape[0] > 2 else np.zeros((1, 1))
        cyy = npoly.polyder(c, 2, axis=1) if c.shape[1] > 2 else np.zeros((1, 1))
        return npoly.polyval2d(x, y, cxx) + npoly.polyval2d(x, y, cyy)

    def curvature(self, x, y):
        return -np.exp(-2.0 * self.phi(x, y)) * self.laplacian(x, y)

    def max_curvature(self) -> float:
        xmin, xmax, ymin, ymax = self.bounds
        gx, gy = np.meshgrid(np.linspace(xmin, xmax, self.grid), np.linspace(ymin, ymax, self.grid))
        inside = gx**2 + gy**2 < self.rmax**2
        return float(np.max(self.curvature(gx[inside], gy[inside])))


@dataclass(frozen=True)
class MetricContext:
    kind: str = EUCLIDEAN
    conformal_factor: Optional[ConformalMetricSpec] = None

    def __post_init__(self):
        if self.kind not in (EUCLIDEAN, POINCARE, CONFORMAL):
            raise PreconditionError(f"unknown metric context {self.kind!r}")
        if (self.kind == CONFORMAL) != (self.conformal_factor is not None):
            raise PreconditionError("a conformal factor is required exactly for the conformal context")

    def contains(self, q) -> bool:
        q = np.asarray(q, dtype=float)
        if not np.all(np.isfinite(q)):
            return False
        if self.kind == EUCLIDEAN:
            return True
        if self.kind == POINCARE:
            return float(q[0] ** 2 + q[1] ** 2) < 1.0
        return self.conformal_factor.contains(q)

    def check(self, *points):
        for q in points:
            if not self.contains(q):
                raise DomainError(f"point {tuple(np.atleast_1d(q))} outside the {self.kind} domain")


EUCLIDEAN_CTX = MetricContext(EUCLIDEAN)
POINCARE_CTX = MetricContext(POINCARE)


def conformal_context(spec: ConformalMetricSpec) -> MetricContext:
    return MetricContext(CONFORMAL, spec)


@dataclass(frozen=True)
class RegularityParams:
    kappa: float
    c: float

    def __post_init__(self):
        if not (self.kappa > 0 and self.c > 0):
            raise PreconditionError("kappa and c must be positive")


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finite weighted point set.

    ``points`` is ``(N, 2)`` for plane measures or ``(N,)`` for measures on a
    line; ``resolution`` is the covering scale of the support in the measure's
    own metric, when known.
    """

    points: np.ndarray
    weights: np.ndarray
    context: MetricContext = EUCLIDEAN_CTX
    resolution: Optional[float] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if pts.ndim == 2 and pts.shape[1] != 2:
            raise PreconditionError("plane points must have shape (N, 2)")
        if pts.ndim not in (1, 2) or len(pts) != len(w) or len(w) < 1:
            raise PreconditionError("points and weights must have equal length >= 1")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(w))):
            raise PreconditionError("non-finite points or weights")
        if np.any(w < 0) or w.sum() <= 0:
            raise PreconditionError("weights must be nonnegative with positive total mass")
        if pts.ndim == 2 and self.context.kind == POINCARE:
            if np.any(np.sum(pts**2, axis=1) >= 1.0):
                raise DomainError("measure support leaves the Poincare disk")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def on_line(self) -> bool:
        return self.points.ndim == 1

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def __len__(self):
        return len(self.weights)


def distance(ctx: MetricContext, a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim == 0:
        return abs(float(a) - float(b))
    ctx.check(a, b)
    if ctx.kind == EUCLIDEAN:
        return float(np.hypot(*(a - b)))
    if ctx.kind == POINCARE:
        return float(poincare_distance(a, b))
    from .geometry import conformal

    return conformal.distance(ctx.conformal_factor, a, b)


def poincare_distance(a, b):
    """Vectorised disk distance, ``2 asinh(|a-b| / sqrt((1-|a|^2)(1-|b|^2)))``.

    Equal to ``arcosh(1 + 2|a-b|^2 / ((1-|a|^2)(1-|b|^2)))`` but stable for
    nearby points.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    num = np.sqrt(np.sum((a - b) ** 2, axis=-1))
    den = np.sqrt((1.0 - np.sum(a * a, axis=-1)) * (1.0 - np.sum(b * b, axis=-1)))
    return 2.0 * np.arcsinh(num / den)


def _distance_block(ctx, rows, cols):
    """Distances between every row point and every column point."""
    if rows.ndim == 1:
        return np.abs(rows[:, None] - cols[None, :])
    if ctx.kind == EUCLIDEAN:
        diff = rows[:, None, :] - cols[None, :, :]
        return np.sqrt(np.sum(diff * diff, axis=-1))
    if ctx.kind == POINCARE:
        return poincare_distance(rows[:, None, :], cols[None, :, :])
    from .geometry import conformal

    out = np.empty((len(rows), len(cols)))
    for i, a in enumerate(rows):
        for j, b in enumerate(cols):
            out[i, j] = conformal.distance(ctx.conformal_factor, a, b)
    return out


def pairwise_distances(mu: DiscreteMeasure) -> np.ndarray:
    return _distance_block(mu.context, mu.points, mu.points)


def energy(mu: DiscreteMeasure, s: float) -> float:
    """Discrete s-energy, sum over ordered pairs i != j of w_i w_j d_ij^{-s}.

    Atom self-interaction is excluded. Two distinct atoms at distance zero
    raise :class:`InfiniteEnergyError` when ``s > 0``.
    """
    if s < 0:
        raise PreconditionError("s must be nonnegative")
    w = mu.weights
    if s == 0:
        return float(w.sum() ** 2 - np.sum(w * w))
    pts = mu.points
    total = 0.0
    for start in range(0, len(w), _CHUNK):
        stop = min(start + _CHUNK, len(w))
        d = _distance_block(mu.context, pts[start:stop], pts)
        idx = np.arange(start, stop)
        d[idx - start, idx] = np.inf
        ww = w[start:stop, None] * w[None, :]
        if np.any((d == 0) & (ww > 0)):
            raise InfiniteEnergyError("distinct atoms at distance zero: infinite energy")
        with np.errstate(divide="ignore"):
            total += float(np.sum(np.where(ww > 0, ww * d ** (-s), 0.0)))
    return total


def ball_mass(mu: DiscreteMeasure, center, r: float) -> float:
    """Mass of the closed ball ``B(center, r)``."""
    if not r > 0:
        raise PreconditionError("radius must be positive")
    c = np.asarray(center, dtype=float)
    if mu.on_line:
        d = np.abs(mu.points - float(c))
    else:
        d = _distance_block(mu.context, c[None, :], mu.points)[0]
    return float(mu.weights[d <= r].sum())


def geometric_ladder(r_max: float, n: int = 8, ratio: float = 2.0) -> np.ndarray:
    return r_max / ratio ** np.arange(n)


@dataclass(frozen=True)
class DensityProfile:
    radii: np.ndarray
    ratios: np.ndarray
    value: float
    diverging: bool = field(default=False)


def kappa_density_profile(nu: DiscreteMeasure, y, kappa: float, r_ladder: Sequence[float],
                          resolution: Optional[float] = None) -> DensityProfile:
    radii = np.asarray(r_ladder, dtype=float)
    if radii.ndim != 1 or len(radii) < 2 or np.any(np.diff(radii) >= 0) or radii[-1] <= 0:
        raise PreconditionError("radius ladder must be strictly decreasing and positive")
    res = nu.resolution if resolution is None else resolution
    if res is not None and radii[-1] < 3.0 * res:
        raise ResolutionError(
            f"ladder floor {radii[-1]:.3g} below 3x resolution {3.0 * res:.3g}"
        )
    ratios = np.array([ball_mass(nu, y, r) / r**kappa for r in radii])
    tail = ratios[len(ratios) // 2:]
    # an isolated atom: ratio grows by exactly ratio**kappa per rung down the tail
    steps = radii[len(radii) // 2:]
    masses = tail * steps**kappa
    diverging = bool(masses[0] > 0 and np.allclose(masses, masses[0]) and len(tail) > 1)
    return DensityProfile(radii, ratios, float(tail.min()), diverging)


def kappa_density(nu: DiscreteMeasure, y, kappa: float, r_ladder: Sequence[float],
                  resolution: Optional[float] = None) -> float:
    """Finite-scale lower kappa-density: min of ``nu(B(y,r)) / r**kappa`` over
    the smaller half of the radius ladder."""
    return kappa_density_profile(nu, y, kappa, r_ladder, resolution).value
