"""Geodesics through a base point, projections onto them, angles and frames.

Every operation dispatches on the metric context: Euclidean closed forms,
Poincare-disk closed forms (base point at the origin), or the RK4 conformal
backend. Tangent vectors are given in an orthonormal frame, so a vector's
Euclidean length is its Riemannian length.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateInputError, DomainError, PreconditionError, SolverError
from ..metric import EUCLIDEAN, POINCARE, ConformalMetricSpec, MetricContext, distance
from .._rng import rng_for
from . import conformal, poincare
from .golden import bracket_minimum, golden_section

TWO_PI = 2.0 * math.pi
_DEGENERATE = 1e-9


def _pt(q):
    q = np.asarray(q, dtype=float)
    if q.shape != (2,) or not np.all(np.isfinite(q)):
        raise PreconditionError(f"expected a finite plane point, got {q!r}")
    return q


def _cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


def _unit(angle):
    return np.array([math.cos(angle), math.sin(angle)])


@dataclass(frozen=True)
class ParamGeodesic:
    """``l(s) = exp_base(s v_angle)`` with ``v_angle = (cos angle, sin angle)``."""

    base: tuple
    angle: float
    context: MetricContext

    def __post_init__(self):
        base = tuple(float(c) for c in self.base)
        object.__setattr__(self, "base", base)
        self.context.check(base)
        if self.context.kind == POINCARE and base != (0.0, 0.0):
            raise PreconditionError("the disk backend fixes the base point at the origin")


@dataclass(frozen=True)
class GeodesicFrame:
    theta: float
    foot: np.ndarray
    s_param: float
    t_param: float


@dataclass(frozen=True)
class GeometryCalibration:
    R: float
    k_hat: float
    samples: int


def exp_map(ctx: MetricContext, base, v):
    base, v = _pt(base), _pt(v)
    ctx.check(base)
    r = float(np.hypot(*v))
    if r == 0.0:
        return base.copy()
    if ctx.kind == EUCLIDEAN:
        return base + v
    if ctx.kind == POINCARE:
        return poincare.to_point(poincare.exp(poincare.to_complex(base), complex(*v)))
    q, _ = conformal.exp_point(ctx.conformal_factor, base, math.atan2(v[1], v[0]), r)
    return q


def log_map(ctx: MetricContext, base, q):
    """Tangent vector at ``base`` whose exponential is ``q``."""
    base, q = _pt(base), _pt(q)
    ctx.check(base, q)
    if ctx.kind == EUCLIDEAN:
        return q - base
    if ctx.kind == POINCARE:
        w = poincare.log(poincare.to_complex(base), poincare.to_complex(q))
        return np.array([w.real, w.imag])
    if np.array_equal(base, q):
        return np.zeros(2)
    length, psi, _ = conformal.shoot(ctx.conformal_factor, base, q)
    return length * _unit(psi)


def _direction(ctx, base, q):
    """Initial direction angle of the geodesic base -> q."""
    if ctx.kind == EUCLIDEAN:
        return math.atan2(q[1] - base[1], q[0] - base[0])
    if ctx.kind == POINCARE:
        return float(poincare.direction(poincare.to_complex(base), poincare.to_complex(q)))
    return conformal.shoot(ctx.conformal_factor, base, q)[1]


def geodesic_point(geo: ParamGeodesic, s: float):
    ctx = geo.context
    if ctx.kind == POINCARE:
        return poincare.to_point(poincare.geodesic_point(geo.angle, s))
    return exp_map(ctx, geo.base, s * _unit(geo.angle))


def _geodesic_extent(spec: ConformalMetricSpec, base, angle, cap=50.0, h=0.05):
    """Largest |s| (per direction) for which l(s) stays inside the conformal domain."""
    ext = []
    for psi in (angle, angle + math.pi):
        x, y, _, st = conformal._integrate(*conformal._args(spec), base[0], base[1], psi, cap, h)
        if st == conformal.OK:
            ext.append(cap)
            continue
        lo, hi = 0.0, cap
        while hi - lo > 1e-6:
            mid = 0.5 * (lo + hi)
            _, _, _, st = conformal._integrate(*conformal._args(spec), base[0], base[1], psi, mid, h)
            lo, hi = (mid, hi) if st == conformal.OK else (lo, mid)
        ext.append(lo * 0.999)
    return ext[1], ext[0]


def project_param(geo: ParamGeodesic, z, tol=1e-9):
    """Signed parameter of the nearest point of the full geodesic to z."""
    z = _pt(z)
    ctx = geo.context
    ctx.check(z)
    if ctx.kind == EUCLIDEAN:
        return float(np.dot(z - np.asarray(geo.base), _unit(geo.angle)))
    if ctx.kind == POINCARE:
        return float(poincare.project_param(geo.angle, complex(*z)))
    spec = ctx.conformal_factor
    back, fwd = _geodesic_extent(spec, geo.base, geo.angle)
    guess = [None]

    def dist_to(s):
        q, _ = conformal.exp_point(spec, geo.base, geo.angle, s)
        if np.array_equal(q, z):
            return 0.0
        try:
            length, psi, _ = conformal.shoot(spec, q, z, psi_guess=guess[0])
        except SolverError:
            # far out along the geodesic, where the minimum cannot be
            return math.inf
        guess[0] = psi
        return length

    a, b = bracket_minimum(dist_to, 0.0, step=0.25, lower=-back, upper=fwd)
    return float(golden_section(dist_to, a, b, tol=tol))


def angle_at(ctx: MetricContext, vertex, a, b) -> float:
    """Angle at ``vertex`` between the geodesics to ``a`` and ``b``, in [0, pi]."""
    vertex, a, b = _pt(vertex), _pt(a), _pt(b)
    ctx.check(vertex, a, b)
    if np.array_equal(vertex, a) or np.array_equal(vertex, b):
        raise DegenerateInputError("angle undefined at a coincident vertex")
    da = _direction(ctx, vertex, a)
    db = _direction(ctx, vertex, b)
    diff = abs(math.remainder(da - db, TWO_PI))
    return min(diff, math.pi)


def segment_point(ctx: MetricContext, a, b, fraction: float):
    """Point at the given fraction of the geodesic segment [a, b]."""
    return exp_map(ctx, a, fraction * log_map(ctx, a, b))


def _theta_from(tangent):
    """Direction e_theta making {e_theta, tangent} a positive orthonormal pair."""
    e = np.array([tangent[1], -tangent[0]])
    theta = math.atan2(e[1], e[0]) % TWO_PI
    return theta, e


def frame(ctx: MetricContext, u, v, base=(0.0, 0.0)) -> GeodesicFrame:
    """theta(u, v), foot I(u, v), s(u, v), t(u, v) for the base point.

    l_theta meets the geodesic through u, v orthogonally at the foot and
    {l'_theta, gamma'_uv} is positively oriented there.
    """
    u, v, p = _pt(u), _pt(v), _pt(base)
    ctx.check(u, v, p)
    if np.allclose(u, v, rtol=0, atol=1e-15):
        raise DegenerateInputError("frame needs two distinct points")
    if ctx.kind == EUCLIDEAN:
        d = (v - u) / np.hypot(*(v - u))
        foot = u + np.dot(p - u, d) * d
        theta, e = _theta_from(d)
        return GeodesicFrame(theta, foot, float(np.dot(foot - p, e)), float(np.dot(foot - u, d)))
    if ctx.kind == POINCARE:
        if np.any(p != 0.0):
            raise PreconditionError("the disk backend fixes the base point at the origin")
        zu, zv = complex(*u), complex(*v)
        fz, tangent = poincare.perpendicular_foot(zu, zv)
        theta, e = _theta_from(np.array([tangent.real, tangent.imag]))
        foot = np.array([fz.real, fz.imag])
        # foot = tanh(s/2) e_theta
        s = 2.0 * math.atanh(float(np.dot(foot, e)))
        t = distance(ctx, u, foot)
        if t > 0 and np.dot(log_map(ctx, u, foot), log_map(ctx, u, v)) < 0:
            t = -t
        return GeodesicFrame(theta, foot, s, t)
    return _conformal_frame(ctx.conformal_factor, u, v, p)


def _conformal_frame(spec, u, v, p):
    length, psi_u, _ = conformal.shoot(spec, u, v)

    def gamma(t):
        return conformal.exp_point(spec, u, psi_u, t)

    def dist_p(t):
        q, _ = gamma(t)
        return 0.0 if np.array_equal(q, p) else conformal.shoot(spec, p, q)[0]

    back, fwd = _geodesic_extent(spec, u, psi_u)
    a, b = bracket_minimum(dist_p, 0.0, step=0.25, lower=-back, upper=fwd)
    t = float(golden_section(dist_p, a, b, tol=1e-10))
    foot, psi_f = gamma(t)
    if t < 0:
        psi_f += math.pi
    tangent = _unit(psi_f)
    s = dist_p(t)
    if s < _DEGENERATE:
        theta, _ = _theta_from(tangent)
        return GeodesicFrame(theta, foot, 0.0, t)
    _, psi_p, psi_end = conformal.shoot(spec, p, foot)
    if _cross(_unit(psi_end), tangent) > 0:
        theta = psi_p % TWO_PI
    else:
        theta, s = (psi_p + math.pi) % TWO_PI, -s
    return GeodesicFrame(theta, foot, s, t)


def calibrate_bilipschitz(ctx: MetricContext, p, R: float, n_samples: int = 500,
                          seed: int = 0) -> GeometryCalibration:
    """Largest sampled ratio ``d(exp_x u, exp_x v) / |u - v|`` over x in B_R(p)
    and tangent vectors u, v of length at most R.

    Samples are drawn in the unit disk and scaled by R, so for a fixed seed
    the estimate is monotone in R.
    """
    p = _pt(p)
    ctx.check(p)
    rng = rng_for(seed, 0)

    def disk(n):
        r = np.sqrt(rng.random(n))
        a = rng.random(n) * TWO_PI
        return np.c_[r * np.cos(a), r * np.sin(a)]

    X, U, V = disk(n_samples), disk(n_samples), disk(n_samples)
    best = 1.0 if ctx.kind == EUCLIDEAN else 0.0
    for xi, ui, vi in zip(X, U, V):
        x = exp_map(ctx, p, R * xi)
        gap = R * float(np.hypot(*(ui - vi)))
        if gap < 1e-12:
            continue
        ratio = distance(ctx, exp_map(ctx, x, R * ui), exp_map(ctx, x, R * vi)) / gap
        best = max(best, ratio)
    return GeometryCalibration(float(R), float(best), int(n_samples))


def curvature_at(spec: ConformalMetricSpec, q) -> float:
    """Gaussian curvature ``-e^{-2 phi} Laplacian(phi)`` of a catalog metric."""
    q = _pt(q)
    if not spec.contains(q):
        raise DomainError(f"point {tuple(q)} outside the conformal domain")
    return float(spec.curvature(q[0], q[1]))
