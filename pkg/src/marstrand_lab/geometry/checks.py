"""Seeded property suites for the geometry backends.

Each check draws a random corpus, evaluates a residual per instance (positive
means the property is violated by that much) and counts instances whose
residual exceeds the tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .._rng import rng_for
from ..metric import (
    CONFORMAL,
    POINCARE,
    POINCARE_CTX,
    ConformalMetricSpec,
    MetricContext,
    conformal_context,
    distance,
    poincare_distance,
)
from . import conformal, poincare
from .core import (
    ParamGeodesic,
    _geodesic_extent,
    angle_at,
    exp_map,
    frame,
    geodesic_point,
    log_map,
    project_param,
    segment_point,
)
from .golden import bracket_minimum, golden_section

CLOSED_TOL = 1e-7
ODE_TOL = 1e-4


@dataclass(frozen=True)
class CheckResult:
    name: str
    backend: str
    n: int
    failures: int
    worst_residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_dict(self):
        return {
            "name": self.name,
            "backend": self.backend,
            "n": self.n,
            "failures": self.failures,
            "worst_residual": self.worst_residual,
            "tol": self.tol,
            "passed": self.passed,
        }


def _result(name, backend, residuals, tol):
    r = np.asarray(residuals, dtype=float)
    return CheckResult(name, backend, int(r.size), int(np.sum(~(r <= tol))), float(np.max(r)), tol)


def bowl_metric() -> ConformalMetricSpec:
    """``phi = (x^2 + y^2) / 2`` on [-1, 1]^2, curvature ``-2 exp(-(x^2 + y^2))``."""
    return ConformalMetricSpec.polynomial(((0.0, 0.0, 0.5), (0.0, 0.0, 0.0), (0.5, 0.0, 0.0)),
                                          (-1.0, 1.0, -1.0, 1.0))


def _backend_name(ctx):
    return ctx.kind if ctx.kind != CONFORMAL else f"conformal-{ctx.conformal_factor.kind}"


def sample_points(ctx: MetricContext, n: int, rng, radius: float = 0.8) -> np.ndarray:
    """Uniform points in the Euclidean disk of ``radius`` (clipped to the
    conformal rectangle's inner square of the same half-width)."""
    if ctx.kind == CONFORMAL and ctx.conformal_factor.kind != "poincare":
        xmin, xmax, ymin, ymax = ctx.conformal_factor.bounds
        cx, cy = (xmin + xmax) / 2, (ymin + ymax) / 2
        h = min(radius, (xmax - xmin) / 2, (ymax - ymin) / 2) * 0.75
        return np.c_[rng.uniform(cx - h, cx + h, n), rng.uniform(cy - h, cy + h, n)]
    r = radius * np.sqrt(rng.random(n))
    a = rng.random(n) * 2 * math.pi
    return np.c_[r * np.cos(a), r * np.sin(a)]


def _angle(p, q):
    return np.abs(np.remainder(p - q + math.pi, 2 * math.pi) - math.pi)


def _triangle_data(ctx, X, Y, Z):
    """Side lengths and vertex angles of each triangle (x, y, z)."""
    if ctx.kind == POINCARE:
        zx, zy, zz = (poincare.to_complex(P) for P in (X, Y, Z))
        dxy, dyz, dzx = poincare_distance(X, Y), poincare_distance(Y, Z), poincare_distance(Z, X)
        ang_y = _angle(poincare.direction(zy, zx), poincare.direction(zy, zz))
        ang_z = _angle(poincare.direction(zz, zx), poincare.direction(zz, zy))
        return dxy, dyz, dzx, ang_y, ang_z
    spec = ctx.conformal_factor
    # three shots give every side and, through arrival directions, every angle
    s_xy = conformal.shoot_many(spec, X, Y)
    s_yz = conformal.shoot_many(spec, Y, Z)
    s_zx = conformal.shoot_many(spec, Z, X)
    ang_y = _angle(s_xy[:, 2] + math.pi, s_yz[:, 1])
    ang_z = _angle(s_yz[:, 2] + math.pi, s_zx[:, 1])
    return s_xy[:, 0], s_yz[:, 0], s_zx[:, 0], ang_y, ang_z


def check_triangles(ctx: MetricContext, n: int = 10**4, seed: int = 0, tol=None):
    """Sine lower bound ``d(x,y) >= sin(angle_z(x,y)) d(x,z)`` and the
    nonpositive-curvature law of cosines at y, on random triples."""
    tol = tol if tol is not None else (CLOSED_TOL if ctx.kind == POINCARE else ODE_TOL)
    rng = rng_for(seed, 10)
    X, Y, Z = (sample_points(ctx, n, rng) for _ in range(3))
    dxy, dyz, dzx, ang_y, ang_z = _triangle_data(ctx, X, Y, Z)
    sine = np.sin(ang_z) * dzx - dxy
    cosine = dxy**2 + dyz**2 - 2 * dxy * dyz * np.cos(ang_y) - dzx**2
    name = _backend_name(ctx)
    return [_result("sine_lower_bound", name, sine, tol), _result("law_of_cosines", name, cosine, tol)]


def _geodesic_distances(ctx, geo, z, s):
    """Distances from z to l(s) for an array of parameters."""
    if ctx.kind == POINCARE:
        pts = poincare.to_point(poincare.geodesic_point(geo.angle, np.asarray(s)))
        return poincare_distance(pts, z[None, :])
    pts = np.array([geodesic_point(geo, si) for si in s])
    return conformal.shoot_many(ctx.conformal_factor, pts, np.tile(z, (len(pts), 1)))[:, 0]


def check_nearest_point(ctx: MetricContext, n: int = 1000, seed: int = 0, n_random: int = 200,
                        span: float = 3.0):
    """Properties of the nearest-point map onto geodesics through the base point.

    Minimality against ``n_random`` random parameters, invariance along the
    segment from x to its foot, and an angle of at least a right angle at the
    foot towards any other point of the geodesic.
    """
    rng = rng_for(seed, 11)
    Z = sample_points(ctx, n, rng)
    lams = rng.random(n) * math.pi
    mins, segs, obtuse = [], [], []
    for z, lam in zip(Z, lams):
        geo = ParamGeodesic((0.0, 0.0), float(lam), ctx)
        s = project_param(geo, z)
        d_star = _geodesic_distances(ctx, geo, z, np.array([s]))[0]
        if ctx.kind == POINCARE:
            lo, hi = -5.0, 5.0
        else:
            back, fwd = _geodesic_extent(ctx.conformal_factor, geo.base, geo.angle)
            lo, hi = -back, fwd
        others = rng.uniform(max(s - span, lo), min(s + span, hi), n_random)
        mins.append(d_star - float(np.min(_geodesic_distances(ctx, geo, z, others))))
        foot = geodesic_point(geo, s)
        x0 = segment_point(ctx, z, foot, float(rng.uniform(0.05, 0.95)))
        segs.append(abs(project_param(geo, x0) - s))
        step = float(rng.uniform(0.1, 1.0)) * (1 if rng.random() < 0.5 else -1)
        y = geodesic_point(geo, s + step)
        obtuse.append(math.pi / 2 - angle_at(ctx, foot, z, y))
    name = _backend_name(ctx)
    seg_tol = 1e-7 if ctx.kind == POINCARE else ODE_TOL
    ang_tol = 1e-6 if ctx.kind == POINCARE else ODE_TOL
    return [
        _result("nearest_point_minimal", name, mins, 1e-9 if ctx.kind == POINCARE else ODE_TOL),
        _result("nearest_point_segment_invariant", name, segs, seg_tol),
        _result("nearest_point_right_angle", name, obtuse, ang_tol),
    ]


def check_frames(ctx: MetricContext, n: int = 200, seed: int = 0, base=(0.0, 0.0)):
    """Foot on the geodesic through u, v; orthogonal meeting; positive orientation."""
    rng = rng_for(seed, 12)
    U, V = sample_points(ctx, n, rng), sample_points(ctx, n, rng)
    on, ortho, orient = [], [], []
    for u, v in zip(U, V):
        fr = frame(ctx, u, v, base)
        w = log_map(ctx, u, v)
        d = w / np.hypot(*w)
        on.append(distance(ctx, fr.foot, exp_map(ctx, u, fr.t_param * d)))
        geo = ParamGeodesic(base, fr.theta, ctx)
        on.append(distance(ctx, fr.foot, geodesic_point(geo, fr.s_param)))
        q = geodesic_point(geo, fr.s_param + 0.5)
        g = exp_map(ctx, u, (fr.t_param + 0.5) * d)
        ortho.append(abs(angle_at(ctx, fr.foot, q, g) - math.pi / 2))
        a, b = log_map(ctx, fr.foot, q), log_map(ctx, fr.foot, g)
        orient.append(-(a[0] * b[1] - a[1] * b[0]) / (np.hypot(*a) * np.hypot(*b)))
    name = _backend_name(ctx)
    closed = ctx.kind == POINCARE
    return [
        _result("frame_foot_on_geodesics", name, on, 1e-8 if closed else ODE_TOL),
        _result("frame_orthogonal", name, ortho, 1e-6 if closed else ODE_TOL),
        _result("frame_positive", name, orient, -0.5),
    ]


def _rel(a, b, floor=1e-12):
    return abs(a - b) / max(abs(b), floor)


def check_backend_agreement(n: int = 100, seed: int = 0, radius: float = 0.8, tol: float = 1e-4):
    """Disk closed forms against the ODE backend carrying the disk's conformal factor."""
    ode = conformal_context(ConformalMetricSpec.poincare())
    rng = rng_for(seed, 13)
    A, B = sample_points(POINCARE_CTX, n, rng, radius), sample_points(POINCARE_CTX, n, rng, radius)
    dist_err = [_rel(distance(ode, a, b), distance(POINCARE_CTX, a, b)) for a, b in zip(A, B)]
    exp_err = []
    for a in A:
        psi, length = rng.random() * 2 * math.pi, rng.uniform(0.1, 1.5)
        v = length * np.array([math.cos(psi), math.sin(psi)])
        p_cf = exp_map(POINCARE_CTX, a, v)
        if np.hypot(*p_cf) > 0.95:
            v, p_cf = -v, exp_map(POINCARE_CTX, a, -v)
        exp_err.append(distance(POINCARE_CTX, exp_map(ode, a, v), p_cf) / length)
    proj_err = []
    for z in B:
        lam = float(rng.random() * math.pi)
        s_cf = project_param(ParamGeodesic((0.0, 0.0), lam, POINCARE_CTX), z)
        s_ode = project_param(ParamGeodesic((0.0, 0.0), lam, ode), z)
        proj_err.append(_rel(s_ode, s_cf))
    return [
        _result("agreement_distance", "poincare-vs-ode", dist_err, tol),
        _result("agreement_exp", "poincare-vs-ode", exp_err, tol),
        _result("agreement_projection", "poincare-vs-ode", proj_err, tol),
    ]


def oracle_project_param(lam: float, z, dps: int = 40) -> float:
    """Nearest-point parameter on the disk diameter at angle ``lam`` by
    golden-section search on the exact distance in extended precision."""
    with mpmath.workdps(dps):
        lam = mpmath.mpf(lam)
        zc = mpmath.mpc(float(z[0]), float(z[1]))
        e = mpmath.expjpi(lam / mpmath.pi)
        rz = 1 - abs(zc) ** 2

        def dist(s):
            w = mpmath.tanh(mpmath.mpf(s) / 2) * e
            return 2 * mpmath.asinh(abs(zc - w) / mpmath.sqrt(rz * (1 - abs(w) ** 2)))

        a, b = bracket_minimum(lambda s: float(dist(s)), 0.0, step=0.25)
        invphi = (mpmath.sqrt(5) - 1) / 2
        s = golden_section(dist, mpmath.mpf(a), mpmath.mpf(b), tol=mpmath.mpf(10) ** (-(dps // 2)),
                           max_iter=1000, invphi=invphi)
        return float(s)


def check_projection_oracle(n: int = 100, seed: int = 0, tol: float = 1e-8):
    rng = rng_for(seed, 14)
    Z = sample_points(POINCARE_CTX, n, rng)
    lams = rng.random(n) * math.pi
    err = [abs(float(poincare.project_param(l, complex(*z))) - oracle_project_param(l, z))
           for l, z in zip(lams, Z)]
    return [_result("projection_oracle", "poincare", err, tol)]


def check_theta_claim(n: int = 1000, seed: int = 0, tol: float = 1e-9):
    """Separation along ``l_lam`` equals separation along ``l_{theta_lam}``, and
    along ``l_{lam + pi}``."""
    from ..projections import theta_lambda

    rng = rng_for(seed, 15)
    U, V = sample_points(POINCARE_CTX, n, rng), sample_points(POINCARE_CTX, n, rng)
    lams = rng.random(n) * math.pi
    theta = poincare.frame_arrays(poincare.to_complex(U), poincare.to_complex(V))

    def sep(angle, u, v):
        return abs(float(poincare.project_param(angle, complex(*u)) - poincare.project_param(angle, complex(*v))))

    claim, flip = [], []
    for lam, th, u, v in zip(lams, theta, U, V):
        base = sep(lam, u, v)
        claim.append(abs(base - sep(theta_lambda(float(lam), float(th)), u, v)))
        flip.append(abs(base - sep(lam + math.pi, u, v)))
    return [_result("theta_claim", "poincare", claim, tol),
            _result("opposite_geodesic", "poincare", flip, tol)]


def run_geometry_checks(seed: int = 0, n_nearest: int = 1000, n_triples: int = 10**4,
                        n_agree: int = 100, n_claim: int = 1000, n_frames: int = 200,
                        ode_spec=None, ode_triples=None, ode_nearest: int = 20):
    """The full suite on both curved backends; the ODE backend runs the
    nearest-point suite on a reduced corpus (``ode_nearest``)."""
    ode = conformal_context(ode_spec if ode_spec is not None else bowl_metric())
    out = []
    out += check_triangles(POINCARE_CTX, n_triples, seed)
    out += check_triangles(ode, ode_triples if ode_triples is not None else n_triples, seed)
    out += check_nearest_point(POINCARE_CTX, n_nearest, seed)
    if ode_nearest:
        out += check_nearest_point(ode, ode_nearest, seed)
    out += check_frames(POINCARE_CTX, n_frames, seed)
    out += check_backend_agreement(n_agree, seed)
    out += check_projection_oracle(n_agree, seed)
    out += check_theta_claim(n_claim, seed)
    return out
