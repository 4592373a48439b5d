"""Projection families pi: Lambda x X -> R and pushforward measures.

Built-in families project onto lines (or geodesics) through a base point and
return the signed arclength coordinate on the target, so Y = R with Lebesgue
measure as the reference measure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError
from .geometry import poincare
from .geometry.core import ParamGeodesic, project_param
from .metric import (
    CONFORMAL,
    EUCLIDEAN,
    EUCLIDEAN_CTX,
    POINCARE,
    POINCARE_CTX,
    DiscreteMeasure,
    MetricContext,
)

EUCLIDEAN_ANGLE = "euclidean"
HYPERBOLIC = "hyperbolic"
SYNTHETIC = "synthetic"
KINDS = (EUCLIDEAN_ANGLE, HYPERBOLIC, SYNTHETIC)


@dataclass(frozen=True)
class TransversalityParams:
    alpha: float
    kappa: float
    C: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.kappa > 0 and self.C > 0):
            raise PreconditionError("alpha, kappa and C must be positive")


@dataclass(frozen=True)
class ProjectionFamily:
    """A closed enumeration of projection families over Lambda = [0, pi).

    ``synthetic`` is a test family with a prescribed transversality law: for
    pairs on a horizontal line, ``P[|pi x1 - pi x2| <= delta d] = min(1, C delta**kappa)``.
    """

    kind: str
    context: MetricContext = EUCLIDEAN_CTX
    alpha: float = 1.0
    kappa: float = 1.0
    C: float = 1.0
    param_range: tuple = (0.0, math.pi)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PreconditionError(f"unknown projection family {self.kind!r}")
        if not (self.alpha > 0 and self.kappa > 0 and self.C > 0):
            raise PreconditionError("alpha, kappa and C must be positive")
        lo, hi = self.param_range
        if not hi > lo:
            raise PreconditionError("empty parameter range")
        if self.kind == HYPERBOLIC and self.context.kind == EUCLIDEAN:
            raise PreconditionError("the hyperbolic family needs a curved metric context")
        if self.kind != HYPERBOLIC and self.context.kind != EUCLIDEAN:
            raise PreconditionError(f"the {self.kind} family lives in the Euclidean plane")

    @classmethod
    def euclidean(cls):
        return cls(EUCLIDEAN_ANGLE)

    @classmethod
    def hyperbolic(cls, context: MetricContext = POINCARE_CTX):
        return cls(HYPERBOLIC, context)

    @classmethod
    def synthetic(cls, C: float, kappa: float = 1.0):
        return cls(SYNTHETIC, kappa=kappa, C=C)

    @property
    def geometric(self) -> bool:
        return self.kind in (EUCLIDEAN_ANGLE, HYPERBOLIC)

    def lipschitz(self, lam: float) -> float:
        """Lipschitz constant of ``pi_lam`` in the source metric."""
        if self.kind == SYNTHETIC:
            return max(_synthetic_gain(self, lam), 1.0)
        return 1.0


def _synthetic_gain(family, lam):
    return (np.asarray(lam) / math.pi / family.C) ** (1.0 / family.kappa)


def _check_lambda(family, lam):
    lo, hi = family.param_range
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < lo) or np.any(lam >= hi) or not np.all(np.isfinite(lam)):
        raise DomainError(f"lambda outside [{lo:g}, {hi:g})")


def project_many(family: ProjectionFamily, lam, points, strict: bool = True) -> np.ndarray:
    """Coordinates of ``points`` (shape ``(N, 2)``) on the target of ``pi_lam``.

    ``lam`` may be a scalar or an array broadcasting against ``N``. With
    ``strict=False`` geometric families accept any real angle (the geodesic
    ``l_lam`` for lam in [0, 2 pi) and beyond), as frame computations need.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if strict or not family.geometric:
        _check_lambda(family, lam)
    lam = np.asarray(lam, dtype=float)
    if family.kind == EUCLIDEAN_ANGLE:
        return pts[:, 0] * np.cos(lam) + pts[:, 1] * np.sin(lam)
    if family.kind == SYNTHETIC:
        return _synthetic_gain(family, lam) * pts[:, 0]
    ctx = family.context
    if ctx.kind == POINCARE:
        if np.any(np.sum(pts**2, axis=1) >= 1.0):
            raise DomainError("point outside the Poincare disk")
        return poincare.project_param(lam, poincare.to_complex(pts))
    lam_b = np.broadcast_to(lam, (len(pts),))
    return np.array([project_param(ParamGeodesic((0.0, 0.0), float(a), ctx), q)
                     for a, q in zip(lam_b, pts)])


def project(family: ProjectionFamily, lam: float, x) -> float:
    """Real coordinate of ``pi_lam(x)``."""
    return float(project_many(family, lam, np.asarray(x, dtype=float)[None, :])[0])


def project_grid(family: ProjectionFamily, lams, points, strict: bool = True) -> np.ndarray:
    """Coordinates of every point under every ``pi_lam``; shape ``(len(lams), N)``."""
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if family.kind == HYPERBOLIC and family.context.kind == CONFORMAL:
        return np.stack([project_many(family, l, pts, strict) for l in lams])
    return _grid_closed_form(family, lams, pts, strict)


def _grid_closed_form(family, lams, pts, strict):
    if strict or not family.geometric:
        _check_lambda(family, lams)
    lam = lams[:, None]
    if family.kind == EUCLIDEAN_ANGLE:
        return pts[None, :, 0] * np.cos(lam) + pts[None, :, 1] * np.sin(lam)
    if family.kind == SYNTHETIC:
        return _synthetic_gain(family, lam) * pts[None, :, 0]
    if np.any(np.sum(pts**2, axis=1) >= 1.0):
        raise DomainError("point outside the Poincare disk")
    return poincare.project_param(lam, poincare.to_complex(pts)[None, :])


def pair_separation(family: ProjectionFamily, lam, x1, x2, strict: bool = True):
    """``|pi_lam(x1) - pi_lam(x2)|``, vectorised over ``lam``."""
    lam = np.asarray(lam, dtype=float)
    c = project_grid(family, lam.ravel(), np.array([x1, x2], dtype=float), strict)
    return np.abs(c[:, 0] - c[:, 1]).reshape(lam.shape)


def pushforward(mu: DiscreteMeasure, family: ProjectionFamily, lam: float) -> DiscreteMeasure:
    """``nu_lam = (pi_lam)_* mu`` as a line-supported measure with the same weights."""
    if mu.on_line:
        raise PreconditionError("pushforward needs a plane measure")
    if mu.context.kind != family.context.kind:
        raise PreconditionError(
            f"measure lives in the {mu.context.kind} context, family in {family.context.kind}")
    coords = project_many(family, lam, mu.points)
    res = None if mu.resolution is None else mu.resolution * family.lipschitz(lam)
    return DiscreteMeasure(coords, mu.weights.copy(), EUCLIDEAN_CTX, res)


def theta_lambda(lam: float, theta_uv: float) -> float:
    """Angle whose geodesic shares its trace with ``l_lam`` and lies in the
    half-turn starting at ``theta_uv``.

    The value is piecewise: for theta_uv in [0, pi) it is ``lam + pi`` when
    ``lam < theta_uv`` and ``lam`` otherwise; for theta_uv in [pi, 2 pi) it is
    ``lam`` when ``lam < theta_uv - pi`` and ``lam + pi`` otherwise. When
    theta_uv >= pi and lam < theta_uv - pi, the result lies in that half-turn
    only modulo 2 pi.
    """
    if not (0.0 <= lam <= math.pi):
        raise DomainError("lambda must lie in [0, pi]")
    if not (0.0 <= theta_uv < 2.0 * math.pi):
        raise DomainError("theta must lie in [0, 2 pi)")
    if theta_uv < math.pi:
        return lam + math.pi if lam < theta_uv else lam
    return lam if lam < theta_uv - math.pi else lam + math.pi
