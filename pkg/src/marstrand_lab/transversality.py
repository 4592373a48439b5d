"""Monte Carlo checks of the transversality law and the integral inequalities.

Parameter sampling is stratified: ``n_lambda`` midpoints of equal cells of
Lambda, identical for every delta, so empirical probabilities are exactly
monotone in delta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._rng import rng_for
from .dimension import loglog_fit
from .errors import DegenerateFitError, DegenerateInputError, PreconditionError, ResolutionError
from .fractals import PointCloud
from .geometry import poincare
from .geometry.core import frame
from .metric import (
    EUCLIDEAN,
    POINCARE,
    DiscreteMeasure,
    distance,
    energy,
    poincare_distance,
)
from .projections import (
    EUCLIDEAN_ANGLE,
    ProjectionFamily,
    TransversalityParams,
    pair_separation,
    project_grid,
    pushforward,
)

MIN_LAMBDA = 1000
MIN_PAIRS = 50
SIN_BAND = 1e-3
DEFAULT_DELTAS = tuple(np.geomspace(1e-3, 1.0, 16).tolist())


def lambda_grid(n: int, lo: float = 0.0, hi: float = math.pi) -> np.ndarray:
    """Midpoints of ``n`` equal cells of [lo, hi)."""
    return lo + (np.arange(n) + 0.5) * (hi - lo) / n


@dataclass(frozen=True)
class TransversalityReport:
    fitted: TransversalityParams
    r_squared: float
    delta_grid: tuple
    probabilities: tuple
    used: tuple
    probe_pairs: int
    lambda_samples: int
    seed: int
    C_lsq: float
    eta: Optional[float] = None

    def to_dict(self):
        return {
            "alpha": self.fitted.alpha,
            "kappa_hat": self.fitted.kappa,
            "C_hat": self.fitted.C,
            "C_lsq": self.C_lsq,
            "r_squared": self.r_squared,
            "delta_grid": list(self.delta_grid),
            "probabilities": list(self.probabilities),
            "used": list(self.used),
            "probe_pairs": self.probe_pairs,
            "lambda_samples": self.lambda_samples,
            "seed": self.seed,
            "eta": self.eta,
        }


@dataclass(frozen=True)
class InequalityReport:
    lhs: float
    rhs: float
    slack: float
    t: float
    alpha: float
    kappa: float
    C_used: float
    mc_stderr: float
    advisory: bool = False
    diverging: bool = False

    def to_dict(self):
        return dict(self.__dict__)


@dataclass(frozen=True)
class EtaEstimate:
    """Lemma-type lower constant ``eta`` with the sampling it was taken over."""

    eta: float
    pairs: int
    lambda_samples: int
    excluded_fraction: float
    worst_pair: tuple = field(default=())
    worst_lambda: float = float("nan")

    def to_dict(self):
        d = dict(self.__dict__)
        d["worst_pair"] = list(self.worst_pair)
        return d


def _alpha(family, alpha):
    return family.alpha if alpha is None else float(alpha)


def probability_estimate(family: ProjectionFamily, x1, x2, delta: float, alpha=None,
                         n_lambda: int = 10**4, seed: int = 0) -> float:
    """Fraction of stratified lambda with ``|pi x1 - pi x2| <= delta d(x1, x2)**alpha``.

    The midpoint rule makes the estimate deterministic; ``seed`` is accepted
    for a uniform interface and does not enter.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if np.array_equal(x1, x2):
        raise DegenerateInputError("probability needs two distinct points")
    if n_lambda < MIN_LAMBDA:
        raise PreconditionError(f"n_lambda must be at least {MIN_LAMBDA}")
    if delta < 0:
        raise PreconditionError("delta must be nonnegative")
    d = distance(family.context, x1, x2)
    sep = pair_separation(family, lambda_grid(n_lambda, *family.param_range), x1, x2)
    return float(np.mean(sep <= delta * d ** _alpha(family, alpha)))


def _pair_distances(ctx, P, Q):
    if ctx.kind == EUCLIDEAN:
        return np.hypot(*(P - Q).T)
    if ctx.kind == POINCARE:
        return poincare_distance(P, Q)
    return np.array([distance(ctx, p, q) for p, q in zip(P, Q)])


def sample_pairs(n_points: int, n_pairs: int, seed: int):
    """Distinct index pairs ``i < j``; all of them when there are few enough."""
    total = n_points * (n_points - 1) // 2
    if total == 0:
        raise DegenerateInputError("need at least two points to form pairs")
    if total <= n_pairs:
        i, j = np.triu_indices(n_points, 1)
        return i, j
    rng = rng_for(seed, 5)
    flat = np.sort(rng.choice(total, size=n_pairs, replace=False))
    # unrank flat indices of the strict upper triangle, row-major
    i, j = np.triu_indices(n_points, 1)
    return i[flat], j[flat]


def _check_grid(delta_grid):
    deltas = np.asarray(delta_grid, dtype=float)
    if deltas.ndim != 1 or len(deltas) < 2:
        raise DegenerateFitError("a fit needs at least two delta values")
    if np.any(deltas < 1e-3 * (1 - 1e-9)) or np.any(deltas > 1.0 * (1 + 1e-9)):
        raise PreconditionError("delta grid must lie in [1e-3, 1]")
    steps = np.diff(np.log(deltas))
    if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-6, atol=0):
        raise PreconditionError("delta grid must be geometric and increasing")
    return deltas


def worst_case_probabilities(ratios: np.ndarray, deltas) -> np.ndarray:
    """``max_pair mean_lambda [ratio <= delta]`` for each delta; ``ratios`` is
    ``(pairs, n_lambda)``."""
    srt = np.sort(ratios, axis=1)
    n = srt.shape[1]
    counts = np.stack([np.searchsorted(row, deltas, side="right") for row in srt])
    return counts.max(axis=0) / n


def fit_transversality(family: ProjectionFamily, cloud: PointCloud, alpha=None,
                       delta_grid=DEFAULT_DELTAS, n_pairs: int = 200, n_lambda: int = 2000,
                       seed: int = 0) -> TransversalityReport:
    """Fit ``P(delta) <= C delta**kappa`` to the worst pair at each delta.

    ``kappa_hat`` is the least-squares slope of log P against log delta over
    cells with ``P >= 2 / n_lambda``. ``C_hat`` is the smallest constant with
    ``P <= C_hat delta**kappa_hat`` on every used cell; the least-squares
    intercept is reported as ``C_lsq``.
    """
    deltas = _check_grid(delta_grid)
    if n_pairs < MIN_PAIRS:
        raise PreconditionError(f"n_pairs must be at least {MIN_PAIRS}")
    if n_lambda < MIN_LAMBDA:
        raise PreconditionError(f"n_lambda must be at least {MIN_LAMBDA}")
    a = _alpha(family, alpha)
    pts = cloud.points
    i, j = sample_pairs(len(pts), n_pairs, seed)
    d = _pair_distances(family.context, pts[i], pts[j])
    if np.any(d == 0):
        raise DegenerateInputError("cloud contains coincident points")
    used_idx, inverse = np.unique(np.concatenate([i, j]), return_inverse=True)
    coords = project_grid(family, lambda_grid(n_lambda, *family.param_range), pts[used_idx])
    ci, cj = inverse[: len(i)], inverse[len(i):]
    ratios = np.abs(coords[:, ci] - coords[:, cj]).T / (d**a)[:, None]
    probs = worst_case_probabilities(ratios, deltas)
    used = probs >= 2.0 / n_lambda
    if used.sum() < 2:
        raise DegenerateFitError(
            f"only {int(used.sum())} delta cells above 2/n_lambda; increase n_lambda")
    slope, intercept, r2 = loglog_fit(np.log(deltas[used]), np.log(probs[used]))
    if not slope > 0:
        raise DegenerateFitError(f"non-positive fitted exponent {slope:.3g}")
    C_hat = float(np.max(probs[used] / deltas[used] ** slope))
    return TransversalityReport(
        fitted=TransversalityParams(a, slope, C_hat),
        r_squared=r2,
        delta_grid=tuple(deltas.tolist()),
        probabilities=tuple(probs.tolist()),
        used=tuple(bool(u) for u in used),
        probe_pairs=len(i),
        lambda_samples=n_lambda,
        seed=seed,
        C_lsq=float(math.exp(intercept)),
    )


def _frame_angles(ctx, U, V):
    if ctx.kind == EUCLIDEAN:
        D = V - U
        # e_theta is the chord direction turned clockwise by a right angle
        return np.mod(np.arctan2(-D[:, 0], D[:, 1]), 2 * math.pi)
    if ctx.kind == POINCARE:
        return poincare.frame_arrays(poincare.to_complex(U), poincare.to_complex(V))
    return np.array([frame(ctx, u, v).theta for u, v in zip(U, V)])


def lemma_L1_eta(family: ProjectionFamily, cloud: PointCloud, n_lambda: int = 1000,
                 seed: int = 0, R: Optional[float] = None, max_pairs: Optional[int] = None,
                 chunk: int = 256) -> EtaEstimate:
    """``min d(pi_{lam+theta} u, pi_{lam+theta} v) / (|sin lam| d(u, v))`` over
    cloud pairs and a midpoint grid on [0, pi].

    Grid points with ``sin lam < 1e-3`` are excluded and their share reported.
    With ``R`` given, the cloud must lie in the closed ball of that radius
    about the base point. ``max_pairs`` subsamples pairs with ``seed``.
    """
    if not family.geometric:
        raise PreconditionError("the constant is defined for geodesic projection families")
    ctx = family.context
    pts = cloud.points
    if R is not None:
        r = _pair_distances(ctx, np.zeros_like(pts), pts)
        if np.any(r > R * (1 + 1e-12)):
            raise PreconditionError(f"cloud leaves the ball of radius {R:g} about the base point")
    n = len(pts)
    i, j = sample_pairs(n, max_pairs if max_pairs else n * (n - 1) // 2, seed)
    U, V = pts[i], pts[j]
    d = _pair_distances(ctx, U, V)
    if np.any(d == 0):
        raise DegenerateInputError("cloud contains coincident points")
    theta = _frame_angles(ctx, U, V)
    lam = lambda_grid(n_lambda, 0.0, math.pi)
    keep = np.sin(lam) >= SIN_BAND
    lam_k, sin_k = lam[keep], np.sin(lam[keep])
    best, arg = math.inf, (0, 0.0)
    for start in range(0, len(d), chunk):
        sl = slice(start, start + chunk)
        beta = lam_k[None, :] + theta[sl, None]
        if ctx.kind == EUCLIDEAN:
            D = V[sl] - U[sl]
            sep = np.abs(D[:, 0, None] * np.cos(beta) + D[:, 1, None] * np.sin(beta))
        elif ctx.kind == POINCARE:
            zu = poincare.to_complex(U[sl])[:, None]
            zv = poincare.to_complex(V[sl])[:, None]
            sep = np.abs(poincare.project_param(beta, zu) - poincare.project_param(beta, zv))
        else:
            sep = np.stack([pair_separation(family, b, u, v, strict=False)
                            for b, u, v in zip(beta, U[sl], V[sl])])
        ratio = sep / (sin_k[None, :] * d[sl, None])
        k = int(np.argmin(ratio))
        if ratio.flat[k] < best:
            p, q = divmod(k, ratio.shape[1])
            best, arg = float(ratio.flat[k]), (start + p, float(lam_k[q]))
    pair = (int(i[arg[0]]), int(j[arg[0]]))
    return EtaEstimate(best, len(d), n_lambda, float(1.0 - keep.mean()), pair, arg[1])


def check_lemma31(mu: DiscreteMeasure, family: ProjectionFamily, t: float,
                  params: TransversalityParams, n_lambda: int = 2000, seed: int = 0) -> InequalityReport:
    """Compare the lambda-average of ``I_t(nu_lam)`` with ``(1 + C t/(kappa - t)) I_{alpha t}(mu)``.

    The average is over the stratified grid; ``mc_stderr`` is the sample
    standard deviation of the per-lambda energies over sqrt(n_lambda).
    """
    if not 0.0 <= t < params.kappa:
        raise PreconditionError(f"t must lie in [0, kappa) = [0, {params.kappa:g})")
    energies = np.array([energy(pushforward(mu, family, lam), t)
                         for lam in lambda_grid(n_lambda, *family.param_range)])
    if np.all(energies == energies[0]):
        lhs, err = float(energies[0]), 0.0
    else:
        lhs = float(energies.mean())
        err = float(energies.std(ddof=1) / math.sqrt(len(energies)))
    c_used = 1.0 + params.C * t / (params.kappa - t)
    rhs = c_used * energy(mu, params.alpha * t)
    return InequalityReport(lhs, rhs, rhs - lhs, float(t), params.alpha, params.kappa,
                            c_used, err)


def _line_densities(coords, weights, kappa, radii):
    """Tail-half minimum of ``nu(B(y, r)) / r**kappa`` at every atom ``y``."""
    order = np.argsort(coords)
    x, w = coords[order], weights[order]
    cum = np.concatenate([[0.0], np.cumsum(w)])
    tail = radii[len(radii) // 2:]
    ratios = np.empty((len(tail), len(x)))
    for k, r in enumerate(tail):
        lo = np.searchsorted(x, x - r, side="left")
        hi = np.searchsorted(x, x + r, side="right")
        ratios[k] = (cum[hi] - cum[lo]) / r**kappa
    masses = ratios * tail[:, None] ** kappa
    isolated = np.all(np.isclose(masses, masses[0]), axis=0) & (masses[0] > 0)
    out = np.empty(len(x))
    out[order] = ratios.min(axis=0)
    flag = np.empty(len(x), dtype=bool)
    flag[order] = isolated
    return out, flag


def check_lemma32(mu: DiscreteMeasure, family: ProjectionFamily, params: TransversalityParams,
                  r_ladder, n_lambda: int = 2000, seed: int = 0) -> InequalityReport:
    """Advisory comparison of the lambda-average of ``sum_i w_i D^kappa nu_lam(pi p_i)``
    with ``C I_{alpha kappa}(mu)``.

    The finite-scale density proxy overestimates the liminf, so negative
    slack is reported rather than treated as a failure.
    """
    radii = np.asarray(r_ladder, dtype=float)
    if radii.ndim != 1 or len(radii) < 2 or np.any(np.diff(radii) >= 0) or radii[-1] <= 0:
        raise PreconditionError("radius ladder must be strictly decreasing and positive")
    vals, diverging = [], False
    for lam in lambda_grid(n_lambda, *family.param_range):
        nu = pushforward(mu, family, lam)
        if nu.resolution is not None and radii[-1] < 3.0 * nu.resolution:
            raise ResolutionError(
                f"ladder floor {radii[-1]:.3g} below 3x projected resolution {3.0 * nu.resolution:.3g}")
        dens, flag = _line_densities(nu.points, nu.weights, params.kappa, radii)
        diverging |= bool(np.any(flag & (nu.weights > 0)))
        vals.append(float(np.sum(nu.weights * dens)))
    vals = np.array(vals)
    lhs = float(vals.mean())
    err = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
    rhs = params.C * energy(mu, params.alpha * params.kappa)
    return InequalityReport(lhs, rhs, rhs - lhs, params.kappa, params.alpha, params.kappa,
                            params.C, err, advisory=True, diverging=diverging)
