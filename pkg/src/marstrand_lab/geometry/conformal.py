"""Geodesics of a conformal metric ``e^{2 phi} |dz|^2`` by RK4 integration.

The state is ``(x, y, psi)`` with ``psi`` the coordinate direction of the unit
velocity, integrated in arclength:

    x' = e^{-phi} cos psi,   y' = e^{-phi} sin psi,
    psi' = e^{-phi} (phi_y cos psi - phi_x sin psi).

Angles measured in coordinates equal Riemannian angles (the metric is
conformal), so tangent vectors are handled as (direction, length) pairs.
Boundary-value distances come from shooting on the initial direction.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..errors import DomainError, SolverError

STEP = 1e-3
MISS_TOL = 1e-8
_MAX_LENGTH = 200.0

_KIND = {"flat": 0, "poincare": 1, "polynomial": 2}

OK, EXITED, NO_PASS = 0, 1, 2


@njit(cache=True)
def _phi_grad(kind, coeffs, x, y):
    """Returns (e^{-phi}, phi_x, phi_y)."""
    if kind == 0:
        return 1.0, 0.0, 0.0
    if kind == 1:
        den = 1.0 - x * x - y * y
        return 0.5 * den, 2.0 * x / den, 2.0 * y / den
    phi = 0.0
    px = 0.0
    py = 0.0
    ni, nj = coeffs.shape
    xp = np.empty(ni + 1)
    yp = np.empty(nj + 1)
    xp[0] = 1.0
    yp[0] = 1.0
    for i in range(ni):
        xp[i + 1] = xp[i] * x
    for j in range(nj):
        yp[j + 1] = yp[j] * y
    for i in range(ni):
        for j in range(nj):
            c = coeffs[i, j]
            if c != 0.0:
                phi += c * xp[i] * yp[j]
                if i > 0:
                    px += c * i * xp[i - 1] * yp[j]
                if j > 0:
                    py += c * j * xp[i] * yp[j - 1]
    return math.exp(-phi), px, py


@njit(cache=True)
def _rhs(kind, coeffs, x, y, psi):
    s, px, py = _phi_grad(kind, coeffs, x, y)
    c = math.cos(psi)
    sn = math.sin(psi)
    return s * c, s * sn, s * (py * c - px * sn)


@njit(cache=True)
def _inside(bounds, rmax, x, y):
    if x < bounds[0] or x > bounds[1] or y < bounds[2] or y > bounds[3]:
        return False
    return x * x + y * y < rmax * rmax


@njit(cache=True)
def _rk4(kind, coeffs, x, y, psi, h):
    k1x, k1y, k1p = _rhs(kind, coeffs, x, y, psi)
    k2x, k2y, k2p = _rhs(kind, coeffs, x + 0.5 * h * k1x, y + 0.5 * h * k1y, psi + 0.5 * h * k1p)
    k3x, k3y, k3p = _rhs(kind, coeffs, x + 0.5 * h * k2x, y + 0.5 * h * k2y, psi + 0.5 * h * k2p)
    k4x, k4y, k4p = _rhs(kind, coeffs, x + h * k3x, y + h * k3y, psi + h * k3p)
    return (
        x + h * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) / 6.0,
        y + h * (k1y + 2.0 * k2y + 2.0 * k3y + k4y) / 6.0,
        psi + h * (k1p + 2.0 * k2p + 2.0 * k3p + k4p) / 6.0,
    )


@njit(cache=True)
def _integrate(kind, coeffs, bounds, rmax, x, y, psi, length, h):
    """Follow the geodesic for ``length`` (>= 0); returns (x, y, psi, status)."""
    n = int(length / h)
    for _ in range(n):
        x, y, psi = _rk4(kind, coeffs, x, y, psi, h)
        if not _inside(bounds, rmax, x, y):
            return x, y, psi, EXITED
    rest = length - n * h
    if rest > 0.0:
        x, y, psi = _rk4(kind, coeffs, x, y, psi, rest)
        if not _inside(bounds, rmax, x, y):
            return x, y, psi, EXITED
    return x, y, psi, OK


@njit(cache=True)
def _miss(kind, coeffs, bounds, rmax, ax, ay, psi0, bx, by, h):
    """Shoot from a with direction psi0 until passing b.

    Returns (lateral miss, arclength, final psi, status). The geodesic passes b
    where the Euclidean offset b - x(s) turns orthogonal to the velocity; the
    miss is the signed lateral offset there (positive: b lies to the left).
    """
    x, y, psi = ax, ay, psi0
    s = 0.0
    along = (bx - x) * math.cos(psi) + (by - y) * math.sin(psi)
    if along <= 0.0:
        return (-(bx - x) * math.sin(psi) + (by - y) * math.cos(psi)), 0.0, psi, NO_PASS
    while s < _MAX_LENGTH:
        nx, ny, npsi = _rk4(kind, coeffs, x, y, psi, h)
        if not _inside(bounds, rmax, nx, ny):
            lat = math.cos(npsi) * (by - ny) - math.sin(npsi) * (bx - nx)
            return lat, s + h, npsi, EXITED
        nalong = (bx - nx) * math.cos(npsi) + (by - ny) * math.sin(npsi)
        if nalong <= 0.0:
            lo = 0.0
            hi = h
            flo = along
            fhi = nalong
            tx, ty, tpsi = nx, ny, npsi
            tau = h
            for _ in range(60):
                tau = lo + (hi - lo) * flo / (flo - fhi)
                if tau <= lo or tau >= hi:
                    tau = 0.5 * (lo + hi)
                tx, ty, tpsi = _rk4(kind, coeffs, x, y, psi, tau)
                ft = (bx - tx) * math.cos(tpsi) + (by - ty) * math.sin(tpsi)
                if abs(ft) < 1e-15 or hi - lo < 1e-16:
                    break
                if ft > 0.0:
                    lo = tau
                    flo = ft
                else:
                    hi = tau
                    fhi = ft
            lat = math.cos(tpsi) * (by - ty) - math.sin(tpsi) * (bx - tx)
            return lat, s + tau, tpsi, OK
        x, y, psi, along = nx, ny, npsi, nalong
        s += h
    return 0.0, s, psi, NO_PASS


@njit(cache=True)
def _shoot(kind, coeffs, bounds, rmax, ax, ay, bx, by, psi_guess, h, tol):
    """Initial direction of the geodesic a -> b; returns (length, psi0, psi_end, status).

    Bracketed root-finding on the lateral miss (Illinois false position with a
    bisection fallback), stopping once |miss| < tol.
    """
    dx = bx - ax
    dy = by - ay
    if dx == 0.0 and dy == 0.0:
        return 0.0, 0.0, 0.0, OK
    chord = math.atan2(dy, dx)
    g = psi_guess
    # keep the guess within a quarter turn of the chord direction
    off = math.atan2(math.sin(g - chord), math.cos(g - chord))
    if not (abs(off) < 1.4):
        g = chord
    f0, s0, e0, st0 = _miss(kind, coeffs, bounds, rmax, ax, ay, g, bx, by, h)
    if st0 == OK and abs(f0) < tol:
        return s0, g, e0, OK
    # rotating the start direction counter-clockwise moves b to the right;
    # first step from the flat-space estimate of the needed rotation
    sign = 1.0 if f0 > 0.0 else -1.0
    step = min(max(1.5 * abs(f0) / math.hypot(dx, dy), 1e-9), 0.5)
    lo = g
    flo = f0
    hi = g
    fhi = f0
    found = False
    for _ in range(12):
        hi = g + sign * step
        off = math.atan2(math.sin(hi - chord), math.cos(hi - chord))
        if abs(off) > 1.55:
            hi = chord + sign * 1.55
        fhi, s1, e1, st1 = _miss(kind, coeffs, bounds, rmax, ax, ay, hi, bx, by, h)
        if fhi * f0 <= 0.0:
            found = True
            break
        lo = hi
        flo = fhi
        step *= 3.0
    if not found:
        return 0.0, g, 0.0, NO_PASS
    side = 0
    length = 0.0
    psi_end = 0.0
    status = NO_PASS
    for _ in range(200):
        m = hi - (hi - lo) * fhi / (fhi - flo)
        if not (min(lo, hi) < m < max(lo, hi)):
            m = 0.5 * (lo + hi)
        fm, length, psi_end, status = _miss(kind, coeffs, bounds, rmax, ax, ay, m, bx, by, h)
        if status == OK and abs(fm) < tol:
            return length, m, psi_end, OK
        if abs(hi - lo) < 1e-15:
            return length, m, psi_end, status
        if fm * fhi < 0.0:
            lo = hi
            flo = fhi
            hi = m
            fhi = fm
            side = 0
        else:
            hi = m
            fhi = fm
            if side == 1:
                flo *= 0.5
            side = 1
    return length, m, psi_end, NO_PASS


@njit(cache=True)
def _shoot_batch(kind, coeffs, bounds, rmax, A, B, h, tol):
    n = A.shape[0]
    out = np.empty((n, 4))
    for i in range(n):
        ln, p0, pe, st = _shoot(kind, coeffs, bounds, rmax, A[i, 0], A[i, 1], B[i, 0], B[i, 1],
                                math.atan2(B[i, 1] - A[i, 1], B[i, 0] - A[i, 0]), h, tol)
        out[i, 0] = ln
        out[i, 1] = p0
        out[i, 2] = pe
        out[i, 3] = st
    return out


def _args(spec):
    return (_KIND[spec.kind], spec.coeff_array, np.asarray(spec.bounds, dtype=float),
            float(spec.rmax))


def _check(spec, *points):
    for q in points:
        if not spec.contains(q):
            raise DomainError(f"point {tuple(q)} outside the conformal domain")


def shoot(spec, a, b, psi_guess=None, h=STEP, tol=MISS_TOL):
    """Geodesic from a to b: ``(length, initial direction, final direction)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _check(spec, a, b)
    if np.array_equal(a, b):
        return 0.0, 0.0, 0.0
    if psi_guess is None:
        psi_guess = math.atan2(b[1] - a[1], b[0] - a[0])
    length, p0, pe, st = _shoot(*_args(spec), a[0], a[1], b[0], b[1], float(psi_guess), h, tol)
    if st != OK:
        raise SolverError("geodesic shooting did not converge", a=tuple(a), b=tuple(b), status=int(st))
    return float(length), float(p0), float(pe)


def shoot_many(spec, A, B, h=STEP, tol=MISS_TOL):
    """Vector form of :func:`shoot`; returns an ``(N, 3)`` array."""
    A = np.ascontiguousarray(A, dtype=float)
    B = np.ascontiguousarray(B, dtype=float)
    for q in np.concatenate([A, B]):
        _check(spec, q)
    out = _shoot_batch(*_args(spec), A, B, h, tol)
    same = np.all(A == B, axis=1)
    bad = (out[:, 3] != OK) & ~same
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise SolverError("geodesic shooting did not converge", a=tuple(A[i]), b=tuple(B[i]))
    out[same, :3] = 0.0
    return out[:, :3]


def distance(spec, a, b) -> float:
    return shoot(spec, a, b)[0]


def exp_point(spec, base, psi, length, h=STEP):
    """Endpoint and final direction after ``length`` along direction ``psi``."""
    base = np.asarray(base, dtype=float)
    _check(spec, base)
    if length < 0:
        psi, length = psi + math.pi, -length
    x, y, pe, st = _integrate(*_args(spec), base[0], base[1], float(psi), float(length), h)
    if st != OK:
        raise DomainError("geodesic leaves the conformal domain", base=tuple(base), psi=psi, length=length)
    return np.array([x, y]), float(pe)
