"""Closed forms for the Poincare disk (curvature -1), points as complex numbers.

The base point of every parametrised geodesic is the origin; disk
automorphisms only recentre local computations (exp/log at other points).
"""
import numpy as np


def to_complex(p):
    p = np.asarray(p, dtype=float)
    return p[..., 0] + 1j * p[..., 1]


def to_point(z):
    z = np.asarray(z)
    return np.stack([z.real, z.imag], axis=-1)


def to_origin(w, z):
    """Automorphism sending w to 0; its derivative at w is real and positive."""
    return (z - w) / (1.0 - np.conj(w) * z)


def from_origin(w, z):
    """Inverse of :func:`to_origin`."""
    return (z + w) / (1.0 + np.conj(w) * z)


def exp(base, v):
    """``base`` complex, ``v`` complex tangent vector in an orthonormal frame."""
    r = np.abs(v)
    unit = np.where(r > 0, np.exp(1j * np.angle(v)), 0.0)
    return from_origin(base, np.tanh(r / 2.0) * unit)


def log(base, q):
    w = to_origin(base, q)
    r = np.abs(w)
    # the phase, not w / r: that quotient overflows for subnormal r
    unit = np.where(r > 0, np.exp(1j * np.angle(w)), 0.0)
    return 2.0 * np.arctanh(r) * unit


def direction(base, q):
    """Initial direction angle of the geodesic from ``base`` to ``q``."""
    return np.angle(to_origin(base, q))


def geodesic_point(lam, s):
    """``l_lam(s)``: the point at signed arclength s on the diameter at angle lam."""
    return np.tanh(np.asarray(s) / 2.0) * np.exp(1j * np.asarray(lam))


def project_param(lam, z):
    """Signed arclength of the foot of z on the diameter at angle lam.

    After rotating by -lam, the foot abscissa t is the root in (-1, 1) of
    ``x t^2 - (1 + |z|^2) t + x = 0``; the parameter is ``2 artanh t``.
    """
    z = np.asarray(z)
    x = np.real(z * np.exp(-1j * np.asarray(lam)))
    b = 1.0 + np.abs(z) ** 2
    # smaller root, written without cancellation; t = 0 when x = 0
    t = 2.0 * x / (b + np.sqrt(b * b - 4.0 * x * x))
    return 2.0 * np.arctanh(t)


def geodesic_circle(u, v, eps=1e-12):
    """Geodesic through u, v: ``(center, radius)`` of its circle, or ``(None, None)``
    when it is a diameter."""
    cross = u.real * v.imag - u.imag * v.real
    if abs(cross) <= eps * max(abs(u), abs(v), 1e-300):
        return None, None
    # c . u = (1 + |u|^2) / 2 and c . v = (1 + |v|^2) / 2
    a1, b1 = (1 + abs(u) ** 2) / 2, (1 + abs(v) ** 2) / 2
    cx = (a1 * v.imag - b1 * u.imag) / cross
    cy = (b1 * u.real - a1 * v.real) / cross
    c = complex(cx, cy)
    return c, float(np.sqrt(abs(c) ** 2 - 1.0))


def perpendicular_foot(u, v):
    """Closest point to the origin on the geodesic through u, v, and the unit
    tangent of that geodesic there (oriented from u towards v)."""
    c, rho = geodesic_circle(u, v)
    if c is None:
        d = v - u
        return 0j, d / abs(d)
    foot = c / abs(c) * (abs(c) - rho)
    ccw = ((u - c).real * (v - c).imag - (u - c).imag * (v - c).real) > 0
    tangent = 1j * (foot - c) / rho
    return foot, tangent if ccw else -tangent


def frame_arrays(U, V):
    """Vectorised theta(u, v) for complex arrays; diameters handled exactly."""
    U = np.asarray(U, dtype=complex)
    V = np.asarray(V, dtype=complex)
    cross = U.real * V.imag - U.imag * V.real
    a1 = (1 + np.abs(U) ** 2) / 2
    b1 = (1 + np.abs(V) ** 2) / 2
    diam = np.abs(cross) <= 1e-12 * np.maximum(np.abs(U), np.abs(V))
    safe = np.where(diam, 1.0, cross)
    c = ((a1 * V.imag - b1 * U.imag) + 1j * (b1 * U.real - a1 * V.real)) / safe
    rho = np.sqrt(np.maximum(np.abs(c) ** 2 - 1.0, 0.0))
    foot = c / np.where(diam, 1.0, np.abs(c)) * (np.abs(c) - rho)
    ccw = ((U - c).real * (V - c).imag - (U - c).imag * (V - c).real) > 0
    tangent = 1j * (foot - c) / np.where(diam, 1.0, rho)
    tangent = np.where(ccw, tangent, -tangent)
    chord = (V - U) / np.abs(V - U)
    tangent = np.where(diam, chord, tangent)
    # e_theta is the tangent turned clockwise by a right angle
    return np.mod(np.angle(-1j * tangent), 2 * np.pi)
