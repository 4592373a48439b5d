"""Golden-section minimisation with bracket expansion.

Works on any real type closed under + - * / (floats, ``mpmath.mpf``), so the
same routine doubles as a high-precision oracle.
"""
import math

from ..errors import SolverError


def golden_section(f, a, b, tol=1e-10, max_iter=500, invphi=None):
    """Minimiser of a unimodal ``f`` on ``[a, b]``, to within ``tol``."""
    if invphi is None:
        invphi = (math.sqrt(5.0) - 1.0) / 2.0
    invphi2 = 1 - invphi
    if b < a:
        a, b = b, a
    c = a + invphi2 * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = a + invphi2 * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    else:
        raise SolverError("golden-section search did not converge", a=float(a), b=float(b))
    return (a + b) / 2


def bracket_minimum(f, x0, step=0.5, lower=-math.inf, upper=math.inf, max_expand=60):
    """Walk downhill from ``x0`` with doubling steps; returns ``(a, b)`` around a minimum.

    Expansion stops at ``lower``/``upper``; a bracket clipped there is returned
    as-is, which is correct for functions convex on the admissible interval.
    """
    f0 = f(x0)
    right, left = min(x0 + step, upper), max(x0 - step, lower)
    fr, fl = f(right), f(left)
    if fr >= f0 and fl >= f0:
        return left, right
    sign, x1, f1 = (1.0, right, fr) if fr < fl else (-1.0, left, fl)
    prev = x0
    for _ in range(max_expand):
        step *= 2.0
        x2 = min(max(x1 + sign * step, lower), upper)
        if x2 == x1:
            return (prev, x1) if sign > 0 else (x1, prev)
        f2 = f(x2)
        if f2 > f1:
            return (prev, x2) if sign > 0 else (x2, prev)
        prev, x1, f1 = x1, x2, f2
    raise SolverError("could not bracket a minimum", x0=float(x0), step=float(step))
