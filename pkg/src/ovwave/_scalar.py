"""Small scalar root-finding helpers: bracketed bisection plus Newton polish."""

from __future__ import annotations

from .errors import BracketError, NumericalError

__all__ = ["bisect", "newton_polish"]


def bisect(f, lo, hi, *, f_lo=None, f_hi=None, xtol, maxiter=300):
    """Bisection on a sign-change bracket [lo, hi] down to width ``xtol``."""
    a, b = float(lo), float(hi)
    fa = float(f(a)) if f_lo is None else float(f_lo)
    fb = float(f(b)) if f_hi is None else float(f_hi)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0) == (fb > 0):
        raise BracketError(f"no sign change on [{a}, {b}]: f={fa}, {fb}")
    for _ in range(maxiter):
        m = 0.5 * (a + b)
        if m == a or m == b or (b - a) <= xtol:
            return m
        fm = float(f(m))
        if fm == 0.0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b, fb = m, fm
    return 0.5 * (a + b)


def newton_polish(f, df, x0, *, bracket=None, rtol=1e-15, maxiter=12):
    """A few Newton steps from ``x0``; keeps the iterate inside ``bracket``.

    Returns the last iterate that did not escape the bracket or produce a
    vanishing derivative, which makes the polish safe after bisection.
    """
    x = float(x0)
    for _ in range(maxiter):
        d = float(df(x))
        if d == 0.0:
            return x
        step = float(f(x)) / d
        x_new = x - step
        if bracket is not None and not (bracket[0] <= x_new <= bracket[1]):
            return x
        if not abs(x_new) < float("inf"):
            raise NumericalError("Newton polish diverged")
        if abs(step) <= rtol * max(1.0, abs(x_new)):
            return x_new
        x = x_new
    return x
