"""Finite-difference oracles and small numeric helpers.

These are deliberately independent of the analytic derivative code so
they can serve as cross-checks for it.
"""

from __future__ import annotations

from mpmath import mp, mpf


def fd_derivative(fn, x, order: int, h, prec: int = 256):
    """Central finite difference of ``fn`` at ``x`` (orders 1..3,
    fourth-order accurate stencils)."""
    with mp.workprec(prec):
        x, h = mpf(x), mpf(h)
        fm2, fm1 = fn(x - 2 * h), fn(x - h)
        fp1, fp2 = fn(x + h), fn(x + 2 * h)
        if order == 1:
            return (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * h)
        if order == 2:
            f0 = fn(x)
            return (-fp2 + 16 * fp1 - 30 * f0 + 16 * fm1 - fm2) / (12 * h * h)
        if order == 3:
            return (fp2 - 2 * fp1 + 2 * fm1 - fm2) / (2 * h**3)
    raise ValueError("order must be 1, 2 or 3")


def fd_schwarzian(fn, x, h=None, prec: int = 256):
    """Schwarzian derivative of a lift function by finite differences."""
    with mp.workprec(prec):
        if h is None:
            h = mpf(2) ** (-(prec // 5))
        d1 = fd_derivative(fn, x, 1, h, prec)
        d2 = fd_derivative(fn, x, 2, h, prec)
        d3 = fd_derivative(fn, x, 3, h, prec)
        r = d2 / d1
        return d3 / d1 - 3 * r * r / 2


def least_squares_slope(xs, ys):
    """Slope and intercept of the least-squares line through (xs, ys)."""
    k = len(xs)
    mx = sum(xs) / k
    my = sum(ys) / k
    sxx = sum((a - mx) ** 2 for a in xs)
    sxy = sum((a - mx) * (b - my) for a, b in zip(xs, ys))
    slope = sxy / sxx
    return slope, my - slope * mx


def rel_err(a, b):
    """|a-b| / max(1, |b|)."""
    return abs(a - b) / max(mpf(1), abs(b))
