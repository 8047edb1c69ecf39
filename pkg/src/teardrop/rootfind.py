"""Small bracketed root-finding helpers.

Everything here assumes the caller supplies a valid bracket; bisection does
the heavy lifting and an optional Newton polish sharpens the last digits
when a derivative is available.
"""

from __future__ import annotations

import math
from typing import Callable


def bisect(f: Callable[[float], float], lo: float, hi: float,
           *, xtol: float = 1e-14, max_iter: int = 200) -> float:
    """Root of f on [lo, hi] by bisection; f(lo) and f(hi) must differ in sign."""
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if math.copysign(1.0, flo) == math.copysign(1.0, fhi):
        raise ValueError(f"no sign change on [{lo}, {hi}]: f = ({flo}, {fhi})")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi or hi - lo <= xtol:
            break
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if math.copysign(1.0, fmid) == math.copysign(1.0, flo):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def newton_polish(f: Callable[[float], float], df: Callable[[float], float],
                  x0: float, lo: float, hi: float,
                  *, steps: int = 4) -> float:
    """A few safeguarded Newton steps from x0, clamped to [lo, hi].

    Steps that leave the interval or fail to shrink |f| are discarded, so
    the result is never worse than the bisection estimate it started from.
    """
    x = x0
    fx = f(x)
    for _ in range(steps):
        d = df(x)
        if d == 0.0 or not math.isfinite(d):
            break
        x_new = x - fx / d
        if not (lo <= x_new <= hi):
            break
        f_new = f(x_new)
        if abs(f_new) >= abs(fx):
            break
        x, fx = x_new, f_new
        if fx == 0.0:
            break
    return x


def brackets_on_grid(f: Callable[[float], float], grid) -> list[tuple[float, float]]:
    """Scan f over a monotone grid, returning all sign-change intervals."""
    vals = [f(g) for g in grid]
    out = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            out.append((a, a))
        elif math.copysign(1.0, fa) != math.copysign(1.0, fb):
            out.append((a, b))
    if vals and vals[-1] == 0.0:
        out.append((grid[-1], grid[-1]))
    return out
