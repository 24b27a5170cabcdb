"""Scalar minimization used by the bound and exponent searches.

Coarse grid to bracket the minimum of a unimodal-ish objective, then
golden-section refinement inside the bracketing neighbors. The grid guard
keeps flat or multi-dip objectives from fooling the section search.
"""
from __future__ import annotations

import math
from typing import Callable

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_min(
    f: Callable[[float], float], a: float, b: float, tol: float = 1e-6
) -> tuple[float, float]:
    """Minimize f on [a, b]; returns (x_min, f(x_min))."""
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def grid_then_golden(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    n_grid: int = 64,
    tol: float = 1e-6,
) -> tuple[float, float]:
    """Coarse-grid bracketing followed by golden-section refinement."""
    if not hi > lo:
        raise ValueError(f"empty search interval [{lo}, {hi}]")
    xs = [lo + (hi - lo) * i / (n_grid - 1) for i in range(n_grid)]
    fs = [f(x) for x in xs]
    i = min(range(n_grid), key=fs.__getitem__)
    a = xs[max(i - 1, 0)]
    b = xs[min(i + 1, n_grid - 1)]
    x, fx = golden_section_min(f, a, b, tol=tol)
    if fs[i] < fx:
        return xs[i], fs[i]
    return x, fx
