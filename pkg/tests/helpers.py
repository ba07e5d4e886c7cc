"""Independent numerical oracles used only by the tests.

These deliberately avoid the package's quadrature stack: composite Simpson
with interval doubling, central finite differences, and brute-force grids.
"""

import numpy as np


def simpson(f, a, b, n):
    xs = np.linspace(a, b, n + 1)
    ys = np.array([f(x) for x in xs])
    h = (b - a) / n
    return h / 3.0 * (ys[0] + ys[-1] + 4.0 * ys[1:-1:2].sum() + 2.0 * ys[2:-1:2].sum())


def simpson_refine(f, a, b, tol=1e-10, n0=16, max_doublings=22):
    """Composite Simpson, doubling the panel count until successive values agree."""
    n = n0
    prev = simpson(f, a, b, n)
    for _ in range(max_doublings):
        n *= 2
        cur = simpson(f, a, b, n)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    raise AssertionError(f"Simpson oracle did not converge on [{a}, {b}]")


def central_diff(f, x, h):
    return (f(x + h) - f(x - h)) / (2.0 * h)


def second_diff(f, x, h):
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / h**2


def fd_step(y):
    # balances truncation against rounding for quantities of size ~1..100
    return max(1e-5, 1e-6 * y)
