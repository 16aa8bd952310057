"""Independent reference computations used as test oracles."""
import numpy as np


def lovasz_by_integration(f, x):
    """Integral of f({i : x_i > tau}) over tau in [0, 1], evaluated piece by piece."""
    x = np.asarray(x, dtype=float)
    cuts = np.unique(np.concatenate([[0.0, 1.0], x]))
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (a + b)
        S = sum(1 << i for i in range(x.size) if x[i] > mid)
        total += (b - a) * f(S)
    return total


def ternary_min(fn, lo=0.0, hi=1.0, iters=200):
    for _ in range(iters):
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if fn(m1) <= fn(m2):
            hi = m2
        else:
            lo = m1
    return 0.5 * (lo + hi)
