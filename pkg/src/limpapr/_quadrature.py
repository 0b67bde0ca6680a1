import math

import numpy as np


def adaptive_simpson(f, a, b, tol=1e-12, max_depth=60, max_evals=1_000_000):
    """Adaptive Simpson quadrature of a scalar function on [a, b].

    Returns ``(value, ok)``; ``ok`` is False when some panel hit ``max_depth``
    before meeting its share of ``tol``, or when ``max_evals`` function
    evaluations were spent (the remaining panels are then accepted as is).
    """
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) * (fa + 4 * fm + fb) / 6
    ok = True
    total = 0.0
    evals = 3
    # explicit stack instead of recursion: (a, b, fa, fm, fb, whole, tol, depth)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        a0, b0, fa0, fm0, fb0, s0, tol0, depth = stack.pop()
        m0 = 0.5 * (a0 + b0)
        lm, rm = 0.5 * (a0 + m0), 0.5 * (m0 + b0)
        flm, frm = f(lm), f(rm)
        evals += 2
        left = (m0 - a0) * (fa0 + 4 * flm + fm0) / 6
        right = (b0 - m0) * (fm0 + 4 * frm + fb0) / 6
        err = left + right - s0
        exhausted = depth >= max_depth or evals >= max_evals
        if abs(err) <= 15 * tol0 or exhausted:
            if abs(err) > 15 * tol0:
                ok = False
            total += left + right + err / 15
        else:
            stack.append((a0, m0, fa0, flm, fm0, left, tol0 / 2, depth + 1))
            stack.append((m0, b0, fm0, frm, fb0, right, tol0 / 2, depth + 1))
    return total, ok


_GH_CACHE = {}


def gauss_hermite_expectation(f, nodes=200):
    """E[f(H)] for H ~ N(0, 1) with probabilists' Gauss-Hermite nodes; f is vectorized."""
    if nodes not in _GH_CACHE:
        x, w = np.polynomial.hermite_e.hermegauss(nodes)
        _GH_CACHE[nodes] = (x, w / math.sqrt(2 * math.pi))
    x, w = _GH_CACHE[nodes]
    return float(np.dot(w, f(x)))
