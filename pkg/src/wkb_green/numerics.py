"""Shared numerical primitives: adaptive quadrature, bisection, extrapolation."""

from __future__ import annotations

from typing import Callable, Sequence

__all__ = ["adaptive_simpson", "bisect_root", "extrapolate_to_zero", "richardson"]


def _simpson_recurse(f, a, m, b, fa, fm, fb, whole, tol, depth, budget):
    budget[0] -= 2
    if budget[0] <= 0:
        raise RuntimeError("adaptive_simpson: evaluation budget exhausted "
                           "(integrand too rough, near-singular?)")
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    return _simpson_recurse(f, a, lm, m, fa, flm, fm, left, 0.5 * tol,
                            depth - 1, budget) + \
        _simpson_recurse(f, m, rm, b, fm, frm, fb, right, 0.5 * tol,
                         depth - 1, budget)


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-12, max_depth: int = 48,
                     max_evals: int = 100_000) -> float:
    """Adaptive Simpson quadrature of f on [a, b] to absolute tolerance tol.

    The evaluation budget turns runaway refinement (a near-singular
    integrand) into an error instead of an effectively endless recursion.
    """
    if a == b:
        return 0.0
    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    budget = [max_evals]
    return _simpson_recurse(f, a, m, b, fa, fm, fb, whole, tol, max_depth, budget)


def bisect_root(f: Callable[[float], float], lo: float, hi: float,
                xtol: float = 1e-13, max_iter: int = 200) -> float:
    """Bisection on a bracketing interval; f(lo) and f(hi) must differ in sign."""
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0.0) == (fhi > 0.0):
        raise ValueError("bisect_root: interval does not bracket a root")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= xtol:
            return mid
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0.0) == (flo > 0.0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def extrapolate_to_zero(xs: Sequence[float], values: Sequence[float]) -> tuple[float, float]:
    """Polynomial (Neville) extrapolation of values(xs) to x = 0.

    Generalizes fixed-ratio Richardson to arbitrary node sets; on
    geometric nodes the two coincide.  Returns the last diagonal entry and
    the magnitude of the final diagonal step as a convergence estimate.
    """
    n = len(xs)
    if n == 0 or n != len(values):
        raise ValueError("xs and values must be nonempty and equally long")
    row = [float(values[0])]
    diag = [row[0]]
    for i in range(1, n):
        new_row = [float(values[i])]
        for j in range(1, i + 1):
            x_hi = xs[i - j]
            x_lo = xs[i]
            new_row.append((x_hi * new_row[j - 1] - x_lo * row[j - 1]) / (x_hi - x_lo))
        row = new_row
        diag.append(row[-1])
    if n == 1:
        return diag[0], float("inf")
    return diag[-1], abs(diag[-1] - diag[-2])


def richardson(values: Sequence[float], ratio: float = 2.0) -> tuple[float, float]:
    """Eliminate successive powers of the step parameter from a sequence.

    ``values[k]`` is assumed to carry an error expansion in eps_k where
    eps_{k+1} = eps_k / ratio.  Returns the last diagonal entry of the
    extrapolation tableau together with the magnitude of the final
    diagonal step, which serves as a convergence estimate.
    """
    n = len(values)
    if n == 0:
        raise ValueError("richardson requires at least one value")
    row = [float(values[0])]
    diag = [row[0]]
    for k in range(1, n):
        new_row = [float(values[k])]
        for j in range(1, k + 1):
            factor = ratio ** j
            new_row.append((factor * new_row[j - 1] - row[j - 1]) / (factor - 1.0))
        row = new_row
        diag.append(row[-1])
    if n == 1:
        return diag[0], float("inf")
    return diag[-1], abs(diag[-1] - diag[-2])
