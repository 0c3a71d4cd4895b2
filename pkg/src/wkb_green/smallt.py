"""Short-time exponent of the kernel via the rescaled two-point problem.

Writing t = nu t' and rescaling the momentum by nu turns the two-point
characteristic problem into a nu-independent system on sigma in [0, t'],
so the exponent expands as S = S0/nu + S1 + O(nu).  Order 0 is solved by
shooting on the conserved quantity c = P A(X) (P itself for constant
diffusion): the endpoint is monotone in c, which gives bracketed, globally
convergent root finds.  Order 1 solves the linearized system with zero
boundary data; for the momentum-homogeneous families supported here that
correction vanishes identically, and the machinery verifies it rather
than assuming it.

For the degenerate family the order-0 exponent has the closed log-distance
form ln^2(x/xi)/(4t), which doubles as the test oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .hamiltonian import HamiltonianModel, Kind
from .numerics import adaptive_simpson

__all__ = [
    "DeltaRegimeError",
    "SmallTimeSeries",
    "p0_leading",
    "bvp_series",
    "s_small_t",
]

_SHOOT_STEPS = 512


class DeltaRegimeError(ValueError):
    """Source at the degenerate point: the kernel is a point mass.

    No finite short-time exponent exists; at sharpness beta < 1 the
    exponent behaves like x^2 / (2 (1 - beta)) and diverges in the sharp
    limit.
    """


@dataclass(frozen=True)
class SmallTimeSeries:
    """Coefficients of S = S0/nu + S1 + O(nu) at fixed t = nu t'."""

    nu: float
    t_prime: float
    S0: float
    S1: float
    P0: float
    order: int


def _check_source(model: HamiltonianModel, x: float, xi: float) -> None:
    if model.kind is Kind.HEAT:
        return
    if xi == 0.0:
        raise DeltaRegimeError(
            "xi = 0 on a degenerate family: the kernel stays a point mass at the "
            "origin and the exponent diverges like x^2/(2(1-beta)) as beta -> 1"
        )
    if x * xi <= 0.0:
        raise DeltaRegimeError(
            "x and xi must lie strictly on the same sign-domain for degenerate kinds"
        )


def p0_leading(model: HamiltonianModel, x: float, xi: float, nu: float,
               t_prime: float) -> float:
    """Leading launch momentum from the linear endpoint balance.

    Solves H_p(xi, P0) = (x - xi)/(nu t').  The supported families are
    quadratic in p, so H_p(xi, .) is linear with slope H_pp(xi) and the
    solve is exact.
    """
    if nu <= 0.0 or t_prime <= 0.0:
        raise ValueError("nu and t_prime must be positive")
    _check_source(model, x, xi)
    Y = (x - xi) / (nu * t_prime)
    slope = model.H_pp(xi, 0.0)
    if slope == 0.0:
        raise DeltaRegimeError("H_p(xi, .) is degenerate at this source point")
    return Y / slope


def _conserved_scale(model: HamiltonianModel, xi: float) -> float:
    """A(xi) for the quadratic families, 1 for constant diffusion."""
    return 1.0 if model.kind is Kind.HEAT else model.A_value(xi)


def _integrate_shoot(model: HamiltonianModel, xi: float, c: float,
                     t_prime: float, steps: int):
    """March the rescaled system from (xi, c/scale); accumulate the action.

    Returns (X(t'), P(t'), S0) where S0 = int H(X, P) dsigma integrated by
    the same fourth-order scheme.
    """
    scale = _conserved_scale(model, xi)
    d = model.derivatives
    X = xi
    P = c / scale
    S = 0.0
    dt = t_prime / steps
    for _ in range(steps):
        H1, Hx1, Hp1, *_ = d(X, P)
        k1x, k1p, k1s = Hp1, -Hx1, H1
        X2, P2 = X + 0.5 * dt * k1x, P + 0.5 * dt * k1p
        H2, Hx2, Hp2, *_ = d(X2, P2)
        k2x, k2p, k2s = Hp2, -Hx2, H2
        X3, P3 = X + 0.5 * dt * k2x, P + 0.5 * dt * k2p
        H3, Hx3, Hp3, *_ = d(X3, P3)
        k3x, k3p, k3s = Hp3, -Hx3, H3
        X4, P4 = X + dt * k3x, P + dt * k3p
        H4, Hx4, Hp4, *_ = d(X4, P4)
        k4x, k4p, k4s = Hp4, -Hx4, H4
        s = dt / 6.0
        X += s * (k1x + 2.0 * (k2x + k3x) + k4x)
        P += s * (k1p + 2.0 * (k2p + k3p) + k4p)
        S += s * (k1s + 2.0 * (k2s + k3s) + k4s)
        if not (math.isfinite(X) and math.isfinite(P)):
            return math.inf, math.inf, math.inf
    return X, P, S


def _estimate_constant(model: HamiltonianModel, x: float, xi: float,
                       t_prime: float) -> float:
    """Analytic estimate of the conserved shooting constant.

    Separating variables gives int_xi^x dz/(z a(z)) = 2 c t' for the
    quadratic families and x - xi = 2 c t' for constant diffusion.
    """
    if model.kind is Kind.HEAT:
        return (x - xi) / (2.0 * t_prime)

    def integrand(u: float) -> float:
        return 1.0 / model.a_value(xi * math.exp(u))

    g = adaptive_simpson(integrand, 0.0, math.log(x / xi), tol=1e-12)
    return g / (2.0 * t_prime)


def _first_order_correction(model: HamiltonianModel, xi: float, c: float,
                            t_prime: float, steps: int) -> tuple[float, float]:
    """Solve the linearized two-point problem and accumulate its action term.

    The first-order system is linear homogeneous with zero boundary data;
    its solution is eta * (u, v) with (u, v)(0) = (0, 1), and eta is fixed
    by the endpoint condition.  The returned pair is (S1, P1(0) = eta).
    """
    scale = _conserved_scale(model, xi)
    d = model.derivatives
    X, P = xi, c / scale
    u, v = 0.0, 1.0
    W = 0.0  # int (H_x u + H_p v) dsigma along the base solution
    dt = t_prime / steps

    def rhs(X, P, u, v):
        H, Hx, Hp, Hpp, Hxp, Hxx = d(X, P)
        return (Hp, -Hx,
                Hxp * u + Hpp * v,
                -(Hxx * u + Hxp * v),
                Hx * u + Hp * v)

    for _ in range(steps):
        k1 = rhs(X, P, u, v)
        k2 = rhs(X + 0.5 * dt * k1[0], P + 0.5 * dt * k1[1],
                 u + 0.5 * dt * k1[2], v + 0.5 * dt * k1[3])
        k3 = rhs(X + 0.5 * dt * k2[0], P + 0.5 * dt * k2[1],
                 u + 0.5 * dt * k2[2], v + 0.5 * dt * k2[3])
        k4 = rhs(X + dt * k3[0], P + dt * k3[1],
                 u + dt * k3[2], v + dt * k3[3])
        s = dt / 6.0
        X += s * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0])
        P += s * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1])
        u += s * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2])
        v += s * (k1[3] + 2.0 * (k2[3] + k3[3]) + k4[3])
        W += s * (k1[4] + 2.0 * (k2[4] + k3[4]) + k4[4])

    if u == 0.0:
        raise RuntimeError("conjugate point in the linearized two-point problem")
    # No forcing at first order for momentum-homogeneous Hamiltonians: the
    # particular solution vanishes, hence the endpoint defect is zero.
    defect = 0.0
    eta = -defect / u
    return eta * W + 0.0, eta


def bvp_series(model: HamiltonianModel, x: float, xi: float, nu: float,
               t_prime: float, order: int = 1,
               steps: int = _SHOOT_STEPS) -> SmallTimeSeries:
    """Shooting solution of the rescaled two-point problem up to first order.

    Order 0 matches X(0) = xi, X(t') = x by a bracketed root find on the
    conserved constant and integrates S0 = int H dsigma alongside; order 1
    adds the (identically vanishing) linear correction S1.
    """
    if nu <= 0.0 or t_prime <= 0.0:
        raise ValueError("nu and t_prime must be positive")
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    _check_source(model, x, xi)

    scale = _conserved_scale(model, xi)
    if x == xi:
        return SmallTimeSeries(nu=nu, t_prime=t_prime, S0=0.0, S1=0.0,
                               P0=0.0, order=order)

    c_star = _estimate_constant(model, x, xi, t_prime)

    def shoot(c: float) -> float:
        X_end, _, _ = _integrate_shoot(model, xi, c, t_prime, steps)
        return X_end - x

    delta = max(abs(c_star), 1.0) * 1e-3
    lo, hi = c_star - delta, c_star + delta
    for _ in range(80):
        f_lo, f_hi = shoot(lo), shoot(hi)
        if math.isfinite(f_lo) and math.isfinite(f_hi) and (f_lo > 0) != (f_hi > 0):
            break
        lo -= delta
        hi += delta
        delta *= 2.0
    else:
        raise RuntimeError("shooting constant not bracketed")
    c_hat = brentq(shoot, lo, hi, xtol=1e-13, rtol=8.9e-16)

    _, _, S0 = _integrate_shoot(model, xi, c_hat, t_prime, steps)
    P0 = c_hat / scale
    S1 = 0.0
    if order >= 1:
        S1, _ = _first_order_correction(model, xi, c_hat, t_prime, steps)
    return SmallTimeSeries(nu=nu, t_prime=t_prime, S0=S0, S1=S1, P0=P0, order=order)


def s_small_t(model: HamiltonianModel, x: float, xi: float, t: float,
              order: int = 1, steps: int = _SHOOT_STEPS) -> float:
    """Resummed short-time exponent S0/nu (+ S1 at order 1), with nu = t, t' = 1.

    For the degenerate family this equals ln^2(x/xi)/(4t); for constant
    diffusion, (x-xi)^2/(4t).
    """
    if t <= 0.0:
        raise ValueError("t must be positive")
    series = bvp_series(model, x, xi, nu=t, t_prime=1.0, order=order, steps=steps)
    out = series.S0 / series.nu
    if order >= 1:
        out += series.S1
    return out
