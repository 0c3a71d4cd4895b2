"""Characteristic flow in the doubled phase space (x, y, p_x, p_y).

The auxiliary pair (y, p_y) is frozen by the dynamics; what evolves is
(x, p_x) under the Hamiltonian field together with the running action
A = int (p H_p - H) dtau, the mixed integral M = int H_xp dtau, and the
3x2 sensitivity block V = d(x, p_x, p_y)/d(x0, y) that feeds the boundary
solver and the fold Jacobians.

Integration is fixed-step classical Runge-Kutta: deterministic, fourth
order, and adequate for the non-stiff desk-scale runs this package
targets.  Closed-form solutions of the degenerate families double as
independent references for the integrator.

All functions here are pure; trajectories are value objects safe to share
across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO

import numpy as np

from .hamiltonian import HamiltonianModel, Kind
from .numerics import adaptive_simpson, bisect_root

__all__ = [
    "BlowupError",
    "AccuracyError",
    "CharacteristicDomainError",
    "TrajectoryParams",
    "ExtendedState",
    "ExtendedTrajectory",
    "flow",
    "closed_degenerate",
    "jacobian_degenerate",
    "jacobian_degenerate_yconst",
    "closed_general",
    "jacobian_general",
]

# Characteristics of the degenerate families grow doubly exponentially in
# x0; runs past this magnitude carry no usable information.
_BLOWUP_LIMIT = 1e12

# Log-offset cap for the implicit solve in closed_general.
_MAX_LOG_OFFSET = 60.0

TRAJECTORY_CSV_COLUMNS = (
    "tau", "x", "y", "p_x", "p_y", "A", "M",
    "v_x_x0", "v_x_y", "v_px_x0", "v_px_y", "v_py_x0", "v_py_y",
)


class BlowupError(RuntimeError):
    """Characteristic left the working range; carries the blow-up time."""

    def __init__(self, message: str, t_blowup: float):
        super().__init__(message)
        self.t_blowup = t_blowup


class AccuracyError(RuntimeError):
    """Step-halving check failed: the step count is too coarse for this run."""


class CharacteristicDomainError(RuntimeError):
    """Implicit characteristic equation has no root in the configured domain."""


@dataclass(frozen=True)
class TrajectoryParams:
    x0: float
    xi: float
    y: float
    beta: float
    t_final: float


@dataclass
class ExtendedState:
    """Snapshot of the doubled-phase-space state plus running integrals."""

    x: float
    y: float
    p_x: float
    p_y: float
    A: float
    M: float
    V: np.ndarray  # 3x2 block d(x, p_x, p_y)/d(x0, y)


@dataclass
class ExtendedTrajectory:
    samples: list[tuple[float, ExtendedState]]
    params: TrajectoryParams
    kind: Kind

    @property
    def final_state(self) -> ExtendedState:
        return self.samples[-1][1]

    def to_csv(self, stream: IO[str]) -> None:
        import csv

        writer = csv.writer(stream)
        writer.writerow(TRAJECTORY_CSV_COLUMNS)
        for tau, s in self.samples:
            v = s.V
            writer.writerow([
                repr(float(val)) for val in (
                    tau, s.x, s.y, s.p_x, s.p_y, s.A, s.M,
                    v[0, 0], v[0, 1], v[1, 0], v[1, 1], v[2, 0], v[2, 1],
                )
            ])


def _make_state(x, y, p, p_y, A, M, v00, v01, v10, v11, beta) -> ExtendedState:
    V = np.array([[v00, v01], [v10, v11], [-beta, beta]], dtype=float)
    return ExtendedState(x=x, y=y, p_x=p, p_y=p_y, A=A, M=M, V=V)


def _rk4_step(d, dt, x, p, A, M, v00, v01, v10, v11):
    # Hot loop: hand-unrolled over the 8 evolving scalars.
    H, Hx, Hp, Hpp, Hxp, Hxx = d(x, p)
    k1x = Hp
    k1p = -Hx
    k1a = p * Hp - H
    k1m = Hxp
    k1_00 = Hxp * v00 + Hpp * v10
    k1_01 = Hxp * v01 + Hpp * v11
    k1_10 = -(Hxx * v00 + Hxp * v10)
    k1_11 = -(Hxx * v01 + Hxp * v11)

    h2 = 0.5 * dt
    x2 = x + h2 * k1x
    p2 = p + h2 * k1p
    w00 = v00 + h2 * k1_00
    w01 = v01 + h2 * k1_01
    w10 = v10 + h2 * k1_10
    w11 = v11 + h2 * k1_11
    H, Hx, Hp, Hpp, Hxp, Hxx = d(x2, p2)
    k2x = Hp
    k2p = -Hx
    k2a = p2 * Hp - H
    k2m = Hxp
    k2_00 = Hxp * w00 + Hpp * w10
    k2_01 = Hxp * w01 + Hpp * w11
    k2_10 = -(Hxx * w00 + Hxp * w10)
    k2_11 = -(Hxx * w01 + Hxp * w11)

    x3 = x + h2 * k2x
    p3 = p + h2 * k2p
    w00 = v00 + h2 * k2_00
    w01 = v01 + h2 * k2_01
    w10 = v10 + h2 * k2_10
    w11 = v11 + h2 * k2_11
    H, Hx, Hp, Hpp, Hxp, Hxx = d(x3, p3)
    k3x = Hp
    k3p = -Hx
    k3a = p3 * Hp - H
    k3m = Hxp
    k3_00 = Hxp * w00 + Hpp * w10
    k3_01 = Hxp * w01 + Hpp * w11
    k3_10 = -(Hxx * w00 + Hxp * w10)
    k3_11 = -(Hxx * w01 + Hxp * w11)

    x4 = x + dt * k3x
    p4 = p + dt * k3p
    w00 = v00 + dt * k3_00
    w01 = v01 + dt * k3_01
    w10 = v10 + dt * k3_10
    w11 = v11 + dt * k3_11
    H, Hx, Hp, Hpp, Hxp, Hxx = d(x4, p4)
    k4x = Hp
    k4p = -Hx
    k4a = p4 * Hp - H
    k4m = Hxp
    k4_00 = Hxp * w00 + Hpp * w10
    k4_01 = Hxp * w01 + Hpp * w11
    k4_10 = -(Hxx * w00 + Hxp * w10)
    k4_11 = -(Hxx * w01 + Hxp * w11)

    s = dt / 6.0
    return (
        x + s * (k1x + 2.0 * (k2x + k3x) + k4x),
        p + s * (k1p + 2.0 * (k2p + k3p) + k4p),
        A + s * (k1a + 2.0 * (k2a + k3a) + k4a),
        M + s * (k1m + 2.0 * (k2m + k3m) + k4m),
        v00 + s * (k1_00 + 2.0 * (k2_00 + k3_00) + k4_00),
        v01 + s * (k1_01 + 2.0 * (k2_01 + k3_01) + k4_01),
        v10 + s * (k1_10 + 2.0 * (k2_10 + k3_10) + k4_10),
        v11 + s * (k1_11 + 2.0 * (k2_11 + k3_11) + k4_11),
    )


def flow(model: HamiltonianModel, x0: float, xi: float, y: float, beta: float,
         t: float, steps: int, record_every: int | None = None,
         check: bool = False) -> ExtendedTrajectory:
    """Integrate the doubled-phase-space system from t=0 to t.

    The initial data couple the launch point to the auxiliary offset:
    p_x(0) = beta (x0 - y - xi) and p_y = -p_x(0), frozen thereafter.
    With ``check=True`` the run is repeated at twice the step count and
    the endpoints must agree to 1e-8 in relative terms.

    Raises :class:`BlowupError` if the state leaves |x| <= 1e12 or turns
    non-finite, reporting the time at which that happened.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    if steps < 1:
        raise ValueError("steps must be a positive integer")

    params = TrajectoryParams(x0=x0, xi=xi, y=y, beta=beta, t_final=t)
    p0 = beta * (x0 - y - xi)
    p_y = -p0
    samples = [(0.0, _make_state(x0, y, p0, p_y, 0.0, 0.0, 1.0, 0.0, beta, -beta, beta))]

    if t == 0.0:
        return ExtendedTrajectory(samples, params, model.kind)

    if record_every is None:
        record_every = max(1, steps // 256)

    d = model.derivatives
    dt = t / steps
    x, p, A, M = x0, p0, 0.0, 0.0
    v00, v01, v10, v11 = 1.0, 0.0, beta, -beta
    for i in range(1, steps + 1):
        x, p, A, M, v00, v01, v10, v11 = _rk4_step(d, dt, x, p, A, M, v00, v01, v10, v11)
        if not (math.isfinite(x) and math.isfinite(p)) or abs(x) > _BLOWUP_LIMIT:
            raise BlowupError(
                f"characteristic blew up near tau={i * dt:.6g} (|x| exceeded {_BLOWUP_LIMIT:g})",
                t_blowup=i * dt,
            )
        if i % record_every == 0 or i == steps:
            tau = i * dt
            samples.append((tau, _make_state(x, y, p, p_y, A, M, v00, v01, v10, v11, beta)))

    traj = ExtendedTrajectory(samples, params, model.kind)

    if check:
        fine = flow(model, x0, xi, y, beta, t, 2 * steps, record_every=2 * steps, check=False)
        fs, cs = fine.final_state, traj.final_state
        scale = max(1.0, abs(fs.x), abs(fs.p_x))
        if abs(fs.x - cs.x) > 1e-8 * scale or abs(fs.p_x - cs.p_x) > 1e-8 * scale:
            raise AccuracyError(
                f"step-halving check failed at steps={steps}: "
                f"dx={abs(fs.x - cs.x):.3e}, dp={abs(fs.p_x - cs.p_x):.3e}"
            )
    return traj


def closed_degenerate(x0: float, xi: float, y: float, beta: float,
                      t: float) -> tuple[float, float]:
    """Explicit characteristic of H = x^2 p^2 launched from (x0, beta(x0-xi-y)).

    x(t) = x0 exp(2 beta x0 (x0-xi-y) t) and p(t) = p0 exp(-...): the
    product x p is a first integral.
    """
    c = 2.0 * beta * x0 * (x0 - xi - y) * t
    return (x0 * math.exp(c), beta * (x0 - xi - y) * math.exp(-c))


def jacobian_degenerate(x0: float, xi: float, beta: float, t: float) -> float:
    """dx/dx0 of the degenerate characteristic with the offset eliminated.

    On the diagonal y = p_y the offset is y = -beta (x0-xi)/(1-beta), which
    turns the endpoint map into x = x0 exp(2 beta t x0 (x0-xi)/(1-beta));
    this is its x0-derivative.  beta = 1 is rejected: the eliminated form
    carries the 1/(1-beta) factor.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie strictly inside (0, 1), got {beta}")
    expo = 2.0 * beta * t * x0 * (x0 - xi) / (1.0 - beta)
    return math.exp(expo) * (1.0 + (2.0 * beta * t / (1.0 - beta)) * (2.0 * x0 * x0 - x0 * xi))


def jacobian_degenerate_yconst(x0: float, xi: float, y: float, beta: float,
                               t: float) -> float:
    """dx/dx0 of the degenerate characteristic at fixed offset y.

    Its zero set marks the fold points of the section; see
    :func:`wkb_green.phase.manifold_section`.
    """
    c = 2.0 * beta * x0 * (x0 - xi - y) * t
    return math.exp(c) * (1.0 + 2.0 * beta * t * x0 * (2.0 * x0 - xi - y))


def _log_offset_integral(model: HamiltonianModel, x0: float, u: float,
                         tol: float = 1e-12) -> float:
    """int_{x0}^{x0 e^u} dz/(z a(z)) rewritten as int_0^u du'/a(x0 e^u').

    The substitution removes the apparent endpoint singularity; the
    integrand stays finite as long as a != 0 along the way, which is
    scanned up front so a root of a(x) inside the range fails fast instead
    of driving the quadrature into runaway refinement.
    """
    a_ref = model.a_value(x0)
    n_scan = 64
    for i in range(1, n_scan + 1):
        a_i = model.a_value(x0 * math.exp(u * i / n_scan))
        if abs(a_i) < 1e-9 * max(1.0, abs(a_ref)) or (a_i > 0.0) != (a_ref > 0.0):
            raise CharacteristicDomainError(
                f"a(x) vanished near x={x0 * math.exp(u * i / n_scan):.6g} "
                "inside the root bracket"
            )

    def integrand(s: float) -> float:
        return 1.0 / model.a_value(x0 * math.exp(s))

    return adaptive_simpson(integrand, 0.0, u, tol=tol)


def closed_general(model: HamiltonianModel, x0: float, xi: float, beta: float,
                   t: float) -> float:
    """Endpoint of the H = x^2 a^2(x) p^2 characteristic, offset eliminated.

    p A(x) is a first integral, which reduces the endpoint map to the
    implicit relation

        int_{x0}^{x} dz / (z a(z)) = 2 beta t x0 a(x0) (x0 - xi) / (1 - beta).

    The left side is strictly monotone in x on a fixed-sign domain, so the
    root is located by exponential bracket expansion in the log offset
    u = ln(x/x0) followed by bisection to 1e-13.
    """
    if model.kind is Kind.HEAT:
        raise ValueError("closed_general applies to degenerate/general kinds only")
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie strictly inside (0, 1), got {beta}")
    if x0 == 0.0:
        raise ValueError("x0 = 0 is the invariant point; no implicit solve there")
    if xi != 0.0 and (x0 > 0.0) != (xi > 0.0):
        raise ValueError("x0 and xi must lie on the same sign-domain")
    if x0 == xi:
        return x0

    a0 = model.a_value(x0)
    target = 2.0 * beta * t * x0 * a0 * (x0 - xi) / (1.0 - beta)
    if target == 0.0:
        return x0

    def f(u: float) -> float:
        return _log_offset_integral(model, x0, u) - target

    # g(u) is monotone with derivative 1/a(x0 e^u), so the root lies on the
    # side where f moves toward zero.
    direction = 1.0 if (target > 0.0) == (a0 > 0.0) else -1.0
    step = max(1e-3, min(abs(target * a0), _MAX_LOG_OFFSET / 4.0))
    u_lo = 0.0
    u_hi = direction * step
    f_lo = f(u_lo)
    while True:
        f_hi = f(u_hi)
        if (f_hi > 0.0) != (f_lo > 0.0) or f_hi == 0.0:
            break
        u_lo, f_lo = u_hi, f_hi
        u_hi *= 2.0
        if abs(u_hi) > _MAX_LOG_OFFSET:
            raise CharacteristicDomainError(
                "characteristic endpoint not bracketed within the configured domain "
                f"(|ln(x/x0)| <= {_MAX_LOG_OFFSET:g})"
            )
    lo, hi = (u_lo, u_hi) if u_lo < u_hi else (u_hi, u_lo)
    u_root = bisect_root(f, lo, hi, xtol=1e-13)
    return x0 * math.exp(u_root)


def jacobian_general(model: HamiltonianModel, x0: float, xi: float, beta: float,
                     t: float, x: float) -> float:
    """dx/dx0 for the generalized family, evaluated at x = closed_general(...).

    Differentiating the implicit endpoint relation gives

        dx/dx0 = (x a(x)) / (x0 a(x0)) *
                 (1 + 2 beta t x0 a(x0)/(1-beta) *
                      (a(x0)(2 x0 - xi) + x0 a'(x0)(x0 - xi))).

    With a = 1 this collapses to :func:`jacobian_degenerate`.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie strictly inside (0, 1), got {beta}")
    if x0 == 0.0:
        raise ValueError("x0 = 0: prefactor is 0/0; treat the invariant point separately")
    a0 = model.a_value(x0)
    ad0 = model.a_prime(x0)
    ax = model.a_value(x)
    bracket = 1.0 + (2.0 * beta * t * x0 * a0 / (1.0 - beta)) * (
        a0 * (2.0 * x0 - xi) + x0 * ad0 * (x0 - xi)
    )
    return (x * ax) / (x0 * a0) * bracket
