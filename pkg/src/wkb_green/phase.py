"""Boundary matching on the diagonal pairing and phase evaluation.

Two inverse problems live here.  The y-fixed preimage inverts the endpoint
map x(x0; y, t) alone and supports the phase field and the transport
amplitude.  The full boundary problem additionally couples the auxiliary
offset to its dual momentum (y = p_y); its solution (x0, y_hat) carries the
exponent of the assembled kernel, the sensitivity J0 = dx/dx0 at fixed y,
and the extended Jacobian J = det d(x, y - p_y)/d(x0, y) whose zeros mark
singular fibers.

Solvers are damped Newton iterations fed by the integrated sensitivity
block, with geometric continuation in t (and then in the sharpness
parameter beta) as a fallback.  Everything is stateless and safe for
concurrent sweeps over (x, xi, t, beta) grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .characteristics import (
    BlowupError,
    ExtendedTrajectory,
    closed_degenerate,
    flow,
    jacobian_degenerate_yconst,
)
from .hamiltonian import HamiltonianModel, Kind
from .numerics import bisect_root

__all__ = [
    "BoundarySolveError",
    "FoldError",
    "BoundarySolution",
    "PhaseEvaluation",
    "ManifoldSample",
    "solve_boundary",
    "phase_exponent",
    "phase_field",
    "transport_amplitude",
    "manifold_section",
]

_DEFAULT_STEPS = {Kind.HEAT: 64, Kind.DEGENERATE: 256, Kind.GENERAL: 384}


class BoundarySolveError(RuntimeError):
    """Newton failed to converge; carries the last iterate for diagnosis."""

    def __init__(self, message: str, x0: float, y: float, residual: float):
        super().__init__(message)
        self.x0 = x0
        self.y = y
        self.residual = residual


class FoldError(RuntimeError):
    """The solution sits on a singular fiber (vanishing or negative Jacobian)."""


@dataclass
class BoundarySolution:
    """Solution of x(x0, y, t) = x together with the diagonal condition y = p_y."""

    x0: float
    y_hat: float
    trajectory: ExtendedTrajectory
    J0: float
    J: float
    exponent: float
    M: float


@dataclass
class PhaseEvaluation:
    phi: float
    phi_y: float
    phi_yy: float
    x0: float


@dataclass
class ManifoldSample:
    x0: float
    x: float
    p_x: float
    J0_yconst: float


def _steps_for(model: HamiltonianModel, steps: int | None) -> int:
    return _DEFAULT_STEPS[model.kind] if steps is None else steps


def _exponent(x0: float, xi: float, beta: float, A: float) -> float:
    """Kernel exponent at the diagonal solution.

    Equals the phase at the matched offset minus y_hat^2/2; eliminating
    y_hat = -beta (x0 - xi)/(1 - beta) collapses that difference to
    beta (x0 - xi)^2 / (2 (1 - beta)) + A, which is the numerically stable
    form (both terms are nonnegative whenever p H_p - H >= 0).
    """
    return beta * (x0 - xi) ** 2 / (2.0 * (1.0 - beta)) + A


def _endpoint(model, x0, xi, y, beta, t, steps):
    """Final (x, V) of the flow, recorded at endpoints only."""
    traj = flow(model, x0, xi, y, beta, t, steps, record_every=steps)
    return traj


def _newton_boundary(model, x, xi, beta, t, steps, guess, tol, max_iter):
    x0, y = guess
    traj = _endpoint(model, x0, xi, y, beta, t, steps)
    fs = traj.final_state
    scale = max(1.0, abs(x))
    for _ in range(max_iter):
        f1 = fs.x - x
        f2 = (1.0 - beta) * y + beta * (x0 - xi)  # y - p_y
        res = max(abs(f1) / scale, abs(f2))
        if res <= tol:
            return x0, y, traj
        v00 = fs.V[0, 0]
        v01 = fs.V[0, 1]
        det = (1.0 - beta) * v00 - beta * v01
        if abs(det) < 1e-300:
            raise BoundarySolveError("singular Newton matrix", x0, y, res)
        dx0 = (-(1.0 - beta) * f1 + v01 * f2) / det
        dy = (beta * f1 - v00 * f2) / det

        lam = 1.0
        accepted = False
        while lam >= 1.0 / 64.0:
            x0_t = x0 + lam * dx0
            y_t = y + lam * dy
            try:
                traj_t = _endpoint(model, x0_t, xi, y_t, beta, t, steps)
            except BlowupError:
                lam *= 0.5
                continue
            fs_t = traj_t.final_state
            res_t = max(abs(fs_t.x - x) / scale,
                        abs((1.0 - beta) * y_t + beta * (x0_t - xi)))
            if res_t <= tol or res_t < res * (1.0 - 0.25 * lam):
                x0, y, traj, fs = x0_t, y_t, traj_t, fs_t
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            raise BoundarySolveError("Newton stalled (no damped step accepted)",
                                     x0, y, res)
    f1 = fs.x - x
    f2 = (1.0 - beta) * y + beta * (x0 - xi)
    res = max(abs(f1) / scale, abs(f2))
    if res <= tol:
        return x0, y, traj
    raise BoundarySolveError("Newton did not converge", x0, y, res)


def solve_boundary(model: HamiltonianModel, x: float, xi: float, beta: float,
                   t: float, steps: int | None = None, tol: float = 1e-11,
                   max_iter: int = 60,
                   guess: tuple[float, float] | None = None) -> BoundarySolution:
    """Solve the two-point conditions x(x0, y, t) = x and y = p_y(x0, y).

    The diagonal condition is linear, y = -beta (x0 - xi)/(1 - beta), but
    both equations are solved jointly by damped Newton with the Jacobian
    read off the integrated sensitivity block.  The default initial guess
    (x0, y) = (x, 0) is exact at t = 0; on divergence the solver continues
    geometrically in t from 0 (8 steps) and then in beta from 0.5.

    Returns the matched point with residuals below ``tol``, the exponent
    of the assembled kernel, and both Jacobians.  Solutions with a
    vanishing extended Jacobian are rejected with :class:`FoldError`.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie strictly inside (0, 1), got {beta}")
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    if model.kind is not Kind.HEAT and x * xi < 0.0:
        raise ValueError("degenerate kinds require x and xi on the same sign-domain")
    steps = _steps_for(model, steps)
    if guess is None:
        guess = (x, 0.0)

    try:
        x0, y, traj = _newton_boundary(model, x, xi, beta, t, steps, guess, tol, max_iter)
    except BoundarySolveError:
        x0, y, traj = _continuation_solve(model, x, xi, beta, t, steps, tol, max_iter)

    fs = traj.final_state
    v00 = float(fs.V[0, 0])
    v01 = float(fs.V[0, 1])
    J = (1.0 - beta) * v00 - beta * v01
    if abs(J) < 1e-14 * max(1.0, abs(v00)):
        raise FoldError(f"extended Jacobian vanished at (x0={x0:.6g}, y={y:.6g})")
    exponent = _exponent(x0, xi, beta, fs.A)
    # Re-run once with interior samples so the trajectory is exportable.
    traj_full = flow(model, x0, xi, y, beta, t, steps,
                     record_every=max(1, steps // 64))
    return BoundarySolution(x0=float(x0), y_hat=float(y), trajectory=traj_full,
                            J0=v00, J=J, exponent=float(exponent), M=float(fs.M))


def _continuation_solve(model, x, xi, beta, t, steps, tol, max_iter):
    """Geometric continuation: first in t from 0, then in beta from 0.5."""
    guess = (x, 0.0)
    try:
        for k in range(7, -1, -1):
            t_k = t * 0.5 ** k
            x0, y, traj = _newton_boundary(model, x, xi, beta, t_k, steps,
                                           guess, tol, max_iter)
            guess = (x0, y)
        return x0, y, traj
    except BoundarySolveError:
        pass
    # Continuation in beta: walk 1-beta geometrically from 0.5 down.
    guess = (x, 0.0)
    eps_target = 1.0 - beta
    n_beta = 7
    ratio = (eps_target / 0.5) ** (1.0 / n_beta)
    for j in range(n_beta + 1):
        eps_j = 0.5 * ratio ** j
        beta_j = 1.0 - eps_j
        try:
            for k in range(7, -1, -1):
                t_k = t * 0.5 ** k
                x0, y, traj = _newton_boundary(model, x, xi, beta_j, t_k, steps,
                                               guess, tol, max_iter)
                guess = (x0, y)
        except BoundarySolveError:
            continue
    # Final solve at the requested beta with the best available guess.
    return _newton_boundary(model, x, xi, beta, t, steps, guess, tol, max_iter)


def phase_exponent(sol: BoundarySolution, xi: float, beta: float) -> float:
    """Exponent carried by a boundary solution (kernel decays like e^{-E/h}).

    Computed as beta (x0 - xi)^2/(2(1-beta)) plus the accumulated action;
    identical to the phase at the matched offset minus y_hat^2/2.
    """
    return _exponent(sol.x0, xi, beta, sol.trajectory.final_state.A)


def _preimage(model, x, xi, y, beta, t, steps, guess=None, tol=1e-11, max_iter=60):
    """Solve x(x0; y, t) = x for x0 at fixed offset y.

    Newton on the endpoint map with derivative V[0,0]; falls back to an
    expanding bracket plus bisection when Newton stalls.  A sign change of
    V[0,0] encountered on the way signals a fold crossing.
    """
    x0 = x if guess is None else guess
    scale = max(1.0, abs(x))
    traj = _endpoint(model, x0, xi, y, beta, t, steps)
    for _ in range(max_iter):
        fs = traj.final_state
        f = fs.x - x
        if abs(f) <= tol * scale:
            return x0, traj
        v00 = fs.V[0, 0]
        if v00 == 0.0:
            break
        step = -f / v00
        lam = 1.0
        while lam >= 1.0 / 64.0:
            x0_t = x0 + lam * step
            try:
                traj_t = _endpoint(model, x0_t, xi, y, beta, t, steps)
            except BlowupError:
                lam *= 0.5
                continue
            if abs(traj_t.final_state.x - x) < abs(f):
                x0, traj = x0_t, traj_t
                break
            lam *= 0.5
        else:
            break
    else:
        fs = traj.final_state
        if abs(fs.x - x) <= tol * scale:
            return x0, traj
    return _preimage_bisect(model, x, xi, y, beta, t, steps, tol)


def _preimage_bisect(model, x, xi, y, beta, t, steps, tol):
    def endpoint(x0):
        try:
            return _endpoint(model, x0, xi, y, beta, t, steps).final_state.x - x
        except BlowupError:
            return math.inf if x0 > 0 else -math.inf

    lo, hi = x, x
    width = max(0.25, 0.25 * abs(x))
    f_ref = endpoint(x)
    for _ in range(60):
        lo, hi = lo - width, hi + width
        if model.kind is not Kind.HEAT and x != 0.0:
            # launch points cannot cross the invariant origin
            if x > 0:
                lo = max(lo, 1e-12)
            else:
                hi = min(hi, -1e-12)
        f_lo, f_hi = endpoint(lo), endpoint(hi)
        if (f_lo > 0) != (f_ref > 0) or (f_hi > 0) != (f_ref > 0):
            a, b = (lo, x) if (f_lo > 0) != (f_ref > 0) else (x, hi)
            x0 = bisect_root(endpoint, a, b, xtol=tol)
            traj = _endpoint(model, x0, xi, y, beta, t, steps)
            if traj.final_state.V[0, 0] <= 0.0:
                raise FoldError("y-fixed preimage lies past a fold (J0 <= 0)")
            return x0, traj
        width *= 2.0
    raise FoldError("y-fixed preimage not found (no bracket; fold crossed?)")


def phase_field(model: HamiltonianModel, x: float, xi: float, y: float,
                beta: float, t: float, steps: int | None = None) -> PhaseEvaluation:
    """Phase of the symbol at (x, y, t) together with its offset derivatives.

    phi = beta (x0 - xi - y)^2 / 2 + A with x0 the y-fixed preimage; the
    first offset derivative equals the frozen dual momentum,
    phi_y = -beta (x0 - xi - y), and phi_yy is a central difference of
    phi_y with step 1e-5 max(1, |y|).
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    steps = _steps_for(model, steps)
    x0, traj = _preimage(model, x, xi, y, beta, t, steps)
    fs = traj.final_state
    if fs.V[0, 0] <= 0.0:
        raise FoldError("phase undefined past a fold (J0 <= 0 at the preimage)")
    phi = beta * (x0 - xi - y) ** 2 / 2.0 + fs.A

    def phi_y_at(y_val: float, guess: float) -> float:
        x0_v, _ = _preimage(model, x, xi, y_val, beta, t, steps, guess=guess)
        return -beta * (x0_v - xi - y_val)

    dy = 1e-5 * max(1.0, abs(y))
    phi_y = -beta * (x0 - xi - y)
    phi_yy = (phi_y_at(y + dy, x0) - phi_y_at(y - dy, x0)) / (2.0 * dy)
    return PhaseEvaluation(phi=phi, phi_y=phi_y, phi_yy=phi_yy, x0=x0)


def transport_amplitude(model: HamiltonianModel, x: float, xi: float, y: float,
                        beta: float, t: float, steps: int | None = None) -> float:
    """Leading transport amplitude 1/sqrt(dx/dx0) e^{M/2} at fixed offset y."""
    steps = _steps_for(model, steps)
    _, traj = _preimage(model, x, xi, y, beta, t, steps)
    fs = traj.final_state
    v00 = fs.V[0, 0]
    if v00 <= 0.0:
        raise FoldError("transport amplitude undefined past a fold (J0 <= 0)")
    return math.exp(0.5 * fs.M) / math.sqrt(v00)


def _section_evaluator(model, xi, y, beta, t, steps):
    """Per-kind (x, p_x, J0) evaluator for a y-fixed section sweep."""
    if model.kind is Kind.HEAT:
        def ev(x0):
            p0 = beta * (x0 - xi - y)
            return x0 + 2.0 * p0 * t, p0, 1.0 + 2.0 * beta * t
        return ev
    if model.kind is Kind.DEGENERATE:
        def ev(x0):
            x, p = closed_degenerate(x0, xi, y, beta, t)
            return x, p, jacobian_degenerate_yconst(x0, xi, y, beta, t)
        return ev

    def ev(x0):
        fs = _endpoint(model, x0, xi, y, beta, t, steps).final_state
        return fs.x, fs.p_x, fs.V[0, 0]
    return ev


def manifold_section(model: HamiltonianModel, xi: float, y: float, beta: float,
                     t: float, x0_range: tuple[float, float], n: int,
                     steps: int | None = None) -> tuple[list[ManifoldSample], list[float]]:
    """Sample the y-fixed section of the flowed manifold and locate its folds.

    Returns n samples of (x0, x, p_x, dx/dx0) ordered by x0, plus the
    fold points: sign changes of dx/dx0 refined by bisection to 1e-10.
    Tangential zeros (no sign change) are not reported.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    lo, hi = x0_range
    if not lo < hi:
        raise ValueError("x0_range must be an increasing interval")
    steps = _steps_for(model, steps)
    ev = _section_evaluator(model, xi, y, beta, t, steps)

    samples = []
    for i in range(n):
        x0 = lo + (hi - lo) * i / (n - 1)
        x, p, j0 = ev(x0)
        samples.append(ManifoldSample(x0=x0, x=x, p_x=p, J0_yconst=j0))

    roots: list[float] = []
    for a, b in zip(samples, samples[1:]):
        if a.J0_yconst == 0.0:
            roots.append(a.x0)
        elif (a.J0_yconst > 0.0) != (b.J0_yconst > 0.0):
            roots.append(bisect_root(lambda z: ev(z)[2], a.x0, b.x0, xtol=1e-10))
    if samples[-1].J0_yconst == 0.0:
        roots.append(samples[-1].x0)
    return samples, roots
