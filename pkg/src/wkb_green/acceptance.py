"""Acceptance criteria for the full pipeline, grouped into named suites.

Each criterion returns a :class:`CriterionOutcome`; the CLI ``validate``
subcommand and the acceptance test module both run these and report one
line per criterion.  Tolerances are fixed here, not configurable.
"""

from __future__ import annotations

import functools
import math
import random
import time
from dataclasses import dataclass

import numpy as np

from .characteristics import (
    closed_degenerate,
    flow,
    jacobian_degenerate,
    jacobian_degenerate_yconst,
)
from .green import (
    BetaSchedule,
    assemble,
    beta_limit,
    gbeta_at_origin,
    heat_exact_log,
)
from .hamiltonian import HamiltonianSpec, Kind, parse_spec
from .oracle import Grid1D, compare_green, crank_nicolson, moment_check
from .phase import phase_field, solve_boundary, transport_amplitude, manifold_section
from .smallt import s_small_t

__all__ = ["CriterionOutcome", "SUITES", "run_suite", "run_all"]

DEFAULT_SEED = 20240817


@dataclass
class CriterionOutcome:
    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str
    runtime_s: float = 0.0

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed),
                "measured": self.measured, "threshold": self.threshold,
                "detail": self.detail, "runtime_s": round(self.runtime_s, 3)}


def _timed(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        outcome = fn(*args, **kwargs)
        outcome.runtime_s = time.perf_counter() - start
        return outcome
    return wrapper


@_timed
def heat_kernel_exactness() -> CriterionOutcome:
    """Sharp-limit values match the closed constant-diffusion kernel to 1e-6.

    Compared in log form so deep tails (exponent/h up to 1000) stay
    meaningful; runtime is part of the criterion (< 5 s).
    """
    model = parse_spec({"kind": "heat"})
    start = time.perf_counter()
    worst = 0.0
    for dx in (0.0, 0.5, 1.0, 2.0):
        for t in (0.1, 0.5, 1.0):
            for h in (1.0, 0.1, 0.01):
                gv = beta_limit(model, dx, 0.0, t, h)
                worst = max(worst, abs(gv.log_value - heat_exact_log(dx, 0.0, t, h)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed < 5.0
    return CriterionOutcome(
        name="heat-kernel exactness",
        passed=ok, measured=worst, threshold=1e-6,
        detail=f"max |dlog G| = {worst:.2e} over 36 points in {elapsed:.2f} s (< 5 s)")


@_timed
def heat_intermediates() -> CriterionOutcome:
    """Phase, transport amplitude and extended Jacobian closed forms to 1e-10."""
    model = parse_spec({"kind": "heat"})
    worst = 0.0
    for x, xi, y, t in [(1.0, 0.0, 0.0, 0.5), (0.3, -0.4, 0.2, 0.25),
                        (1.5, 0.5, -0.3, 1.0)]:
        pe = phase_field(model, x, xi, y, 1.0, t)
        worst = max(worst, abs(pe.phi - (x - xi - y) ** 2 / (2.0 * (1.0 + 2.0 * t))))
        amp = transport_amplitude(model, x, xi, y, 1.0, t)
        worst = max(worst, abs(amp - 1.0 / math.sqrt(1.0 + 2.0 * t)))
    for beta in (0.25, 0.77, 0.99):
        for t in (0.1, 0.5, 1.0):
            sol = solve_boundary(model, 1.3, 0.2, beta, t)
            worst = max(worst, abs(sol.J - (1.0 - beta + 2.0 * beta * t)))
    return CriterionOutcome(
        name="heat intermediates (phase, amplitude, extended Jacobian)",
        passed=worst <= 1e-10, measured=worst, threshold=1e-10,
        detail=f"max deviation from closed forms = {worst:.2e}")


@_timed
def degenerate_characteristics() -> CriterionOutcome:
    """Flow vs closed characteristics, Jacobian formulas, fold locations."""
    model = parse_spec({"kind": "degenerate"})
    rng = random.Random(11)
    worst_flow = 0.0
    worst_jac = 0.0
    for _ in range(12):
        sign = rng.choice([1.0, -1.0])
        x0 = sign * rng.uniform(0.2, 2.0)
        xi = sign * rng.uniform(0.2, 2.0)
        y = rng.uniform(-0.3, 0.3)
        beta = rng.uniform(0.3, 1.0)
        t = rng.uniform(0.05, 1.0)
        if abs(2.0 * beta * x0 * (x0 - xi - y) * t) > 8.0:
            t = 8.0 / abs(2.0 * beta * x0 * (x0 - xi - y))
        x_ref, p_ref = closed_degenerate(x0, xi, y, beta, t)
        fs = flow(model, x0, xi, y, beta, t, 10_000).final_state
        worst_flow = max(worst_flow,
                         abs(fs.x - x_ref) / max(1.0, abs(x_ref)),
                         abs(fs.p_x - p_ref) / max(1.0, abs(p_ref)))
        ref = jacobian_degenerate_yconst(x0, xi, y, beta, t)
        worst_jac = max(worst_jac, abs(fs.V[0, 0] - ref) / max(1.0, abs(ref)))
        if beta < 1.0:
            y_el = -beta * (x0 - xi) / (1.0 - beta)
            if abs(2.0 * beta * x0 * (x0 - xi - y_el) * t) < 8.0:
                fs2 = flow(model, x0, xi, y_el, beta, t, 10_000).final_state
                # the offset-eliminated Jacobian is the total derivative
                # through y(x0): V00 - beta/(1-beta) V01
                total = fs2.V[0, 0] - beta / (1.0 - beta) * fs2.V[0, 1]
                ref2 = jacobian_degenerate(x0, xi, beta, t)
                worst_jac = max(worst_jac,
                                abs(total - ref2) / max(1.0, abs(ref2)))
    _, roots = manifold_section(model, 3.0, 0.0, 1.0, 2.0 / 3.0, (0.2, 1.2), 240)
    expected = ((3.0 - math.sqrt(3.0)) / 4.0, (3.0 + math.sqrt(3.0)) / 4.0)
    root_err = (max(abs(a - b) for a, b in zip(sorted(roots), expected))
                if len(roots) == 2 else math.inf)
    ok = worst_flow <= 1e-7 and worst_jac <= 1e-6 and root_err <= 1e-8
    return CriterionOutcome(
        name="degenerate characteristics, Jacobians, fold points",
        passed=ok, measured=max(worst_flow, worst_jac, root_err), threshold=1e-6,
        detail=(f"flow vs closed {worst_flow:.2e} (tol 1e-7); variational vs "
                f"formulas {worst_jac:.2e} (tol 1e-6); fold roots {root_err:.2e} "
                "(tol 1e-8)"))


@_timed
def beta_family_mass() -> CriterionOutcome:
    """Pinned-kernel mass equals 1/sqrt(beta) and approaches 1 as beta -> 1."""
    h = 0.02
    worst = 0.0
    gaps = []
    for beta in (0.9, 0.99, 0.999):
        sigma = math.sqrt((1.0 - beta) * h / beta)
        xs = np.linspace(-12.0 * sigma, 12.0 * sigma, 4001)
        vals = np.array([gbeta_at_origin(v, 1.0, h, beta) for v in xs])
        mass = float(np.trapezoid(vals, xs))
        worst = max(worst, abs(mass - 1.0 / math.sqrt(beta)))
        gaps.append(abs(mass - 1.0))
    toward_one = gaps[0] > gaps[1] > gaps[2] and gaps[2] < 1e-3
    ok = worst <= 1e-6 and toward_one
    return CriterionOutcome(
        name="pinned-kernel mass law (beta family)",
        passed=ok, measured=worst, threshold=1e-6,
        detail=(f"max |mass - 1/sqrt(beta)| = {worst:.2e}; gaps to 1: "
                + ", ".join(f"{g:.1e}" for g in gaps)))


@_timed
def small_time_consistency() -> CriterionOutcome:
    """Full exponent vs short-time expansion; order-0 shooting vs closed form.

    For the quadratic-in-momentum families the rescaled two-point system
    is independent of the small parameter, so the expansion is exact at
    leading order and the difference sits at the numerical floor.  The
    criterion therefore passes either when every difference is below
    max(1e-8, 1e-6 |E|), or when the differences follow a log-log slope
    >= 1.9 in t.
    """
    model = parse_spec({"kind": "degenerate"})
    sched = BetaSchedule(betas=tuple(1.0 - 2.0 ** (-k) for k in range(5, 13)),
                         tol=1e-6)
    ts = (0.1, 0.05, 0.025, 0.0125)
    floor_ok = True
    diffs_all = []
    worst_shoot = 0.0
    for x in (0.9, 1.1, 1.25):
        diffs = []
        for t in ts:
            gv = beta_limit(model, x, 1.0, t, 0.05, schedule=sched)
            s = s_small_t(model, x, 1.0, t)
            diffs.append(abs(gv.exponent - s))
            if diffs[-1] > max(1e-8, 1e-6 * abs(gv.exponent)):
                floor_ok = False
            ref = math.log(x) ** 2 / (4.0 * t)
            worst_shoot = max(worst_shoot, abs(s - ref) / max(1.0, abs(ref)))
        diffs_all.append(diffs)
    if floor_ok:
        slope_note = "differences at numerical floor (expansion exact at leading order)"
        decay_ok = True
    else:
        slopes = []
        for diffs in diffs_all:
            lt = np.log(ts)
            ld = np.log(np.maximum(diffs, 1e-300))
            slopes.append(float(np.polyfit(lt, ld, 1)[0]))
        decay_ok = all(s >= 1.9 for s in slopes)
        slope_note = "log-log slopes: " + ", ".join(f"{s:.2f}" for s in slopes)
    shoot_ok = worst_shoot <= 1e-8
    max_diff = max(max(d) for d in diffs_all)
    return CriterionOutcome(
        name="short-time expansion consistency",
        passed=decay_ok and shoot_ok, measured=max_diff, threshold=1e-8,
        detail=(f"max |E - S| = {max_diff:.2e}; {slope_note}; order-0 shooting vs "
                f"closed form {worst_shoot:.2e} (tol 1e-8)"))


@_timed
def oracle_agreement() -> CriterionOutcome:
    """Assembled kernel against the direct solver, within budgeted runtime."""
    start = time.perf_counter()
    heat_rep = compare_green(HamiltonianSpec(Kind.HEAT), 0.5, 0.0, 0.5, 0.1,
                             sigma=0.01, n=4001)
    rels = []
    for h in (0.1, 0.05, 0.025):
        rep = compare_green(HamiltonianSpec(Kind.DEGENERATE), 1.2, 1.0, 0.2, h,
                            sigma=0.0025, n=4001)
        rels.append(rep.rel_error)
    elapsed = time.perf_counter() - start
    heat_ok = (not heat_rep.skipped) and heat_rep.rel_error <= 0.02
    mono_ok = rels[0] > rels[1] > rels[2]
    ok = heat_ok and mono_ok and elapsed < 60.0
    return CriterionOutcome(
        name="direct-solver agreement",
        passed=ok, measured=heat_rep.rel_error, threshold=0.02,
        detail=(f"heat deviation {heat_rep.rel_error:.3%} (tol 2%); degenerate "
                f"deviations {', '.join(f'{r:.3%}' for r in rels)} monotone in h: "
                f"{mono_ok}; runtime {elapsed:.1f} s (< 60 s)"))


@_timed
def moment_and_confinement() -> CriterionOutcome:
    """Second-moment growth law within 1% and no transport across the origin."""
    spec = HamiltonianSpec(Kind.DEGENERATE)
    worst_ratio = 0.0
    for h, t in ((0.05, 0.5), (0.1, 1.0)):
        width = math.exp(6.0 * math.sqrt(2.0 * h * t))
        hi = 2.0 * width + 2.0
        n = 2001
        grid = Grid1D(x_min=0.0, x_max=hi, n=n, dt=hi / (n - 1), h=h)
        u0 = np.exp(-0.5 * ((grid.x - 1.0) / 0.05) ** 2)
        u0 /= np.trapezoid(u0, grid.x)
        sol = crank_nicolson(spec, grid, u0, t, store_every=50)
        m2 = moment_check(sol, 2)
        ratio = m2[-1] / m2[0]
        worst_ratio = max(worst_ratio,
                          abs(ratio - math.exp(12.0 * h * t)) / math.exp(12.0 * h * t))

    h, t = 0.05, 0.1
    grid = Grid1D(x_min=0.0, x_max=4.0, n=2001, dt=4.0 / 2000, h=h)
    u0 = np.exp(-0.5 * ((grid.x - 1.0) / 0.05) ** 2)
    u0[(grid.x < 0.55) | (grid.x > 1.45)] = 0.0
    u0 /= np.trapezoid(u0, grid.x)
    sol = crank_nicolson(spec, grid, u0, t)
    region = grid.x < 0.25
    frac = (float(np.trapezoid(np.abs(sol.final[region]), grid.x[region]))
            / float(np.trapezoid(np.abs(sol.final), grid.x)))
    ok = worst_ratio <= 0.01 and frac < 1e-8
    return CriterionOutcome(
        name="no-smoothing moment law and support confinement",
        passed=ok, measured=worst_ratio, threshold=0.01,
        detail=(f"max relative moment-law error {worst_ratio:.2e} (tol 1%); "
                f"mass fraction below x=0.25 is {frac:.1e} (tol 1e-8)"))


@_timed
def positivity_and_path_consistency(seed: int = DEFAULT_SEED) -> CriterionOutcome:
    """Exponent nonnegativity on random samples; both assembly routes agree."""
    heat = parse_spec({"kind": "heat"})
    deg = parse_spec({"kind": "degenerate"})
    rng = random.Random(seed)
    min_E = math.inf
    for _ in range(1000):
        if rng.random() < 0.5:
            model = heat
            x = rng.uniform(-2.0, 2.0)
            xi = rng.uniform(-2.0, 2.0)
        else:
            model = deg
            sign = rng.choice([1.0, -1.0])
            xi = sign * rng.uniform(0.3, 2.0)
            x = xi * rng.uniform(0.7, 1.45)
        beta = rng.uniform(0.05, 0.99)
        t = rng.uniform(0.005, 0.3)
        sol = solve_boundary(model, x, xi, beta, t, steps=128)
        min_E = min(min_E, sol.exponent)

    worst_gap = 0.0
    for model, x, xi in ((heat, 1.6, 0.2), (deg, 1.25, 0.95)):
        for beta in (0.5, 0.9, 0.99):
            a = assemble(model, x, xi, 0.3, 0.05, beta, method="extended")
            b = assemble(model, x, xi, 0.3, 0.05, beta, method="offset")
            worst_gap = max(worst_gap, abs(a.value - b.value) / a.value)
    ok = min_E >= 0.0 and worst_gap <= 1e-6
    return CriterionOutcome(
        name="exponent positivity and assembly-route agreement",
        passed=ok, measured=worst_gap, threshold=1e-6,
        detail=(f"min exponent over 1000 samples = {min_E:.2e} (>= 0); "
                f"max route disagreement {worst_gap:.2e} (tol 1e-6)"))


SUITES: dict[str, tuple] = {
    "heat": (heat_kernel_exactness, heat_intermediates),
    "degenerate": (degenerate_characteristics, beta_family_mass,
                   positivity_and_path_consistency),
    "smallt": (small_time_consistency,),
    "oracle": (oracle_agreement, moment_and_confinement),
}


def run_suite(name: str, seed: int = DEFAULT_SEED) -> list[CriterionOutcome]:
    if name == "all":
        return run_all(seed)
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from "
                         f"{sorted(SUITES)} or 'all'")
    out = []
    for fn in SUITES[name]:
        if fn is positivity_and_path_consistency:
            out.append(fn(seed))
        else:
            out.append(fn())
    return out


def run_all(seed: int = DEFAULT_SEED) -> list[CriterionOutcome]:
    out = []
    for suite in ("heat", "degenerate", "smallt", "oracle"):
        out.extend(run_suite(suite, seed))
    return out
