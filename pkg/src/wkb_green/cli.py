"""Command-line interface: reproducible kernel runs and validation.

Subcommands: ``green`` (kernel values at a point or on an x grid),
``manifold`` (section sweep with fold detection), ``smallt`` (short-time
exponent), ``oracle`` (direct-solver checks), ``validate`` (acceptance
suites).  Configuration precedence is flags > config file > defaults; the
environment variable ``WKB_GREEN_THREADS`` caps sweep parallelism.  CSV
output is RFC-4180 style with '.' decimals, UTF-8; JSON reports embed the
fully resolved configuration.  Identical configuration and seed produce
byte-identical CSV.

Exit codes: 0 success, 1 failed validation criterion, 2 configuration
error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import __version__
from .characteristics import AccuracyError, BlowupError, CharacteristicDomainError
from .green import (
    BetaSchedule,
    DeltaAtOrigin,
    QuadratureError,
    assemble,
    beta_limit,
    default_schedule,
)
from .hamiltonian import ConfigError, HamiltonianModel, Kind, parse_spec
from .oracle import (
    DomainLeakError,
    Grid1D,
    compare_green,
    crank_nicolson,
    moment_check,
)
from .phase import BoundarySolveError, FoldError, manifold_section, solve_boundary
from .smallt import DeltaRegimeError, bvp_series

GREEN_COLUMNS = ("x", "xi", "t", "h", "beta_or_limit", "exponent", "amplitude",
                 "value", "J", "x0", "y_hat", "converged")
MANIFOLD_COLUMNS = ("x0", "x", "p_x", "J0")
SMALLT_COLUMNS = ("x", "xi", "t", "S_leading", "S0", "S1", "P0")

_SOLVER_ERRORS = (BoundarySolveError, FoldError, BlowupError, AccuracyError,
                  CharacteristicDomainError, DeltaRegimeError, QuadratureError,
                  DomainLeakError, RuntimeError)


@dataclass
class RunConfig:
    """Fully resolved parameters of one CLI run, echoed into JSON reports."""

    command: str
    hamiltonian: dict
    params: dict
    seed: int
    threads: int

    def to_dict(self) -> dict:
        return {"command": self.command, "hamiltonian": self.hamiltonian,
                "params": self.params, "seed": self.seed,
                "threads": self.threads, "version": __version__}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(float(v))  # plain float repr even for numpy scalars
    return str(v)


def resolve_threads(requested: int | None) -> int:
    cap = os.environ.get("WKB_GREEN_THREADS")
    n = requested if requested is not None else (os.cpu_count() or 1)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"WKB_GREEN_THREADS must be an integer, got {cap!r}")
    return max(1, n)


def _parallel_map(fn, items, threads: int):
    """Deterministic parallel map: results keep input order."""
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _require(value, flag: str):
    if value is None:
        raise ConfigError(f"{flag} is required")
    return value


def _positive(value, flag: str) -> float:
    value = _require(value, flag)
    if value <= 0.0:
        raise ConfigError(f"{flag} must be positive")
    return value


def _model_from_args(ns) -> tuple[HamiltonianModel, dict]:
    kind = _require(ns.hamiltonian, "--hamiltonian")
    cfg: dict = {"kind": kind}
    if ns.a_poly is not None:
        if isinstance(ns.a_poly, str):
            cfg["a_poly"] = [float(c) for c in ns.a_poly.split(",") if c.strip()]
        else:
            cfg["a_poly"] = list(ns.a_poly)
    if ns.domain_sign is not None:
        cfg["domain_sign"] = ns.domain_sign
    return parse_spec(cfg), cfg


def _grid_values(spec: str) -> list[float]:
    try:
        lo_s, hi_s, n_s = spec.split(":")
        lo, hi, n = float(lo_s), float(hi_s), int(n_s)
    except ValueError:
        raise ConfigError(f"grid must look like min:max:count, got {spec!r}")
    if n < 1:
        raise ConfigError("grid count must be positive")
    if n == 1:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _schedule_from_args(ns) -> BetaSchedule:
    if ns.betas is None:
        return default_schedule(tol=ns.tol)
    betas = tuple(float(b) for b in str(ns.betas).split(",") if b.strip())
    return BetaSchedule(betas=betas, tol=ns.tol)


def _write_csv(path: str | None, columns, rows) -> None:
    def emit(stream):
        writer = csv.writer(stream)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])

    if path is None:
        emit(sys.stdout)
    else:
        with open(path, "w", newline="", encoding="utf-8") as f:
            emit(f)


def _write_json(path: str | None, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if path is None:
        print(text)
    else:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text + "\n")


def _plot_path(ns) -> str:
    if not ns.out:
        raise ConfigError("--plot requires --out (the figure lands next to it)")
    base, _ = os.path.splitext(ns.out)
    return base + ".png"


# ----------------------------------------------------------------- green

def cmd_green(ns) -> int:
    model, ham_cfg = _model_from_args(ns)
    xi = _require(ns.xi, "--xi")
    t = _positive(ns.t, "--t")
    h = _positive(ns.h, "--h")
    if ns.beta is None and not ns.beta_limit:
        raise ConfigError("choose --beta B or --beta-limit")

    xs = _grid_values(ns.x_grid) if ns.x_grid else [_require(ns.x, "--x")]
    threads = resolve_threads(ns.threads)
    schedule = _schedule_from_args(ns)

    def evaluate(x: float) -> dict:
        if ns.beta_limit:
            out = beta_limit(model, x, xi, t, h, schedule=schedule)
            tag = "limit"
        else:
            out = assemble(model, x, xi, t, h, ns.beta)
            tag = ns.beta
        if isinstance(out, DeltaAtOrigin):
            return {"x": x, "xi": xi, "t": t, "h": h, "beta_or_limit": tag,
                    "exponent": None, "amplitude": None,
                    "value": "delta-at-origin", "J": None, "x0": None,
                    "y_hat": None, "converged": True}
        return {"x": x, "xi": xi, "t": t, "h": h, "beta_or_limit": tag,
                "exponent": out.exponent, "amplitude": out.amplitude,
                "value": out.value, "J": out.J, "x0": out.x0,
                "y_hat": out.y_hat, "converged": out.converged}

    rows = _parallel_map(evaluate, xs, threads)
    _write_csv(ns.out, GREEN_COLUMNS,
               [[r[c] for c in GREEN_COLUMNS] for r in rows])

    if ns.trajectory:
        beta_for_traj = ns.beta if ns.beta is not None else schedule.betas[-1]
        sol = solve_boundary(model, xs[-1], xi, beta_for_traj, t)
        with open(ns.trajectory, "w", newline="", encoding="utf-8") as f:
            sol.trajectory.to_csv(f)

    if ns.plot:
        from .plotting import save_green_figure

        numeric = [r for r in rows if r["value"] != "delta-at-origin"]
        save_green_figure(numeric, _plot_path(ns))
    return 0


# -------------------------------------------------------------- manifold

def cmd_manifold(ns) -> int:
    model, ham_cfg = _model_from_args(ns)
    xi = _require(ns.xi, "--xi")
    beta = _require(ns.beta, "--beta")
    t = _positive(ns.t, "--t")
    x0_min = _require(ns.x0_min, "--x0-min")
    x0_max = _require(ns.x0_max, "--x0-max")
    samples, roots = manifold_section(model, xi, ns.y, beta, t,
                                      (x0_min, x0_max), ns.n)
    rows = [[s.x0, s.x, s.p_x, s.J0_yconst] for s in samples]
    config = RunConfig(command="manifold", hamiltonian=ham_cfg,
                       params={"xi": xi, "y": ns.y, "beta": beta, "t": t,
                               "x0_min": x0_min, "x0_max": x0_max, "n": ns.n},
                       seed=ns.seed, threads=1)
    payload = {"config": config.to_dict(), "caustics": roots}
    if ns.out:
        _write_csv(ns.out, MANIFOLD_COLUMNS, rows)
        base, _ = os.path.splitext(ns.out)
        _write_json(base + ".caustics.json", payload)
    else:
        _write_csv(None, MANIFOLD_COLUMNS, rows)
        print(json.dumps(payload, indent=2, sort_keys=True), file=sys.stderr)

    if ns.plot:
        from .plotting import save_manifold_figure

        save_manifold_figure(samples, roots, _plot_path(ns))
    return 0


# ---------------------------------------------------------------- smallt

def cmd_smallt(ns) -> int:
    model, _ = _model_from_args(ns)
    xi = _require(ns.xi, "--xi")
    xs = _grid_values(ns.x_grid) if ns.x_grid else [_require(ns.x, "--x")]
    t = _positive(ns.t, "--t")
    threads = resolve_threads(ns.threads)

    def evaluate(x: float):
        series = bvp_series(model, x, xi, nu=t, t_prime=1.0, order=ns.order)
        s_val = series.S0 / series.nu + (series.S1 if ns.order >= 1 else 0.0)
        return [x, xi, t, s_val, series.S0, series.S1, series.P0]

    rows = _parallel_map(evaluate, xs, threads)
    _write_csv(ns.out, SMALLT_COLUMNS, rows)
    if ns.plot:
        from .plotting import save_smallt_figure

        save_smallt_figure([dict(zip(SMALLT_COLUMNS, r)) for r in rows],
                           _plot_path(ns))
    return 0


# ---------------------------------------------------------------- oracle

def cmd_oracle(ns) -> int:
    model, ham_cfg = _model_from_args(ns)
    t = _positive(ns.t, "--t")
    h = _positive(ns.h, "--h")
    config = RunConfig(command="oracle", hamiltonian=ham_cfg,
                       params={"t": t, "h": h, "moment": ns.moment,
                               "compare": ns.compare, "x": ns.x, "xi": ns.xi,
                               "sigma": ns.sigma, "n": ns.n,
                               "ic_center": ns.ic_center, "ic_sigma": ns.ic_sigma},
                       seed=ns.seed, threads=1)

    if ns.moment is not None:
        import numpy as np

        spread = math.exp(6.0 * math.sqrt(2.0 * h * t))
        hi = abs(ns.ic_center) * spread + 6.0 * ns.ic_sigma + 2.0
        if model.kind is Kind.HEAT:
            lo, hi = ns.ic_center - hi, ns.ic_center + hi
        else:
            lo = 0.0
        grid = Grid1D(x_min=lo, x_max=hi, n=ns.n, dt=(hi - lo) / (ns.n - 1), h=h)
        u0 = np.exp(-0.5 * ((grid.x - ns.ic_center) / ns.ic_sigma) ** 2)
        u0 /= np.trapezoid(u0, grid.x)
        sol = crank_nicolson(model.spec, grid, u0, t, store_every=25)
        series = moment_check(sol, ns.moment)
        payload = {"config": config.to_dict(),
                   "moment_order": ns.moment,
                   "times": [float(v) for v in sol.times],
                   "values": [float(v) for v in series],
                   "ratio": float(series[-1] / series[0])}
        if ns.moment == 2 and model.kind is Kind.DEGENERATE:
            payload["expected_ratio"] = math.exp(12.0 * h * t)
        _write_json(ns.out, payload)
        if ns.frames_out:
            with open(ns.frames_out, "w", newline="", encoding="utf-8") as f:
                sol.frames_csv(f)
        if ns.plot:
            from .plotting import save_oracle_figure

            save_oracle_figure(sol, _plot_path(ns))
        return 0

    if ns.compare:
        rep = compare_green(model.spec, _require(ns.x, "--x"), ns.xi, t, h,
                            sigma=ns.sigma, n=ns.n)
        payload = {"config": config.to_dict(), "report": rep.to_dict()}
        _write_json(ns.out, payload)
        return 0

    raise ConfigError("oracle needs --moment K or --compare")


# -------------------------------------------------------------- validate

def cmd_validate(ns) -> int:
    from .acceptance import run_suite

    outcomes = run_suite(ns.suite, seed=ns.seed)
    payload = {
        "suite": ns.suite,
        "seed": ns.seed,
        "criteria": [o.to_dict() for o in outcomes],
        "passed": all(o.passed for o in outcomes),
    }
    _write_json(ns.out, payload)
    failures = [o.name for o in outcomes if not o.passed]
    if failures:
        print("FAILED criteria: " + "; ".join(failures), file=sys.stderr)
        return 1
    return 0


# ----------------------------------------------------------------- main

def _add_common(p: argparse.ArgumentParser, needs_model: bool = True) -> None:
    if needs_model:
        p.add_argument("--hamiltonian", choices=[k.value for k in Kind])
        p.add_argument("--a-poly", dest="a_poly",
                       help="comma-separated coefficients of a(x), general kind only")
        p.add_argument("--domain-sign", dest="domain_sign",
                       choices=["positive", "negative", "both"])
    p.add_argument("--config", help="JSON file supplying defaults for flags")
    p.add_argument("--seed", type=int, default=20240817)
    p.add_argument("--threads", type=int, default=None,
                   help="sweep parallelism (capped by WKB_GREEN_THREADS)")
    p.add_argument("--out", help="output path (stdout when omitted)")
    p.add_argument("--plot", action="store_true",
                   help="render a PNG figure next to --out")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="wkb-green",
        description="Leading-order kernel asymptotics for 1-D parabolic "
                    "equations with small diffusion, plus validation tools.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers: dict[str, argparse.ArgumentParser] = {}

    g = sub.add_parser("green", help="kernel value at a point or on an x grid")
    _add_common(g)
    g.add_argument("--x", type=float)
    g.add_argument("--x-grid", dest="x_grid", help="min:max:count sweep in x")
    g.add_argument("--xi", type=float)
    g.add_argument("--t", type=float)
    g.add_argument("--h", type=float)
    g.add_argument("--beta", type=float)
    g.add_argument("--beta-limit", dest="beta_limit", action="store_true",
                   help="extrapolate to the sharp-delta limit")
    g.add_argument("--betas", help="comma-separated schedule override")
    g.add_argument("--tol", type=float, default=1e-6)
    g.add_argument("--trajectory", help="also export the matched trajectory CSV")
    g.set_defaults(handler=cmd_green)
    subparsers["green"] = g

    m = sub.add_parser("manifold", help="y-fixed section sweep with fold detection")
    _add_common(m)
    m.add_argument("--xi", type=float)
    m.add_argument("--y", type=float, default=0.0)
    m.add_argument("--beta", type=float)
    m.add_argument("--t", type=float)
    m.add_argument("--x0-min", dest="x0_min", type=float)
    m.add_argument("--x0-max", dest="x0_max", type=float)
    m.add_argument("--n", type=int, default=200)
    m.set_defaults(handler=cmd_manifold)
    subparsers["manifold"] = m

    s = sub.add_parser("smallt", help="short-time exponent of the kernel")
    _add_common(s)
    s.add_argument("--x", type=float)
    s.add_argument("--x-grid", dest="x_grid")
    s.add_argument("--xi", type=float)
    s.add_argument("--t", type=float)
    s.add_argument("--order", type=int, default=1, choices=(0, 1))
    s.set_defaults(handler=cmd_smallt)
    subparsers["smallt"] = s

    o = sub.add_parser("oracle", help="direct finite-difference checks")
    _add_common(o)
    o.add_argument("--t", type=float)
    o.add_argument("--h", type=float)
    o.add_argument("--moment", type=int, choices=(0, 1, 2))
    o.add_argument("--compare", action="store_true")
    o.add_argument("--x", type=float)
    o.add_argument("--xi", type=float, default=1.0)
    o.add_argument("--sigma", type=float)
    o.add_argument("--n", type=int, default=2001)
    o.add_argument("--ic-center", dest="ic_center", type=float, default=1.0)
    o.add_argument("--ic-sigma", dest="ic_sigma", type=float, default=0.05)
    o.add_argument("--frames-out", dest="frames_out")
    o.set_defaults(handler=cmd_oracle)
    subparsers["oracle"] = o

    v = sub.add_parser("validate", help="run acceptance suites")
    v.add_argument("suite", choices=["heat", "degenerate", "smallt", "oracle", "all"])
    _add_common(v, needs_model=False)
    v.set_defaults(handler=cmd_validate)
    subparsers["validate"] = v

    return parser, subparsers


def _load_config_file(path: str, subparser: argparse.ArgumentParser) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            overrides = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    if not isinstance(overrides, dict):
        raise ConfigError("config file must hold a JSON object")
    valid = {a.dest for a in subparser._actions}
    unknown = set(overrides) - valid
    if unknown:
        raise ConfigError(f"unknown config file keys: {sorted(unknown)}")
    overrides.pop("config", None)
    overrides.pop("handler", None)
    return overrides


def main(argv=None) -> int:
    parser, subparsers = build_parser()
    ns = parser.parse_args(argv)
    try:
        if getattr(ns, "config", None):
            # flags > config file > defaults: install the file's values as
            # parser defaults and re-parse, so explicit flags still win
            overrides = _load_config_file(ns.config, subparsers[ns.command])
            subparsers[ns.command].set_defaults(**overrides)
            ns = parser.parse_args(argv)
        return ns.handler(ns)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"run 'wkb-green {getattr(ns, 'command', '')} --help' for usage",
              file=sys.stderr)
        return 2
    except _SOLVER_ERRORS as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
