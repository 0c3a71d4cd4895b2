"""Figure rendering for CLI reports.

Every report-producing subcommand can drop a PNG next to its delimited
output.  Rendering always goes through the Agg backend straight to files;
nothing here opens a window.
"""

from __future__ import annotations

from typing import Sequence

__all__ = [
    "save_green_figure",
    "save_manifold_figure",
    "save_smallt_figure",
    "save_oracle_figure",
]


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    plt.rcParams.update({
        "figure.figsize": (6.4, 4.0),
        "font.size": 9,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "lines.linewidth": 1.2,
    })
    return plt


def save_green_figure(rows: Sequence[dict], path: str) -> None:
    """Kernel profile: value (log scale where sensible) and exponent vs x."""
    plt = _pyplot()
    pts = [r for r in rows if r.get("value") not in (None, "")]
    xs = [r["x"] for r in pts]
    vals = [r["value"] for r in pts]
    exps = [r["exponent"] for r in pts]
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True)
    ax1.plot(xs, vals, marker="." if len(xs) < 40 else None)
    ax1.set_ylabel("G")
    if vals and min(vals) > 0 and max(vals) / min(vals) > 50:
        ax1.set_yscale("log")
    ax2.plot(xs, exps, color="tab:red", marker="." if len(xs) < 40 else None)
    ax2.set_ylabel("exponent")
    ax2.set_xlabel("x")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_manifold_figure(samples, roots: Sequence[float], path: str) -> None:
    """Section of the flowed manifold in the (x, p_x) plane with fold marks."""
    plt = _pyplot()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 3.6))
    ax1.plot([s.x for s in samples], [s.p_x for s in samples])
    ax1.set_xlabel("x")
    ax1.set_ylabel("p_x")
    ax1.set_title("section")
    ax2.plot([s.x0 for s in samples], [s.J0_yconst for s in samples])
    ax2.axhline(0.0, color="k", lw=0.6)
    for r in roots:
        ax2.axvline(r, color="tab:red", ls="--", lw=0.8)
    ax2.set_xlabel("x0")
    ax2.set_ylabel("dx/dx0")
    ax2.set_title(f"{len(roots)} fold point(s)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_smallt_figure(rows: Sequence[dict], path: str) -> None:
    """Short-time exponent against x (or t when x is fixed)."""
    plt = _pyplot()
    xs = [r["x"] for r in rows]
    s = [r["S_leading"] for r in rows]
    fig, ax = plt.subplots()
    if len(set(xs)) > 1:
        ax.plot(xs, s, marker=".")
        ax.set_xlabel("x")
    else:
        ax.plot([r["t"] for r in rows], s, marker=".")
        ax.set_xlabel("t")
    ax.set_ylabel("S")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_oracle_figure(sol, path: str, wkb_points=None) -> None:
    """Final frame of the direct solve, optionally with kernel values overlaid."""
    plt = _pyplot()
    fig, ax = plt.subplots()
    ax.plot(sol.grid.x, sol.final, label=f"direct solve (t={sol.times[-1]:.3g})")
    if wkb_points:
        ax.plot([p[0] for p in wkb_points], [p[1] for p in wkb_points], "o",
                color="tab:red", label="assembled kernel")
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
