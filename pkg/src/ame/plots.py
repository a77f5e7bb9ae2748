"""Figure rendering for the CLI report paths; always writes to files (Agg backend)."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def bidding_figure(beta, path, grid_size=512):
    """Bid curve with its jumps, one panel, dashed verticals at breakpoints."""
    lo = beta.os.dist.support[0]
    hi = beta.trunc_hi
    fig, ax = plt.subplots(figsize=(6, 4))
    bps = sorted({b for b in beta.breakpoints if math.isfinite(b) and b < hi})
    edges = [lo] + bps + [hi]
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a <= 0:
            continue
        vs = np.linspace(a, b - 1e-9 * max(1.0, abs(b)), max(grid_size // len(edges), 32))
        ax.plot(vs, beta.eval(vs), color="C0")
    for b in bps:
        ax.axvline(b, color="0.6", linestyle="--", linewidth=0.8)
    ax.plot([lo, hi], [lo, hi], color="0.8", linestyle=":", linewidth=0.8, label="truthful")
    ax.set_xlabel("value")
    ax.set_ylabel("bid")
    ax.set_title("equilibrium bidding function")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def revenue_figure(report, myerson, path):
    idx = [i for i, _ in report.per_exchange]
    revs = [r for _, r in report.per_exchange]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar([str(i) for i in idx], revs, color="C0", label="per-exchange revenue")
    ax.axhline(report.weighted_total, color="C1", linestyle="-", label="weighted total")
    if myerson is not None:
        ax.axhline(myerson, color="C3", linestyle="--", label="optimal single auction")
    ax.set_xlabel("exchange")
    ax.set_ylabel("revenue per auction run")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def best_response_figure(br, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for kind, curve in br.revenue_curve.items():
        ax.plot(curve[:, 0], curve[:, 1], label=kind)
    ax.axvline(br.best_reserve, color="0.5", linestyle="--", linewidth=0.8)
    ax.plot([br.best_reserve], [br.best_revenue], "o", color="C3")
    ax.set_xlabel("own reserve")
    ax.set_ylabel(f"revenue of exchange {br.exchange}")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def equilibrium_figure(result, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    if result.history:
        hist = np.array(result.history)
        for j in range(hist.shape[1]):
            ax.plot(range(1, len(hist) + 1), hist[:, j], marker="o", label=f"exchange {j}")
    for r in result.reserves:
        ax.axhline(r, color="0.8", linestyle=":", linewidth=0.8)
    ax.set_xlabel("round")
    ax.set_ylabel("reserve")
    ax.set_title("iterated best response" + ("" if result.converged else " (not converged)"))
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
