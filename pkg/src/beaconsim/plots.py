"""SVG figures for the probability/cost tables (matplotlib, Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "beaconsim"


def _columns(rows):
    ns = [r["n"] for r in rows]
    prob = [float(r["probability"]) for r in rows]
    gwei = [r["cost_gwei"] for r in rows]
    usd = [None if r["cost_usd"] in (None, "") else float(r["cost_usd"]) for r in rows]
    return ns, prob, gwei, usd


def _cost_axes(ax, ns, gwei, usd):
    pts = [(n, g, u) for n, g, u in zip(ns, gwei, usd) if g is not None]
    if not pts:
        ax.text(0.5, 0.5, "no successful trials", ha="center", transform=ax.transAxes)
        return
    ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o")
    ax.set_xlabel("n")
    ax.set_ylabel("cost (Gwei)")
    ratio = pts[-1][2] / pts[-1][1] if pts[-1][1] else 0.0
    if ratio:
        sec = ax.secondary_yaxis("right", functions=(lambda g: g * ratio, lambda u: u / ratio))
        sec.set_ylabel("cost (USD)")


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_reorg(rows, path):
    ns, prob, gwei, usd = _columns(rows)
    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4))
    left.semilogy(ns, [p if p > 0 else float("nan") for p in prob], marker="o")
    left.set_xlabel("reorg length n")
    left.set_ylabel("probability per epoch")
    _cost_axes(right, ns, gwei, usd)
    _save(fig, path)


def plot_finality(rows, path, guides):
    ns, prob, gwei, usd = _columns(rows)
    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4))
    left.semilogy(ns, prob, marker="o")
    for y, label in zip(guides, ("hourly", "daily", "yearly")):
        left.axhline(y, linestyle="--", linewidth=0.8, color="grey")
        left.annotate(label, (ns[0], y), fontsize=8)
    left.set_xlabel("delay length n (epochs)")
    left.set_ylabel("probability")
    _cost_axes(right, ns, gwei, usd)
    _save(fig, path)
