"""Figures for sweep reports (rendered off-screen to PNG)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_META = {"Software": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)
    return path


def plot_convergence(report, path):
    """Log-log convergence metrics against eps."""
    keys = ["Qu_L2L4", "Pu_ref_L2L2", "sqrt_eps_p_LinfL2", "p_ref_distance", "vanishing_term_max"]
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for k in keys:
        pts = [(r.eps, r.metrics[k]) for r in report.results if k in r.metrics and r.metrics[k] > 0]
        if pts:
            e, v = zip(*pts)
            ax.loglog(e, v, "o-", label=k)
    ax.set_xlabel("eps")
    ax.set_ylabel("metric")
    ax.invert_xaxis()
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=7)
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, path)


def plot_monitors(report, path):
    """Each monitor divided by its value at the largest eps."""
    series = {}
    for r in report.results:
        for m in r.monitors:
            series.setdefault(m["label"], []).append((r.eps, m["value"]))
    fig, ax = plt.subplots(figsize=(6, 4))
    for lab, pts in series.items():
        e, v = map(np.asarray, zip(*pts))
        if v[0] > 0:
            ax.semilogx(e, v / v[0], ".-", lw=0.8, label=lab)
    ax.axhline(2.0, color="k", ls="--", lw=0.8)
    ax.set_xlabel("eps")
    ax.set_ylabel("value / value at largest eps")
    ax.invert_xaxis()
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=5, ncol=2)
    return _save(fig, path)


def plot_energy(report, path):
    """Relative energy budget E(t) + D(t) - E(0) for every eps."""
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for r in report.results:
        if r.energy:
            ax.plot(r.energy["t"], r.energy["deficit"], label=f"eps={r.eps:g}")
    ax.set_xlabel("t")
    ax.set_ylabel("(E + D - E0) / E0")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=7)
    return _save(fig, path)


def plot_suitability(report, path):
    """Slack of the local energy inequality per bump against its tolerance."""
    rows = report.suitability.get("rows", [])
    fig, ax = plt.subplots(figsize=(6, 4))
    if rows:
        x = np.arange(len(rows))
        ax.bar(x - 0.2, [r["slack"] for r in rows], 0.4, label="slack")
        ax.bar(x + 0.2, [-r["tol"] for r in rows], 0.4, label="-tol")
        ax.set_xticks(x, [r["label"] for r in rows], rotation=45, fontsize=7)
        ax.legend(fontsize=7)
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_ylabel("rhs - lhs")
    ax.set_title(f"eps = {report.suitability.get('eps', float('nan')):g}", fontsize=9)
    return _save(fig, path)


def render_report(report, directory):
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    return [
        plot_convergence(report, out / "convergence.png"),
        plot_monitors(report, out / "monitors.png"),
        plot_energy(report, out / "energy.png"),
        plot_suitability(report, out / "suitability.png"),
    ]
