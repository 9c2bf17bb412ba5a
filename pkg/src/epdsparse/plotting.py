"""Figures for sweep summaries, written as SVG with matplotlib.

Output is made deterministic by fixing the SVG hash salt and dropping
the creation date, so reruns produce identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.4),
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "epdsparse",
    "svg.fonttype": "path",
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def success_vs_m(summary, path, title=""):
    """Frequency of successful recovery against the number of measurements."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ms = [s["m"] for s in summary]
        ax.plot(ms, [s["frequency"] for s in summary], "o-", color="#08589e", label="EPD")
        ax.set_xlabel("number of measurements m")
        ax.set_ylabel("frequency of success")
        ax.set_ylim(-0.05, 1.05)
        ax.legend(loc="lower right")
        if title:
            ax.set_title(title)
        _save(fig, path)


def time_vs_n(summary, path, title=""):
    """Mean solve time against the problem size, on log-log axes."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ns = [s["n"] for s in summary]
        ax.loglog(ns, [max(s["mean_time"], 1e-6) for s in summary], "s-", color="#2b8cbe",
                  label="EPD", base=2)
        ax.set_xlabel("signal length n")
        ax.set_ylabel("mean time (s)")
        ax.legend(loc="upper left")
        if title:
            ax.set_title(title)
        _save(fig, path)


def relerr_vs_m(summary, path, title=""):
    """Mean relative error against the number of measurements (noisy sweeps)."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ms = [s["m"] for s in summary]
        ax.semilogy(ms, [s["mean_relerr"] for s in summary], "d-", color="#4eb3d3", label="EPD")
        ax.set_xlabel("number of measurements m")
        ax.set_ylabel("mean relative error")
        ax.legend(loc="upper right")
        if title:
            ax.set_title(title)
        _save(fig, path)
