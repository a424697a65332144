"""Report figures. Everything renders off-screen to PNG files."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.dpi": 100,
    "savefig.bbox": "tight",
    "svg.hashsalt": "lfurisk",
}


def _save(fig, path, stamp: dict):
    # fixed metadata keeps reruns byte-identical
    meta = {"Software": None, "Description": "; ".join(f"{k}={v}" for k, v in sorted(stamp.items()))}
    fig.savefig(path, metadata=meta)
    plt.close(fig)


def recall_curves(curves: dict, path, stamp: dict, ks=None):
    """Recall@k against k for each method, with the random-scorer diagonal."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for name, (k, r) in curves.items():
            ax.plot(k, r, label=name, lw=1.2)
        ax.plot([0, 100], [0, 1], color="grey", ls=":", lw=1, label="random")
        ax.set_xlabel("k (% of patients targeted)")
        ax.set_ylabel("Recall@k")
        ax.set_xlim(0, 100)
        ax.set_ylim(0, 1)
        ax.legend(frameon=False, fontsize=7)
        _save(fig, path, stamp)


def cd_diagram(rows: list[dict], cliques: list[list[str]], path, stamp: dict):
    """Average ranks on a line, with a bar under each group of indistinguishable methods."""
    with plt.rc_context({**STYLE, "axes.grid": False}):
        n = len(rows)
        fig, ax = plt.subplots(figsize=(6, 1.2 + 0.25 * n))
        lo, hi = 1, max(n, 2)
        ax.set_xlim(lo - 0.3, hi + 0.3)
        ax.set_ylim(-len(cliques) - 1, n + 0.5)
        ax.invert_xaxis()
        ax.set_yticks([])
        ax.set_xlabel("average rank")
        for i, r in enumerate(rows):
            y = n - i
            ax.plot([r["avg_rank"]], [y], "o", color="k", ms=3)
            ax.annotate(r["method"], (r["avg_rank"], y), xytext=(4, 0), textcoords="offset points",
                        va="center", fontsize=7)
        rank_of = {r["method"]: r["avg_rank"] for r in rows}
        for j, clique in enumerate(cliques):
            xs = [rank_of[m] for m in clique]
            ax.plot([min(xs), max(xs)], [-j - 0.5] * 2, lw=3, color="k", solid_capstyle="round")
        for side in ("left", "right", "top"):
            ax.spines[side].set_visible(False)
        _save(fig, path, stamp)


def cohort_bars(cohorts, global_recall, local_recall, path, stamp: dict, title: str = ""):
    with plt.rc_context(STYLE):
        x = np.arange(len(cohorts))
        fig, ax = plt.subplots(figsize=(max(4, 0.45 * len(cohorts) + 1.5), 3))
        g = [np.nan if v is None else v for v in global_recall]
        loc = [np.nan if v is None else v for v in local_recall]
        ax.bar(x - 0.2, g, width=0.4, label="global threshold")
        ax.bar(x + 0.2, loc, width=0.4, label="local threshold")
        ax.set_xticks(x)
        ax.set_xticklabels([str(c) for c in cohorts], rotation=45, ha="right", fontsize=7)
        ax.set_ylabel("Recall@20")
        ax.set_ylim(0, 1)
        ax.set_title(title)
        ax.legend(frameon=False, fontsize=7)
        _save(fig, path, stamp)


def ale_plot(edges, values, center, feature: str, path, stamp: dict):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3))
        ax.plot(edges, np.concatenate([[-center], values]), marker=".", lw=1.2)
        ax.axhline(0, color="grey", lw=0.8)
        ax.set_xlabel(feature)
        ax.set_ylabel("accumulated local effect")
        _save(fig, path, stamp)


def importance_bars(rows: list[dict], path, stamp: dict, top: int = 10):
    rows = rows[:top]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 0.3 * len(rows) + 1))
        y = np.arange(len(rows))[::-1]
        ax.barh(y, [r["importance"] for r in rows], xerr=[r["std"] for r in rows], height=0.6)
        ax.set_yticks(y)
        ax.set_yticklabels([r["feature"] for r in rows], fontsize=7)
        ax.set_xlabel("drop in Recall@20")
        _save(fig, path, stamp)
