"""Report figures (matplotlib, file output only)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "emoforge",
}

STRATEGY_COLORS = {
    "RealExpansion": "#1b6ca8",
    "ShapGuided": "#d1495b",
    "Naive": "#8d8d8d",
    "ShapGuidedNoExemplars": "#edae49",
}
DATASET_COLORS = {"real": "#1b6ca8", "shap_guided": "#d1495b", "naive": "#8d8d8d"}


def _save(fig, path):
    fmt = str(path).rsplit(".", 1)[-1].lower()
    meta = {"Date": None} if fmt in ("svg", "pdf") else None
    fig.savefig(path, bbox_inches="tight", metadata=meta)
    plt.close(fig)


def f1_line_chart(summary_rows, path, metric="macro_f1"):
    """Mean metric vs increment, one panel per seed size, one line per strategy.

    ``summary_rows`` are dicts with strategy, seed_size, increment and
    ``<metric>_mean`` / ``<metric>_sd`` keys.
    """
    seeds = sorted({r["seed_size"] for r in summary_rows})
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, len(seeds), figsize=(3.4 * len(seeds), 2.8), squeeze=False)
        for ax, seed in zip(axes[0], seeds):
            rows = [r for r in summary_rows if r["seed_size"] == seed]
            for strategy in sorted({r["strategy"] for r in rows}):
                pts = sorted((r for r in rows if r["strategy"] == strategy), key=lambda r: r["increment"])
                x = np.array([r["n_added"] for r in pts])
                m = np.array([r[f"{metric}_mean"] for r in pts])
                sd = np.array([r[f"{metric}_sd"] for r in pts])
                color = STRATEGY_COLORS.get(strategy)
                ax.plot(x, m, marker="o", ms=3, lw=1.2, label=strategy, color=color)
                ax.fill_between(x, m - sd, m + sd, alpha=0.15, color=color, lw=0)
            ax.set_title(f"seed = {seed}")
            ax.set_xlabel("samples added")
            ax.set_ylabel(metric.replace("_", " "))
        axes[0][-1].legend(frameon=False)
        fig.tight_layout()
        _save(fig, path)


def ngram_bar_chart(report, n, path, top_k=20):
    """Grouped bars of the most frequent POS n-grams in each dataset."""
    dists = report.distributions
    names = list(dists)
    ranked = {}
    for name in names:
        for gram, p in dists[name][n].top(top_k):
            ranked[gram] = max(ranked.get(gram, 0.0), p)
    grams = sorted(ranked, key=lambda g: (-ranked[g], g))[:top_k]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(7.0, 0.25 * len(grams) + 1.2))
        y = np.arange(len(grams))
        h = 0.8 / max(len(names), 1)
        for i, name in enumerate(names):
            probs = dists[name][n].probabilities
            ax.barh(y + i * h, [probs.get(g, 0.0) for g in grams], height=h, label=name,
                    color=DATASET_COLORS.get(name))
        ax.set_yticks(y + h * (len(names) - 1) / 2)
        ax.set_yticklabels(["-".join(g) for g in grams])
        ax.invert_yaxis()
        ax.set_xlabel("relative frequency")
        ax.set_title(f"POS {'bigrams' if n == 2 else 'trigrams'}")
        ax.legend(frameon=False)
        fig.tight_layout()
        _save(fig, path)
