"""Four-panel summary figure written straight to SVG (Agg backend, no display)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

PANELS = (
    ("coverage_mean", "Coverage"),
    ("avg_len_mean", "Average length"),
    ("prop_zero_in_set_mean", "Prop. sets containing 0"),
    ("avg_nonzero_len_mean", "Avg. length (non-zero pred.)"),
)

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "axes.spines.top": False,
    "axes.spines.right": False,
    # fixed ids and no timestamp so identical input gives an identical file
    "svg.hashsalt": "cpci",
    "svg.fonttype": "path",
}


def summary_figure(rows, alpha: float | None = None):
    """Build the figure: one line per (method, scenario) across ``n``."""
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(2, 2, figsize=(8.0, 6.0))
        groups: dict[tuple, list] = {}
        for row in rows:
            groups.setdefault((row["method"], row["scenario"]), []).append(row)
        for ax, (key, title), letter in zip(axes.flat, PANELS, "ABCD"):
            for (method, scenario), grp in sorted(groups.items()):
                grp = sorted(grp, key=lambda r: r["n"])
                label = method if len({s for _, s in groups}) == 1 else f"{method} ({scenario})"
                ax.plot([r["n"] for r in grp], [r[key] for r in grp], marker="o", label=label)
            if key == "coverage_mean" and alpha is not None:
                ax.axhline(alpha, color="0.5", linestyle="--", linewidth=0.8)
            ax.set_title(f"({letter}) {title}")
            ax.set_xlabel("N")
        handles, labels = axes.flat[0].get_legend_handles_labels()
        if handles:
            fig.legend(handles, labels, loc="lower center", ncol=min(4, len(handles)), frameon=False)
            fig.tight_layout(rect=(0, 0.08, 1, 1))
        else:
            fig.tight_layout()
    return fig


def save_summary_svg(rows, path, alpha: float | None = None) -> None:
    fig = summary_figure(rows, alpha)
    with plt.rc_context(STYLE):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
