"""Matplotlib figure rendering for mining and detection runs.

Figures are written next to the delimited outputs; everything uses the Agg
backend so the CLI works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_support_distribution(table, path):
    """Histogram of itemset supports, split by itemset size."""
    by_size = {}
    for iset, supp in table.entries.items():
        by_size.setdefault(len(iset), []).append(supp)
    fig, ax = plt.subplots(figsize=(7, 4))
    for size in sorted(by_size):
        ax.hist(by_size[size], bins=20, range=(0, 1), alpha=0.6, label=f"size {size}")
    ax.axvline(table.min_support, color="crimson", linestyle="--", linewidth=1,
               label=f"min support {table.min_support:g}")
    ax.set_xlabel("support")
    ax.set_ylabel("itemsets")
    ax.set_title(f"Frequent itemsets ({len(table)} total, n={table.total_transactions})")
    ax.legend(fontsize=8)
    return _finish(fig, path)


def plot_top_rules(ruleset, path, top=20):
    """Horizontal bar chart of the strongest rules by support."""
    rules = ruleset.rules[:top]
    fig, ax = plt.subplots(figsize=(9, max(3, 0.35 * len(rules) + 1)))
    if rules:
        labels = [_shorten(str(r)) for r in rules]
        ax.barh(range(len(rules)), [r.support for r in rules], color="steelblue")
        ax.set_yticks(range(len(rules)))
        ax.set_yticklabels(labels, fontsize=7)
        ax.invert_yaxis()
        ax.set_xlim(0, 1)
    ax.set_xlabel("support")
    ax.set_title(f"Top rules by support ({len(ruleset)} total)")
    return _finish(fig, path)


def plot_violation_timeline(violations, path, n_records=None):
    """Violations per timestamp across the evaluated stream."""
    fig, ax = plt.subplots(figsize=(8, 3.5))
    if violations:
        counts = {}
        for v in violations:
            counts[v.timestamp] = counts.get(v.timestamp, 0) + 1
        ts = sorted(counts)
        ax.vlines(ts, 0, [counts[t] for t in ts], color="crimson")
        ax.plot(ts, [counts[t] for t in ts], ".", color="crimson")
    ax.set_xlabel("timestamp (s)")
    ax.set_ylabel("violations")
    title = f"{len(violations)} violations"
    if n_records is not None:
        title += f" over {n_records} records"
    ax.set_title(title)
    return _finish(fig, path)


def plot_rule_histogram(summary, path, top=25):
    """Which rules fired, and how often."""
    items = sorted(summary.violating_rule_histogram.items(), key=lambda kv: -kv[1])[:top]
    fig, ax = plt.subplots(figsize=(7, 4))
    if items:
        ax.bar([f"r{rid}" for rid, _ in items], [c for _, c in items], color="darkorange")
        ax.tick_params(axis="x", labelrotation=60, labelsize=7)
    ax.set_ylabel("violations")
    ax.set_title("Violations per rule")
    return _finish(fig, path)


def _shorten(text, limit=90):
    return text if len(text) <= limit else text[: limit - 1] + "…"


def render_mine_report(table, ruleset, outdir):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    return [
        plot_support_distribution(table, outdir / "support_distribution.png"),
        plot_top_rules(ruleset, outdir / "top_rules.png"),
    ]


def render_detect_report(violations, summary, outdir):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    return [
        plot_violation_timeline(violations, outdir / "violation_timeline.png",
                                n_records=summary.records),
        plot_rule_histogram(summary, outdir / "rule_histogram.png"),
    ]
