"""Static SVG figures, each written next to the CSV holding its data.

Rendering is deterministic: a fixed SVG hash salt and no date metadata,
so identical data gives identical bytes.
"""

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .exceptions import StructuralError  # noqa: E402

__all__ = ["scatter", "line_with_band", "violin_pair"]

_RC = {"svg.hashsalt": "gatenet", "svg.fonttype": "none", "font.size": 9}


def _stem(path):
    path = Path(path)
    return path.with_suffix("") if path.suffix in (".svg", ".csv") else path


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x
                             for x in row])


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _nonempty(*arrays):
    for a in arrays:
        if np.asarray(a).size == 0:
            raise StructuralError("cannot plot an empty series")


def scatter(x, y, path, xlabel="x", ylabel="y", title=None, labels=None,
            diagonal=False):
    """Scatter plot; ``labels`` colors points by group. Returns the SVG path."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    _nonempty(x, y)
    stem = _stem(path)
    groups = np.asarray(labels) if labels is not None else np.zeros(x.size, dtype=int)
    _write_csv(f"{stem}.csv", [xlabel, ylabel, "group"], zip(x, y, groups.tolist()))
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4, 4))
        for g in dict.fromkeys(groups.tolist()):
            sel = groups == g
            ax.scatter(x[sel], y[sel], s=8, label=None if labels is None else str(g))
        if diagonal:
            lo, hi = min(x.min(), y.min()), max(x.max(), y.max())
            ax.plot([lo, hi], [lo, hi], color="grey", linewidth=0.8)
        if labels is not None:
            ax.legend(frameon=False)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        fig.tight_layout()
        _save(fig, f"{stem}.svg")
    return f"{stem}.svg"


def line_with_band(x, mean, lower, upper, path, xlabel="y", ylabel="value", title=None):
    """Mean curve with a shaded ``[lower, upper]`` band."""
    x, mean = np.asarray(x, dtype=float), np.asarray(mean, dtype=float)
    lower, upper = np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)
    _nonempty(x, mean)
    stem = _stem(path)
    _write_csv(f"{stem}.csv", [xlabel, "mean", "lower", "upper"],
               zip(x, mean, lower, upper))
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4, 3))
        ax.fill_between(x, lower, upper, alpha=0.3, linewidth=0)
        ax.plot(x, mean, marker="o", markersize=3)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        fig.tight_layout()
        _save(fig, f"{stem}.svg")
    return f"{stem}.svg"


def violin_pair(first, second, path, names=("observed", "generated"), ylabel="value",
                title=None):
    """Two violins side by side."""
    first, second = np.asarray(first, dtype=float), np.asarray(second, dtype=float)
    _nonempty(first, second)
    stem = _stem(path)
    rows = [(names[0], v) for v in first] + [(names[1], v) for v in second]
    _write_csv(f"{stem}.csv", ["group", ylabel], rows)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4, 3))
        data = [first, second]
        # a violin needs spread; constant samples are drawn as points
        spread = [np.ptp(d) > 0 for d in data]
        if all(spread):
            ax.violinplot(data, showmedians=True)
        else:
            for i, d in enumerate(data, start=1):
                ax.scatter(np.full(d.size, i), d, s=4)
        ax.set_xticks([1, 2])
        ax.set_xticklabels(names)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        fig.tight_layout()
        _save(fig, f"{stem}.svg")
    return f"{stem}.svg"
