"""SVG charts for an :class:`~foilgen.evaluation.EvalReport`.

Output is byte-stable: the SVG id salt is fixed and no date is embedded.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import numpy as np  # noqa: E402
from matplotlib import pyplot as plt  # noqa: E402

_LABELS = {
    "cl": "$C_l$",
    "cd": "$C_d$",
    "max_camber": "max camber / c",
    "max_thickness": "max thickness / c",
}


def _save(fig, path: Path) -> Path:
    with matplotlib.rc_context({"svg.hashsalt": "foilgen", "svg.fonttype": "path"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def histograms(report, path: Path) -> Path:
    fig, axes = plt.subplots(2, 2, figsize=(9, 7))
    for ax, (metric, h) in zip(axes.ravel(), report.histograms.items()):
        edges = np.asarray(h["edges"])
        for cohort, counts in h["counts"].items():
            ax.stairs(counts, edges, label=cohort, fill=False)
        ax.set_xlabel(_LABELS.get(metric, metric))
        ax.set_ylabel("count")
        ax.legend(fontsize="small")
    fig.tight_layout()
    return _save(fig, path)


def _bxp_stats(box: dict, label: str) -> dict:
    return {
        "med": box["median"],
        "q1": box["q1"],
        "q3": box["q3"],
        "whislo": box["whisker_low"],
        "whishi": box["whisker_high"],
        "fliers": box["outliers"],
        "label": label,
    }


def lift_to_drag_boxes(report, path: Path) -> Path:
    stats = [_bxp_stats(b, c) for c, b in report.lift_to_drag.items() if b.get("count", 0)]
    fig, ax = plt.subplots(figsize=(6, 4))
    if stats:
        ax.bxp(stats)
    ax.set_ylabel("$C_l / C_d$")
    fig.tight_layout()
    return _save(fig, path)


def fidelity_scatter(fid, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 5))
    x, y = fid.targets, fid.evaluated
    ax.scatter(x, y, s=10)
    xs = np.linspace(x.min(), x.max(), 50)
    fit = fid.slope * xs + fid.intercept
    ax.plot(xs, fit, label=f"fit: slope {fid.slope:.3f}")
    ax.fill_between(xs, fit - fid.residual_std, fit + fid.residual_std, alpha=0.2, label="$\\pm 1\\sigma$ residual")
    ax.plot(xs, xs, linestyle="--", linewidth=0.8, label="evaluated = target")
    ax.set_xlabel("target")
    ax.set_ylabel("evaluated")
    ax.legend(fontsize="small")
    fig.tight_layout()
    return _save(fig, path)


def percent_diff_box(fid, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(4, 4))
    box = fid.percent_box
    if box.get("count", 0):
        ax.bxp([_bxp_stats(box, "conditioned")])
    ax.set_ylabel("percent difference")
    fig.tight_layout()
    return _save(fig, path)


def novelty_hist(nov, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(nov.chamfer, bins=20)
    ax.set_xlabel("Chamfer distance to nearest training profile")
    ax.set_ylabel("count")
    fig.tight_layout()
    return _save(fig, path)


def render_all(report, out_dir) -> list[Path]:
    out = Path(out_dir)
    paths = [histograms(report, out / "histograms.svg"), lift_to_drag_boxes(report, out / "lift_to_drag.svg")]
    if report.fidelity is not None:
        paths.append(fidelity_scatter(report.fidelity, out / "fidelity.svg"))
        paths.append(percent_diff_box(report.fidelity, out / "percent_diff.svg"))
    if report.novelty is not None:
        paths.append(novelty_hist(report.novelty, out / "novelty.svg"))
    return paths
