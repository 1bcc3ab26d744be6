"""Figure rendering for harness reports.

Renders the agreement-vs-horizon convergence figure from a Summary (or
its emitted curve CSV) to an image file next to the delimited output.
Uses the Agg backend so it works headless.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .harness import Summary  # noqa: E402


def read_curve_csv(path: str | Path) -> list[tuple[int, float]]:
    with open(path, newline="") as fp:
        rows = list(csv.DictReader(fp))
    return [(int(r["N"]), float(r["agreement"])) for r in rows]


def render_agreement(source: Summary | str | Path, out_path: str | Path,
                     title: str | None = None) -> Path:
    """Agreement curve figure; source is a Summary or a curve CSV path."""
    if isinstance(source, Summary):
        curve = [(int(n), float(f)) for n, f, _ in source.agreement]
        if title is None:
            title = (f"set={source.set_id}  trials={source.trials}  "
                     f"final accuracy={source.final_accuracy:.3f}")
    else:
        curve = read_curve_csv(source)
    out_path = Path(out_path)

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    if curve:
        ns = [n for n, _ in curve]
        fr = [f for _, f in curve]
        ax.plot(ns, fr, marker="o", lw=1.5)
        ax.set_xscale("log", base=2)
    ax.set_ylim(-0.02, 1.05)
    ax.set_xlabel("samples N")
    ax.set_ylabel("fraction of trials deciding correctly")
    ax.grid(True, alpha=0.3)
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path
