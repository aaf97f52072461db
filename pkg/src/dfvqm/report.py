"""Figure rendering for experiment results.

The CSV is the primary contract; these matplotlib renderings are a
convenience companion: one grouped bar chart per scenario (mean index by
case, grouped by possibility) plus a cross-scenario summary.
"""

from __future__ import annotations

from pathlib import Path
from typing import List, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .harness import STATUS_OK, ScoreRow


def _mean(values: List[float]) -> float:
    return float(np.mean(values)) if values else float("nan")


def render_figures(rows: Sequence[ScoreRow], outdir) -> List[Path]:
    """Write PNGs summarizing the grid; returns the paths created."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    ok = [r for r in rows if r.status == STATUS_OK and r.dfvqmi is not None]
    scenarios = sorted({r.scenario for r in ok})
    cases = sorted({r.case_label for r in ok})
    possibilities = sorted({r.possibility for r in ok})
    paths: List[Path] = []

    for scenario in scenarios:
        fig, ax = plt.subplots(figsize=(7, 4))
        x = np.arange(len(cases))
        width = 0.8 / max(1, len(possibilities))
        for k, poss in enumerate(possibilities):
            means = [
                _mean([
                    r.dfvqmi for r in ok
                    if r.scenario == scenario and r.case_label == case and r.possibility == poss
                ])
                for case in cases
            ]
            ax.bar(x + (k - (len(possibilities) - 1) / 2) * width, means, width,
                   label=f"possibility {poss}")
        ax.set_xticks(x)
        ax.set_xticklabels([f"case {c}" for c in cases])
        ax.set_ylabel("mean DFVQMI")
        ax.set_title(f"Scenario {scenario}")
        ax.legend(fontsize=8)
        ax.grid(axis="y", alpha=0.3)
        fig.tight_layout()
        path = outdir / f"scenario_{scenario}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)

    if scenarios:
        fig, ax = plt.subplots(figsize=(7, 4))
        x = np.arange(len(cases))
        width = 0.8 / len(scenarios)
        for k, scenario in enumerate(scenarios):
            means = [
                _mean([
                    r.dfvqmi for r in ok
                    if r.scenario == scenario and r.case_label == case
                ])
                for case in cases
            ]
            ax.bar(x + (k - (len(scenarios) - 1) / 2) * width, means, width,
                   label=f"scenario {scenario}")
        ax.set_xticks(x)
        ax.set_xticklabels([f"case {c}" for c in cases])
        ax.set_ylabel("mean DFVQMI")
        ax.set_title("Scenario comparison (mean over possibilities)")
        ax.legend(fontsize=8)
        ax.grid(axis="y", alpha=0.3)
        fig.tight_layout()
        path = outdir / "scenario_summary.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths
