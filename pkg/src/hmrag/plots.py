"""Figure rendering for benchmark reports. Always writes files (Agg backend)."""

from __future__ import annotations

from pathlib import Path
from typing import Dict, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_metric_bars(
    metrics: Dict[str, Dict[str, float]], out_path: str | Path, title: str = "Benchmark metrics"
) -> Path:
    """Grouped bars: one group per configuration, one bar per metric."""
    configs = list(metrics)
    metric_names = sorted({m for cfg in metrics.values() for m in cfg})
    fig, ax = plt.subplots(figsize=(1.8 * max(4, len(configs)), 4.0))
    width = 0.8 / max(1, len(metric_names))
    for i, name in enumerate(metric_names):
        xs = [j + i * width for j in range(len(configs))]
        ys = [metrics[cfg].get(name, 0.0) for cfg in configs]
        ax.bar(xs, ys, width=width, label=name)
    ax.set_xticks([j + 0.4 - width / 2 for j in range(len(configs))])
    ax.set_xticklabels(configs, rotation=20, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("score")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def plot_scaling(
    sizes: Sequence[int],
    build_seconds: Sequence[float],
    query_seconds: Sequence[float],
    out_path: str | Path,
) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(sizes, build_seconds, marker="o", label="build")
    ax.plot(sizes, query_seconds, marker="s", label="query (per 10)")
    ax.set_xlabel("chunks")
    ax.set_ylabel("seconds")
    ax.set_title("Scaling probe")
    ax.legend()
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path
