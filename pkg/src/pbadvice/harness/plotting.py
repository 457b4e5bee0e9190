"""Matplotlib figures written next to the CSV outputs (SVG by default)."""
from __future__ import annotations

from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

LABELS = {
    "none": "A2C (no advice)",
    "pbrs": "PBRS",
    "look_ahead_pba": "look-ahead PBA",
    "look_back_pba": "look-back PBA",
}
COLORS = {"none": "#444444", "pbrs": "#1f77b4", "look_ahead_pba": "#ff7f0e", "look_back_pba": "#2ca02c"}

RC = {
    "figure.figsize": (6.0, 3.8),
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "svg.hashsalt": "pbadvice",
    "svg.fonttype": "none",
}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fmt = path.suffix.lstrip(".") or "svg"
    # no timestamp, so identical data gives identical bytes
    meta = {"Date": None} if fmt in ("svg", "pdf") else None
    try:
        fig.savefig(path, format=fmt, metadata=meta)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    finally:
        plt.close(fig)
    return path


def emit_svg(curves: Mapping[str, tuple[np.ndarray, np.ndarray]], path: str | Path,
             smoothing_window: int = 10, title: str | None = None, n_seeds: int | None = None) -> Path:
    """Learning curves, one line per scheme with a +-1 std band."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for scheme, (mean, std) in curves.items():
            x = np.arange(1, len(mean) + 1)
            color = COLORS.get(scheme)
            ax.plot(x, mean, label=LABELS.get(scheme, scheme), color=color, lw=1.4)
            ax.fill_between(x, mean - std, mean + std, color=color, alpha=0.12, lw=0)
        ax.set_xlabel("episode")
        ax.set_ylabel(f"average return (trailing mean, window {smoothing_window})")
        if title or n_seeds:
            ax.set_title(" ".join(filter(None, [title, f"({n_seeds} seeds)" if n_seeds else None])))
        ax.legend(loc="lower right")
        fig.tight_layout()
        return _save(fig, Path(path))


def emit_sweep_svg(table: Mapping[str, Mapping[float, float]], path: str | Path,
                   first_episodes: int = 100) -> Path:
    """Mean early return against jump success probability."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for scheme, row in table.items():
            pj = sorted(row)
            ax.plot(pj, [row[p] for p in pj], marker="o", ms=3.5, label=LABELS.get(scheme, scheme),
                    color=COLORS.get(scheme))
        ax.set_xlabel("jump success probability $p_j$")
        ax.set_ylabel(f"mean return, first {first_episodes} episodes")
        ax.legend(loc="best")
        fig.tight_layout()
        return _save(fig, Path(path))


def emit_success_svg(rates: Mapping[str, float], path: str | Path, n_seeds: int | None = None) -> Path:
    """Bar chart of the fraction of runs whose final policy reaches the goal."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.2))
        schemes = list(rates)
        ax.bar(range(len(schemes)), [100 * rates[s] for s in schemes],
               color=[COLORS.get(s, "#888888") for s in schemes])
        ax.set_xticks(range(len(schemes)), [LABELS.get(s, s) for s in schemes])
        ax.set_ylim(0, 105)
        ax.set_ylabel("converged runs (%)" + (f", {n_seeds} seeds" if n_seeds else ""))
        fig.tight_layout()
        return _save(fig, Path(path))
