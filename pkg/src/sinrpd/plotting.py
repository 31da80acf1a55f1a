"""Optional PNG figures for the CLI tables (needs the ``plot`` extra, i.e. matplotlib).

Figures are drawn on `matplotlib.figure.Figure` objects directly, so no
interactive backend or global pyplot state is involved.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

try:
    from matplotlib.figure import Figure
except ImportError:  # pragma: no cover - exercised only without the extra
    Figure = None

# fixed metadata keeps the files byte-stable between runs
_PNG_META = {"Software": None}


def available() -> bool:
    return Figure is not None


def _require():
    if Figure is None:
        raise ImportError("figures need matplotlib; install the 'plot' extra (pip install sinrpd[plot])")


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=100, metadata=_PNG_META)
    return path


def zscore_figure(names: Sequence[str], z: Sequence[float], threshold: float, path) -> Path:
    """Horizontal bars of comparison z-scores with the pass band shaded."""
    _require()
    z = np.clip(np.nan_to_num(np.asarray(z, dtype=float), nan=0.0, posinf=10.0, neginf=-10.0), -10.0, 10.0)
    fig = Figure(figsize=(7.0, 0.18 * len(z) + 1.2))
    ax = fig.add_subplot()
    pos = np.arange(len(z))
    colors = ["tab:blue" if abs(v) <= threshold else "tab:red" for v in z]
    ax.barh(pos, z, color=colors)
    ax.axvspan(-threshold, threshold, color="0.9", zorder=0)
    ax.set_yticks(pos, labels=list(names), fontsize=5)
    ax.invert_yaxis()
    ax.set_xlabel("z-score")
    fig.tight_layout()
    return _save(fig, path)


def dickman_figure(s: Sequence[float], rho: Sequence[float], path, label: str = "") -> Path:
    _require()
    fig = Figure(figsize=(5.0, 3.5))
    ax = fig.add_subplot()
    ax.plot(s, rho, marker="o", ms=3, label=label or None)
    ax.set_xlabel("s")
    ax.set_ylabel("P(V_1 < 1/s)")
    ax.set_ylim(-0.02, 1.02)
    if label:
        ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def values_figure(values: Sequence[float], path, ylabel: str = "value", labels: Sequence[str] | None = None) -> Path:
    """One marker per table row, e.g. moment values across threshold vectors."""
    _require()
    fig = Figure(figsize=(5.0, 3.5))
    ax = fig.add_subplot()
    pos = np.arange(len(values))
    ax.plot(pos, values, marker="o", ls="none")
    if labels is not None:
        ax.set_xticks(pos, labels=list(labels), rotation=45, ha="right", fontsize=6)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    return _save(fig, path)


def histogram_figure(samples: Sequence[float], path, xlabel: str = "value", bins: int = 50) -> Path:
    _require()
    x = np.asarray(samples, dtype=float)
    x = x[np.isfinite(x)]
    fig = Figure(figsize=(5.0, 3.5))
    ax = fig.add_subplot()
    ax.hist(x, bins=bins, density=True)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("density")
    fig.tight_layout()
    return _save(fig, path)
