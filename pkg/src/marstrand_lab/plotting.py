"""Static SVG figures rendered with matplotlib's Agg-free SVG backend."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("svg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no timestamp: identical inputs give identical files
matplotlib.rcParams["svg.hashsalt"] = "marstrand-lab"
matplotlib.rcParams["svg.fonttype"] = "path"
_META = {"Date": None, "Creator": "marstrand-lab"}


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def sweep_scatter(report, path):
    """Two panels against lambda: projected dimension and projected length.

    Each panel's markers sit in one group (``projected_dimension`` and
    ``projected_length``), one marker per lambda sample.
    """
    lam = np.array([r.lam for r in report.per_lambda])
    dims = np.array([r.dimension.value for r in report.per_lambda])
    lengths = np.array([r.length for r in report.per_lambda])
    agg, verdict = report.aggregate, report.verdict
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax1.scatter(lam, dims, s=10, color="C0", gid="projected_dimension")
    ax1.axhline(verdict["target_dimension"], color="0.4", lw=0.8, ls="--", label="min(kappa, dim X / alpha)")
    ax1.axhline(agg["median_projected_dimension"], color="C1", lw=0.8, label="median")
    ax1.set_ylabel("projected box dimension")
    ax1.legend(loc="lower right", fontsize=8)
    ax2.scatter(lam, lengths, s=10, color="C2", gid="projected_length")
    ax2.axhline(agg["length_threshold"], color="0.4", lw=0.8, ls="--", label="threshold")
    ax2.set_xlabel("lambda")
    ax2.set_ylabel("projected length")
    ax2.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def loglog(x, y, path, xlabel, ylabel, used=None, slope=None, intercept=None):
    """Log-log scatter with an optional fitted line."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    used = np.ones(len(x), dtype=bool) if used is None else np.asarray(used, dtype=bool)
    keep = (x > 0) & (y > 0)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.scatter(np.log(x[keep & used]), np.log(y[keep & used]), s=12, color="C0", gid="used")
    if np.any(keep & ~used):
        ax.scatter(np.log(x[keep & ~used]), np.log(y[keep & ~used]), s=12, color="0.6", gid="dropped")
    if slope is not None and np.any(keep):
        lx = np.log(x[keep])
        ax.plot(lx, intercept + slope * lx, color="C1", lw=1, label=f"slope {slope:.3f}")
        ax.legend(fontsize=8)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    return _save(fig, path)
