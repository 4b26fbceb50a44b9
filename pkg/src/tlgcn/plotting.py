"""Figures written next to the tab-separated reports.

Built on ``matplotlib.figure.Figure`` directly, so no GUI backend or
global pyplot state is involved.
"""

from __future__ import annotations

import functools
from pathlib import Path
from typing import Sequence

import matplotlib as mpl
import numpy as np
from matplotlib.figure import Figure

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
}

VARIANT_LABELS = {
    "tlgcn": "TLGCN",
    "wo_stip": "w/o STIP",
    "wo_l": "w/o L",
    "wo_stip_l": "w/o STIP_L",
}


def _styled(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        with mpl.rc_context(RC):
            return fn(*args, **kwargs)
    return wrapper


def _figure(width: float = 5.0, ratio: float = 0.62, ncols: int = 1):
    fig = Figure(figsize=(width, width * ratio), dpi=120)
    return fig, fig.subplots(1, ncols)


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path)
    return path


@_styled
def plot_history(history, path, title: str = "") -> Path:
    """Training loss (left) and validation MAE/RMSE (right) per epoch."""
    epochs = [r.epoch for r in history]
    fig, (ax1, ax2) = _figure(8.0, 0.38, ncols=2)
    ax1.plot(epochs, [r.train_loss for r in history], color="k", lw=1)
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("training loss")
    ax1.set_yscale("log")
    ax2.plot(epochs, [r.val_mae for r in history], label="MAE", lw=1)
    ax2.plot(epochs, [r.val_rmse for r in history], label="RMSE", lw=1, ls="--")
    best = int(np.argmin([r.val_mae for r in history]))
    ax2.axvline(epochs[best], color="0.6", lw=0.8, ls=":")
    ax2.set_xlabel("epoch")
    ax2.set_ylabel("validation error")
    ax2.legend(frameon=False)
    if title:
        fig.suptitle(title)
    return _save(fig, path)


@_styled
def plot_ablation(rows: Sequence[dict], path) -> Path:
    """Grouped MAE/RMSE bars per variant and peak memory on the right."""
    labels = [VARIANT_LABELS.get(r["variant"], r["variant"]) for r in rows]
    x = np.arange(len(rows))
    fig, (ax1, ax2) = _figure(8.0, 0.38, ncols=2)
    ax1.bar(x - 0.2, [r["test_mae"] for r in rows], 0.4, label="MAE")
    ax1.bar(x + 0.2, [r["test_rmse"] for r in rows], 0.4, label="RMSE")
    ax1.set_xticks(x, labels)
    ax1.set_ylabel("test error")
    ax1.legend(frameon=False)
    ax2.bar(x, [r["peak_mem_mb"] for r in rows], 0.6, color="0.5")
    ax2.set_xticks(x, labels)
    ax2.set_ylabel("peak memory (MB)")
    return _save(fig, path)


@_styled
def plot_sweep(param: str, values, maes, rmses, path) -> Path:
    fig, ax = _figure()
    ax.plot(values, maes, marker="o", label="MAE")
    ax.plot(values, rmses, marker="s", label="RMSE")
    ax.set_xlabel(param)
    ax.set_ylabel("test error")
    if param == "fdim" and len(values) > 1 and min(values) > 0:
        ax.set_xscale("log", base=2)
    ax.legend(frameon=False)
    return _save(fig, path)


@_styled
def plot_transform(m: np.ndarray, path, title: str = "") -> Path:
    fig, ax = _figure(4.0, 0.9)
    im = ax.imshow(np.asarray(m), cmap="viridis", interpolation="nearest")
    ax.set_xlabel("k (source slot)")
    ax.set_ylabel("t (target slot)")
    fig.colorbar(im, ax=ax)
    if title:
        ax.set_title(title)
    return _save(fig, path)
