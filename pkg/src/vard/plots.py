"""Optional figure rendering for the CLI (regularization path, CV curve,
per-feature curves).  matplotlib is imported lazily so the library works
without it; files are written atomically like every other output.
"""

from __future__ import annotations

import os
import tempfile

import numpy as np

__all__ = ["render_path", "render_cv", "render_curve"]


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _atomic_savefig(fig, path) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".png")
    try:
        with os.fdopen(fd, "wb") as fh:
            fig.savefig(fh, format="png", dpi=150)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def render_path(alphas, labels, norms, path) -> None:
    """One curve per block: scaled coefficient norm against α (log axis)."""
    plt = _pyplot()
    alphas = np.asarray(alphas, dtype=float)
    norms = np.asarray(norms, dtype=float)
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    try:
        ever_active = np.any(norms != 0.0, axis=0)
        for j, label in enumerate(labels):
            show = ever_active[j] and int(ever_active.sum()) <= 20
            ax.plot(alphas, norms[:, j], lw=1.0,
                    label=label if show else None)
        ax.set_xscale("log")
        ax.set_xlabel(r"$\alpha$")
        ax.set_ylabel("scaled block norm")
        if ax.get_legend_handles_labels()[0]:
            ax.legend(fontsize=7, ncol=2)
        fig.tight_layout()
        _atomic_savefig(fig, path)
    finally:
        plt.close(fig)


def render_cv(alphas, mean_mse, sd_mse, alpha_min, alpha_015se, path) -> None:
    """Mean CV error with spread bars and the two selected α markers."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    try:
        ax.errorbar(alphas, mean_mse, yerr=sd_mse, fmt="o", ms=3,
                    color="black", ecolor="grey", elinewidth=1, capsize=2)
        ax.axvline(alpha_min, ls="--", color="tab:blue",
                   label=r"$\alpha_{min}$")
        ax.axvline(alpha_015se, ls="--", color="tab:red",
                   label=r"$\alpha_{0.15se}$")
        ax.set_xscale("log")
        ax.set_xlabel(r"$\alpha$")
        ax.set_ylabel("CV mean squared error")
        ax.legend(fontsize=8)
        fig.tight_layout()
        _atomic_savefig(fig, path)
    finally:
        plt.close(fig)


def render_curve(feature, header, rows, path) -> None:
    """Fitted contribution of one feature (line for numeric, bars for
    categorical levels)."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    try:
        if header[0] == "x":
            xs = [r[0] for r in rows]
            ys = [r[1] for r in rows]
            ax.plot(xs, ys, color="tab:blue")
            ax.set_xlabel(feature)
        else:
            levels = [str(r[0]) for r in rows]
            ys = [r[1] for r in rows]
            ax.bar(levels, ys, color="tab:blue")
            ax.set_xlabel(f"{feature} level")
        ax.set_ylabel("fitted contribution")
        fig.tight_layout()
        _atomic_savefig(fig, path)
    finally:
        plt.close(fig)
