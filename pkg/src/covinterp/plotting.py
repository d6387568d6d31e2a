"""PNG figures for experiment reports (matplotlib, Agg backend).

Imported lazily by :meth:`ExperimentReport.write` so the numerical modules
never load matplotlib.
"""
from __future__ import annotations

import os

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, out_dir, name):
    path = os.path.join(out_dir, name)
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata={"Software": None})
    _pyplot().close(fig)
    return path


def _grouped(report, key, x, y):
    groups = {}
    for row in report.rows:
        rec = dict(zip(report.columns, row))
        groups.setdefault(rec[key] if not isinstance(key, tuple) else tuple(rec[k] for k in key), []).append(
            (rec[x], rec[y])
        )
    return {g: np.array(v, dtype=float) for g, v in groups.items()}


def plot_aliasing(report, out_dir):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for (rho, M), xy in _grouped(report, ("oversampling", "M"), "k", "abs_error").items():
        ax.semilogy(xy[:, 0], np.maximum(xy[:, 1], 1e-16), label=f"rho={rho:g}, M={M}")
    ax.set_xlabel("DL index k")
    ax.set_ylabel("|error|")
    ax.legend()
    return [_save(fig, out_dir, "aliasing.png")]


def plot_interior_error(report, out_dir):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for M, xy in _grouped(report, "M", "k", "abs_error").items():
        ax.semilogy(xy[:, 0] / M, np.maximum(xy[:, 1], 1e-16), label=f"M={M}")
    ax.axvline(0.9, color="grey", ls=":")
    ax.set_xlabel("k / M")
    ax.set_ylabel("|error|")
    ax.legend()
    return [_save(fig, out_dir, "interior_error.png")]


def plot_distortion_sweep(report, out_dir):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, xy in _grouped(report, "scenario", "M", "distortion").items():
        ax.semilogy(xy[:, 0], np.maximum(xy[:, 1], 1e-16), marker="o", label=name)
    ax.set_xlabel("M")
    ax.set_ylabel("distortion")
    ax.legend()
    return [_save(fig, out_dir, "distortion_sweep.png")]


def plot_dof_curves(report, out_dir):
    plt = _pyplot()
    rho = np.array(report.column("oversampling"))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(rho, report.column("ideal_dof"), ls="--", label="ideal")
    ax.plot(rho, report.column("robust_dof"), label="robust")
    ax.set_xlabel("oversampling rho")
    ax.set_ylabel("DoF per antenna")
    ax.legend()
    return [_save(fig, out_dir, "dof_curves.png")]


def plot_bound_curves(report, out_dir):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for M, xy in _grouped(report, "M", "alpha", "finite_m_exponent").items():
        ax.plot(xy[:, 0], xy[:, 1], lw=0.8, label=f"finite M={M}")
    a = np.linspace(0, 1, 201)
    from .chebyshev import f_alpha

    ax.plot(a, f_alpha(a), "k--", label="f(alpha)")
    ax.set_xlabel("alpha = s / M")
    ax.set_ylabel("exponent")
    ax.legend()
    return [_save(fig, out_dir, "bound_curves.png")]


def plot_width_sandwich(report, out_dir):
    plt = _pyplot()
    s = np.array(report.column("s"))
    order = np.argsort(s)
    fig, ax = plt.subplots(figsize=(6, 4))
    floor = 1e-16
    ax.semilogy(s[order], np.maximum(np.array(report.column("width_bound"))[order], floor), label="bound")
    ax.semilogy(s, np.maximum(report.column("empirical_width"), floor), "o", ms=3, label="empirical")
    ax.set_xlabel("probe s")
    ax.set_ylabel("width")
    ax.legend()
    return [_save(fig, out_dir, "width_sandwich.png")]


def plot_bounds_table(rows, path):
    """Figure for ``covinterp bounds``: rows of ``(s, real, imag, bound, asymptotic)``."""
    plt = _pyplot()
    arr = np.array(rows, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(arr[:, 0], np.maximum(arr[:, 3], 1e-300), label="finite-M bound")
    ax.semilogy(arr[:, 0], np.maximum(arr[:, 4], 1e-300), ls="--", label="exponent rate (C=1)")
    ax.set_xlabel("probe s")
    ax.set_ylabel("width bound")
    ax.legend()
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


_PLOTTERS = {
    "aliasing": plot_aliasing,
    "interior_error": plot_interior_error,
    "distortion_sweep": plot_distortion_sweep,
    "dof_curves": plot_dof_curves,
    "bound_curves": plot_bound_curves,
    "width_sandwich": plot_width_sandwich,
}


def plot_report(report, out_dir):
    """Render the figure(s) for ``report`` into ``out_dir``; returns paths."""
    return _PLOTTERS[report.scenario](report, out_dir)
