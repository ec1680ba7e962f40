"""File emission for experiment runs: delimited output, manifest, figures.

CSV numbers are written with 17 significant digits so that doubles round-trip
exactly and repeated runs with the same configuration produce byte-identical
files.  Figures are rendered to PNG next to the CSVs they visualize.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .ltisys import spectrum  # noqa: E402
from .simulate import Trajectory  # noqa: E402


def fmt(value) -> str:
    """17-significant-digit decimal rendering (round-trip exact for doubles)."""
    if value is None:
        return "inf"
    return f"{float(value):.17g}"


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def trajectory_header(n: int, r: int):
    cols = ["t", "u", "y_clean", "y_meas"]
    cols += [f"x{i}" for i in range(1, n + 1)]
    cols += [f"z{i}" for i in range(1, r + 1)]
    cols += [f"w{i}" for i in range(1, r + 1)]
    cols += [f"xhat{i}" for i in range(1, n + 1)]
    cols += [f"thetahat{i}" for i in range(1, 2 * n + 1)]
    cols += ["valid", "V"]
    return cols


def write_trajectory_csv(path, traj: Trajectory) -> None:
    n = traj.x.shape[1]
    r = traj.z.shape[1]
    header = trajectory_header(n, r)
    data = np.column_stack([
        traj.t, traj.u, traj.y_clean, traj.y_meas, traj.x, traj.z, traj.w,
        traj.x_hat, traj.theta_hat, traj.valid.astype(float), traj.V,
    ])
    fmts = ["%.17g"] * len(header)
    fmts[-2] = "%d"
    np.savetxt(path, data, fmt=fmts, delimiter=",", comments="",
               header=",".join(header))


def write_manifest(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                          encoding="ascii")


def _subsample(t, limit=1500):
    stride = max(1, t.size // limit)
    return np.arange(0, t.size, stride)


def render_identify_figures(out_dir, runs, theta_true) -> list:
    """Fig-style summaries of an identification sweep.

    One panel per run with the estimated plant eigenvalues converging to the
    true ones, plus log-scale error histories for the paired eigenvalue error
    and the relative Markov-parameter error.
    """
    out_dir = Path(out_dir)
    true_eigs = spectrum(theta_true.theta_a)
    made = []

    ncols = min(2, len(runs))
    nrows = (len(runs) + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(6.0 * ncols, 3.2 * nrows),
                             squeeze=False, sharex=True)
    for ax, run in zip(axes.ravel(), runs):
        traj = run["trajectory"]
        idx = _subsample(traj.t)
        n = traj.x.shape[1]
        eig_t = np.array([np.sort(np.roots(np.concatenate([[1.0], th[:n]])).real)
                          for th in traj.theta_hat[idx]])
        for j in range(n):
            ax.plot(traj.t[idx], eig_t[:, j], lw=0.8)
        for mu in true_eigs.real:
            ax.axhline(mu, color="k", ls="--", lw=0.6)
        ax.set_ylim(1.5 * true_eigs.real.min(), 1.0)
        ax.set_title(run["label"], fontsize=9)
        ax.set_xlabel("t [s]")
        ax.set_ylabel("Re eig")
    for ax in axes.ravel()[len(runs):]:
        ax.set_visible(False)
    fig.tight_layout()
    path = out_dir / "fig_eigenvalues.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    made.append(path)

    for name, key, ylabel in (
        ("fig_eigen_error.png", "eig_series", "paired eigenvalue error"),
        ("fig_markov_error.png", "err_series", "relative Markov error"),
    ):
        fig, ax = plt.subplots(figsize=(7.0, 4.0))
        for run in runs:
            t, series = run[key]
            pos = series > 0
            ax.semilogy(t[pos], series[pos], lw=0.9, label=run["label"])
        ax.set_xlabel("t [s]")
        ax.set_ylabel(ylabel)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = out_dir / name
        fig.savefig(path, dpi=130)
        plt.close(fig)
        made.append(path)
    return made


def render_excitation_figure(out_dir, t, sigma_min, rho, threshold) -> Path:
    fig, axes = plt.subplots(2, 1, figsize=(7.0, 5.0), sharex=True)
    pos = sigma_min > 0
    axes[0].semilogy(t[pos], sigma_min[pos], lw=0.9)
    if threshold > 0:
        axes[0].axhline(threshold, color="r", ls="--", lw=0.8, label="tolerance")
        axes[0].legend(fontsize=8)
    axes[0].set_ylabel("sigma_min of Hankel")
    axes[0].grid(True, which="both", alpha=0.3)
    rho_pos = rho > 0
    if rho_pos.any():
        axes[1].semilogy(t[rho_pos], rho[rho_pos], lw=0.9)
    axes[1].set_ylabel("Gram min eigenvalue")
    axes[1].set_xlabel("t [s]")
    axes[1].grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    path = Path(out_dir) / "fig_excitation.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_mcshane_figure(out_dir, discrepancies, grid_diagonal) -> Path:
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    shown = np.maximum(np.asarray(discrepancies, dtype=float), 1e-18)
    ax.plot(np.arange(1, len(shown) + 1), shown, "o", ms=4)
    ax.axhline(grid_diagonal, color="r", ls="--", lw=0.8, label="grid diagonal")
    ax.set_xlabel("sample")
    ax.set_ylabel("|McShane - explicit|")
    ax.set_yscale("log")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(out_dir) / "fig_mcshane.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
