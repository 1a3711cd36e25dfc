"""SVG figures written next to the CSV outputs."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .benchmark import SINGLE_PHOTON_BOUND

plt.rcParams.update({
    "svg.hashsalt": "afcpol",
    "font.size": 9,
    "axes.linewidth": 0.8,
    "legend.frameon": False,
})


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_benchmark(path, mu, curves: dict, unit):
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for eta, f in curves.items():
        ax.plot(mu, f, lw=1.2, label=f"$\\eta$ = {eta:g}")
    ax.plot(mu[::8], unit[::8], "k.", ms=3, label="unit efficiency")
    ax.axhline(SINGLE_PHOTON_BOUND, color="k", ls="--", lw=0.8, label="N = 1")
    ax.set_xscale("log")
    ax.set_xlabel(r"mean photon number $\mu$")
    ax.set_ylabel("classical fidelity")
    ax.legend(fontsize=7)
    return _save(fig, path)


def plot_echo(path, h_afc, h_pit, echo_window):
    fig, ax = plt.subplots(figsize=(4.5, 3.0))
    t = h_afc.bin_centers * 1e9
    ax.step(t, h_pit.counts, where="mid", color="0.5", ls=":", lw=1, label="empty pit")
    ax.step(t, h_afc.counts, where="mid", color="C0", lw=1, label="AFC")
    for edge in echo_window:
        ax.axvline(edge * 1e9, color="k", ls="--", lw=0.6)
    ax.set_yscale("symlog", linthresh=10)
    ax.set_xlabel("time (ns)")
    ax.set_ylabel("counts")
    ax.legend(fontsize=7)
    return _save(fig, path)


def plot_density_matrices(path, results):
    n = len(results)
    fig, axes = plt.subplots(2, n, figsize=(1.6 * n, 3.2), sharey=True)
    axes = np.atleast_2d(axes).reshape(2, n)
    ticks = ["HH", "HV", "VH", "VV"]
    for j, r in enumerate(results):
        rho = r.rho.entries.ravel()
        for i, (part, name) in enumerate(((rho.real, "Re"), (rho.imag, "Im"))):
            ax = axes[i, j]
            ax.bar(range(4), part, color="C0" if i == 0 else "C1")
            ax.set_ylim(-0.6, 1.05)
            ax.set_xticks(range(4), ticks, fontsize=6)
            if j == 0:
                ax.set_ylabel(f"{name} $\\rho$")
        axes[0, j].set_title(f"|{r.target_label}>  F={r.fidelity_raw:.3f}", fontsize=7)
    return _save(fig, path)


def plot_fringes(path, scans):
    fig, ax = plt.subplots(figsize=(4.5, 3.0))
    for k, (name, angles, p, fit) in enumerate(scans):
        deg = np.degrees(angles)
        fine = np.linspace(angles[0], angles[-1], 400)
        ax.plot(deg, p, "o", ms=3, color=f"C{k}", label=f"{name}: V={fit.visibility:.2f}")
        ax.plot(np.degrees(fine), fit.model(fine), "-", lw=0.8, color=f"C{k}")
    ax.set_xlabel("HWP angle (deg)")
    ax.set_ylabel(r"$p_{det}$")
    ax.legend(fontsize=6)
    return _save(fig, path)


def plot_sweep(path, table: dict, cfg):
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    mu = table["mu"]
    ax.errorbar(mu, table["fidelity_raw"], yerr=table["fidelity_raw_err"], fmt="o", ms=4,
                color="k", label="raw")
    ax.errorbar(mu, table["fidelity_dark_subtracted"], yerr=table["fidelity_dark_subtracted_err"],
                fmt="s", ms=4, mfc="none", color="k", label="dark subtracted")
    fine = np.geomspace(min(mu) / 1.5, max(mu) * 1.5, 200)
    from .pipeline import benchmark_columns
    from .benchmark import f_class_unit_efficiency
    for k, (name, f) in enumerate(benchmark_columns(fine, cfg.sweep_eta_lines).items()):
        ax.plot(fine, f, lw=1, color=f"C{k}", label=name.replace("f_class_eta_", r"$\eta$="))
    ax.plot(fine, [f_class_unit_efficiency(m) for m in fine], "k-.", lw=0.8, label="unit efficiency")
    ax.axhline(SINGLE_PHOTON_BOUND, color="k", lw=0.6)
    ax.set_xscale("log")
    ax.set_xlabel(r"$\mu$")
    ax.set_ylabel("fidelity")
    ax.set_ylim(0.6, 1.01)
    ax.legend(fontsize=6, loc="lower right")
    return _save(fig, path)
