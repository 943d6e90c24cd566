"""Headless matplotlib rendering of the report figures.

Each CLI command that writes a CSV also drops a PNG next to it (unless
plots are disabled); everything renders with the Agg backend.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import constants as cst


def save_stark_map(stark_map, laser_detuning_rads, path):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for ci in range(len(stark_map.chains)):
        f, e = stark_map.chain_curve(ci)
        ax.plot(f, e / cst.TWO_PI / 1e6, lw=0.8, color="tab:blue", alpha=0.7)
    ax.axhline(laser_detuning_rads / cst.TWO_PI / 1e6, ls="--", color="k", lw=1.0,
               label="excitation laser")
    ax.set_xlabel("electric field (V/cm)")
    ax.set_ylabel("detuning from zero-field reference (MHz)")
    ax.legend(loc="best", frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_excitation_scan(e_h, totals, contribs, path, data=None):
    fig, ax = plt.subplots(figsize=(7, 4.0))
    ax.plot(e_h, totals, color="k", lw=1.5, label="total")
    styles = {+1: "-", -1: "--"}
    colors = ["tab:green", "tab:orange", "tab:purple", "tab:red"]
    for (si, br), curve in sorted(contribs.items()):
        if np.max(curve) <= 0:
            continue
        ax.plot(e_h, curve, styles[br], color=colors[si % len(colors)], lw=1.0,
                label=f"state {si} ({'+' if br > 0 else '-'} layer)")
    if data is not None:
        ax.plot(data[0], data[1], "o", ms=3, color="0.4", label="data")
    ax.set_xlabel("compensation field (V/cm)")
    ax.set_ylabel("relative count rate")
    ax.legend(loc="best", frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_spectra(curves, path):
    """curves: list of (label, freq_ghz, p2, fit or None)."""
    fig, ax = plt.subplots(figsize=(7, 4.0))
    colors = ["tab:blue", "tab:red", "tab:green", "tab:purple"]
    for i, (label, f_ghz, p2, fit) in enumerate(curves):
        ax.plot(f_ghz, p2, "o", ms=3, color=colors[i % len(colors)], label=label)
        if fit is not None:
            ax.plot(f_ghz, fit, "-", lw=1.2, color=colors[i % len(colors)])
    ax.set_xlabel("pump frequency (GHz)")
    ax.set_ylabel("normalized ion count p2")
    ax.legend(loc="best", frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_rabi_traces(curves, path):
    """curves: list of (label, t_us, p2, fit or None)."""
    fig, ax = plt.subplots(figsize=(7, 4.0))
    colors = ["tab:blue", "tab:red", "tab:green", "tab:purple"]
    for i, (label, t_us, p2, fit) in enumerate(curves):
        ax.plot(t_us, p2, "o", ms=3, color=colors[i % len(colors)], label=label)
        if fit is not None:
            ax.plot(t_us, fit, "-", lw=1.2, color=colors[i % len(colors)])
    ax.set_xlabel("pulse duration (us)")
    ax.set_ylabel("normalized ion count p2")
    ax.legend(loc="best", frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_histogram(hist, windows, path):
    fig, ax = plt.subplots(figsize=(7, 4.0))
    centers = 0.5 * (hist.bin_edges_us[:-1] + hist.bin_edges_us[1:])
    ax.bar(centers, hist.counts, width=np.diff(hist.bin_edges_us), color="tab:blue",
           edgecolor="none", alpha=0.8)
    for window, name in ((windows.t1, "T1"), (windows.t2, "T2")):
        ax.axvspan(*window, color="0.85", zorder=0)
        ax.text(0.5 * sum(window), ax.get_ylim()[1] * 0.95, name, ha="center")
    ax.set_xlabel("arrival time (us)")
    ax.set_ylabel("ion counts")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
