"""Render report figures to files next to the delimited outputs.

Everything draws through the Agg backend so batch runs never need a display,
and figures for identical inputs are byte-identical across reruns.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_SAVE = dict(dpi=150, metadata={"Software": "neuromap"})


def convergence_figure(history, path) -> None:
    """Best placement fitness per optimizer iteration."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(1, len(history) + 1), history, lw=2)
    ax.set_xlabel("iteration")
    ax.set_ylabel("best fitness (mean hops per spike)")
    ax.set_title("Placement search convergence")
    ax.grid(True, alpha=0.4)
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)


def delay_histogram(delays, path) -> None:
    """Distribution of per-spike delivery delays in cycles."""
    delays = np.asarray(delays)
    fig, ax = plt.subplots(figsize=(6, 4))
    if delays.size:
        bins = min(50, max(int(delays.max() - delays.min()) + 1, 1))
        ax.hist(delays, bins=bins, edgecolor="black", linewidth=0.4)
    ax.set_xlabel("delay (cycles)")
    ax.set_ylabel("spikes")
    ax.set_title("Spike delivery delay")
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)


def link_heatmap(link_counts, mesh_width, mesh_height, path) -> None:
    """Per-crossbar view of mesh traffic: packets forwarded through each switch."""
    load = np.zeros((mesh_height, mesh_width))
    for (a, b), count in link_counts.items():
        ay, ax_ = divmod(a, mesh_width)
        load[ay, ax_] += count
    fig, ax = plt.subplots(figsize=(5, 4.2))
    im = ax.imshow(load, origin="lower", cmap="viridis")
    ax.set_xticks(range(mesh_width))
    ax.set_yticks(range(mesh_height))
    ax.set_xlabel("crossbar x")
    ax.set_ylabel("crossbar y")
    ax.set_title("Forwarded packets per switch")
    fig.colorbar(im, ax=ax, label="packets")
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)


def explore_figure(rows, path) -> None:
    """Bar chart comparing the routing algorithms on the same placed workload.

    rows: (kind, avg_latency, energy, isi_distortion) tuples.
    """
    kinds = [r[0] for r in rows]
    metrics = [
        ("avg latency (cycles)", [r[1] for r in rows]),
        ("energy (pJ)", [r[2] for r in rows]),
        ("ISI distortion", [r[3] for r in rows]),
    ]
    fig, axes = plt.subplots(1, 3, figsize=(10, 3.4))
    for ax, (label, values) in zip(axes, metrics):
        ax.bar(kinds, values, color=["#4c72b0", "#dd8452", "#55a868"][:len(kinds)])
        ax.set_ylabel(label)
        ax.tick_params(axis="x", rotation=20)
    fig.suptitle("Routing exploration")
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)
