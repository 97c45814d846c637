"""Figure rendering for the CLI report paths.

All functions write image files next to the delimited outputs; the CSV
stays the machine-readable contract, the figures are the human-readable
companion.  Matplotlib's Agg backend is forced so rendering works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_order_stacks(ts, stacks, title: str, path, component_labels=None):
    """Small-multiples view of derivative stacks over time.

    ``stacks``: array (T, r+1, m) — one subplot per order, one line per
    component.
    """
    stacks = np.asarray(stacks)
    nord = stacks.shape[1]
    ncols = min(3, nord)
    nrows = (nord + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(4.2 * ncols, 2.8 * nrows),
                             squeeze=False, sharex=True)
    for k in range(nord):
        ax = axes[k // ncols][k % ncols]
        for m in range(stacks.shape[2]):
            label = None
            if component_labels is not None and k == 0:
                label = component_labels[m]
            ax.plot(ts, stacks[:, k, m], lw=0.9, label=label)
        ax.set_title(f"order {k}", fontsize=9)
        ax.grid(True, alpha=0.3)
    for k in range(nord, nrows * ncols):
        axes[k // ncols][k % ncols].set_axis_off()
    if component_labels is not None and len(component_labels) <= 8:
        axes[0][0].legend(fontsize=7, loc="best")
    for ax in axes[-1]:
        ax.set_xlabel("t [s]")
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_bench_rows(rows, path):
    """Scaling view of benchmark rows (one figure, one panel per sweep)."""
    sweeps = sorted({(row.algo, row.sweep) for row in rows})
    fig, axes = plt.subplots(1, len(sweeps), figsize=(5.0 * len(sweeps), 3.6),
                             squeeze=False)
    for i, (algo, sweep) in enumerate(sweeps):
        ax = axes[0][i]
        sel = [row for row in rows if row.algo == algo and row.sweep == sweep]
        if sweep == "over_N":
            for r in sorted({row.r for row in sel}):
                pts = sorted((row.N, row.mean_s) for row in sel
                             if row.r == r)
                ax.loglog([p[0] for p in pts], [p[1] for p in pts],
                          "o-", ms=3, label=f"r={r}")
            ax.set_xlabel("bodies N")
        else:
            for n in sorted({row.N for row in sel}):
                pts = sorted((row.r, row.mean_s) for row in sel
                             if row.N == n)
                ax.plot([p[0] for p in pts], [p[1] for p in pts],
                        "o-", ms=3, label=f"N={n}")
            ax.set_xlabel("derivative order r")
        ax.set_ylabel("mean s/call")
        ax.set_title(f"{algo} ({sweep})", fontsize=10)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
