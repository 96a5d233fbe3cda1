"""Figure builders: semilog decay curves, field snapshots, admissibility regions.

Figures are regenerated byte-stably: fixed SVG hash salt, no timestamp
metadata, and the input-data hash embedded in the figure description.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .readers import FLOOR, fit_slope, read_norm_csv, read_nlsf, read_report

plt.rcParams["svg.hashsalt"] = "solitrain-plots"

THEOREM_COLORS = {
    "single1": "#1f77b4",
    "single2": "#17becf",
    "mixed0": "#ff7f0e",
    "mixed1": "#d62728",
    "train123": "#9467bd",
}


@dataclass
class FigureRequest:
    kind: str  # decay | snapshot | regions
    inputs: list
    output: str
    style: dict = field(default_factory=dict)


def _data_hash(paths) -> str:
    h = hashlib.sha256()
    for p in paths:
        with open(p, "rb") as fh:
            h.update(fh.read())
    return h.hexdigest()


def _save(fig, out_path, inputs):
    meta = {}
    if str(out_path).endswith(".svg"):
        meta = {"Date": None, "Description": f"data-sha256:{_data_hash(inputs)}"}
    fig.savefig(out_path, metadata=meta)
    plt.close(fig)


def plot_decay(csv_path, out_path, window=None) -> dict:
    """Semilog plot of every norm_id in the CSV with its fitted slope
    annotated; returns {norm_id: slope} for the contract check."""
    series = read_norm_csv(csv_path)
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    slopes = {}
    for norm_id in sorted(series):
        s = series[norm_id]
        keep = s.value > FLOOR
        if keep.sum() < 5:
            ax.semilogy(s.t, np.maximum(s.value, FLOOR), label=norm_id, alpha=0.5)
            continue
        try:
            rate = fit_slope(s.t, s.value, window=window)
        except ValueError:
            ax.semilogy(s.t, np.maximum(s.value, FLOOR), label=norm_id, alpha=0.5)
            continue
        slopes[norm_id] = rate
        ax.semilogy(s.t[keep], s.value[keep], label=f"{norm_id} (rate {rate:+.3f})")
    ax.set_xlabel("t")
    ax.set_ylabel("norm")
    ax.grid(True, which="both", alpha=0.25)
    ax.legend(loc="best", fontsize=8)
    _save(fig, out_path, [csv_path])
    return slopes


def plot_snapshot(nlsf_path, out_path) -> dict:
    """|u| curve (1D) or heatmap (2D and 3D mid-plane slice)."""
    snap = read_nlsf(nlsf_path)
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    mag = np.abs(snap.values)
    info = {"dim": snap.dim, "t": snap.t, "max": float(mag.max())}
    axes = [
        -snap.L[i] + 2 * snap.L[i] / snap.N[i] * np.arange(snap.N[i])
        for i in range(snap.dim)
    ]
    if snap.dim == 1:
        ax.plot(axes[0], mag)
        ax.set_xlabel("x")
        ax.set_ylabel("|u|")
    else:
        plane = mag if snap.dim == 2 else mag[:, :, snap.N[2] // 2]
        im = ax.imshow(
            plane.T,
            origin="lower",
            extent=(axes[0][0], -axes[0][0], axes[1][0], -axes[1][0]),
            aspect="auto",
            cmap="magma",
        )
        fig.colorbar(im, ax=ax, label="|u|")
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
    ax.set_title(f"t = {snap.t:g}")
    _save(fig, out_path, [nlsf_path])
    return info


def plot_regions(regions_json_path, out_path) -> dict:
    """Shade admissible (alpha1, alpha2) cells per theorem from the
    admissibility grid emitted by the producer."""
    data = read_report(regions_json_path)
    grid = data.get("grid")
    if not isinstance(grid, list) or not grid:
        raise ValueError(f"{regions_json_path}: empty admissibility grid")
    fig, ax = plt.subplots(figsize=(6.0, 5.0))
    summary: dict = {}
    for thm in sorted({c["theorem"] for c in grid}):
        pts = [(c["alpha1"], c["alpha2"]) for c in grid if c["theorem"] == thm and c["admissible"]]
        if not pts:
            continue
        arr = np.array(pts)
        ax.scatter(
            arr[:, 0], arr[:, 1], s=6, marker="s",
            color=THEOREM_COLORS.get(thm, "#444444"), label=thm, linewidths=0,
        )
        summary[thm] = {
            "count": len(pts),
            "alpha1_range": (float(arr[:, 0].min()), float(arr[:, 0].max())),
            "alpha2_range": (float(arr[:, 1].min()), float(arr[:, 1].max())),
        }
    ax.set_xlabel(r"$\alpha_1$")
    ax.set_ylabel(r"$\alpha_2$")
    ax.set_title(f"admissible constructions, dims {data.get('dims')}")
    ax.legend(loc="upper left", fontsize=8)
    ax.grid(True, alpha=0.25)
    _save(fig, out_path, [regions_json_path])
    return summary


def make_figure(req: FigureRequest) -> dict:
    if req.kind == "decay":
        return plot_decay(req.inputs[0], req.output, **req.style)
    if req.kind == "snapshot":
        return plot_snapshot(req.inputs[0], req.output)
    if req.kind == "regions":
        return plot_regions(req.inputs[0], req.output)
    raise ValueError(f"unknown figure kind {req.kind!r}")
