"""Figure rendering from harness CSV files.

A FigureSpec names one of five figure kinds, the input CSVs, the overlay
parameters and the output path. Rendering is deterministic: a fixed
style, a fixed SVG hash salt and no embedded timestamps, so rerunning a
spec reproduces the output byte for byte.

CSV schemas (from the harness):
    speed.csv      run_id,K,chi,seed,xi_t1,xi_t2,speed
    histogram.csv  bin_left,count
    snapshots.csv  run_id,t,label,x
    xi.csv         run_id,t,N,xi
    lineage.csv    particle,s,y,y_hat
    ancestry.csv   s,distinct_ancestors,selection_size
    fp_profile.csv s,z,v
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import overlays  # noqa: E402

FIGURE_KINDS = ("speed", "histogram", "trajectories", "ancestry", "fp")


class SchemaError(ValueError):
    """An input CSV is missing or lacks a required column."""


@dataclass
class FigureSpec:
    figure: str
    inputs: Dict[str, str]
    output: str
    overlay: Dict[str, float] = field(default_factory=dict)
    format: str = "svg"

    def __post_init__(self):
        if self.figure not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.figure!r}; one of {FIGURE_KINDS}")
        if self.format not in ("svg", "png"):
            raise ValueError(f"format must be svg or png, got {self.format!r}")

    @classmethod
    def from_json(cls, path) -> "FigureSpec":
        payload = json.loads(Path(path).read_text())
        return cls(**payload)


def _read_csv(path: str, required: List[str]) -> Dict[str, list]:
    p = Path(path)
    if not p.exists():
        raise SchemaError(f"input CSV not found: {path}")
    with open(p, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in required:
            if col not in header:
                raise SchemaError(f"{p.name}: missing required column {col!r}")
        rows = list(reader)
    return {col: [row[col] for row in rows] for col in header}


def _floats(table: Dict[str, list], col: str) -> np.ndarray:
    return np.array([float(v) for v in table[col]])


def _style():
    plt.rcParams.update({
        "svg.hashsalt": "gogrow-figures",
        "figure.dpi": 100,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "font.size": 9,
    })


def _save(fig, spec: FigureSpec) -> Path:
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format=spec.format, metadata={"Date": None})
    plt.close(fig)
    return out


def _warn_empty(ax, message: str):
    ax.annotate(message, xy=(0.5, 0.5), xycoords="axes fraction",
                ha="center", va="center", color="tab:red")


# -- figure kinds -----------------------------------------------------------------


def _render_speed(spec: FigureSpec):
    table = _read_csv(spec.inputs["speed"], ["K", "chi", "speed"])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.set_xlabel("K")
    ax.set_ylabel("front speed over the window")
    if not table["K"]:
        _warn_empty(ax, "speed.csv is empty")
        return fig
    K = _floats(table, "K").astype(int)
    chi = _floats(table, "chi")
    speed = _floats(table, "speed")
    colors = {c: f"C{i}" for i, c in enumerate(sorted(set(chi.tolist())))}
    k_values = sorted(set(K.tolist()))
    for ci, c in enumerate(sorted(set(chi.tolist()))):
        groups = [speed[(chi == c) & (K == k)] for k in k_values]
        pos = np.arange(len(k_values)) + 0.18 * (2 * ci - 1)
        ax.boxplot([g for g in groups], positions=pos, widths=0.3,
                   boxprops={"color": colors[c]}, medianprops={"color": colors[c]})
        means = [g.mean() if g.size else np.nan for g in groups]
        ax.plot(np.arange(len(k_values)), means, "-o", ms=3,
                color=colors[c], label=f"chi={c} sample mean")
        ax.axhline(overlays.sigma_star(c), linestyle="--", lw=1,
                   color=colors[c], label=f"chi={c} wave speed {overlays.sigma_star(c):g}")
    ax.set_xticks(np.arange(len(k_values)), [str(k) for k in k_values])
    ax.legend(fontsize=7)
    return fig


def _render_histogram(spec: FigureSpec):
    table = _read_csv(spec.inputs["histogram"], ["bin_left", "count"])
    chi = float(spec.overlay["chi"])
    K = int(spec.overlay["K"])
    dx = float(spec.overlay["dx"])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.set_xlabel("z (moving frame)")
    ax.set_ylabel("particles per bin")
    if not table["bin_left"]:
        _warn_empty(ax, "histogram.csv is empty")
        return fig
    left = _floats(table, "bin_left")
    counts = _floats(table, "count")
    ax.bar(left, counts, width=dx, align="edge", color="tab:blue", alpha=0.7,
           label="simulation")
    z = np.linspace(left[0], left[-1] + dx, 400)
    ax.plot(z, overlays.profile_overlay(chi, K, dx, z), "r-", lw=1.5,
            label=f"wave profile, plateau K chi dx = {overlays.histogram_constant(K, chi, dx):g}")
    ax.legend(fontsize=7)
    return fig


def _render_trajectories(spec: FigureSpec, max_tracks: int = 400):
    snaps = _read_csv(spec.inputs["snapshots"], ["run_id", "t", "label", "x"])
    xi_tab = _read_csv(spec.inputs["xi"], ["t", "xi"])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.set_xlabel("t"); ax1.set_ylabel("x")
    ax2.set_xlabel("t"); ax2.set_ylabel("z = x - xi")
    if not snaps["t"]:
        for ax in (ax1, ax2):
            _warn_empty(ax, "snapshots.csv is empty")
        return fig
    t_xi = _floats(xi_tab, "t")
    xi = _floats(xi_tab, "xi")
    xi_at = dict(zip(t_xi.tolist(), xi.tolist()))
    tracks: Dict[str, list] = {}
    for t_str, label, x_str in zip(snaps["t"], snaps["label"], snaps["x"]):
        tracks.setdefault(label, []).append((float(t_str), float(x_str)))
    # deterministic subsample: sorted labels, even stride
    labels = sorted(tracks)
    stride = max(1, len(labels) // max_tracks)
    for label in labels[::stride]:
        pts = np.array(tracks[label])
        ax1.plot(pts[:, 0], pts[:, 1], color="0.7", lw=0.4)
        z = pts[:, 1] - np.array([xi_at.get(t, np.nan) for t in pts[:, 0]])
        ax2.plot(pts[:, 0], z, color="0.7", lw=0.4)
    ax1.plot(t_xi, xi, "r-", lw=1.5, label="position of the K-th particle")
    ax2.axhline(0.0, color="r", lw=1.5)
    ax1.legend(fontsize=7)
    return fig


def _render_ancestry(spec: FigureSpec):
    table = _read_csv(spec.inputs["lineage"], ["particle", "s", "y_hat"])
    chi = float(spec.overlay["chi"])
    dx = float(spec.overlay.get("dx", 0.5))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.set_xlabel("z = Y - xi (ancestor, moving frame)")
    ax.set_ylabel("ancestral lineages per bin")
    if not table["s"]:
        _warn_empty(ax, "lineage.csv is empty")
        return fig
    s_all = _floats(table, "s")
    s_pick = s_all.max()
    y_hat = _floats(table, "y_hat")[s_all == s_pick]
    lo = np.floor(y_hat.min() / dx) * dx
    edges = lo + dx * np.arange(int(np.ceil((y_hat.max() - lo) / dx)) + 2)
    counts, _ = np.histogram(y_hat, bins=edges)
    ax.bar(edges[:-1], counts, width=dx, align="edge", color="tab:blue", alpha=0.7,
           label=f"ancestors at s={s_pick:g} (n={y_hat.size})")
    z = np.linspace(edges[0] - 1, edges[-1] + 1, 400)
    curve = overlays.ancestry_overlay(chi, y_hat.size, dx, z)
    if curve is not None:
        ax.plot(z, curve, "m-", lw=1.5,
                label="equilibrium n (chi^2-1)/chi^3 dx scale")
    else:
        ax.annotate("no normalisable equilibrium (pulled regime)",
                    xy=(0.02, 0.95), xycoords="axes fraction", fontsize=7)
    ax.legend(fontsize=7)
    return fig


def _render_fp(spec: FigureSpec):
    table = _read_csv(spec.inputs["fp_profile"], ["s", "z", "v"])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.set_xlabel("z")
    ax.set_ylabel("lineage density v(s, z)")
    if not table["s"]:
        _warn_empty(ax, "fp_profile.csv is empty")
        return fig
    s = _floats(table, "s")
    z = _floats(table, "z")
    v = _floats(table, "v")
    for i, s_val in enumerate(sorted(set(s.tolist()))):
        m = s == s_val
        ax.plot(z[m], v[m], lw=1.0, color=plt.cm.viridis(i / max(1, len(set(s.tolist())) - 1)),
                label=f"s={s_val:g}")
    if "chi" in spec.overlay:
        chi = float(spec.overlay["chi"])
        if overlays.vinf_is_density(chi):
            zs = np.linspace(z.min(), z.max(), 400)
            ax.plot(zs, overlays.v_infinity(chi, zs), "k--", lw=1.2, label="equilibrium")
    ax.legend(fontsize=7, ncol=2)
    return fig


_RENDERERS = {
    "speed": _render_speed,
    "histogram": _render_histogram,
    "trajectories": _render_trajectories,
    "ancestry": _render_ancestry,
    "fp": _render_fp,
}


def render(spec: FigureSpec) -> Path:
    """Render one figure; returns the output path."""
    _style()
    fig = _RENDERERS[spec.figure](spec)
    return _save(fig, spec)
