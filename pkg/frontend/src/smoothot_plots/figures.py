"""Figure rendering: map overlays, constraint heatmaps, convergence bands.

All rendering is offline batch work from files, and the output bytes are a
pure function of the inputs: fixed styling, fixed dpi, no timestamps or
host-dependent metadata.
"""

from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .reader import band_quantiles, read_table

FIGURE_KINDS = ("map_overlay", "constraint_heatmap", "convergence_band")

STYLE = {
    "figure.figsize": (6.0, 4.5),
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "svg.hashsalt": "smoothot-plots",
    "axes.grid": True,
    "grid.alpha": 0.3,
}

_LINE_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b")


@dataclass(frozen=True)
class FigureRequest:
    kind: str
    inputs: tuple
    output: str
    title: str = ""

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise ValueError("at least one input file is required")
        object.__setattr__(self, "inputs", tuple(str(p) for p in self.inputs))


def _save(fig, output):
    if str(output).endswith(".svg"):
        metadata = {"Date": None, "Creator": None}
    else:
        metadata = {"Software": None}
    fig.savefig(output, metadata=metadata)
    plt.close(fig)


def _render_map_overlay(req):
    fig, ax = plt.subplots()
    lo, hi = np.inf, -np.inf
    for i, path in enumerate(req.inputs):
        table = read_table(path, "map")
        x, t_hat = table["x"], table["t_hat"]
        order = np.argsort(x)
        ax.plot(
            x[order],
            t_hat[order],
            color=_LINE_COLORS[i % len(_LINE_COLORS)],
            label=f"estimate {i + 1}" if len(req.inputs) > 1 else "estimated map",
        )
        lo = min(lo, x.min())
        hi = max(hi, x.max())
    ref = np.array([lo, hi])
    ax.plot(ref, ref, color="0.4", linestyle="--", label="identity")
    ax.set_xlabel("x")
    ax.set_ylabel("T(x)")
    ax.legend(loc="upper left")
    ax.set_title(req.title or "transport map")
    _save(fig, req.output)


def _render_constraint_heatmap(req):
    table = read_table(req.inputs[0], "constraint")
    xs = np.unique(table["x"])
    ys = np.unique(table["y"])
    grid = np.full((xs.size, ys.size), np.nan)
    ix = np.searchsorted(xs, table["x"])
    iy = np.searchsorted(ys, table["y"])
    grid[ix, iy] = table["h_hat"]
    if np.isnan(grid).any():
        raise ValueError("constraint table is not a full grid")
    fig, ax = plt.subplots()
    mesh = ax.pcolormesh(xs, ys, grid.T, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="h(x, y)")
    # empirical zero set: the minimizing y for each x column
    zero_y = ys[np.argmin(grid, axis=1)]
    ax.plot(xs, zero_y, color="#d62728", linestyle=":", linewidth=2, label="zero set")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.legend(loc="upper left")
    ax.set_title(req.title or "dual constraint surface")
    _save(fig, req.output)


def _render_convergence_band(req):
    rows = {"n": [], "abs_error": []}
    for path in req.inputs:
        table = read_table(path, "convergence")
        rows["n"].append(table["n"])
        rows["abs_error"].append(table["abs_error"])
    n = np.concatenate(rows["n"])
    err = np.concatenate(rows["abs_error"])
    levels = np.unique(n)
    stats = {
        q: np.array(
            [band_quantiles(err[n == level], q) for level in levels]
        )
        for q in (0.10, 0.25, 0.50, 0.75, 0.90)
    }
    fig, ax = plt.subplots()
    ax.fill_between(
        levels, stats[0.10], stats[0.90], color="#1f77b4", alpha=0.15,
        label="10-90% quantiles",
    )
    ax.fill_between(
        levels, stats[0.25], stats[0.75], color="#1f77b4", alpha=0.35,
        label="25-75% quantiles",
    )
    ax.plot(levels, stats[0.50], color="#1f77b4", marker="o", label="median")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("samples per measure")
    ax.set_ylabel("|estimate - reference|")
    ax.legend(loc="lower left")
    ax.set_title(req.title or "estimation error vs sample count")
    _save(fig, req.output)


_RENDERERS = {
    "map_overlay": _render_map_overlay,
    "constraint_heatmap": _render_constraint_heatmap,
    "convergence_band": _render_convergence_band,
}


def render(req):
    """Render one figure request to its output path (png or svg)."""
    with plt.rc_context(STYLE):
        _RENDERERS[req.kind](req)
    return req.output
