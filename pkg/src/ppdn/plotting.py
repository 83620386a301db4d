"""Figures written next to the CSV outputs.

Uses the object-oriented matplotlib API with the Agg canvas, so nothing
touches pyplot's global state and no display is needed.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .network import Network, NodeKind, VoltageState
from .routing import PathSpec, normalized_costs

KIND_MARKERS = {NodeKind.SOURCE: "s", NodeKind.ROUTER: "o", NodeKind.LOAD: "D"}


def _figure(width=5.0, height=3.2):
    fig = Figure(figsize=(width, height), dpi=120)
    FigureCanvasAgg(fig)
    return fig


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    return path


def plot_path_costs(paths: Sequence[PathSpec], path, title=None, top=None) -> Path:
    """Bar chart of path costs normalised by the cheapest one."""
    norm = normalized_costs(paths)
    if top is not None:
        paths, norm = paths[:top], norm[:top]
    fig = _figure(max(4.0, 0.35 * len(paths) + 1.5), 3.2)
    ax = fig.add_subplot(111)
    x = np.arange(len(paths))
    colors = ["tab:red" if k == 0 else "tab:gray" for k in x]
    ax.bar(x, norm, color=colors)
    ax.set_xticks(x)
    ax.set_xticklabels([p.label() for p in paths], rotation=75, ha="right", fontsize=6)
    if norm:
        span = max(norm) - 1.0
        ax.set_ylim(1.0 - 0.1 * span - 1e-6, max(norm) + 0.1 * span + 1e-6)
    ax.set_ylabel("normalised path cost")
    ax.set_title(title or "Cost of all loop-free paths")
    return _save(fig, path)


def _positions(net: Network, cols: int | None):
    """Lattice layout when ``cols`` is known, otherwise a circle."""
    pos = {}
    if cols:
        routers = [n.id for n in net.routers]
        for rid in routers:
            r, c = divmod(rid - 1, cols)
            pos[rid] = np.array([c, -r], dtype=float)
        centre = np.mean([pos[k] for k in routers], axis=0)
        seen: dict[int, int] = {}
        for n in net.sources + net.loads:
            nbrs = [m for m in net.neighbors(n.id) if m in pos and net.kind(m) is NodeKind.ROUTER]
            if not nbrs:
                # isolated tap: park it above the grid
                pos[n.id] = centre + np.array([0.0, 1.0 + 0.4 * len(pos)])
                continue
            rid = nbrs[0]
            out = pos[rid] - centre
            out = out / (np.linalg.norm(out) or 1.0)
            k = seen[rid] = seen.get(rid, -1) + 1
            # several taps on one router fan out sideways
            side = np.array([-out[1], out[0]]) * 0.4 * k
            pos[n.id] = pos[rid] + 0.6 * out + side
        return pos
    ang = np.linspace(0, 2 * np.pi, len(net), endpoint=False)
    return {nid: np.array([np.cos(a), np.sin(a)]) for nid, a in zip(net.ids, ang)}


def plot_network(net: Network, state: VoltageState, spec: PathSpec | None, path,
                 cols: int | None = None, title=None) -> Path:
    """Nodes coloured by mean voltage, with the chosen path drawn as arrows."""
    pos = _positions(net, cols)
    fig = _figure(4.2, 3.8)
    ax = fig.add_subplot(111)
    for e in net.edges:
        a, b = pos[e.a], pos[e.b]
        ax.plot([a[0], b[0]], [a[1], b[1]], color="0.8", lw=1.0, zorder=1)
    volts = {n.id: float(np.mean(state.row(n.id))) for n in net.nodes}
    vmin = min(volts.values())
    vmax = max(volts.values())
    for kind, marker in KIND_MARKERS.items():
        ids = [n.id for n in net.nodes if n.kind is kind]
        if not ids:
            continue
        xy = np.array([pos[i] for i in ids])
        sc = ax.scatter(xy[:, 0], xy[:, 1], c=[volts[i] for i in ids], cmap="viridis",
                        vmin=vmin, vmax=vmax, marker=marker, s=420, edgecolors="k", zorder=2)
        for i in ids:
            ax.annotate(str(i), pos[i], ha="center", va="center", fontsize=7, color="w", zorder=3)
    fig.colorbar(sc, ax=ax, label="voltage [V]")
    if spec is not None:
        for i, j in spec.edges:
            ax.annotate("", xy=pos[j], xytext=pos[i], zorder=4,
                        arrowprops=dict(arrowstyle="->", color="tab:red", lw=2.0, shrinkA=11, shrinkB=11))
    ax.set_aspect("equal")
    ax.axis("off")
    ax.margins(0.15)
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_router_voltages(records, path, title=None) -> Path:
    """Mean capacitor voltage of every router after each slot."""
    fig = _figure()
    ax = fig.add_subplot(111)
    if records:
        net = records[0].state.net
        slots = [r.slot for r in records]
        for n in net.routers:
            ax.plot(slots, [float(np.mean(r.state.row(n.id))) for r in records], label=str(n.id), lw=1.0)
        ax.legend(title="router", fontsize=6, ncol=3)
    ax.set_xlabel("slot")
    ax.set_ylabel("voltage [V]")
    ax.set_title(title or "Router voltages")
    return _save(fig, path)
