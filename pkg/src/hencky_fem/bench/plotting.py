"""Matplotlib figures written next to the CSV/VTK output (non-interactive backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.collections import PolyCollection  # noqa: E402
from mpl_toolkits.mplot3d.art3d import Poly3DCollection  # noqa: E402

from ..fem import Mesh  # noqa: E402

# local node numbers of the six H8 faces
_H8_FACES = np.array([[0, 3, 2, 1], [4, 5, 6, 7], [0, 1, 5, 4],
                      [1, 2, 6, 5], [2, 3, 7, 6], [3, 0, 4, 7]])


def plot_curves(path, records, xlabel: str = "", ylabel: str = "", title: str = "") -> None:
    """Line plot of one or several curve records (NaN points leave gaps)."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for rec in records:
        label = rec.tags.get("label", rec.tags.get("model", ""))
        ax.plot(rec.abscissa, rec.ordinate, marker=".", ms=3, lw=1.2, label=label or None)
    ax.set_xlabel(xlabel or (records[0].xname if records else ""))
    ax.set_ylabel(ylabel or (records[0].yname if records else ""))
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    if any(rec.tags.get("label") or rec.tags.get("model") for rec in records):
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _boundary_faces(elements):
    faces = elements[:, _H8_FACES].reshape(-1, 4)
    key = np.sort(faces, axis=1)
    _, idx, counts = np.unique(key, axis=0, return_index=True, return_counts=True)
    owner = idx[counts == 1]
    return faces[owner], owner // 6


def plot_deformed(path, mesh: Mesh, u, cell_values=None, label: str = "", title: str = "") -> None:
    """Deformed mesh at scale 1, colored by a per-cell field."""
    x = mesh.nodes + np.asarray(u, dtype=float).reshape(mesh.nnodes, mesh.dim)
    fig = plt.figure(figsize=(6, 5))
    if mesh.dim == 2:
        ax = fig.add_subplot(111)
        coll = PolyCollection(x[mesh.elements], edgecolors="k", linewidths=0.2)
        if cell_values is not None:
            coll.set_array(np.asarray(cell_values))
        else:
            coll.set_facecolor("lightsteelblue")
        ax.add_collection(coll)
        ax.autoscale_view()
        ax.set_aspect("equal")
    else:
        ax = fig.add_subplot(111, projection="3d")
        faces, owner = _boundary_faces(mesh.elements)
        coll = Poly3DCollection(x[faces], edgecolors="k", linewidths=0.1)
        if cell_values is not None:
            coll.set_array(np.asarray(cell_values)[owner])
        else:
            coll.set_facecolor("lightsteelblue")
        ax.add_collection3d(coll)
        lo, hi = x.min(axis=0), x.max(axis=0)
        ax.set_xlim(lo[0], hi[0])
        ax.set_ylim(lo[1], hi[1])
        ax.set_zlim(lo[2], hi[2])
        ax.set_box_aspect(np.maximum(hi - lo, 1e-9))
    if cell_values is not None:
        fig.colorbar(coll, ax=ax, shrink=0.8, label=label)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
