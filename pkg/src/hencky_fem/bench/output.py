"""CSV curve output and legacy ASCII VTK field output."""

from __future__ import annotations

import numpy as np

from ..errors import HenckyFemError
from ..fem import VTK_CELL_TYPES, Mesh

CELL_FIELDS = ("max_principal_log_strain", "omega_iso", "omega_vol")


class OutputError(HenckyFemError, OSError):
    """Failure while writing or reading an output file."""


def output_name(case: str, model: str, mesh: str, ext: str) -> str:
    return f"{case}_{model}_{mesh}.{ext}"


def write_csv(path, header, rows) -> None:
    """Comma-separated table with a header line and 17 significant digits."""
    rows = np.asarray(rows, dtype=float).reshape(-1, len(header))
    try:
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def read_csv(path):
    """Header list and ``(nrows, ncols)`` array written by :func:`write_csv`."""
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc}") from exc
    return header, data.reshape(-1, len(header))


def emit_curves(path, records) -> None:
    """Stack curve records into one CSV; a ``curve`` column indexes the record."""
    records = list(records)
    if not records:
        write_csv(path, ["curve", "x", "y"], np.zeros((0, 3)))
        return
    names, _ = records[0].columns()
    rows = []
    for i, rec in enumerate(records):
        _, data = rec.columns()
        rows.append(np.column_stack([np.full(len(data), i), data]))
    write_csv(path, ["curve"] + names, np.vstack(rows))


def emit_fields(path, mesh: Mesh, u, cell_data: dict | None = None) -> None:
    """Legacy ASCII unstructured grid with nodal displacement and cell scalars."""
    u = np.asarray(u, dtype=float).reshape(mesh.nnodes, mesh.dim)
    pts = np.zeros((mesh.nnodes, 3))
    pts[:, : mesh.dim] = mesh.nodes
    disp = np.zeros((mesh.nnodes, 3))
    disp[:, : mesh.dim] = u
    nen = mesh.elements.shape[1]
    try:
        with open(path, "w") as fh:
            fh.write("# vtk DataFile Version 3.0\nhencky_fem output\nASCII\nDATASET UNSTRUCTURED_GRID\n")
            fh.write(f"POINTS {mesh.nnodes} double\n")
            for p in pts:
                fh.write(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
            fh.write(f"CELLS {mesh.nelems} {mesh.nelems * (nen + 1)}\n")
            for e in mesh.elements:
                fh.write(f"{nen} " + " ".join(str(int(v)) for v in e) + "\n")
            fh.write(f"CELL_TYPES {mesh.nelems}\n")
            fh.write((f"{VTK_CELL_TYPES[mesh.kind]}\n") * mesh.nelems)
            fh.write(f"POINT_DATA {mesh.nnodes}\nVECTORS displacement double\n")
            for d in disp:
                fh.write(f"{d[0]:.17g} {d[1]:.17g} {d[2]:.17g}\n")
            if cell_data:
                fh.write(f"CELL_DATA {mesh.nelems}\n")
                for name, values in cell_data.items():
                    fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                    for v in np.asarray(values, dtype=float):
                        fh.write(f"{v:.17g}\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def read_vtk(path) -> dict:
    """Minimal reader for files produced by :func:`emit_fields`."""
    try:
        with open(path) as fh:
            tokens = fh.read().split()
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc}") from exc
    out = {"cell_data": {}}
    i = 0
    section = None
    while i < len(tokens):
        tok = tokens[i]
        if tok == "POINTS":
            n = int(tokens[i + 1])
            out["points"] = np.array(tokens[i + 3 : i + 3 + 3 * n], dtype=float).reshape(n, 3)
            i += 3 + 3 * n
        elif tok == "CELLS":
            n, size = int(tokens[i + 1]), int(tokens[i + 2])
            flat = np.array(tokens[i + 3 : i + 3 + size], dtype=np.int64)
            cells, j = [], 0
            while j < size:
                cells.append(flat[j + 1 : j + 1 + flat[j]])
                j += flat[j] + 1
            out["cells"] = np.array(cells)
            i += 3 + size
        elif tok == "CELL_TYPES":
            n = int(tokens[i + 1])
            out["cell_types"] = np.array(tokens[i + 2 : i + 2 + n], dtype=int)
            i += 2 + n
        elif tok in ("POINT_DATA", "CELL_DATA"):
            section = (tok, int(tokens[i + 1]))
            i += 2
        elif tok == "VECTORS":
            n = section[1]
            out[tokens[i + 1]] = np.array(tokens[i + 3 : i + 3 + 3 * n], dtype=float).reshape(n, 3)
            i += 3 + 3 * n
        elif tok == "SCALARS":
            n = section[1]
            name = tokens[i + 1]
            start = i + 4 + (2 if tokens[i + 4] == "LOOKUP_TABLE" else 0)
            out["cell_data"][name] = np.array(tokens[start : start + n], dtype=float)
            i = start + n
        else:
            i += 1
    return out
