"""Point cloud and experiment-artifact file I/O.

Formats:
  - XYZ/XY text: one point per line, whitespace-separated, '#' comments.
  - ASCII PLY with element vertex and x/y/z (optional nx/ny/nz) properties.
  - Field grid: row-major CSV plus a JSON sidecar with extent/resolution.
  - Denoise trace: CSV with per-iteration loss breakdown.

Floats are written with 17 significant digits so round-trips are exact.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import PointCloud

_FMT = "%.17g"


def read_cloud(path) -> PointCloud:
    """Read a cloud from .ply or whitespace-separated text (2 or 3 columns)."""
    path = Path(path)
    if path.suffix.lower() == ".ply":
        pts, _ = read_ply(path)
        return PointCloud(pts)
    return PointCloud(read_xyz(path))


def read_xyz(path) -> np.ndarray:
    rows = []
    with open(path) as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            rows.append([float(tok) for tok in line.split()])
    if not rows:
        raise ValueError(f"empty cloud: {path}")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"inconsistent column count in {path}")
    return np.asarray(rows, dtype=np.float64)


def write_xyz(path, points: np.ndarray) -> None:
    np.savetxt(path, np.asarray(points, dtype=np.float64), fmt=_FMT)


def read_ply(path) -> tuple[np.ndarray, np.ndarray | None]:
    """Read an ASCII PLY; returns (points, normals or None)."""
    with open(path) as f:
        if f.readline().strip() != "ply":
            raise ValueError(f"not a PLY file: {path}")
        n_vertex = None
        props = []
        in_vertex = False
        for line in f:
            tok = line.split()
            if not tok:
                continue
            if tok[0] == "format":
                if tok[1] != "ascii":
                    raise ValueError("only ASCII PLY is supported")
            elif tok[0] == "element":
                in_vertex = tok[1] == "vertex"
                if in_vertex:
                    n_vertex = int(tok[2])
            elif tok[0] == "property" and in_vertex:
                props.append(tok[2])
            elif tok[0] == "end_header":
                break
        if n_vertex is None:
            raise ValueError("PLY has no vertex element")
        data = np.loadtxt(f, max_rows=n_vertex, ndmin=2)
    cols = {name: i for i, name in enumerate(props)}
    if not {"x", "y"} <= cols.keys():
        raise ValueError("PLY vertex element lacks x/y properties")
    axes = ["x", "y", "z"] if "z" in cols else ["x", "y"]
    pts = data[:, [cols[a] for a in axes]]
    normals = None
    if {"nx", "ny"} <= cols.keys():
        naxes = ["nx", "ny", "nz"] if "nz" in cols else ["nx", "ny"]
        normals = data[:, [cols[a] for a in naxes]]
    return pts, normals


def write_ply(path, points: np.ndarray, normals: np.ndarray | None = None) -> None:
    points = np.asarray(points, dtype=np.float64)
    n, d = points.shape
    names = ["x", "y", "z"][:d]
    header = ["ply", "format ascii 1.0", f"element vertex {n}"]
    header += [f"property double {a}" for a in names]
    cols = [points]
    if normals is not None:
        header += [f"property double n{a}" for a in names]
        cols.append(np.asarray(normals, dtype=np.float64))
    header.append("end_header")
    with open(path, "w") as f:
        f.write("\n".join(header) + "\n")
        np.savetxt(f, np.hstack(cols), fmt=_FMT)


def write_grid(path_csv, grid: np.ndarray, extent: float) -> None:
    """Row-major grid CSV plus JSON sidecar (same stem, .json suffix)."""
    grid = np.asarray(grid)
    flat = grid.reshape(grid.shape[0], -1)
    np.savetxt(path_csv, flat, fmt=_FMT, delimiter=",")
    sidecar = Path(path_csv).with_suffix(".json")
    meta = {"extent": extent, "resolution": grid.shape[0],
            "dim": grid.ndim, "order": "row-major"}
    sidecar.write_text(json.dumps(meta, indent=2) + "\n")


def write_trace(path, trace) -> None:
    """CSV with columns iter, loss, wce, data_term, box_term, reg_term, seconds."""
    with open(path, "w") as f:
        f.write("iter,loss,wce,data_term,box_term,reg_term,seconds\n")
        for i, (loss, rep, sec) in enumerate(
                zip(trace.loss, trace.reports, trace.seconds)):
            f.write(f"{i},{loss:.17g},{rep.total:.17g},{rep.data_term:.17g},"
                    f"{rep.box_term:.17g},{rep.reg_term:.17g},{sec:.6g}\n")
