"""File outputs: iteration history, element fields and boundary drawings."""
from __future__ import annotations

import csv
import json
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np

from .contour import enclosed_area
from .mesh import Mesh
from .optimize import RunHistory

HISTORY_COLUMNS = ("iter", "objective", "volume", "alteration", "boundary_error", "beta", "psi",
                   "wall_ms")


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if v == 0.0 or not np.isfinite(v):
        return f"{v:.5f}"
    v = float(f"{v:.5e}")
    exp = int(np.floor(np.log10(abs(v))))
    return f"{v:.{max(0, 5 - exp)}f}"


def write_history(history: RunHistory, path) -> Path:
    """CSV with one row per iteration, floats to 6 significant digits."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HISTORY_COLUMNS)
        for rec in history.records:
            w.writerow([_fmt(getattr(rec, c)) for c in HISTORY_COLUMNS])
    return path


def read_history(path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {c: np.array([float(r[c]) for r in rows]) for c in HISTORY_COLUMNS}


def _as_grid(values, mesh: Mesh) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != (mesh.n_elements,):
        raise ValueError(f"expected {mesh.n_elements} element values, got shape {values.shape}")
    return values.reshape(mesh.ny, mesh.nx)


def write_design_field(values, mesh: Mesh, path, fmt: str | None = None) -> Path:
    """Write one value per element as ``txt`` (top row first) or ``vti`` (VTK image data).

    Values are written with ``repr`` precision so reading back is exact.
    """
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".")
    grid = _as_grid(values, mesh)
    if fmt == "txt":
        lines = [" ".join(_exact(v) for v in row) for row in grid[::-1]]
        path.write_text("\n".join(lines) + "\n")
    elif fmt == "vti":
        _write_vti(grid, mesh, path)
    else:
        raise ValueError(f"unknown design field format {fmt!r}; use 'txt' or 'vti'")
    return path


def _exact(v: float) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


def read_design_field(path, fmt: str | None = None) -> np.ndarray:
    """Element values in mesh order (row-major from the bottom-left)."""
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".")
    if fmt == "txt":
        rows = [[float(t) for t in line.split()] for line in path.read_text().splitlines() if line.strip()]
        return np.array(rows[::-1]).ravel()
    if fmt == "vti":
        root = ET.parse(path).getroot()
        arr = root.find("./ImageData/Piece/CellData/DataArray")
        return np.array([float(t) for t in arr.text.split()])
    raise ValueError(f"unknown design field format {fmt!r}; use 'txt' or 'vti'")


def _write_vti(grid: np.ndarray, mesh: Mesh, path: Path):
    h = mesh.element_size
    extent = f"0 {mesh.nx} 0 {mesh.ny} 0 0"
    root = ET.Element("VTKFile", type="ImageData", version="0.1", byte_order="LittleEndian")
    img = ET.SubElement(root, "ImageData", WholeExtent=extent, Origin="0 0 0",
                        Spacing=f"{h!r} {h!r} 1")
    piece = ET.SubElement(img, "Piece", Extent=extent)
    cells = ET.SubElement(piece, "CellData", Scalars="density")
    arr = ET.SubElement(cells, "DataArray", type="Float64", Name="density", format="ascii")
    arr.text = " ".join(repr(float(v)) for v in grid.ravel())
    ET.ElementTree(root).write(path, xml_declaration=True, encoding="utf-8")


def write_boundary_svg(polylines, mesh: Mesh, path, spacing: float = 0.1) -> Path:
    """Draw contour polylines, one path each.

    Closed loops are filled with the even-odd rule; counter-clockwise loops
    (solid on the left) in black, clockwise ones (holes) in white, largest
    first so holes paint over their enclosing solid. ``spacing`` is the
    grid-point spacing and sets the stroke width. The y axis is flipped so
    the drawing matches the domain orientation.
    """
    path = Path(path)
    h = mesh.element_size
    width, height = mesh.nx * h, mesh.ny * h
    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", version="1.1",
                     viewBox=f"0 0 {width:g} {height:g}", width=f"{10 * width:g}",
                     height=f"{10 * height:g}")
    closed, open_ = [], []
    for line in polylines:
        line = np.asarray(line, dtype=float)
        if len(line) < 2:
            continue
        pts = " L ".join(f"{x:.6g} {height - y:.6g}" for x, y in line)
        if len(line) > 2 and np.allclose(line[0], line[-1]):
            closed.append((enclosed_area(line), f"M {pts} Z"))
        else:
            open_.append(f"M {pts}")
    style = dict(stroke="black", **{"stroke-width": f"{spacing * h:g}"})
    for area, d in sorted(closed, key=lambda t: -abs(t[0])):
        ET.SubElement(svg, "path", d=d, fill="black" if area > 0 else "white",
                      **{"fill-rule": "evenodd"}, **style)
    for d in open_:
        ET.SubElement(svg, "path", d=d, fill="none", **style)
    ET.ElementTree(svg).write(path, xml_declaration=True, encoding="utf-8")
    return path


def write_json(data: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")
