"""Iso-contour extraction of the grid-point density field."""
from __future__ import annotations

import numpy as np
from skimage.measure import find_contours

from .mesh import Mesh
from .projection import GridSpec


def lattice_coords(mesh: Mesh, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Grid-point coordinates along x and y, padded with the domain edges."""
    n = grid.n_per_axis
    h = mesh.element_size
    xs = (np.arange(mesh.nx * n) + 0.5) / n * h
    ys = (np.arange(mesh.ny * n) + 0.5) / n * h
    return (np.concatenate([[0.0], xs, [mesh.nx * h]]),
            np.concatenate([[0.0], ys, [mesh.ny * h]]))


def evaluate_nodal_field(mesh: Mesh, rho_n: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear interpolant of nodal values on the tensor grid ``ys x xs``."""
    h = mesh.element_size
    nodal = np.asarray(rho_n, dtype=float).reshape(mesh.ny + 1, mesh.nx + 1)
    i = np.clip(np.floor(xs / h).astype(int), 0, mesh.nx - 1)
    j = np.clip(np.floor(ys / h).astype(int), 0, mesh.ny - 1)
    tx = xs / h - i
    ty = ys / h - j
    a = nodal[np.ix_(j, i)]
    b = nodal[np.ix_(j, i + 1)]
    c = nodal[np.ix_(j + 1, i + 1)]
    d = nodal[np.ix_(j + 1, i)]
    tx = tx[None, :]
    ty = ty[:, None]
    return (1 - tx) * (1 - ty) * a + tx * (1 - ty) * b + tx * ty * c + (1 - tx) * ty * d


def extract_boundary(field: np.ndarray, psi: float, xs: np.ndarray, ys: np.ndarray) -> list[np.ndarray]:
    """Marching-squares contours of ``field`` (rows along ``ys``) at level ``psi``.

    Returns a list of (k, 2) arrays of (x, y) vertices. Closed loops repeat
    their first vertex; solid (``field > psi``) lies to the left of travel.
    """
    field = np.asarray(field, dtype=float)
    if field.size == 0 or field.max() <= psi or field.min() >= psi:
        return []
    polylines = []
    for c in find_contours(field, psi, positive_orientation="low"):
        x = np.interp(c[:, 1], np.arange(xs.size), xs)
        y = np.interp(c[:, 0], np.arange(ys.size), ys)
        polylines.append(np.stack([x, y], axis=1))
    return polylines


def design_boundary(mesh: Mesh, grid: GridSpec, rho_n: np.ndarray, psi: float,
                    passive_fn=None, rho_min: float = 0.001, close: bool = True) -> list[np.ndarray]:
    """Boundary of a design given nodal densities and the threshold.

    ``passive_fn(x, y) -> bool array`` marks points forced to void. With
    ``close`` the field is wrapped in a void ring of zero width so solid
    touching the domain edge yields closed loops running along the edge.
    """
    xs, ys = lattice_coords(mesh, grid)
    field = evaluate_nodal_field(mesh, rho_n, xs, ys)
    void = min(rho_min, psi) - 1.0
    if passive_fn is not None:
        X, Y = np.meshgrid(xs, ys)
        field = np.where(passive_fn(X, Y), min(rho_min, psi), field)
    if close:
        field = np.pad(field, 1, constant_values=void)
        xs = np.concatenate([xs[:1], xs, xs[-1:]])
        ys = np.concatenate([ys[:1], ys, ys[-1:]])
    return extract_boundary(field, psi, xs, ys)


def enclosed_area(polyline: np.ndarray) -> float:
    """Signed shoelace area; positive for counter-clockwise loops."""
    x, y = polyline[:, 0], polyline[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
