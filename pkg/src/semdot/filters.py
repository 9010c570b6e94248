"""Linear-weight density filter and the element-to-node heuristic filter."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh


@dataclass(frozen=True)
class FilterSpec:
    r_min: float = 2.0
    upsilon_min: float = 1.0

    def __post_init__(self):
        if not self.r_min >= 1:
            raise ValueError(f"r_min must be >= 1 element width, got {self.r_min}")
        if not self.upsilon_min >= 1:
            raise ValueError(f"upsilon_min must be >= 1 element width, got {self.upsilon_min}")


def _cone_weights(targets: np.ndarray, sources_ij: tuple[np.ndarray, np.ndarray],
                  target_xy: np.ndarray, source_shape: tuple[int, int], offset: float,
                  radius: float) -> sp.csr_matrix:
    """Sparse ``max(0, radius - dist)`` weights from targets to element centers.

    Elements are addressed on their (nx, ny) lattice with centers at
    ``index + offset``; only lattice cells within ``radius`` are visited.
    """
    nx, ny = source_shape
    reach = int(np.ceil(radius)) + 1
    rows, cols, vals = [], [], []
    ti, tj = sources_ij
    for di in range(-reach, reach + 1):
        for dj in range(-reach, reach + 1):
            i = ti + di
            j = tj + dj
            ok = (i >= 0) & (i < nx) & (j >= 0) & (j < ny)
            if not ok.any():
                continue
            d = np.hypot(i[ok] + offset - target_xy[ok, 0], j[ok] + offset - target_xy[ok, 1])
            w = radius - d
            pos = w > 0
            rows.append(targets[ok][pos])
            cols.append((j[ok] * nx + i[ok])[pos])
            vals.append(w[pos])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    return sp.csr_matrix((vals, (rows, cols)), shape=(targets.size, nx * ny))


class FilterOperator:
    """Precomputed element and nodal filter weights for one mesh.

    ``W_el`` holds raw element-to-element weights and ``W_ne`` node-to-element
    weights; ``H`` and ``H_node`` are their row-normalized forms. Boundary rows
    renormalize over whatever neighbours exist.
    """

    def __init__(self, mesh: Mesh, spec: FilterSpec):
        self.mesh = mesh
        self.spec = spec
        nx, ny = mesh.nx, mesh.ny
        ej, ei = np.divmod(np.arange(mesh.n_elements), nx)
        centers = np.stack([ei + 0.5, ej + 0.5], axis=1)
        self.W_el = _cone_weights(np.arange(mesh.n_elements), (ei, ej), centers, (nx, ny),
                                  0.5, spec.r_min)
        nj, ni = np.divmod(np.arange(mesh.n_nodes), nx + 1)
        nodes = np.stack([ni, nj], axis=1).astype(float)
        # Closest elements to a node sit at index (ni - 1, nj - 1) .. (ni, nj).
        self.W_ne = _cone_weights(np.arange(mesh.n_nodes), (ni, nj), nodes, (nx, ny),
                                  0.5, spec.upsilon_min)
        self.el_sums = np.asarray(self.W_el.sum(axis=1)).ravel()
        self.node_sums = np.asarray(self.W_ne.sum(axis=1)).ravel()
        self.H = sp.diags(1.0 / self.el_sums) @ self.W_el
        self.H_node = sp.diags(1.0 / self.node_sums) @ self.W_ne
        self.H = self.H.tocsr()
        self.H_node = self.H_node.tocsr()
        self._HT = self.H.T.tocsr()


def build_filter(mesh: Mesh, spec: FilterSpec) -> FilterOperator:
    return FilterOperator(mesh, spec)


def apply_filter(op: FilterOperator, x: np.ndarray) -> np.ndarray:
    """Weighted average of element values over the ``r_min`` neighbourhood."""
    return op.H @ np.asarray(x, dtype=float)


def backproject_sensitivities(op: FilterOperator, dc_dxtilde: np.ndarray) -> np.ndarray:
    """Chain rule through the density filter (transpose of the normalized weights)."""
    return op._HT @ np.asarray(dc_dxtilde, dtype=float)


def nodal_densities(op: FilterOperator, xtilde: np.ndarray) -> np.ndarray:
    return op.H_node @ np.asarray(xtilde, dtype=float)
