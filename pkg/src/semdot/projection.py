"""Grid-point densities, Heaviside projection and volume-matched thresholding.

Every element carries an ``n x n`` lattice of grid points at sub-cell
midpoints. Grid densities are bilinear interpolations of nodal densities,
projected to solid/void by a step or tanh threshold at ``psi``, and averaged
back into element volume fractions.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
from scipy.optimize import brentq

from .mesh import Mesh

Mode = Literal["step", "smooth"]


class UnreachableVolumeError(RuntimeError):
    """Raised when no threshold in [0, 1] brackets the target volume."""


@dataclass(frozen=True)
class GridSpec:
    n_per_axis: int = 10

    def __post_init__(self):
        if self.n_per_axis < 2:
            raise ValueError(f"need at least 2 grid points per axis, got {self.n_per_axis}")

    @property
    def n_points(self) -> int:
        return self.n_per_axis**2

    @property
    def local_coords(self) -> np.ndarray:
        """Midpoints of an ``n`` cell partition of [-1, 1]."""
        n = self.n_per_axis
        return -1.0 + (2.0 * np.arange(n) + 1.0) / n

    @property
    def shape_matrix(self) -> np.ndarray:
        """(N, 4) bilinear shape values; point ``g = b * n + a`` sits at (zeta_a, eta_b)."""
        s = self.local_coords
        eta, zeta = np.meshgrid(s, s, indexing="ij")
        zeta = zeta.ravel()
        eta = eta.ravel()
        return 0.25 * np.stack([
            (1 - zeta) * (1 - eta),
            (1 + zeta) * (1 - eta),
            (1 + zeta) * (1 + eta),
            (1 - zeta) * (1 + eta),
        ], axis=1)

    def point_coords(self, mesh: Mesh) -> np.ndarray:
        """(M, N, 2) global coordinates of every grid point."""
        h = mesh.element_size
        offs = (self.local_coords + 1.0) / 2.0 * h
        oy, ox = np.meshgrid(offs, offs, indexing="ij")
        corner = mesh.element_centers - 0.5 * h
        return np.stack([corner[:, None, 0] + ox.ravel()[None, :],
                         corner[:, None, 1] + oy.ravel()[None, :]], axis=2)


@dataclass(frozen=True)
class ProjectionState:
    beta: float = 0.5
    lam: float = 0.5
    psi: float = 0.5
    mode: Mode = "smooth"
    beta_cap: float = 5000.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not 0 <= self.psi <= 1:
            raise ValueError(f"psi must lie in [0, 1], got {self.psi}")
        if self.mode not in ("step", "smooth"):
            raise ValueError(f"unknown projection mode {self.mode!r}")


def interpolate_grid_densities(mesh: Mesh, grid: GridSpec, rho_n: np.ndarray) -> np.ndarray:
    """(M, N) grid densities from nodal densities by bilinear interpolation."""
    corner_vals = np.asarray(rho_n, dtype=float)[mesh.element_nodes]
    # convex weights; the clip only removes rounding above 1
    return np.clip(corner_vals @ grid.shape_matrix.T, 0.0, 1.0)


def heaviside_step(rho, psi: float, rho_min: float = 0.001):
    rho = np.asarray(rho, dtype=float)
    return np.where(rho > psi, 1.0, rho_min)


def heaviside_smooth(rho, psi: float, beta: float, rho_min: float = 0.001):
    """tanh threshold normalized so that rho=0 -> 0 and rho=1 -> 1, clamped to [rho_min, 1]."""
    rho = np.asarray(rho, dtype=float)
    tp = np.tanh(beta * psi)
    out = (tp + np.tanh(beta * (rho - psi))) / (tp + np.tanh(beta * (1.0 - psi)))
    return np.clip(out, rho_min, 1.0)


def project(rho, state: ProjectionState, rho_min: float = 0.001):
    if state.mode == "step":
        return heaviside_step(rho, state.psi, rho_min)
    return heaviside_smooth(rho, state.psi, state.beta, rho_min)


def update_beta(state: ProjectionState) -> ProjectionState:
    return replace(state, beta=min(state.beta + state.lam, state.beta_cap))


def bisect_threshold(raw: np.ndarray, target: float, state: ProjectionState,
                     passive: np.ndarray | None = None, rho_min: float = 0.001,
                     tol: float = 1e-6, allow_underfull: bool = False) -> tuple[float, np.ndarray]:
    """Find the threshold whose projected field has mean ``target``.

    ``passive`` is a boolean mask shaped like ``raw`` marking grid points that
    are forced to ``rho_min``; they are left out of the volume average.
    With ``allow_underfull`` a field too sparse to reach ``target`` even at
    ``psi = 0`` is projected at ``psi = 0`` instead of raising, which still
    satisfies the volume inequality. Returns ``(psi, projected)``.
    """
    if not 0 < target < 1:
        raise ValueError(f"target volume must lie in (0, 1), got {target}")
    active = None if passive is None or not passive.any() else ~passive
    if active is not None and not active.any():
        raise UnreachableVolumeError("every grid point is passive")

    pts = raw if active is None else raw[active]

    def volume(psi):
        return float(project(pts, replace(state, psi=psi), rho_min).mean())

    def finish(psi):
        proj = project(raw, replace(state, psi=psi), rho_min)
        if passive is not None:
            proj = np.where(passive, rho_min, proj)
        return psi, proj

    v_lo, v_hi = volume(0.0), volume(1.0)
    if v_lo < target - tol and allow_underfull and v_hi <= target + tol:
        return finish(0.0)
    if v_lo < target - tol or v_hi > target + tol:
        raise UnreachableVolumeError(
            f"target {target} outside attainable volume range [{v_hi:.6g}, {v_lo:.6g}]")
    best = [abs(v_lo - target), 0.0]
    if abs(v_hi - target) < best[0]:
        best = [abs(v_hi - target), 1.0]
    if best[0] <= tol:
        return finish(best[1])

    # volume is non-increasing in psi; a bracketing secant/bisection hybrid
    # needs far fewer projections than plain halving
    def excess(psi):
        v = volume(psi)
        if abs(v - target) <= best[0]:
            best[:] = [abs(v - target), psi]
        return v - target if abs(v - target) > tol else 0.0

    brentq(excess, 0.0, 1.0, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=200)
    return finish(best[1])


def recompose_volume_fractions(projected: np.ndarray, xtilde: np.ndarray | None = None):
    """Element volume fractions as grid means; also the deviation from ``xtilde``."""
    xnew = projected.mean(axis=1)
    delta = None if xtilde is None else xnew - xtilde
    return xnew, delta


def boundary_error(projected: np.ndarray, rho_min: float = 0.001) -> float:
    """Fraction of elements that are intermediate throughout (no solid nor void point)."""
    intermediate = (projected.max(axis=1) < 1.0) & (projected.min(axis=1) > rho_min)
    return float(intermediate.sum() / projected.shape[0])
