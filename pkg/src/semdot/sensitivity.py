"""Objective and volume gradients with respect to element volume fractions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import FeaResult, MaterialModel, Mesh, element_energies, element_stiffness_q4


class MissingDummySolveError(ValueError):
    pass


@dataclass(frozen=True)
class SensitivityField:
    dC_dX: np.ndarray
    dV_dX: np.ndarray | None = None


def compliance_sensitivity(xnew: np.ndarray, fea: FeaResult, material: MaterialModel,
                           mesh: Mesh, ke: np.ndarray | None = None) -> np.ndarray:
    """``-p [(1-X) rho_min^(p-1) + X] u_e^T K_e u_e`` for every element."""
    ke = element_stiffness_q4(material) if ke is None else ke
    return -material.sensitivity_factor(xnew) * element_energies(mesh, ke, fea.u, fea.u)


def mechanism_sensitivity(xnew: np.ndarray, fea: FeaResult, material: MaterialModel,
                          mesh: Mesh, ke: np.ndarray | None = None) -> np.ndarray:
    """``p [(1-X) rho_min^(p-1) + X] u~_e^T K_e u_e``; entries may take either sign."""
    if fea.u_tilde is None:
        raise MissingDummySolveError("mechanism sensitivity needs the dummy-load displacement")
    ke = element_stiffness_q4(material) if ke is None else ke
    return material.sensitivity_factor(xnew) * element_energies(mesh, ke, fea.u_tilde, fea.u)


def volume_sensitivity(mesh: Mesh, active: np.ndarray | None = None) -> np.ndarray:
    """``V_e / sum(V_e)`` over the elements that count toward the volume."""
    v = mesh.element_volumes.copy()
    if active is not None:
        v = np.where(active, v, 0.0)
    return v / v.sum()
