"""Structured quad mesh, plane-stress Q4 stiffness and equilibrium solves.

Numbering is row-major with x running fastest and the origin at the
bottom-left corner. Node ``(i, j)`` has index ``j * (nx + 1) + i`` and owns
DOFs ``2n`` (x) and ``2n + 1`` (y). Element ``(i, j)`` has index
``j * nx + i`` and connects its nodes counter-clockwise starting at the
bottom-left corner.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)


class SingularSystemError(RuntimeError):
    """Raised when supports and springs cannot suppress rigid-body motion."""


class SolverError(RuntimeError):
    """Raised when the iterative solver stalls before reaching tolerance."""


@dataclass(frozen=True)
class Mesh:
    nx: int
    ny: int
    element_size: float = 1.0

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"mesh needs at least one element per axis, got {self.nx}x{self.ny}")

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    @property
    def n_elements(self) -> int:
        return self.nx * self.ny

    @property
    def n_dofs(self) -> int:
        return 2 * self.n_nodes

    @property
    def element_volumes(self) -> np.ndarray:
        return np.full(self.n_elements, self.element_size**2)

    def node_id(self, i, j):
        return np.asarray(j) * (self.nx + 1) + np.asarray(i)

    def element_id(self, i, j):
        return np.asarray(j) * self.nx + np.asarray(i)

    @cached_property
    def element_nodes(self) -> np.ndarray:
        """(M, 4) node indices, counter-clockwise from bottom-left."""
        j, i = np.divmod(np.arange(self.n_elements), self.nx)
        n0 = j * (self.nx + 1) + i
        return np.stack([n0, n0 + 1, n0 + self.nx + 2, n0 + self.nx + 1], axis=1)

    @cached_property
    def element_dofs(self) -> np.ndarray:
        """(M, 8) DOF indices in the x/y-interleaved node order."""
        nodes = self.element_nodes
        return np.stack([2 * nodes, 2 * nodes + 1], axis=2).reshape(-1, 8)

    @cached_property
    def node_coords(self) -> np.ndarray:
        j, i = np.divmod(np.arange(self.n_nodes), self.nx + 1)
        return np.stack([i, j], axis=1) * self.element_size

    @cached_property
    def element_centers(self) -> np.ndarray:
        j, i = np.divmod(np.arange(self.n_elements), self.nx)
        return (np.stack([i, j], axis=1) + 0.5) * self.element_size

    def nearest_node(self, x: float, y: float) -> int:
        i = int(np.clip(round(x / self.element_size), 0, self.nx))
        j = int(np.clip(round(y / self.element_size), 0, self.ny))
        return int(self.node_id(i, j))

    def field_as_grid(self, values: np.ndarray) -> np.ndarray:
        """Element values as a (ny, nx) array, row 0 at the bottom."""
        return np.asarray(values).reshape(self.ny, self.nx)


@dataclass(frozen=True)
class MaterialModel:
    E1: float = 1.0
    nu: float = 0.3
    p: float = 1.5
    rho_min: float = 0.001

    def __post_init__(self):
        if not self.E1 > 0:
            raise ValueError(f"E1 must be positive, got {self.E1}")
        if not 0 < self.nu < 0.5:
            raise ValueError(f"nu must lie in (0, 0.5), got {self.nu}")
        if not self.p >= 1:
            raise ValueError(f"penalty p must be >= 1, got {self.p}")
        if not 0 < self.rho_min < 1:
            raise ValueError(f"rho_min must lie in (0, 1), got {self.rho_min}")

    def stiffness_factor(self, x: np.ndarray) -> np.ndarray:
        """Linear blend of void and solid stiffness, ``(1-x) rho_min^p + x``."""
        x = np.asarray(x, dtype=float)
        return (1.0 - x) * self.rho_min**self.p + x

    def sensitivity_factor(self, x: np.ndarray) -> np.ndarray:
        """``p [(1-x) rho_min^(p-1) + x]``, the blended endpoint derivative."""
        x = np.asarray(x, dtype=float)
        return self.p * ((1.0 - x) * self.rho_min ** (self.p - 1.0) + x)


@dataclass(frozen=True)
class LoadCase:
    """Forces, supports, grounded springs and (for mechanisms) the output selector.

    ``forces`` and ``output`` map DOF index to value; ``springs`` maps DOF
    index to a stiffness added on the diagonal.
    """

    forces: dict[int, float]
    fixed_dofs: tuple[int, ...]
    springs: dict[int, float] = field(default_factory=dict)
    output: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if any(k < 0 for k in self.springs.values()):
            raise ValueError("spring stiffness must be non-negative")
        if self.output:
            if len(self.output) != 1 or abs(abs(next(iter(self.output.values()))) - 1.0) > 1e-15:
                raise ValueError("output selector must have exactly one unit entry")

    @property
    def is_mechanism(self) -> bool:
        return bool(self.output)

    def validate(self, n_dofs: int):
        dofs = list(self.forces) + list(self.fixed_dofs) + list(self.springs) + list(self.output)
        bad = [d for d in dofs if not 0 <= d < n_dofs]
        if bad:
            raise ValueError(f"DOFs {bad} outside mesh range [0, {n_dofs})")

    def force_vector(self, n_dofs: int) -> np.ndarray:
        f = np.zeros(n_dofs)
        for dof, value in self.forces.items():
            f[dof] += value
        return f

    def output_vector(self, n_dofs: int) -> np.ndarray:
        L = np.zeros(n_dofs)
        for dof, value in self.output.items():
            L[dof] = value
        return L


@dataclass(frozen=True)
class FeaResult:
    u: np.ndarray
    objective: float
    u_tilde: np.ndarray | None = None


def element_stiffness_q4(material: MaterialModel) -> np.ndarray:
    """Closed-form plane-stress stiffness of a unit square bilinear element.

    Node order is counter-clockwise from the bottom-left corner with DOFs
    interleaved (x0, y0, x1, y1, ...). Thickness is one.
    """
    nu = material.nu
    k = np.array([
        1 / 2 - nu / 6, 1 / 8 + nu / 8, -1 / 4 - nu / 12, -1 / 8 + 3 * nu / 8,
        -1 / 4 + nu / 12, -1 / 8 - nu / 8, nu / 6, 1 / 8 - 3 * nu / 8,
    ])
    idx = np.array([
        [0, 1, 2, 3, 4, 5, 6, 7],
        [1, 0, 7, 6, 5, 4, 3, 2],
        [2, 7, 0, 5, 6, 3, 4, 1],
        [3, 6, 5, 0, 7, 2, 1, 4],
        [4, 5, 6, 7, 0, 1, 2, 3],
        [5, 4, 3, 2, 1, 0, 7, 6],
        [6, 3, 4, 1, 2, 7, 0, 5],
        [7, 2, 1, 4, 3, 6, 5, 0],
    ])
    return material.E1 / (1 - nu**2) * k[idx]


class StiffnessAssembler:
    """Reusable sparse assembly for one mesh, material and load case.

    The CSR sparsity pattern of the reduced (free-DOF) matrix and the map
    from element-matrix entries to CSR slots are built once, so repeated
    assembly only scales element matrices and sums them.
    """

    def __init__(self, mesh: Mesh, material: MaterialModel, loads: LoadCase):
        loads.validate(mesh.n_dofs)
        self.mesh = mesh
        self.material = material
        self.loads = loads
        self.ke = element_stiffness_q4(material)
        ndof = mesh.n_dofs
        fixed = np.unique(np.asarray(loads.fixed_dofs, dtype=np.int64))
        free_mask = np.ones(ndof, dtype=bool)
        free_mask[fixed] = False
        self.free = np.flatnonzero(free_mask)
        self.fixed = fixed
        reduced = -np.ones(ndof, dtype=np.int64)
        reduced[self.free] = np.arange(self.free.size)

        edofs = mesh.element_dofs
        rows = reduced[np.repeat(edofs, 8, axis=1)].ravel()
        cols = reduced[np.tile(edofs, (1, 8))].ravel()
        keep = (rows >= 0) & (cols >= 0)
        self._keep = keep
        nfree = self.free.size
        spring_dofs = np.array([d for d in loads.springs if reduced[d] >= 0], dtype=np.int64)
        self._spring_rows = reduced[spring_dofs]
        self._spring_k = np.array([loads.springs[d] for d in spring_dofs], dtype=float)
        r = np.concatenate([rows[keep], self._spring_rows])
        c = np.concatenate([cols[keep], self._spring_rows])
        # Linear keys give the CSR slot of every contribution.
        keys = r * nfree + c
        uniq, self._slot = np.unique(keys, return_inverse=True)
        self._indptr = np.searchsorted(uniq // nfree, np.arange(nfree + 1)).astype(np.int64)
        self._indices = (uniq % nfree).astype(np.int64)
        self._nnz = uniq.size
        self.n_free = nfree

    def assemble(self, xnew: np.ndarray) -> sp.csr_matrix:
        """Reduced global stiffness for element volume fractions ``xnew``."""
        factor = self.material.stiffness_factor(xnew)
        vals = (factor[:, None] * self.ke.ravel()[None, :]).ravel()[self._keep]
        vals = np.concatenate([vals, self._spring_k])
        data = np.bincount(self._slot, weights=vals, minlength=self._nnz)
        K = sp.csr_matrix((data, self._indices, self._indptr), shape=(self.n_free, self.n_free))
        if K.shape[0] == 0:
            raise SingularSystemError("every DOF is fixed")
        return K


def assemble_stiffness(mesh: Mesh, material: MaterialModel, xnew: np.ndarray,
                       loads: LoadCase) -> tuple[sp.csr_matrix, np.ndarray]:
    """Assemble the reduced stiffness matrix; returns it with the free DOF list."""
    if not loads.fixed_dofs and not loads.springs:
        raise SingularSystemError("no supports or springs: rigid-body modes are unrestrained")
    asm = StiffnessAssembler(mesh, material, loads)
    return asm.assemble(xnew), asm.free


def _relative_residual(K, u, b) -> float:
    bnorm = np.linalg.norm(b)
    return 0.0 if bnorm == 0 else float(np.linalg.norm(K @ u - b) / bnorm)


def _have_cholmod() -> bool:
    try:
        import sksparse.cholmod  # noqa: F401
    except ImportError:
        return False
    return True


def _rigid_body_modes(mesh: Mesh, free: np.ndarray) -> np.ndarray:
    xy = mesh.node_coords
    B = np.zeros((mesh.n_dofs, 3))
    B[0::2, 0] = 1.0
    B[1::2, 1] = 1.0
    B[0::2, 2] = -xy[:, 1]
    B[1::2, 2] = xy[:, 0]
    return B[free]


class EquilibriumSolver:
    """Solves ``K u = f`` (and ``K u~ = L`` for mechanisms) on one mesh.

    ``method`` selects the linear solver: ``"cholmod"`` (sparse Cholesky with
    the symbolic analysis reused across calls), ``"superlu"``, ``"pcg"``
    (conjugate gradients, smoothed-aggregation preconditioner) or ``"auto"``
    (CHOLMOD when scikit-sparse is importable, SuperLU otherwise).
    """

    def __init__(self, mesh: Mesh, material: MaterialModel, loads: LoadCase,
                 method: str = "auto", rtol: float = 1e-8):
        if not loads.fixed_dofs and not loads.springs:
            raise SingularSystemError("no supports or springs: rigid-body modes are unrestrained")
        if method == "auto":
            method = "cholmod" if _have_cholmod() else "superlu"
        if method not in ("cholmod", "superlu", "pcg"):
            raise ValueError(f"unknown solver method {method!r}")
        self.assembler = StiffnessAssembler(mesh, material, loads)
        self.mesh = mesh
        self.loads = loads
        self.rtol = rtol
        self.method = method
        self.f = loads.force_vector(mesh.n_dofs)
        self.L = loads.output_vector(mesh.n_dofs) if loads.is_mechanism else None
        self._symbolic = None

    def _solve_reduced(self, K: sp.csr_matrix, rhs: np.ndarray) -> np.ndarray:
        if not np.any(rhs):
            return np.zeros_like(rhs)
        if self.method == "cholmod":
            from sksparse.cholmod import CholmodNotPositiveDefiniteError, analyze

            Kc = K.tocsc()
            if self._symbolic is None:
                self._symbolic = analyze(Kc)
            try:
                self._symbolic.cholesky_inplace(Kc)
            except CholmodNotPositiveDefiniteError as exc:
                raise SingularSystemError(f"stiffness matrix is not positive definite: {exc}") from exc
            sol = self._symbolic(rhs)
        elif self.method == "superlu":
            sol = spla.splu(K.tocsc(), permc_spec="MMD_AT_PLUS_A").solve(rhs)
        else:
            import pyamg

            ml = pyamg.smoothed_aggregation_solver(
                K, B=_rigid_body_modes(self.mesh, self.assembler.free), symmetry="hermitian")
            M = ml.aspreconditioner(cycle="V")
            maxiter = 10 * K.shape[0]
            cols = []
            for b in np.atleast_2d(rhs.T):
                if not np.any(b):
                    cols.append(np.zeros_like(b))
                    continue
                u, info = spla.cg(K, b, rtol=self.rtol, maxiter=maxiter, M=M)
                if info != 0:
                    raise SolverError(
                        f"PCG stopped after {maxiter} iterations, residual {_relative_residual(K, u, b):.3e}")
                cols.append(u)
            sol = np.stack(cols, axis=1) if rhs.ndim == 2 else cols[0]
        sol = np.asarray(sol).reshape(rhs.shape)
        res = _relative_residual(K, sol, rhs) if rhs.ndim == 1 else max(
            _relative_residual(K, sol[:, c], rhs[:, c]) for c in range(rhs.shape[1]))
        if not np.isfinite(res) or res > 10 * self.rtol:
            raise SolverError(f"linear solve failed, relative residual {res:.3e}")
        return sol

    def solve(self, xnew: np.ndarray, mechanism: bool | None = None) -> FeaResult:
        mechanism = self.loads.is_mechanism if mechanism is None else mechanism
        if mechanism and self.L is None:
            raise ValueError("mechanism solve requested without an output selector")
        K = self.assembler.assemble(xnew)
        free = self.assembler.free
        ndof = self.mesh.n_dofs
        u = np.zeros(ndof)
        if mechanism:
            ut = np.zeros(ndof)
            sol = self._solve_reduced(K, np.stack([self.f[free], self.L[free]], axis=1))
            u[free] = sol[:, 0]
            ut[free] = sol[:, 1]
            # objective -L.u; the dummy field solves K u~ = L so dC/dx = u~^T dK u
            return FeaResult(u=u, objective=float(-self.L @ u), u_tilde=ut)
        u[free] = self._solve_reduced(K, self.f[free])
        return FeaResult(u=u, objective=float(self.f @ u))


def solve_equilibrium(mesh: Mesh, material: MaterialModel, loads: LoadCase,
                      xnew: np.ndarray, mechanism: bool | None = None,
                      method: str = "auto") -> FeaResult:
    """One-shot assemble and solve; see :class:`EquilibriumSolver`."""
    return EquilibriumSolver(mesh, material, loads, method=method).solve(xnew, mechanism)


def element_energies(mesh: Mesh, ke: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-element bilinear form ``a_e^T K_e b_e`` for global vectors a, b."""
    ae = a[mesh.element_dofs]
    be = b[mesh.element_dofs]
    return np.einsum("ei,ij,ej->e", ae, ke, be)
