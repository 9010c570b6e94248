"""The SEMDOT iteration loop, its convergence tests and the SIMP-D baseline."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .contour import design_boundary
from .filters import FilterOperator, FilterSpec, apply_filter, backproject_sensitivities, nodal_densities
from .mesh import EquilibriumSolver, MaterialModel, element_stiffness_q4
from .optimizers import MmaState, mma_update, oc_update
from .problems import ProblemDefinition
from .projection import (GridSpec, ProjectionState, bisect_threshold, boundary_error,
                         interpolate_grid_densities, recompose_volume_fractions, update_beta)
from .sensitivity import compliance_sensitivity, mechanism_sensitivity, volume_sensitivity

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConvergenceSpec:
    tau: float = 0.001
    epsilon: float = 0.001
    max_iter: int = 300
    min_iter: int = 10

    def __post_init__(self):
        if not self.tau > 0 or not self.epsilon > 0:
            raise ValueError("tau and epsilon must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class SemdotParams:
    r_min: float = 2.0
    upsilon_min: float = 1.0
    n_grid: int = 10
    beta0: float = 0.5
    lam: float = 0.5
    beta_cap: float = 5000.0
    p: float = 1.5
    rho_min: float = 0.001
    E1: float = 1.0
    nu: float = 0.3
    tau: float = 0.001
    epsilon: float = 0.001
    max_iter: int = 300
    min_iter: int = 10
    mode: Literal["step", "smooth"] = "smooth"
    optimizer: Literal["mma", "oc"] = "mma"
    solver: str = "auto"

    def __post_init__(self):
        FilterSpec(self.r_min, self.upsilon_min)
        GridSpec(self.n_grid)
        MaterialModel(self.E1, self.nu, self.p, self.rho_min)
        ConvergenceSpec(self.tau, self.epsilon, self.max_iter, self.min_iter)
        ProjectionState(beta=self.beta0, lam=self.lam, mode=self.mode, beta_cap=self.beta_cap)
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.optimizer not in ("mma", "oc"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    @property
    def material(self) -> MaterialModel:
        return MaterialModel(self.E1, self.nu, self.p, self.rho_min)

    @property
    def convergence(self) -> ConvergenceSpec:
        return ConvergenceSpec(self.tau, self.epsilon, self.max_iter, self.min_iter)


@dataclass
class IterationRecord:
    iter: int
    objective: float
    volume: float
    alteration: float
    boundary_error: float
    beta: float
    psi: float
    wall_ms: float


@dataclass
class RunHistory:
    records: list[IterationRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def append(self, rec: IterationRecord):
        self.records.append(rec)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


@dataclass
class RunResult:
    problem: ProblemDefinition
    params: SemdotParams
    history: RunHistory
    converged: bool
    objective: float
    x: np.ndarray
    xtilde: np.ndarray
    xnew: np.ndarray
    delta: np.ndarray | None = None
    rho_n: np.ndarray | None = None
    grid: np.ndarray | None = None
    psi: float = 0.5
    boundary: list = field(default_factory=list)
    u: np.ndarray | None = None
    error: str | None = None

    @property
    def iterations(self) -> int:
        return len(self.history)


def topological_alteration(x_new: np.ndarray, x_old: np.ndarray) -> float:
    """Total absolute change relative to the total of the newer field."""
    return float(np.abs(x_new - x_old).sum() / x_new.sum())


def check_convergence(x_k: np.ndarray, x_prev: np.ndarray, spec: ConvergenceSpec,
                      mode: str, berr: float = 0.0, iteration: int | None = None) -> bool:
    """Stopping test on consecutive projected fields.

    Step mode needs only the alteration below ``tau``; smooth mode also needs
    the boundary error ``berr`` below ``epsilon``. Nothing converges before
    ``spec.min_iter`` iterations when ``iteration`` is given.
    """
    if iteration is not None and iteration < spec.min_iter:
        return False
    ok = topological_alteration(x_k, x_prev) <= spec.tau
    if mode == "smooth":
        ok = ok and berr <= spec.epsilon
    return ok


def mirror(values: np.ndarray, nx: int, ny: int) -> np.ndarray:
    """Average element values with their mirror image about x = nx / 2."""
    g = values.reshape(ny, nx)
    return (0.5 * (g + g[:, ::-1])).ravel()


class _PassiveLayout:
    """Grid-point passive masks and per-element fractions.

    ``points`` marks every passive grid point; ``active_fraction`` is the
    share of an element's points that are free and ``hard_fraction`` the
    share inside hard-void shapes.
    """

    def __init__(self, problem: ProblemDefinition, grid: GridSpec):
        mesh = problem.mesh
        self.fn = problem.passive_fn()
        self.points = None
        self.active_fraction = np.ones(mesh.n_elements)
        self.hard_fraction = np.zeros(mesh.n_elements)
        if self.fn is None:
            return
        xy = grid.point_coords(mesh)
        self.points = self.fn(xy[..., 0], xy[..., 1])
        self.active_fraction = 1.0 - self.points.mean(axis=1)
        hard = problem.passive_fn(hard=True)
        if hard is not None:
            self.hard_fraction = hard(xy[..., 0], xy[..., 1]).mean(axis=1)

    @property
    def hard_elements(self) -> np.ndarray:
        return self.hard_fraction >= 1.0


def run_semdot(problem: ProblemDefinition, params: SemdotParams | None = None,
               callback=None) -> RunResult:
    """Optimize ``problem`` with grid-point projection of filtered volume fractions.

    ``callback(k, record)`` is invoked after every iteration. Module errors
    are caught and reported through ``RunResult.error`` with the partial
    history attached.
    """
    params = params or SemdotParams()
    mesh = problem.mesh
    material = params.material
    conv = params.convergence
    grid = GridSpec(params.n_grid)
    layout = _PassiveLayout(problem, grid)
    passive_pts = layout.points
    filt = FilterOperator(mesh, FilterSpec(params.r_min, params.upsilon_min))
    solver = EquilibriumSolver(mesh, material, problem.loads, method=params.solver)
    ke = element_stiffness_q4(material)
    # raw X pays for volume everywhere except in hard-void cells
    design = 1.0 - layout.hard_fraction
    dv = volume_sensitivity(mesh) * design
    dv /= dv.sum()
    hard = layout.hard_elements
    vstar = problem.volfrac
    mechanism = problem.kind == "mechanism"
    sym = problem.symmetry == "vertical"

    x = np.where(hard, material.rho_min, vstar)
    xtilde = apply_filter(filt, x)
    xnew = vstar * layout.active_fraction + material.rho_min * (1 - layout.active_fraction)
    state = ProjectionState(beta=params.beta0, lam=params.lam, mode=params.mode,
                            beta_cap=params.beta_cap)
    mma = MmaState(xmin=material.rho_min, xmax=1.0)
    history = RunHistory()
    converged = False
    delta = None
    rho_n = None
    proj = None
    fea = None
    error = None
    scale = None

    try:
        for k in range(1, conv.max_iter + 1):
            t0 = time.perf_counter()
            fea = solver.solve(xnew)
            if mechanism:
                dc = mechanism_sensitivity(xnew, fea, material, mesh, ke)
            else:
                dc = compliance_sensitivity(xnew, fea, material, mesh, ke)
            # hard-void cells are not design variables
            dc = backproject_sensitivities(filt, dc * design)
            if sym:
                dc = mirror(dc, mesh.nx, mesh.ny)
            if params.optimizer == "mma":
                # MMA's constraint penalty c assumes an O(1) objective
                if scale is None:
                    scale = 1.0 / abs(fea.objective) if fea.objective else 1.0
                x = mma_update(x, dc * scale, dv, vstar, mma)
            else:
                x = oc_update(x, np.minimum(dc, 0.0), dv, vstar, xmin=material.rho_min)
            if sym:
                x = mirror(x, mesh.nx, mesh.ny)
            x[hard] = material.rho_min
            xtilde = apply_filter(filt, x)
            rho_n = nodal_densities(filt, xtilde)
            raw = interpolate_grid_densities(mesh, grid, rho_n)
            if params.mode == "smooth":
                state = update_beta(state)
            psi, proj = bisect_threshold(raw, vstar, state, passive_pts, material.rho_min,
                                         allow_underfull=True)
            state = replace(state, psi=psi)
            xold = xnew
            xnew, delta = recompose_volume_fractions(proj, xtilde)
            berr = boundary_error(proj, material.rho_min)
            alteration = topological_alteration(xnew, xold)
            vol = float(proj.mean() if passive_pts is None else proj[~passive_pts].mean())
            rec = IterationRecord(k, fea.objective, vol, alteration, berr, state.beta, psi,
                                  1000.0 * (time.perf_counter() - t0))
            history.append(rec)
            log.info("it %3d  C=%.6g  vol=%.4f  alt=%.5f  berr=%.5f  beta=%.1f  psi=%.4f",
                     k, rec.objective, vol, alteration, berr, state.beta, psi)
            if callback is not None:
                callback(k, rec)
            if check_convergence(xnew, xold, conv, params.mode, berr, iteration=k):
                converged = True
                break
        fea = solver.solve(xnew)
    except Exception as exc:  # partial history is still useful
        log.exception("SEMDOT run failed")
        error = f"{type(exc).__name__}: {exc}"

    boundary = []
    if rho_n is not None and error is None:
        boundary = design_boundary(mesh, grid, rho_n, state.psi, layout.fn, material.rho_min)
    return RunResult(problem=problem, params=params, history=history, converged=converged,
                     objective=fea.objective if fea is not None else float("nan"),
                     x=x, xtilde=xtilde, xnew=xnew, delta=delta, rho_n=rho_n, grid=proj,
                     psi=state.psi, boundary=boundary, u=None if fea is None else fea.u,
                     error=error)


def run_simp_baseline(problem: ProblemDefinition, params: SemdotParams | None = None,
                      p: float = 3.0, optimizer: str = "oc") -> RunResult:
    """Density-filtered SIMP with ``E = x^p E1``; no grid projection.

    Stops when the relative total change of the filtered densities drops
    below ``tau`` (after ``min_iter``) or at ``max_iter``.
    """
    params = params or SemdotParams()
    if problem.kind != "compliance":
        raise ValueError("the SIMP baseline handles compliance problems only")
    mesh = problem.mesh
    # Pure power law: with X = x^p the stiffness factor (1-X) rho_min^p + X ~ x^p.
    material = MaterialModel(params.E1, params.nu, 1.0, params.rho_min**p)
    conv = params.convergence
    filt = FilterOperator(mesh, FilterSpec(params.r_min, params.upsilon_min))
    solver = EquilibriumSolver(mesh, material, problem.loads, method=params.solver)
    ke = element_stiffness_q4(material)
    layout = _PassiveLayout(problem, GridSpec(params.n_grid))
    passive_el = layout.active_fraction < 0.5
    dv = volume_sensitivity(mesh, ~passive_el)
    vstar = problem.volfrac
    xmin = params.rho_min

    x = np.where(passive_el, xmin, vstar)
    xphys = apply_filter(filt, x)
    xphys[passive_el] = xmin
    mma = MmaState(xmin=xmin, xmax=1.0)
    history = RunHistory()
    converged = False
    fea = None
    error = None
    try:
        for k in range(1, conv.max_iter + 1):
            t0 = time.perf_counter()
            stiff = xphys**p
            fea = solver.solve(stiff)
            energy = -(compliance_sensitivity(stiff, fea, material, mesh, ke))
            dc = -p * xphys ** (p - 1) * energy
            dc[passive_el] = 0.0
            dc = backproject_sensitivities(filt, dc)
            dvf = backproject_sensitivities(filt, dv)
            if problem.symmetry == "vertical":
                dc = mirror(dc, mesh.nx, mesh.ny)
            if optimizer == "mma":
                x = mma_update(x, dc, dvf, vstar, mma, constraint=float(dv @ xphys) - vstar)
            else:
                def physical(z):
                    out = apply_filter(filt, z)
                    out[passive_el] = xmin
                    return out
                x = oc_update(x, dc, dv, vstar, xmin=xmin, filter_fn=physical)
            if problem.symmetry == "vertical":
                x = mirror(x, mesh.nx, mesh.ny)
            xold = xphys
            xphys = apply_filter(filt, x)
            xphys[passive_el] = xmin
            alteration = topological_alteration(xphys, xold)
            rec = IterationRecord(k, fea.objective, float(dv @ xphys), alteration, 0.0,
                                  0.0, 0.0, 1000.0 * (time.perf_counter() - t0))
            history.append(rec)
            log.info("simp it %3d  C=%.6g  vol=%.4f  alt=%.5f", k, rec.objective, rec.volume, alteration)
            if check_convergence(xphys, xold, conv, "step", iteration=k):
                converged = True
                break
        fea = solver.solve(xphys**p)
    except Exception as exc:
        log.exception("SIMP run failed")
        error = f"{type(exc).__name__}: {exc}"
    return RunResult(problem=problem, params=params, history=history, converged=converged,
                     objective=fea.objective if fea is not None else float("nan"),
                     x=x, xtilde=xphys, xnew=xphys, u=None if fea is None else fea.u, error=error)
