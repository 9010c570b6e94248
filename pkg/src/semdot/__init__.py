"""Element-based topology optimization with grid-point projection and smooth boundaries.

Element volume fractions are recovered from solid/void grid points inside
every element, so designs carry a smooth iso-contour boundary while the
finite-element model stays a plain structured quad mesh.
"""
from .config import ConfigError, RunConfig, load_config
from .mesh import LoadCase, MaterialModel, Mesh, solve_equilibrium
from .optimize import ConvergenceSpec, RunResult, SemdotParams, run_semdot, run_simp_baseline
from .problems import PRESETS, ProblemDefinition, UnknownPresetError, preset_problem

__all__ = [
    "ConfigError", "ConvergenceSpec", "LoadCase", "MaterialModel", "Mesh", "PRESETS",
    "ProblemDefinition", "RunConfig", "RunResult", "SemdotParams", "UnknownPresetError",
    "load_config", "preset_problem", "run_semdot", "run_simp_baseline", "solve_equilibrium",
]
__version__ = "0.1.0"
