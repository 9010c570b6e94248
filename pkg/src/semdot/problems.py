"""Benchmark problem definitions.

All geometry is in element widths with the origin at the bottom-left
corner. Loads are unit forces in newtons on the nearest node.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .mesh import LoadCase, Mesh


@dataclass(frozen=True)
class Circle:
    """Passive disc. ``hard`` shapes are removed from the design altogether;
    otherwise only their grid points are forced to void."""

    cx: float
    cy: float
    r: float
    hard: bool = False

    def contains(self, x, y):
        return (np.asarray(x) - self.cx) ** 2 + (np.asarray(y) - self.cy) ** 2 < self.r**2


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float
    hard: bool = False

    def contains(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        return (x > self.x0) & (x < self.x1) & (y > self.y0) & (y < self.y1)


Shape = Circle | Rect


@dataclass(frozen=True)
class ProblemDefinition:
    name: str
    nx: int
    ny: int
    loads: LoadCase
    volfrac: float = 0.3
    kind: Literal["compliance", "mechanism"] = "compliance"
    passive: tuple[Shape, ...] = ()
    symmetry: Literal["vertical"] | None = None
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.volfrac < 1:
            raise ValueError(f"volfrac must lie in (0, 1), got {self.volfrac}")
        Mesh(self.nx, self.ny)
        self.loads.validate(self.mesh.n_dofs)
        for s in self.passive:
            if isinstance(s, Circle):
                inside = 0 <= s.cx <= self.nx and 0 <= s.cy <= self.ny and s.r > 0
            else:
                inside = 0 <= s.x0 < s.x1 <= self.nx and 0 <= s.y0 < s.y1 <= self.ny
            if not inside:
                raise ValueError(f"passive shape {s} lies outside the {self.nx}x{self.ny} domain")
        if self.kind == "mechanism":
            if not (self.loads.forces and self.loads.output and len(self.loads.springs) >= 2):
                raise ValueError("mechanism problems need an input force, two springs and an output selector")
        elif self.kind != "compliance":
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if self.symmetry not in (None, "vertical"):
            raise ValueError(f"unsupported symmetry {self.symmetry!r}")

    @property
    def mesh(self) -> Mesh:
        return Mesh(self.nx, self.ny)

    def passive_fn(self, hard: bool | None = None) -> Callable | None:
        """Membership test over passive shapes; ``hard`` selects one kind only."""
        shapes = [s for s in self.passive if hard is None or s.hard == hard]
        if not shapes:
            return None

        def inside(x, y):
            out = np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape, dtype=bool)
            for s in shapes:
                out |= s.contains(x, y)
            return out
        return inside


def _dofs(mesh: Mesh, nodes, comp: str) -> list[int]:
    nodes = np.atleast_1d(nodes)
    out = []
    if "x" in comp:
        out += (2 * nodes).tolist()
    if "y" in comp:
        out += (2 * nodes + 1).tolist()
    return [int(d) for d in out]


def deep_beam(nx: int = 180, ny: int = 90, hole: bool = False, symmetric: bool = False,
              volfrac: float = 0.3) -> ProblemDefinition:
    """Simply supported deep beam (length L = nx) loaded at its bottom centre.

    Bottom-left corner hinged, bottom-right on a vertical roller. The hole
    variant adds a passive circle of radius L/6 centred at (L/2, L/4).
    """
    m = Mesh(nx, ny)
    fixed = _dofs(m, m.node_id(0, 0), "xy") + _dofs(m, m.node_id(nx, 0), "y")
    load = m.nearest_node(nx / 2, 0)
    passive = (Circle(nx / 2, nx / 4, nx / 6),) if hole else ()
    name = "deep-beam-hole" if hole else "deep-beam"
    return ProblemDefinition(name, nx, ny, LoadCase({2 * load + 1: -1.0}, tuple(fixed)),
                             volfrac=volfrac, passive=passive,
                             symmetry="vertical" if symmetric else None)


def deep_beam_hole_half(nx: int = 20, ny: int = 20, volfrac: float = 0.3) -> ProblemDefinition:
    """Right half of the holed deep beam with the symmetry plane on the left edge.

    The half-span is ``nx`` wide, so the full beam has L = 2 nx and the hole
    (radius L/6) is centred on the symmetry edge at height L/4. The load is
    halved.
    """
    m = Mesh(nx, ny)
    L = 2 * nx
    left = m.node_id(0, np.arange(ny + 1))
    fixed = _dofs(m, left, "x") + _dofs(m, m.node_id(nx, 0), "y")
    loads = LoadCase({2 * int(m.node_id(0, 0)) + 1: -0.5}, tuple(fixed))
    return ProblemDefinition("deep-beam-hole-half", nx, ny, loads, volfrac=volfrac,
                             passive=(Circle(0.0, L / 4, L / 6),))


def mbb(nx: int = 150, ny: int = 50, volfrac: float = 0.3) -> ProblemDefinition:
    """Half MBB beam: symmetry on the left edge, load at the top-left corner."""
    m = Mesh(nx, ny)
    left = m.node_id(0, np.arange(ny + 1))
    fixed = _dofs(m, left, "x") + _dofs(m, m.node_id(nx, 0), "y")
    loads = LoadCase({2 * int(m.node_id(0, ny)) + 1: -1.0}, tuple(fixed))
    return ProblemDefinition("mbb", nx, ny, loads, volfrac=volfrac)


def cantilever(nx: int = 150, ny: int = 100, volfrac: float = 0.3) -> ProblemDefinition:
    """Deep cantilever clamped on the left, loaded at mid-height of the right edge."""
    m = Mesh(nx, ny)
    left = m.node_id(0, np.arange(ny + 1))
    fixed = _dofs(m, left, "xy")
    load = m.nearest_node(nx, ny / 2)
    return ProblemDefinition("cantilever", nx, ny, LoadCase({2 * load + 1: -1.0}, tuple(fixed)),
                             volfrac=volfrac)


def l_bracket(L: int = 400, arm: float = 0.4, volfrac: float = 0.3) -> ProblemDefinition:
    """L-bracket on an L x L mesh; the upper-right block beyond ``arm * L`` is void.

    The top edge of the vertical arm is clamped and the load acts downward at
    the top corner of the horizontal arm's free end. The cut-out is hard void:
    its cells are not design variables and do not count toward the volume.
    """
    m = Mesh(L, L)
    w = int(round(arm * L))
    top = m.node_id(np.arange(w + 1), L)
    fixed = _dofs(m, top, "xy")
    load = int(m.node_id(L, w))
    return ProblemDefinition("l-bracket", L, L, LoadCase({2 * load + 1: -1.0}, tuple(fixed)),
                             volfrac=volfrac, passive=(Rect(w, w, L, L, hard=True),))


def force_inverter(nx: int = 80, ny: int = 40, k_in: float = 1.0, k_out: float = 0.001,
                   f_in: float = 1.0, volfrac: float = 0.3) -> ProblemDefinition:
    """Upper half of the force inverter with its symmetry plane on the bottom edge.

    Input force +x at the bottom-left node, output x-DOF at the bottom-right
    node, both on grounded springs; the two top-left nodes are clamped. The
    output selector is -1 so a positive output displacement means the
    output moves opposite to the input.
    """
    m = Mesh(nx, ny)
    bottom = m.node_id(np.arange(nx + 1), 0)
    fixed = _dofs(m, bottom, "y") + _dofs(m, [m.node_id(0, ny), m.node_id(0, ny - 1)], "xy")
    din = 2 * int(m.node_id(0, 0))
    dout = 2 * int(m.node_id(nx, 0))
    loads = LoadCase({din: f_in}, tuple(fixed), springs={din: k_in, dout: k_out},
                     output={dout: -1.0})
    return ProblemDefinition("force-inverter", nx, ny, loads, volfrac=volfrac, kind="mechanism",
                             notes={"input_dof": din, "output_dof": dout})


PRESETS = {
    "deep-beam": deep_beam,
    "deep-beam-hole": lambda **kw: deep_beam(hole=True, **kw),
    "deep-beam-hole-half": deep_beam_hole_half,
    "mbb": mbb,
    "cantilever": cantilever,
    "l-bracket": l_bracket,
    "force-inverter": force_inverter,
}


class UnknownPresetError(KeyError):
    pass


def preset_problem(name: str, **overrides) -> ProblemDefinition:
    """Build a named benchmark; keyword overrides go to the preset factory."""
    try:
        factory = PRESETS[name]
    except KeyError:
        raise UnknownPresetError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return factory(**overrides)
