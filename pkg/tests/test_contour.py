import numpy as np
import pytest

from semdot.contour import design_boundary, enclosed_area, evaluate_nodal_field, extract_boundary, lattice_coords
from semdot.mesh import Mesh
from semdot.projection import GridSpec


def test_all_void_gives_no_contours():
    f = np.full((20, 20), 0.001)
    xs = ys = np.arange(20.0)
    assert extract_boundary(f, 0.5, xs, ys) == []


def test_half_plane_crossing():
    xs = np.linspace(0, 9, 10)
    ys = np.linspace(0, 4, 5)
    f = np.tile(np.where(xs < 4.5, 1.0, 0.0), (5, 1))
    lines = extract_boundary(f, 0.5, xs, ys)
    assert len(lines) == 1
    assert np.allclose(lines[0][:, 0], 4.5)
    # solid on the left of travel, so the line runs upward
    assert lines[0][-1, 1] > lines[0][0, 1]


def test_radial_bump_area_matches_circle():
    xs = ys = np.linspace(-1, 1, 201)
    X, Y = np.meshgrid(xs, ys)
    f = 1 - np.hypot(X, Y)
    (loop,) = extract_boundary(f, 0.4, xs, ys)
    assert np.allclose(loop[0], loop[-1])
    area = enclosed_area(loop)
    assert area > 0  # counter-clockwise around solid
    assert area == pytest.approx(np.pi * 0.6**2, rel=0.02)


def test_hole_is_clockwise():
    xs = ys = np.linspace(-1, 1, 101)
    X, Y = np.meshgrid(xs, ys)
    f = np.hypot(X, Y)
    (loop,) = extract_boundary(f, 0.5, xs, ys)
    assert enclosed_area(loop) < 0


def test_single_solid_element_gives_one_closed_loop():
    mesh = Mesh(5, 5)
    rho = np.full(mesh.n_nodes, 0.001)
    for i, j in [(2, 2), (3, 2), (2, 3), (3, 3)]:
        rho[mesh.node_id(i, j)] = 1.0
    lines = design_boundary(mesh, GridSpec(10), rho, 0.5)
    assert len(lines) == 1 and np.allclose(lines[0][0], lines[0][-1])
    xy = lines[0]
    # solid nodes reach halfway into the neighbouring elements
    assert np.allclose([xy[:, 0].min(), xy[:, 0].max()], [1.5, 3.5], atol=0.01)
    assert np.allclose([xy[:, 1].min(), xy[:, 1].max()], [1.5, 3.5], atol=0.01)


def test_edge_touching_solid_is_closed_along_the_edge():
    mesh = Mesh(4, 2)
    rho = np.ones(mesh.n_nodes)
    lines = design_boundary(mesh, GridSpec(10), rho, 0.5)
    assert len(lines) == 1
    assert enclosed_area(lines[0]) == pytest.approx(8.0)
    assert design_boundary(mesh, GridSpec(10), rho, 0.5, close=False) == []


def test_nodal_field_evaluation_is_bilinear():
    mesh = Mesh(3, 2)
    xy = mesh.node_coords
    rho = 0.1 + 0.2 * xy[:, 0] + 0.05 * xy[:, 1]
    xs, ys = lattice_coords(mesh, GridSpec(4))
    assert xs[0] == 0 and xs[-1] == 3 and xs.size == 14
    f = evaluate_nodal_field(mesh, rho, xs, ys)
    X, Y = np.meshgrid(xs, ys)
    assert np.allclose(f, 0.1 + 0.2 * X + 0.05 * Y)
