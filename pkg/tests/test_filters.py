import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from semdot.filters import (FilterSpec, apply_filter, backproject_sensitivities, build_filter,
                            nodal_densities)
from semdot.mesh import Mesh


def loop_filter(mesh, r, x):
    """Textbook double loop over element centers."""
    c = mesh.element_centers
    out = np.empty(mesh.n_elements)
    for e in range(mesh.n_elements):
        w = np.maximum(0.0, r - np.hypot(*(c - c[e]).T))
        out[e] = w @ x / w.sum()
    return out


def loop_nodal(mesh, ups, xt):
    c = mesh.element_centers
    out = np.empty(mesh.n_nodes)
    for n, p in enumerate(mesh.node_coords):
        w = np.maximum(0.0, ups - np.hypot(*(c - p).T))
        out[n] = w @ xt / w.sum()
    return out


@pytest.mark.parametrize("r", [1.0, 1.5, 2.0, 2.5, 3.7])
def test_density_filter_matches_double_loop(r, rng):
    mesh = Mesh(7, 5)
    x = rng.uniform(0, 1, mesh.n_elements)
    op = build_filter(mesh, FilterSpec(r, 1.0))
    assert np.allclose(apply_filter(op, x), loop_filter(mesh, r, x), atol=1e-14)


@pytest.mark.parametrize("ups", [1.0, 1.5, 3.0])
def test_nodal_filter_matches_double_loop(ups, rng):
    mesh = Mesh(6, 4)
    xt = rng.uniform(0, 1, mesh.n_elements)
    op = build_filter(mesh, FilterSpec(2.0, ups))
    assert np.allclose(nodal_densities(op, xt), loop_nodal(mesh, ups, xt), atol=1e-14)


def test_unit_radius_gives_identity_and_four_element_average():
    mesh = Mesh(3, 3)
    x = np.arange(9.0)
    op = build_filter(mesh, FilterSpec(1.0, 1.0))
    assert np.allclose(apply_filter(op, x), x)
    # interior node (1, 1) touches elements 0, 1, 3, 4 at equal distance
    assert nodal_densities(op, x)[mesh.node_id(1, 1)] == pytest.approx(np.mean([0, 1, 3, 4]))


@given(nx=st.integers(1, 8), ny=st.integers(1, 8), r=st.floats(1.0, 4.0), ups=st.floats(1.0, 3.0),
       seed=st.integers(0, 2**31))
def test_partition_of_unity_and_adjoint(nx, ny, r, ups, seed):
    mesh = Mesh(nx, ny)
    op = build_filter(mesh, FilterSpec(r, ups))
    ones = np.ones(mesh.n_elements)
    assert np.max(np.abs(apply_filter(op, ones) - 1)) <= 1e-12
    assert np.max(np.abs(nodal_densities(op, ones) - 1)) <= 1e-12
    g = np.random.default_rng(seed)
    x, y = g.normal(size=(2, mesh.n_elements))
    lhs = y @ apply_filter(op, x)
    rhs = backproject_sensitivities(op, y) @ x
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_filtered_values_stay_in_bounds(rng):
    mesh = Mesh(10, 6)
    op = build_filter(mesh, FilterSpec(2.5, 2.0))
    x = rng.uniform(0.001, 1, mesh.n_elements)
    xt = apply_filter(op, x)
    rn = nodal_densities(op, xt)
    assert x.min() - 1e-15 <= xt.min() and xt.max() <= x.max() + 1e-15
    assert xt.min() - 1e-15 <= rn.min() and rn.max() <= xt.max() + 1e-15


@pytest.mark.parametrize("kw", [dict(r_min=0.9), dict(upsilon_min=0.5)])
def test_radius_validation(kw):
    with pytest.raises(ValueError):
        FilterSpec(**kw)
