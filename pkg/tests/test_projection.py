import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from semdot.mesh import Mesh
from semdot.projection import (GridSpec, ProjectionState, UnreachableVolumeError, bisect_threshold,
                               boundary_error, heaviside_smooth, heaviside_step,
                               interpolate_grid_densities, project, recompose_volume_fractions,
                               update_beta)


def test_grid_points_are_sub_cell_midpoints():
    g = GridSpec(10)
    assert g.n_points == 100
    assert np.allclose(g.local_coords, np.linspace(-0.9, 0.9, 10))
    S = g.shape_matrix
    assert S.shape == (100, 4)
    assert np.allclose(S.sum(axis=1), 1.0)
    pts = g.point_coords(Mesh(2, 1))
    assert np.allclose(pts[1, 0], [1.05, 0.05])
    assert np.allclose(pts[0, 99], [0.95, 0.95])


def test_bilinear_interpolation_reproduces_bilinear_nodal_field():
    mesh = Mesh(4, 3)
    grid = GridSpec(5)
    f = lambda x, y: 0.2 + 0.1 * x - 0.05 * y + 0.03 * x * y  # noqa: E731
    xy = mesh.node_coords
    rho_n = f(xy[:, 0], xy[:, 1])
    pts = grid.point_coords(mesh)
    vals = interpolate_grid_densities(mesh, grid, rho_n)
    assert np.allclose(vals, f(pts[..., 0], pts[..., 1]), atol=1e-14)


def test_step_projection():
    out = heaviside_step(np.array([0.2, 0.5, 0.50001, 0.9]), 0.5)
    assert out.tolist() == [0.001, 0.001, 1.0, 1.0]


def test_smooth_projection_endpoints_and_clamp():
    out = heaviside_smooth(np.array([0.0, 1.0]), 0.4, 3.0)
    assert out[0] == 0.001 and out[1] == pytest.approx(1.0)


@given(psi=st.floats(0, 1), beta=st.floats(0.01, 500))
def test_smooth_projection_is_monotone(psi, beta):
    rho = np.linspace(0, 1, 401)
    h = heaviside_smooth(rho, psi, beta)
    assert np.all(np.diff(h) >= -1e-15)
    assert h.min() >= 0.001 and h.max() <= 1.0


@pytest.mark.parametrize("psi", [0.2, 0.5, 0.8])
def test_smooth_projection_tends_to_step(psi):
    rho = np.array([psi - 0.05, psi - 0.01, psi + 0.01, psi + 0.05])
    for beta in (1e3, 1e4):
        assert np.allclose(heaviside_smooth(rho, psi, beta), heaviside_step(rho, psi), atol=1e-3)
    gaps = [np.abs(heaviside_smooth(rho, psi, b) - heaviside_step(rho, psi)).max() for b in (10, 100, 1000)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_beta_update_is_capped():
    s = ProjectionState(beta=4999.8, lam=0.5)
    assert update_beta(s).beta == 5000
    assert update_beta(ProjectionState()).beta == 1.0


def test_bisection_volume_is_monotone_in_threshold():
    rng = np.random.default_rng(7)
    psis = np.linspace(0, 1, 41)
    for k in range(100):
        raw = rng.uniform(0, 1, (20, 16)) ** rng.uniform(0.3, 3)
        state = ProjectionState(beta=float(rng.uniform(0.5, 60)), mode="smooth" if k % 2 else "step")
        vols = [project(raw, ProjectionState(beta=state.beta, psi=p, mode=state.mode)).mean() for p in psis]
        assert np.all(np.diff(vols) <= 1e-15)


@given(seed=st.integers(0, 2**31), beta=st.floats(0.5, 80), target=st.floats(0.1, 0.6))
def test_bisection_hits_target_volume(seed, beta, target):
    raw = np.random.default_rng(seed).uniform(0, 1, (30, 25))
    state = ProjectionState(beta=beta)
    lo = heaviside_smooth(raw, 1.0, beta).mean()
    hi = heaviside_smooth(raw, 0.0, beta).mean()
    if not lo + 1e-3 < target < hi - 1e-3:
        return
    psi, proj = bisect_threshold(raw, target, state)
    assert 0 <= psi <= 1
    assert abs(proj.mean() - target) <= 1e-4
    assert np.allclose(proj, heaviside_smooth(raw, psi, beta))


def test_bisection_with_passive_points():
    rng = np.random.default_rng(3)
    raw = rng.uniform(0, 1, (10, 9))
    passive = np.zeros_like(raw, dtype=bool)
    passive[:3] = True
    psi, proj = bisect_threshold(raw, 0.3, ProjectionState(beta=5.0), passive)
    assert np.all(proj[passive] == 0.001)
    assert proj[~passive].mean() == pytest.approx(0.3, abs=1e-4)


def test_degenerate_fields_are_rejected():
    with pytest.raises(UnreachableVolumeError):
        bisect_threshold(np.zeros((4, 4)), 0.3, ProjectionState(beta=2.0))
    with pytest.raises(UnreachableVolumeError):
        bisect_threshold(np.ones((4, 4)), 0.3, ProjectionState(beta=2.0))
    psi, proj = bisect_threshold(np.full((4, 4), 0.01), 0.3, ProjectionState(beta=2.0),
                                 allow_underfull=True)
    assert psi == 0.0 and proj.mean() < 0.3


def test_recomposition():
    proj = np.ones((3, 100))
    proj[1, :50] = 0.001
    proj[2] = 0.001
    xnew, delta = recompose_volume_fractions(proj, np.array([1.0, 0.5, 0.2]))
    assert xnew.tolist() == pytest.approx([1.0, 0.5005, 0.001])
    assert delta == pytest.approx([0.0, 0.0005, -0.199])


def test_boundary_error():
    proj = np.where(np.arange(100 * 4).reshape(100, 4) % 2, 1.0, 0.001)
    assert boundary_error(proj) == 0.0
    proj[17] = 0.5
    assert boundary_error(proj) == pytest.approx(0.01)
