"""Run-level invariants on small problems."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semdot.optimize import SemdotParams, check_convergence, ConvergenceSpec, mirror, run_semdot
from semdot.problems import cantilever, deep_beam, mbb


@settings(max_examples=6)
@given(nx=st.integers(16, 30), ny=st.integers(10, 14), r=st.floats(1.2, 2.5),
       mode=st.sampled_from(["step", "smooth"]), kind=st.sampled_from(["mbb", "cantilever"]))
def test_projected_volume_meets_target_every_iteration(nx, ny, r, mode, kind):
    # at least 160 elements, so one step-projected grid point moves the volume by < 1e-4
    problem = (mbb if kind == "mbb" else cantilever)(nx, ny)
    res = run_semdot(problem, SemdotParams(r_min=r, mode=mode, max_iter=25))
    assert res.error is None
    assert np.all(np.abs(res.history.column("volume") - 0.3) <= 1e-4)


def test_smooth_run_accepts_only_with_small_boundary_error():
    res = run_semdot(cantilever(30, 20), SemdotParams())
    assert res.converged
    assert res.history.records[-1].boundary_error <= 0.001
    assert res.history.records[-1].alteration <= 0.001


def test_symmetric_run_is_mirror_identical():
    res = run_semdot(deep_beam(24, 12, symmetric=True), SemdotParams(max_iter=30))
    assert res.error is None
    for field in (res.x, res.xtilde, res.xnew):
        g = field.reshape(12, 24)
        assert np.max(np.abs(g - g[:, ::-1])) <= 1e-12


def test_mirror_is_a_projection(rng):
    v = rng.normal(size=12)
    m = mirror(v, 4, 3)
    assert np.array_equal(mirror(m, 4, 3), m)
    assert np.array_equal(m.reshape(3, 4), m.reshape(3, 4)[:, ::-1])


@pytest.mark.parametrize("mode,berr,expected", [("smooth", 0.0005, True), ("smooth", 0.01, False),
                                                ("step", 0.5, True)])
def test_convergence_rule(mode, berr, expected):
    spec = ConvergenceSpec()
    a = np.full(100, 0.3)
    b = a + 1e-6
    assert check_convergence(b, a, spec, mode, berr, iteration=20) is expected
    assert check_convergence(b, a, spec, mode, berr, iteration=5) is False
    assert check_convergence(a + 0.1, a, spec, mode, 0.0, iteration=20) is False
