import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exactsv.optimize import NelderMeadConfig, initial_simplex, nelder_mead


def test_quadratic():
    r = nelder_mead(lambda x: float(np.sum((x - 3.0) ** 2)), np.zeros(4))
    assert r.converged
    np.testing.assert_allclose(r.x, 3.0, atol=1e-6)


def test_rosenbrock():
    f = lambda v: 100.0 * (v[1] - v[0] ** 2) ** 2 + (1 - v[0]) ** 2
    r = nelder_mead(f, [-1.2, 1.0], NelderMeadConfig(tol=1e-10))
    np.testing.assert_allclose(r.x, 1.0, atol=1e-4)
    assert r.iterations <= 5000


def test_abs_one_dimensional():
    r = nelder_mead(lambda x: abs(float(x[0])), [2.0], NelderMeadConfig(tol=1e-9))
    assert abs(r.x[0]) < 1e-8


def test_max_iter_reports_best_so_far():
    r = nelder_mead(lambda x: float(np.sum(x ** 2)), [5.0, 5.0],
                    NelderMeadConfig(max_iter=3))
    assert not r.converged and r.iterations == 3
    assert r.fun == min(r.history)


def test_infeasible_points_are_rejected():
    f = lambda x: float("nan") if x[0] < 0 else (x[0] - 1.0) ** 2
    r = nelder_mead(f, [0.5])
    assert r.x[0] == pytest.approx(1.0, abs=1e-6)


def test_initial_simplex_steps():
    s = initial_simplex([2.0, 0.0], NelderMeadConfig())
    np.testing.assert_allclose(s, [[2.0, 0.0], [2.2, 0.0], [2.0, 0.1]])


def test_empty_dimension():
    with pytest.raises(ValueError):
        nelder_mead(lambda x: 0.0, [])


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=4))
@settings(max_examples=30, deadline=None)
def test_history_is_monotone(center):
    c = np.array(center)
    r = nelder_mead(lambda x: float(np.sum((x - c) ** 2)), np.ones_like(c),
                    NelderMeadConfig(max_iter=200))
    h = np.array(r.history)
    assert np.all(np.diff(h) <= 0.0)
