import warnings

import numpy as np
import pytest
import scipy.linalg as la

from freeedge.barrier import quasi_newton_minimize, smooth_max, smooth_min
from freeedge.cauchy import SemicircleEquation
from freeedge.config import SolverOptions, Side
from freeedge.exceptions import BracketNotFoundError
from freeedge.fixed_point import locate_edge, solve_fixed_point
from freeedge.linalg import solve_linear


@pytest.fixture
def semicircle() -> SemicircleEquation:
    return SemicircleEquation(np.zeros((1, 1), dtype=complex), [np.ones((1, 1), dtype=complex)])


def test_semicircle_outside_point(semicircle):
    solution = solve_fixed_point(semicircle, 3.0, SolverOptions(), side=Side.UPPER)
    assert solution.converged
    assert solution.z[0, 0].real == pytest.approx((3 - np.sqrt(5)) / 2, abs=1e-10)


def test_semicircle_inside_point_leaves_cone(semicircle):
    solution = solve_fixed_point(semicircle, 1.0, SolverOptions(), side=Side.UPPER)
    assert not solution.converged
    assert solution.reason


def test_semicircle_complex_point(semicircle):
    lam = 1.0 + 1.0j
    solution = solve_fixed_point(semicircle, lam, SolverOptions())
    expected = (lam - np.sqrt(lam - 2) * np.sqrt(lam + 2)) / 2
    assert solution.converged
    assert solution.z[0, 0] == pytest.approx(expected, abs=1e-9)


def test_locate_edge_semicircle(semicircle):
    bracket = locate_edge(semicircle, Side.UPPER, 0.0, 2.5, SolverOptions())
    assert bracket.outside == pytest.approx(2.0, abs=1e-6)
    assert bracket.inside <= bracket.outside
    assert bracket.solution.converged


def test_locate_edge_lower_semicircle(semicircle):
    bracket = locate_edge(semicircle, Side.LOWER, 0.0, -2.5, SolverOptions())
    assert bracket.outside == pytest.approx(-2.0, abs=1e-6)


class _NoCone(SemicircleEquation):
    def in_cone(self, z, side):
        return False


def test_locate_edge_gives_up():
    eq = _NoCone(np.zeros((1, 1), dtype=complex), [np.ones((1, 1), dtype=complex)])
    with pytest.raises(BracketNotFoundError):
        locate_edge(eq, Side.UPPER, 0.0, 2.5, SolverOptions())


def test_smooth_max_bounds():
    m = np.diag([1.0, 2.0, 3.0]).astype(complex)
    value, grad = smooth_max(m, 0.1)
    assert 3.0 <= value <= 3.0 + 0.1 * np.log(3)
    assert np.trace(grad).real == pytest.approx(1.0)
    assert np.all(np.linalg.eigvalsh(grad) >= -1e-15)
    low, _ = smooth_min(m, 0.1)
    assert 1.0 - 0.1 * np.log(3) <= low <= 1.0


def test_quasi_newton_quadratic():
    target = np.array([1.0, -2.0, 0.5])

    def fun(x):
        return float(np.sum((x - target) ** 2)), 2 * (x - target)

    result = quasi_newton_minimize(fun, np.zeros(3), gtol=1e-8, max_iter=100)
    assert result.converged
    np.testing.assert_allclose(result.x, target, atol=1e-8)


def test_quasi_newton_respects_domain():
    # minimize x + 1/x on x > 0, optimum at x = 1
    def fun(x):
        if x[0] <= 0:
            return np.inf, None
        return float(x[0] + 1 / x[0]), np.array([1 - 1 / x[0] ** 2])

    result = quasi_newton_minimize(fun, np.array([5.0]), gtol=1e-10, max_iter=200)
    assert result.x[0] == pytest.approx(1.0, abs=1e-5)


def test_quasi_newton_rejects_infeasible_start():
    with pytest.raises(ValueError, match="outside"):
        quasi_newton_minimize(lambda x: (np.inf, None), np.zeros(1), gtol=1e-8, max_iter=10)


def test_quasi_newton_stops_at_iteration_cap():
    def fun(x):
        return float(np.sum(np.cosh(x))), np.sinh(x)

    result = quasi_newton_minimize(fun, np.full(4, 3.0), gtol=1e-14, max_iter=2)
    assert result.iterations <= 2
    assert not result.converged
    assert result.fun < 4 * np.cosh(3.0)


def test_warm_start_near_axis_keeps_herglotz_root(semicircle):
    lam = 0.5 + 0.05j
    solution = solve_fixed_point(semicircle, lam, SolverOptions(), z0=np.array([[0.3 - 1e-3j]]))
    expected = (lam - np.sqrt(lam - 2) * np.sqrt(lam + 2)) / 2
    assert solution.converged
    assert solution.z[0, 0].imag < 0
    assert solution.z[0, 0] == pytest.approx(expected, abs=1e-9)


def test_half_plane_check(semicircle):
    z = np.array([[1.0 - 0.5j]])
    assert semicircle.in_half_plane(z, 1.0 + 1.0j)
    assert not semicircle.in_half_plane(z, 1.0 - 1.0j)
    assert semicircle.in_half_plane(z, 1.0)


def test_bisection_stops_at_tolerance(semicircle):
    opts = SolverOptions(tol=1e-6)
    bracket = locate_edge(semicircle, Side.UPPER, 0.0, 2.5, opts)
    assert bracket.outside - bracket.inside <= 1e-6 * bracket.outside
    assert bracket.evaluations <= 25


def test_near_edge_solve_is_capped(semicircle):
    solution = solve_fixed_point(semicircle, 2.0 - 1e-9, SolverOptions(), side=Side.UPPER)
    assert not solution.converged
    capped = solve_fixed_point(semicircle, 1.9, SolverOptions(), side=Side.UPPER, max_iter=5)
    assert not capped.converged
    assert capped.iterations <= 5


@pytest.mark.parametrize(
    "a",
    [np.array([[1.0, 1.0], [1.0, 1.0]]), np.array([[1.0, 1.0], [1.0, 1.0 + 1e-15]])],
)
def test_solve_linear_singular_system(a):
    b = np.array([2.0, 2.0])
    with warnings.catch_warnings():
        warnings.simplefilter("error", la.LinAlgWarning)
        x = solve_linear(a, b)
    np.testing.assert_allclose(a @ x, b, atol=1e-8)
