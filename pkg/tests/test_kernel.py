import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from fpls.functional import StatePair
from fpls.grid import build_grid
from fpls.kernel import (
    FracParams,
    assemble_kernel,
    exterior_tail_1d,
    exterior_tail_2d,
    pair_norm_p,
    seminorm_energy,
    seminorm_gradient,
)


def brute_energy(grid, frac, u):
    """Double loop over cell centres plus the exterior integral, evaluated by quadrature."""
    x, vol, n = grid.node_coords, grid.cell_volume, grid.num_nodes
    d, ps, p = grid.dim, frac.ps, frac.p
    tot = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                tot += vol**2 * abs(u[i] - u[j]) ** p / np.linalg.norm(x[i] - x[j]) ** (d + ps)
    (a, b), = grid.bounds
    for i in range(n):
        f = lambda y: abs(x[i, 0] - y) ** (-(1 + ps))
        tail = integrate.quad(f, -np.inf, a)[0] + integrate.quad(f, b, np.inf)[0]
        tot += 2 * vol * tail * abs(u[i]) ** p
    return tot


def cartesian_tail_2d(x, lo, hi, ps):
    """Exterior of a rectangle split into two vertical half-planes and two caps.

    Across a half-plane the inner integral over y1 is a Beta function, leaving a
    power of the distance to the edge; the caps are integrated with nested quad.
    """
    k = special.beta(0.5, (1 + ps) / 2)
    sides = k * ((x[0] - lo[0]) ** -ps + (hi[0] - x[0]) ** -ps) / ps
    f = lambda y1, y0: ((x[0] - y0) ** 2 + (x[1] - y1) ** 2) ** (-(2 + ps) / 2)

    def cap(dist):
        inner = lambda y0: integrate.quad(lambda w: f(x[1] + dist + w, y0), 0, np.inf, epsabs=0, epsrel=1e-12)[0]
        return integrate.quad(inner, lo[0], hi[0], points=[x[0]], epsabs=0, epsrel=1e-12)[0]

    return sides + cap(hi[1] - x[1]) + cap(x[1] - lo[1])


def test_frac_params_validation():
    with pytest.raises(ValueError):
        FracParams(0.0, 2.0)
    with pytest.raises(ValueError):
        FracParams(1.0, 2.0)
    with pytest.raises(ValueError):
        FracParams(0.5, 1.0)
    fp = FracParams(0.5, 2.0)
    assert fp.ps == 1.0
    assert fp.p_star(2) == pytest.approx(4.0)
    assert fp.p_star(1) == np.inf
    with pytest.raises(ValueError):
        FracParams(0.75, 2.0).p_star(1)


def test_one_node_exterior_weight():
    k = assemble_kernel(build_grid(1, [(-1, 1)], 1), FracParams(0.5, 2.0))
    assert k.exterior_weights[0] == pytest.approx(8.0, rel=1e-14)
    assert k.pair_weights.shape == (1, 1)
    assert k.pair_weights[0, 0] == 0.0


def test_two_node_pair_weight():
    k = assemble_kernel(build_grid(1, [(-1, 1)], 2), FracParams(0.5, 2.0))
    np.testing.assert_allclose(k.pair_weights, [[0.0, 1.0], [1.0, 0.0]], rtol=1e-15, atol=0)


@pytest.mark.parametrize("dim, n", [(1, 17), (2, 6)])
def test_pair_weights_exactly_symmetric(dim, n):
    k = assemble_kernel(build_grid(dim, [(-1, 1)] * dim, n), FracParams(0.4, 2.2))
    assert np.array_equal(k.pair_weights, k.pair_weights.T)
    assert np.all(np.diag(k.pair_weights) == 0)
    assert np.all(k.exterior_weights > 0)


def test_tables_are_read_only():
    k = assemble_kernel(build_grid(1, [(-1, 1)], 4), FracParams(0.5, 2.0))
    with pytest.raises(ValueError):
        k.pair_weights[0, 1] = 3.0
    with pytest.raises(ValueError):
        k.exterior_weights[0] = 3.0


@pytest.mark.parametrize("ps", [0.3, 1.0, 1.7])
@pytest.mark.parametrize("x", [0.0, -0.93, 0.41])
def test_exterior_tail_1d_matches_quadrature(x, ps):
    f = lambda y: abs(x - y) ** (-(1 + ps))
    oracle = integrate.quad(f, -np.inf, -1)[0] + integrate.quad(f, 1, np.inf)[0]
    assert exterior_tail_1d(np.array([x]), -1.0, 1.0, ps)[0] == pytest.approx(oracle, rel=1e-10)


@pytest.mark.parametrize("ps", [0.4, 1.0, 1.6])
@pytest.mark.parametrize("x", [(0.5, 0.5), (0.1, 0.7), (0.03, 0.02), (0.97, 0.5)])
def test_exterior_tail_2d_matches_cartesian(x, ps):
    lo, hi = np.array([0.0, 0.0]), np.array([1.0, 1.0])
    got = exterior_tail_2d(np.array(x), lo, hi, ps)
    assert got == pytest.approx(cartesian_tail_2d(x, lo, hi, ps), rel=1e-8)


def test_exterior_tail_2d_rectangle():
    lo, hi = np.array([-1.0, 0.0]), np.array([1.0, 0.5])
    x = (0.3, 0.1)
    assert exterior_tail_2d(np.array(x), lo, hi, 1.0) == pytest.approx(cartesian_tail_2d(x, lo, hi, 1.0), rel=1e-8)


@pytest.mark.parametrize("s, p", [(0.5, 2.0), (0.3, 2.5), (0.3, 3.0)])
def test_energy_matches_brute_force(s, p):
    grid = build_grid(1, [(-1, 1)], 9)
    frac = FracParams(s, p)
    u = np.random.default_rng(3).standard_normal(9)
    assert seminorm_energy(assemble_kernel(grid, frac), u) == pytest.approx(brute_energy(grid, frac, u), rel=1e-10)


def test_energy_zero_and_one_node():
    k = assemble_kernel(build_grid(1, [(-1, 1)], 1), FracParams(0.5, 2.0))
    assert seminorm_energy(k, [0.0]) == 0.0
    assert seminorm_energy(k, [1.0]) == pytest.approx(8.0)


def test_energy_homogeneity():
    k = assemble_kernel(build_grid(1, [(-1, 1)], 12), FracParams(0.3, 2.5))
    u = np.random.default_rng(0).standard_normal(12)
    assert seminorm_energy(k, 3 * u) == pytest.approx(3**2.5 * seminorm_energy(k, u), rel=1e-12)


def test_quadratic_fast_path_agrees_with_general_formula():
    grid = build_grid(2, [(0, 1), (0, 1)], 5)
    k = assemble_kernel(grid, FracParams(0.5, 2.0))
    u = np.random.default_rng(5).standard_normal(grid.num_nodes)
    diff = u[:, None] - u[None, :]
    general = np.sum(k.pair_weights * diff**2) + np.sum(k.exterior_weights * u**2)
    assert seminorm_energy(k, u) == pytest.approx(general, rel=1e-12)
    grad = 4 * np.sum(k.pair_weights * diff, axis=1) + 2 * k.exterior_weights * u
    np.testing.assert_allclose(seminorm_gradient(k, u), grad, rtol=1e-12, atol=1e-12)


def test_gradient_zero_and_one_node():
    k = assemble_kernel(build_grid(1, [(-1, 1)], 1), FracParams(0.5, 2.0))
    assert np.all(seminorm_gradient(k, [0.0]) == 0)
    assert seminorm_gradient(k, [1.0])[0] == pytest.approx(16.0)
    k3 = assemble_kernel(build_grid(1, [(-1, 1)], 5), FracParams(0.3, 3.0))
    assert np.all(seminorm_gradient(k3, np.zeros(5)) == 0)


def _fd_directional(fn, u, d, h=1e-5):
    return (fn(u + h * d) - fn(u - h * d)) / (2 * h)


@pytest.mark.parametrize("s, p, dim", [(0.3, 3.0, 1), (0.5, 2.0, 1), (0.3, 2.5, 2)])
def test_gradient_matches_finite_differences(s, p, dim):
    n = 8 if dim == 1 else 3
    k = assemble_kernel(build_grid(dim, [(-1, 1)] * dim, n), FracParams(s, p))
    rng = np.random.default_rng(11)
    u, d = rng.standard_normal(k.num_nodes), rng.standard_normal(k.num_nodes)
    exact = float(seminorm_gradient(k, u) @ d)
    fd = _fd_directional(lambda w: seminorm_energy(k, w), u, d)
    assert abs(exact - fd) / abs(fd) < 1e-6


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([2.0, 2.5, 3.0]))
def test_pair_norm_structure(seed, p):
    k = assemble_kernel(build_grid(1, [(-1, 1)], 10), FracParams(0.3, p))
    rng = np.random.default_rng(seed)
    u, v = rng.standard_normal((2, 10))
    zero = np.zeros(10)
    assert pair_norm_p(k, StatePair(zero, zero)) == 0.0
    assert pair_norm_p(k, StatePair(u, zero)) == seminorm_energy(k, u)
    assert pair_norm_p(k, StatePair(u, v)) == pytest.approx(pair_norm_p(k, StatePair(v, u)), rel=1e-14)
    assert pair_norm_p(k, StatePair(u, v)) == pytest.approx(seminorm_energy(k, u) + seminorm_energy(k, v), rel=1e-14)
