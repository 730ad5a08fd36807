from fractions import Fraction
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import eigh

from _support import one_node, random_pair, standard_minimizer, standard_setup, unchecked_params
from fpls.constants import (
    estimate_sobolev,
    membership,
    psi_prefactor,
    rayleigh_quotient,
    scale_parameters,
    threshold_C,
    threshold_C_alt,
    threshold_D,
    weight_lhs,
)
from fpls.functional import ParameterError, StatePair, term_C
from fpls.grid import build_grid
from fpls.kernel import FracParams, assemble_kernel, pair_norm_p

MATRIX = [
    (p, q, a, b)
    for p in (2.0, 2.5, 3.0)
    for q in (1.2, 1.5)
    for a, b in ((1.5, 1.5), (2.0, 1.2))
    if a + b > p
]


def exponents(p, q, ab):
    return SimpleNamespace(p=p, q=q, ab=ab)


def test_one_node_constant_is_start_independent():
    grid, kernel, params, _ = one_node(lam=1.0)
    est = estimate_sobolev(kernel, params, n_starts=5)
    assert est.value == pytest.approx(8 / 2 ** (2 / 3), rel=1e-12)
    assert est.value == pytest.approx(5.039684, abs=1e-6)
    np.testing.assert_allclose(est.per_start, est.value, rtol=1e-12)


def test_quotient_scale_invariant():
    setup = standard_setup(64)
    u = np.random.default_rng(0).standard_normal(64)
    r = setup.params.ab
    assert rayleigh_quotient(setup.kernel, -3 * u, r) == pytest.approx(rayleigh_quotient(setup.kernel, u, r), rel=1e-13)


@pytest.mark.parametrize("dim, n", [(1, 24), (2, 6)])
def test_quadratic_case_matches_smallest_eigenvalue(dim, n):
    """With p = r = 2 the quotient minimum is the bottom of a symmetric eigenproblem."""
    grid = build_grid(dim, [(-1, 1)] * dim, n)
    kernel = assemble_kernel(grid, FracParams(0.5, 2.0))
    params = unchecked_params(0.5, 2.0, 1.5, 1.0, 1.0, 1.0, 1.0)
    M = 2 * kernel.laplacian + np.diag(kernel.exterior_weights)
    oracle = eigh(M, eigvals_only=True)[0] / grid.cell_volume
    assert estimate_sobolev(kernel, params, n_starts=4).value == pytest.approx(oracle, rel=1e-8)


def test_estimate_is_below_random_quotients():
    setup = standard_setup(64)
    rng = np.random.default_rng(1)
    r = setup.params.ab
    for _ in range(50):
        assert setup.S_d <= rayleigh_quotient(setup.kernel, rng.standard_normal(64), r)
    assert rayleigh_quotient(setup.kernel, estimate_sobolev(setup.kernel, setup.params).minimizer, r) == pytest.approx(
        setup.S_d, rel=1e-14
    )


def test_sobolev_grid_stability():
    a, b = standard_setup(64).S_d, standard_setup(128).S_d
    assert abs(a - b) / b < 0.05


def test_threshold_C_closed_form_values():
    params = exponents(2.0, 1.5, 3.0)
    assert threshold_C(params, 1.0) == pytest.approx(0.00548697, abs=1e-8)
    assert threshold_C(params, 1.0) == pytest.approx((1 / 6) ** 2 * 1.5**-4, rel=1e-14)
    assert threshold_C(exponents(2.0, 1.0, 4.0), 1.0) == pytest.approx(0.0740741, abs=1e-7)
    assert threshold_C(exponents(2.0, 1.0, 4.0), 1.0) == pytest.approx(4 / 54, rel=1e-14)
    with pytest.raises(ValueError):
        threshold_C(params, 0.0)


def test_threshold_D_exact_rational():
    # p=2, q=3/2, alpha+beta=3, S=1: C = (1/6)^2 (2/3)^4 = 4/729, prefactor (3/4)^4 = 81/256
    C = Fraction(1, 6) ** 2 * Fraction(2, 3) ** 4
    D = Fraction(3, 4) ** 4 * C
    assert D == Fraction(1, 576)
    params = exponents(2.0, 1.5, 3.0)
    assert threshold_C(params, 1.0) == pytest.approx(float(C), rel=1e-14)
    assert threshold_D(params, 1.0) == pytest.approx(float(D), rel=1e-14)
    assert psi_prefactor(params) == 0.31640625
    assert threshold_D(params, 1.0) == psi_prefactor(params) * threshold_C(params, 1.0)


def test_threshold_C_increases_with_S():
    params = exponents(2.0, 1.5, 3.0)
    assert threshold_C(params, 2.0) > threshold_C(params, 1.0)


@pytest.mark.parametrize("p, q, a, b", MATRIX)
def test_D_below_C_across_matrix(p, q, a, b):
    params = exponents(p, q, a + b)
    for S in (0.5, 1.0, 8.0):
        assert threshold_D(params, S) < threshold_C(params, S)
        assert threshold_C_alt(params, S) > 0


def test_prefactor_near_q_equal_p():
    assert psi_prefactor(exponents(2.0, 1.99, 3.0)) == pytest.approx(0.3670, abs=5e-5)


def test_membership_standard_fixture():
    setup = standard_setup(64)
    thr = membership(setup.params, setup.weights, setup.S_d, setup.grid)
    assert (thr.in_theta, thr.in_psi) == (True, True)
    assert thr.lhs == pytest.approx(0.5 * thr.D_psi, rel=1e-12)
    assert set(thr.as_dict()) >= {"S_d", "C_theta", "D_psi", "lhs", "in_theta", "in_psi"}


def test_membership_rejects_zero_parameters():
    setup = standard_setup(64)
    zero = unchecked_params(0.5, 2.0, 1.5, 1.5, 1.5, 0.0, 0.0)
    with pytest.raises(ParameterError):
        membership(zero, setup.weights, setup.S_d, setup.grid)


@settings(max_examples=100, deadline=None)
@given(st.floats(-80, 80), st.floats(-80, 80))
def test_psi_implies_theta(lam, mu):
    setup = standard_setup(64)
    if max(abs(lam), abs(mu)) < 1e-6:
        return
    thr = membership(setup.params.with_parameters(lam, mu), setup.weights, setup.S_d, setup.grid)
    assert thr.in_theta or not thr.in_psi


@pytest.mark.parametrize("target", [1.0, 250.0, 1e4])
def test_scale_parameters_hits_target(target):
    setup = standard_setup(64)
    params = scale_parameters(setup.params.with_parameters(1.0, -0.5), setup.weights, setup.grid, target)
    nf, ng = setup.weights.lq_star_norms(setup.grid, params)
    assert weight_lhs(params, nf, ng) == pytest.approx(target, rel=1e-12)
    assert params.mu / params.lam == pytest.approx(-0.5)


def test_lhs_strictly_increasing_along_diagonal_ray():
    setup = standard_setup(64)
    nf, ng = setup.weights.lq_star_norms(setup.grid, setup.params)
    ts = np.linspace(0.01, 20, 400)
    lhs = [weight_lhs(setup.params.with_parameters(t, t), nf, ng) for t in ts]
    assert np.all(np.diff(lhs) > 0)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from(["normal", "positive", "smooth", "spiky", "minimizer"]))
def test_coupling_term_bounded_by_pair_norm(seed, kind):
    """C(z) <= S_d^(-(alpha+beta)/p) ||(u, v)||^(alpha+beta), with S_d from the same grid."""
    setup = standard_setup(64)
    rng = np.random.default_rng(seed)
    if kind == "minimizer":
        m = standard_minimizer(64)
        z = StatePair(rng.uniform(0.1, 3) * m, rng.uniform(-3, 3) * m)
    else:
        z = random_pair(rng, 64, kind)
    p, ab = setup.params.p, setup.params.ab
    bound = setup.S_d ** (-ab / p) * pair_norm_p(setup.kernel, z) ** (ab / p)
    assert term_C(setup.params, setup.weights, z, setup.grid) <= bound * (1 + 1e-12)
