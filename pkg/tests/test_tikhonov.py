import numpy as np
import pytest

from cptsim.linalg import random_hermitian
from cptsim.tikhonov import (
    TikhonovSystem,
    expansion_residuals,
    fit_loglog_slope,
    herm_to_vec,
    integrate_full,
    manifold_first_order,
    manifold_second_order,
    reduced_vector_field,
    vec_to_herm,
    verify_expansion_order,
)


def scalar_family_gx(eps):
    # exact manifold slope k = eps - eps^3 + ...
    return TikhonovSystem(
        dim_slow=1, dim_fast=1, a=np.array([[1.0]]),
        f=lambda x, y: y, g=lambda x, y: x, epsilon=eps,
    )


def scalar_family_gxy(eps):
    # exact slope k = eps + eps^2 - 2 eps^4 + ... (no eps^3 term)
    return TikhonovSystem(
        dim_slow=1, dim_fast=1, a=np.array([[1.0]]),
        f=lambda x, y: y, g=lambda x, y: x + y, epsilon=eps,
    )


def scalar_family_coupled(eps):
    # exact slope k = eps + 2 eps^2 + 3 eps^3 + ...
    return TikhonovSystem(
        dim_slow=1, dim_fast=1, a=np.array([[1.0]]),
        f=lambda x, y: -x + y, g=lambda x, y: x + y, epsilon=eps,
    )


def test_herm_vec_roundtrip():
    rng = np.random.default_rng(20)
    for dim in (2, 4, 6):
        h = random_hermitian(dim, rng)
        v = herm_to_vec(h)
        assert v.shape == (dim * dim,)
        assert v.dtype == np.float64
        np.testing.assert_allclose(vec_to_herm(v, dim), h, atol=1e-15)


def test_herm_to_vec_rejects_non_hermitian():
    m = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=np.complex128)
    with pytest.raises(ValueError):
        herm_to_vec(m)


def test_system_rejects_unstable_fast_map():
    with pytest.raises(ValueError):
        TikhonovSystem(
            dim_slow=1, dim_fast=1, a=np.array([[-1.0]]),
            f=lambda x, y: y, g=lambda x, y: x, epsilon=0.1,
        )
    with pytest.raises(ValueError):
        TikhonovSystem(
            dim_slow=1, dim_fast=1, a=np.array([[1.0]]),
            f=lambda x, y: y, g=lambda x, y: x, epsilon=0.0,
        )


def test_manifold_first_order_scalar_value():
    s = scalar_family_gx(0.1)
    y1 = manifold_first_order(s, np.array([1.0]))
    np.testing.assert_allclose(y1, [0.1])


def test_manifold_second_order_scalar_value():
    # g = x + y adds the eps^2 Jacobian correction: y2 = eps x + eps^2 x
    s = scalar_family_gxy(0.1)
    y2 = manifold_second_order(s, np.array([1.0]))
    np.testing.assert_allclose(y2, [0.11], atol=1e-9)


def test_manifold_second_order_with_slow_coupling():
    # f = -x + y contributes through dg/dx with f(x,0) = -x:
    # y2 = eps x + eps^2 (y1 - (-x)) = eps x + 2 eps^2 x
    s = scalar_family_coupled(0.05)
    y2 = manifold_second_order(s, np.array([1.0]))
    np.testing.assert_allclose(y2, [0.05 + 2 * 0.05**2], atol=1e-9)


def test_reduced_vector_field_orders():
    s = scalar_family_gxy(0.1)
    x = np.array([2.0])
    v1 = reduced_vector_field(s, x, order=1)
    v2 = reduced_vector_field(s, x, order=2)
    np.testing.assert_allclose(v1, [0.2])
    np.testing.assert_allclose(v2, [0.22], atol=1e-8)


def test_integrate_full_tracks_slow_solution():
    # on-manifold start relaxes along x' ~ k x with k close to eps
    eps = 0.01
    s = scalar_family_gx(eps)
    x0 = np.array([1.0])
    y0 = manifold_first_order(s, x0)
    xs, ys = integrate_full(s, x0, y0, t_end=1.0)
    k = (-1.0 + np.sqrt(1.0 + 4.0 * eps**2)) / (2.0 * eps)
    assert xs[0] == pytest.approx(np.exp(k * 1.0), abs=1e-6)


def test_fit_loglog_slope_exact_power_law():
    eps = np.geomspace(1e-3, 1e-1, 6)
    slope, residual = fit_loglog_slope(eps, 3.0 * eps**2)
    assert slope == pytest.approx(2.0, abs=1e-12)
    assert residual < 1e-12


def test_fit_loglog_slope_needs_three_points():
    with pytest.raises(ValueError):
        fit_loglog_slope(np.array([0.1, 0.2]), np.array([1.0, 2.0]))


def test_expansion_residuals_shrink_with_epsilon():
    epsilons = np.geomspace(3e-3, 3e-2, 4)
    r1, r2 = expansion_residuals(
        scalar_family_coupled, np.array([1.0]), np.array([0.0]), 1.0, epsilons
    )
    assert np.all(np.diff(r1) > 0.0)
    assert np.all(np.diff(r2) > 0.0)
    assert np.all(r2 < r1)


def test_verify_expansion_order_first_order():
    slope = verify_expansion_order(
        scalar_family_coupled,
        np.array([1.0]),
        np.array([0.0]),
        t_probe=1.0,
        epsilons=np.geomspace(1e-3, 1e-2, 4),
        order=1,
    )
    assert 1.6 <= slope <= 2.4


def test_verify_expansion_order_rejects_bad_order():
    with pytest.raises(ValueError):
        verify_expansion_order(
            scalar_family_gx, np.array([1.0]), np.array([0.0]), 1.0, order=3
        )
