"""Delay-operator polynomial arithmetic, root finding, and the design matrix."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptive_pp import (
    Polynomial,
    coprimeness_margin,
    poly_mul,
    poly_roots,
    spectral_radius,
    sylvester_matrix,
    sylvester_rcond,
)

# ---------------------------------------------------------------------------
# Polynomial basics


def test_coeffs_are_low_first_and_degree_counts_trailing_zeros():
    p = Polynomial([1.0, -0.6, 0.0])
    assert p.degree == 2
    assert p.coeffs.tolist() == [1.0, -0.6, 0.0]
    assert p.trimmed().degree == 1


def test_polynomial_is_immutable():
    p = Polynomial([1.0, 2.0])
    with pytest.raises(AttributeError):
        p.coeffs = np.array([0.0])
    with pytest.raises(ValueError):
        p.coeffs[0] = 5.0  # the array itself is frozen


def test_constructor_rejects_bad_input():
    with pytest.raises(ValueError):
        Polynomial([])
    with pytest.raises(ValueError):
        Polynomial([[1.0, 2.0], [3.0, 4.0]])
    with pytest.raises(ValueError):
        Polynomial([1.0, np.nan])
    with pytest.raises(ValueError):
        Polynomial([1.0, np.inf])


def test_monic_means_unit_constant_coefficient():
    assert Polynomial([1.0, 5.0]).is_monic
    assert not Polynomial([2.0, 1.0]).is_monic
    assert Polynomial([0.0]).is_zero
    assert not Polynomial([0.0, 1e-300]).is_zero


def test_call_evaluates_in_the_delay_variable():
    # p(q) = 1 - 0.6 q at q = 0.5
    p = Polynomial([1.0, -0.6])
    assert p(0.5) == pytest.approx(0.7, abs=1e-15)
    # q^2 at q = 3
    assert Polynomial([0.0, 0.0, 1.0])(3.0) == pytest.approx(9.0, abs=1e-12)


def test_padded_and_trimmed_roundtrip():
    p = Polynomial([1.0, 2.0])
    q = p.padded(4)
    assert q.degree == 4
    assert q.coeffs.tolist() == [1.0, 2.0, 0.0, 0.0, 0.0]
    assert q.trimmed().coeffs.tolist() == [1.0, 2.0]
    with pytest.raises(ValueError):
        q.trimmed().padded(0)
    assert Polynomial([0.0, 0.0]).trimmed().coeffs.tolist() == [0.0]


# ---------------------------------------------------------------------------
# products


def test_product_against_hand_expansion():
    # (1 - q)(1 + 0.5 q + 1.5 q^2) = 1 - 0.5 q + q^2 - 1.5 q^3
    prod = poly_mul(Polynomial([1.0, -1.0]), Polynomial([1.0, 0.5, 1.5]))
    np.testing.assert_allclose(prod.coeffs, [1.0, -0.5, 1.0, -1.5], atol=1e-15)

    # (1 + 2q)(3 - q) = 3 + 5q - 2q^2
    prod = poly_mul(Polynomial([1.0, 2.0]), Polynomial([3.0, -1.0]))
    np.testing.assert_allclose(prod.coeffs, [3.0, 5.0, -2.0], atol=1e-15)

    # q * q^2 = q^3
    prod = poly_mul(Polynomial([0.0, 1.0]), Polynomial([0.0, 0.0, 1.0]))
    np.testing.assert_allclose(prod.coeffs, [0.0, 0.0, 0.0, 1.0], atol=0.0)


def test_product_by_zero_and_fixed_degree():
    zero = Polynomial([0.0])
    prod = poly_mul(zero, Polynomial([1.0, 2.0, 3.0]))
    assert prod.is_zero and prod.degree == 0

    lifted = poly_mul(Polynomial([1.0, -1.0]), Polynomial([1.0, 1.0]), fixed_degree=5)
    assert lifted.degree == 5
    np.testing.assert_allclose(lifted.coeffs, [1.0, 0.0, -1.0, 0.0, 0.0, 0.0], atol=1e-15)

    with pytest.raises(ValueError):
        poly_mul(Polynomial([1.0, 1.0]), Polynomial([1.0, 1.0]), fixed_degree=1)


def test_mul_operator_matches_poly_mul():
    a = Polynomial([1.0, -0.3, 0.2])
    b = Polynomial([0.0, 1.0, 1.0])
    np.testing.assert_array_equal((a * b).coeffs, poly_mul(a, b).coeffs)
    with pytest.raises(TypeError):
        a * 2.0


coeff = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)
coeff_lists = st.lists(coeff, min_size=1, max_size=6)


@settings(max_examples=200, deadline=None)
@given(coeff_lists, coeff_lists)
def test_product_commutes(a, b):
    p, q = Polynomial(a), Polynomial(b)
    left, right = poly_mul(p, q), poly_mul(q, p)
    assert left.degree == right.degree
    np.testing.assert_allclose(left.coeffs, right.coeffs, atol=1e-9, rtol=1e-12)


@settings(max_examples=200, deadline=None)
@given(coeff_lists, coeff_lists, coeff_lists)
def test_product_is_associative(a, b, c):
    p, q, r = Polynomial(a), Polynomial(b), Polynomial(c)
    left = poly_mul(poly_mul(p, q), r)
    right = poly_mul(p, poly_mul(q, r))
    deg = max(left.degree, right.degree)
    np.testing.assert_allclose(
        left.padded(deg).coeffs, right.padded(deg).coeffs, atol=1e-6, rtol=1e-10
    )


@settings(max_examples=200, deadline=None)
@given(coeff_lists, coeff_lists, st.floats(min_value=-2.0, max_value=2.0))
def test_product_evaluates_pointwise(a, b, x):
    p, q = Polynomial(a), Polynomial(b)
    prod = poly_mul(p, q)
    assert prod(x) == pytest.approx(p(x) * q(x), abs=1e-6, rel=1e-9)


# ---------------------------------------------------------------------------
# roots of the lifted form


def test_roots_of_lifted_first_order_target():
    # q-polynomial 1 - 0.6 q declared at degree 5 lifts to z^4 (z - 0.6)
    p = Polynomial([1.0, -0.6]).padded(5)
    roots = poly_roots(p)
    np.testing.assert_allclose(roots, [0.0, 0.0, 0.0, 0.0, 0.6], atol=1e-12)
    # the four origin roots are deflated exactly, not iterated
    assert np.all(roots[:4] == 0.0)


def test_roots_symmetric_pair():
    # 1 - q^2 lifts to z^2 - 1
    roots = poly_roots(Polynomial([1.0, 0.0, -1.0]))
    np.testing.assert_allclose(roots, [-1.0, 1.0], atol=1e-12)


def test_roots_with_zero_constant_coefficient():
    # -0.75 q - 3 q^2 lifts to -0.75 z - 3, root -4; the z^2 lift degree is
    # dropped because the constant-in-z coefficient chain starts lower
    roots = poly_roots(Polynomial([0.0, -0.75, -3.0]))
    np.testing.assert_allclose(roots, [-4.0], atol=1e-12)


def test_roots_reject_zero_polynomial():
    with pytest.raises(ValueError):
        poly_roots(Polynomial([0.0, 0.0]))


def test_roots_are_sorted_deterministically():
    p = Polynomial([1.0, 0.0, 0.25])  # z^2 + 0.25: roots +-0.5i
    roots = poly_roots(p)
    np.testing.assert_allclose(roots.real, [0.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(roots.imag, [-0.5, 0.5], atol=1e-12)


def test_random_root_sets_are_recovered():
    rng = np.random.default_rng(7)
    for _ in range(20):
        size = int(rng.integers(2, 7))
        while True:
            roots = np.sort(rng.uniform(-0.95, 0.95, size=size))
            if size < 2 or np.diff(roots).min() > 0.15:
                break
        # np.poly gives z^d + c1 z^{d-1} + ...; read as low-first q-coefficients
        # it is exactly the polynomial whose lift has these roots
        p = Polynomial(np.poly(roots))
        got = poly_roots(p)
        oracle = np.sort(np.roots(np.poly(roots)).real)
        np.testing.assert_allclose(np.sort(got.real), oracle, atol=1e-8)
        np.testing.assert_allclose(got.imag, np.zeros(size), atol=1e-8)


def test_spectral_radius_examples():
    assert spectral_radius(Polynomial([1.0, -0.6]), 5) == pytest.approx(0.6, abs=1e-12)
    assert spectral_radius(Polynomial([1.0, 0.0, -0.25]), 2) == pytest.approx(0.5, abs=1e-12)
    # constants have no roots at all once lifted zeros are discounted
    assert spectral_radius(Polynomial([1.0]), 4) == 0.0
    with pytest.raises(ValueError):
        spectral_radius(Polynomial([1.0, 1.0, 1.0]), 1)


# ---------------------------------------------------------------------------
# design system matrix


def test_sylvester_identity_case():
    # abar = 1 (declared at degree 2), bhat = q: the system matrix is I_3
    abar = Polynomial([1.0, 0.0, 0.0])
    bhat = Polynomial([0.0, 1.0])
    m = sylvester_matrix(abar, bhat, 1)
    np.testing.assert_array_equal(m, np.eye(3))
    assert coprimeness_margin(abar, bhat, 1) == pytest.approx(1.0, abs=1e-15)
    assert sylvester_rcond(m) == pytest.approx(1.0, abs=1e-12)


def test_sylvester_matrix_lists_product_coefficients():
    # For any L, P of the right shape, M @ [l; p] must equal the coefficients
    # of abar*(L-1) + bhat*P on q^1..q^{2n+1}.
    rng = np.random.default_rng(3)
    n = 2
    abar = Polynomial(np.concatenate(([1.0], rng.uniform(-1, 1, n + 1))))
    bhat = Polynomial(np.concatenate(([0.0], rng.uniform(-1, 1, n))))
    m = sylvester_matrix(abar, bhat, n)
    l_coef = rng.uniform(-1, 1, n)
    p_coef = rng.uniform(-1, 1, n + 1)
    L = Polynomial(np.concatenate(([1.0], l_coef)))
    P = Polynomial(np.concatenate(([0.0], p_coef)))
    dim = 2 * n + 1
    combo = (
        poly_mul(abar, L, fixed_degree=dim).coeffs
        - abar.padded(dim).coeffs
        + poly_mul(bhat, P, fixed_degree=dim).coeffs
    )
    np.testing.assert_allclose(m @ np.concatenate((l_coef, p_coef)), combo[1:], atol=1e-12)


def test_sylvester_rejects_malformed_inputs():
    good_abar = Polynomial([1.0, 0.5, 0.25])
    good_bhat = Polynomial([0.0, 1.0])
    with pytest.raises(ValueError):
        sylvester_matrix(good_abar, good_bhat, 0)
    with pytest.raises(ValueError):
        sylvester_matrix(Polynomial([2.0, 0.0, 0.0]), good_bhat, 1)  # not monic
    with pytest.raises(ValueError):
        sylvester_matrix(Polynomial([1.0, 0.0]), good_bhat, 1)  # wrong degree
    with pytest.raises(ValueError):
        sylvester_matrix(good_abar, Polynomial([1.0, 1.0]), 1)  # constant term
    with pytest.raises(ValueError):
        sylvester_matrix(good_abar, Polynomial([0.0, 1.0, 1.0]), 1)  # degree too high


def test_common_factor_collapses_the_margin():
    # abar = (1 - q)(1 + 0.5 q + 1.5 q^2) and bhat = q(1 - q) share a factor,
    # so the design system must be singular.
    abar = poly_mul(Polynomial([1.0, -1.0]), Polynomial([1.0, 0.5, 1.5]))
    bhat = Polynomial([0.0, 1.0, -1.0])
    assert abar.degree == 3 and abar.is_monic
    margin = coprimeness_margin(abar, bhat, 2)
    assert margin < 1e-12
    assert sylvester_rcond(sylvester_matrix(abar, bhat, 2)) < 1e-12


def test_margin_positive_for_coprime_pair():
    abar = Polynomial([1.0, -0.5, 0.0, 0.25])
    bhat = Polynomial([0.0, -0.75, -3.0])
    assert coprimeness_margin(abar, bhat, 2) > 1e-3


def test_rcond_of_exactly_singular_matrix_is_zero():
    assert sylvester_rcond(np.zeros((3, 3))) == 0.0
    # rank deficiency shows up at rounding level through the SVD
    assert sylvester_rcond(np.array([[1.0, 1.0], [1.0, 1.0]])) < 1e-15
