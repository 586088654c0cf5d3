import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from focklab.errors import DivergenceError, InvalidArgumentError, NumericalDomainError
from focklab.numerics import lattice_points, point
from focklab.spaces import (
    EntireFunction,
    FockParams,
    fock_quasi_norm,
    kernel_log_norms,
    normalized_kernel,
    pointwise_bound_ratio,
    rademacher_combination,
)
from focklab.weights import Weight

# Frozen constant for ||sum c s K/||K|| || <= C ||c||_2 over centers |nu| <= 2
# (observed maximum 1.40 over the three shipped weights).
RADEMACHER_C = 3.0

coords = st.floats(-3, 3, allow_nan=False)


def kernel_norm(u, alpha, p, n=1):
    """Closed form of ||K^alpha_u|| in F^p_alpha with the unit weight."""
    return math.exp(alpha * float(np.dot(u, u)) / 2) * (2 * math.pi / (p * alpha)) ** (n / p)


# -- evaluation ------------------------------------------------------------


def test_kernel_values():
    assert EntireFunction.kernel(point(0))(point(1 + 2j)) == pytest.approx(1.0)
    u = point(1 + 1j)
    assert EntireFunction.kernel(u)(u) == pytest.approx(math.exp(2.0))
    assert EntireFunction.monomial([2])(point(1 + 1j)) == 2j


@given(coords, coords, coords, coords, st.floats(0.2, 3))
def test_kernel_matches_complex_exponential(x, y, a, b, alpha):
    z, u = complex(x, y), complex(a, b)
    val = EntireFunction.kernel(point(u), alpha)(point(z))
    assert val == pytest.approx(np.exp(alpha * z * np.conj(u)), rel=1e-12)


@given(coords, coords, st.floats(-2, 2), st.floats(-2, 2))
def test_linear_combinations_evaluate_linearly(x, y, c1, c2):
    f = EntireFunction.kernel(point(1), coef=1.0)
    g = EntireFunction.monomial([1])
    h = f * c1 + g * c2
    z = point(complex(x, y))
    assert h(z) == pytest.approx(c1 * f(z) + c2 * g(z), abs=1e-9)
    assert (f - f)(z) == pytest.approx(0.0, abs=1e-12)


def test_overflow_is_reported():
    with pytest.raises(NumericalDomainError):
        EntireFunction.kernel(point(40))(point(40))


# -- quasi-norms -----------------------------------------------------------


def test_constant_function_norm():
    fp = FockParams(2.0, 1.0, Weight.constant())
    assert fock_quasi_norm(EntireFunction.kernel(point(0)), fp) == pytest.approx(math.sqrt(math.pi), rel=1e-9)
    assert fock_quasi_norm(EntireFunction.zero(), fp) == 0.0


@settings(max_examples=30)
@given(coords, coords, st.sampled_from([0.5, 1.0, 2.0, 3.0]), st.sampled_from([0.5, 1.0, 2.0]))
def test_kernel_norm_oracle(a, b, p, alpha):
    u = np.array([a, b])
    fp = FockParams(p, alpha, Weight.constant())
    assert fock_quasi_norm(EntireFunction.kernel(u, alpha), fp) == pytest.approx(kernel_norm(u, alpha, p), rel=1e-6)


def test_kernel_norm_in_two_dimensions():
    u = np.array([0.5, 0.0, 0.0, -0.5])
    fp = FockParams(2.0, 1.0, Weight.constant(n=2))
    val = fock_quasi_norm(EntireFunction.kernel(u), fp)
    assert val == pytest.approx(kernel_norm(u, 1.0, 2.0, 2), rel=1e-4)


def test_non_integrable_weight_diverges():
    fp = FockParams(1.0, 1.0, Weight.radial_power_gauss(0.0, -1.0))
    with pytest.raises(DivergenceError):
        fock_quasi_norm(EntireFunction.kernel(point(0)), fp)


def test_invalid_parameters():
    with pytest.raises(InvalidArgumentError):
        FockParams(0.0, 1.0, Weight.constant())
    with pytest.raises(InvalidArgumentError):
        FockParams(1.0, -1.0, Weight.constant())


# -- normalized kernels and Rademacher combinations ------------------------


def test_normalized_kernel_coefficients():
    f = normalized_kernel(point(0), FockParams(2.0, 1.0, Weight.constant()))
    assert math.exp(f.log_coefs[0]) == pytest.approx(math.pi ** -0.5, rel=1e-3)
    f = normalized_kernel(point(0), FockParams(2.0, 1.0, Weight.constant(3.0)))
    assert math.exp(f.log_coefs[0]) == pytest.approx((3 * math.pi) ** -0.5, rel=1e-3)


def test_normalized_kernel_norms_are_uniform():
    fp = FockParams(1.0, 1.0, Weight.constant())
    zs = lattice_points(1.5, 6.0, 1)
    vals = [fock_quasi_norm(normalized_kernel(z, fp), fp) for z in zs]
    # (2 pi / (p alpha))^{1/p} / pi^{1/p} = 2 for p = 1
    assert np.allclose(vals, 2.0, rtol=1e-3)


def test_single_term_combination_is_normalized():
    fp = FockParams(2.0, 1.0, Weight.exp_linear([0.5, 0.0]))
    F = rademacher_combination(np.zeros((1, 2)), [1.0], [1.0], fp)
    assert fock_quasi_norm(F, fp) == pytest.approx(1.0, rel=1e-8)


@pytest.mark.parametrize("w", [Weight.constant(), Weight.exp_linear([0.5, 0.0]), Weight.radial_power_gauss(1.0, 0.0)],
                         ids=["constant", "exp-linear", "radial"])
def test_rademacher_combinations_are_bounded(w):
    fp = FockParams(2.0, 1.0, w)
    nus = lattice_points(1.0, 2.0, 1)
    log_norms = kernel_log_norms(nus, fp)
    rng = np.random.default_rng(11)
    for _ in range(50):
        c = rng.uniform(0, 1, len(nus))
        s = rng.choice([-1.0, 1.0], len(nus))
        F = rademacher_combination(nus, c, s, fp, log_norms)
        assert fock_quasi_norm(F, fp) <= RADEMACHER_C * np.linalg.norm(c)


def test_rademacher_rejects_bad_signs():
    fp = FockParams(2.0, 1.0, Weight.constant())
    with pytest.raises(InvalidArgumentError):
        rademacher_combination(np.zeros((1, 2)), [1.0], [0.5], fp)


# -- local mean-value ratio ------------------------------------------------


def test_pointwise_bound_ratio_closed_form():
    fp = FockParams(2.0, 1.0, Weight.constant())
    val = pointwise_bound_ratio(EntireFunction.constant(), fp, point(0))
    assert val == pytest.approx(1 / (1 - math.exp(-1)), rel=1e-3)
    assert math.isnan(pointwise_bound_ratio(EntireFunction.zero(), fp, point(0)))


def test_pointwise_bound_ratio_is_stable_over_a_family():
    fp = FockParams(2.0, 1.0, Weight.exp_linear([0.5, 0.0]))
    rng = np.random.default_rng(5)
    zs = lattice_points(1.0, 3.0, 1)

    def family_sup(count):
        best = 0.0
        for _ in range(count):
            f = sum((EntireFunction.kernel(rng.uniform(-2, 2, 2), coef=rng.normal()) for _ in range(3)),
                    EntireFunction.zero())
            best = max(best, max(pointwise_bound_ratio(f, fp, z, step=0.1) for z in zs))
        return best

    small, large = family_sup(5), family_sup(15)
    assert math.isfinite(large)
    assert large < 5 * max(small, 1.0)
