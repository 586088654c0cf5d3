import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from focklab.errors import InvalidArgumentError, NumericalDomainError
from focklab.numerics import (
    Ball,
    Cube,
    QuadratureGrid,
    ball_integral,
    cube_integral,
    from_complex,
    gaussian_tail,
    inner,
    integrate,
    lattice_points,
    point,
    tail_radius,
    to_complex,
)

coords = st.floats(-5, 5, allow_nan=False)


def brute_lattice_count(spacing, radius, n):
    k = int(radius / spacing) + 1
    rng = range(-k, k + 1)
    grid = np.array(np.meshgrid(*([rng] * (2 * n)), indexing="ij")).reshape(2 * n, -1).T * spacing
    return int(np.sum(np.sum(grid**2, axis=1) <= radius**2 + 1e-12))


# -- points and inner products ---------------------------------------------


def test_point_interleaves_real_and_imaginary_parts():
    assert point(1 + 2j, 3 - 1j).tolist() == [1.0, 2.0, 3.0, -1.0]
    assert to_complex(point(1 + 2j)).tolist() == [1 + 2j]
    assert from_complex([[1j, 2]]).tolist() == [[0.0, 1.0, 2.0, 0.0]]


@given(st.lists(coords, min_size=4, max_size=4), st.lists(coords, min_size=4, max_size=4))
def test_inner_matches_complex_arithmetic(z, u):
    z, u = np.array(z), np.array(u)
    zc, uc = to_complex(z), to_complex(u)
    assert np.isclose(inner(z, u), np.sum(zc * np.conj(uc)), atol=1e-12)


# -- cubes and balls -------------------------------------------------------


def test_cube_is_half_open():
    Q = Cube(point(0), 1.0)
    pts = np.array([[-0.5, -0.5], [0.5, 0.0], [0.0, 0.5], [0.49, 0.49]])
    assert Q.contains(pts).tolist() == [True, False, False, True]
    assert Q.volume == 1.0


def test_ball_is_open():
    B = Ball(point(0), 1.0)
    assert B.contains(np.array([[1.0, 0.0], [0.0, 0.999]])).tolist() == [False, True]
    assert math.isclose(B.volume, math.pi)
    assert math.isclose(Ball(np.zeros(4), 1.0).volume, math.pi**2 / 2)


@given(coords, coords)
def test_unit_cubes_tile_the_plane(x, y):
    z = np.array([[x, y]])
    nus = lattice_points(1.0, 9.0, 1)
    hits = sum(bool(Cube(nu, 1.0).contains(z)[0]) for nu in nus)
    assert hits == 1


# -- lattices --------------------------------------------------------------


def test_lattice_small_cases():
    assert lattice_points(1.0, 0.0, 1).tolist() == [[0.0, 0.0]]
    assert len(lattice_points(1.0, 1.5, 1)) == 9
    # half-integer pairs with a^2 + b^2 <= 1: the origin, 4 at distance 1/2,
    # 4 at 1/sqrt(2) and 4 at distance 1
    assert len(lattice_points(0.5, 1.0, 1)) == 13


@settings(max_examples=30)
@given(st.sampled_from([0.25, 0.5, 1.0, 2.0]), st.floats(0, 4), st.sampled_from([1, 2]))
def test_lattice_count_matches_brute_force(spacing, radius, n):
    if n == 2:
        radius = min(radius, 2.0)
    assert len(lattice_points(spacing, radius, n)) == brute_lattice_count(spacing, radius, n)


def test_lattice_rejects_bad_spacing():
    with pytest.raises(InvalidArgumentError):
        lattice_points(0.0, 1.0, 1)


# -- quadrature ------------------------------------------------------------


def test_integrate_gaussian():
    g = QuadratureGrid(0.05, 6.0, 1)
    val = integrate(lambda u: np.exp(-np.sum(u**2, axis=1)), g)
    assert abs(val / math.pi - 1) < 1e-6


def test_integrate_zero_and_disk():
    assert integrate(lambda u: np.zeros(len(u)), QuadratureGrid(0.1, 2.0)) == 0.0
    g = QuadratureGrid(0.01, 2.0, 1)
    disk = integrate(lambda u: (np.sum(u**2, axis=1) < 1).astype(float), g)
    assert abs(disk / math.pi - 1) < 1e-2


def test_integrate_reports_offending_node():
    g = QuadratureGrid(0.5, 1.0)
    with pytest.raises(NumericalDomainError) as info:
        integrate(lambda u: np.where(np.all(u == 0, axis=1), np.inf, 1.0), g)
    assert info.value.point.tolist() == [0.0, 0.0]


def test_gaussian_tail_closed_forms():
    assert math.isclose(gaussian_tail(1, 3, 1), math.pi * math.exp(-9), rel_tol=1e-12)
    assert math.isclose(gaussian_tail(2, 4, 1), math.pi / 2 * math.exp(-32), rel_tol=1e-12)
    assert math.isclose(gaussian_tail(1, 1e-9, 1), math.pi, rel_tol=1e-12)


@given(st.floats(0.1, 10), st.sampled_from([1, 2]), st.sampled_from([1e-4, 1e-8, 1e-12]))
def test_tail_radius_inverts_gaussian_tail(rate, n, tol):
    R = tail_radius(rate, n, tol)
    assert math.isclose(gaussian_tail(rate, R, n), tol * (math.pi / rate) ** n, rel_tol=1e-6)


@given(st.floats(0.3, 3.0), coords, coords)
@settings(max_examples=25)
def test_quadrature_is_translation_invariant_for_gaussians(rate, x, y):
    c = np.array([x, y])
    g = QuadratureGrid(0.1, tail_radius(rate, 1, 1e-12), 1, c)
    val = integrate(lambda u: np.exp(-rate * np.sum((u - c) ** 2, axis=1)), g)
    assert abs(val / (math.pi / rate) - 1) < 1e-6


def test_ball_and_cube_integrals_of_one():
    centers = np.array([[0.0, 0.0], [3.3, -1.2]])
    one = lambda u: np.ones(len(u))  # noqa: E731
    assert np.allclose(ball_integral(one, centers, 1.0, 0.05), math.pi, rtol=1e-3)
    assert np.allclose(cube_integral(one, centers, 2.0, 0.05), 4.0, rtol=1e-12)
    assert np.allclose(np.exp(cube_integral(lambda u: np.zeros(len(u)), centers, 1.0, 0.05, log=True)), 1.0)
