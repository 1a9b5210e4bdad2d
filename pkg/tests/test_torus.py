import numpy as np
import pytest

from anosovlab.torus import (
    wrap_point,
    wrap_diff,
    torus_dist,
    wrap_angle,
    proj_dist,
    wrap_halfpi,
    direction_vector,
    angle_of,
    projective_action,
    inv2,
    det2,
    opnorm2,
    opnorm2_min,
)


def test_wrap_point_idempotent():
    p = np.array([1.25, -0.75])
    w = wrap_point(p)
    assert np.allclose(w, [0.25, 0.25])
    assert np.allclose(wrap_point(w), w)


def test_wrap_diff_minimal_image():
    assert np.allclose(wrap_diff(0.9), -0.1)
    assert np.allclose(wrap_diff(-0.9), 0.1)
    assert np.allclose(wrap_diff(0.4), 0.4)


def test_torus_dist_wraparound():
    assert np.isclose(torus_dist([0.95, 0.0], [0.05, 0.0]), 0.1)
    assert np.isclose(torus_dist([0.1, 0.1], [0.1, 0.1]), 0.0)


def test_proj_dist_symmetry_and_pi_periodicity():
    a, b = 0.3, 2.9
    assert np.isclose(proj_dist(a, b), proj_dist(b, a))
    assert np.isclose(proj_dist(a, a + np.pi), 0.0)
    assert proj_dist(0.0, np.pi / 2) == pytest.approx(np.pi / 2)


def test_wrap_halfpi_range():
    x = np.linspace(-10, 10, 201)
    w = wrap_halfpi(x)
    assert np.all(w >= -np.pi / 2) and np.all(w < np.pi / 2)
    assert np.allclose(np.cos(2 * (x - w)), 1.0)


def test_angle_roundtrip():
    th = np.linspace(0, np.pi, 50, endpoint=False)
    assert np.allclose(angle_of(direction_vector(th)), th)
    # opposite vector represents the same line
    assert np.allclose(angle_of(-direction_vector(th)), th)


def test_angle_of_zero_vector_raises():
    with pytest.raises(ValueError):
        angle_of([0.0, 0.0])


def test_projective_action_composition():
    rng = np.random.default_rng(0)
    for _ in range(20):
        M = rng.normal(size=(2, 2))
        N = rng.normal(size=(2, 2))
        if abs(np.linalg.det(M)) < 0.1 or abs(np.linalg.det(N)) < 0.1:
            continue
        th = rng.random() * np.pi
        lhs = projective_action(M @ N, th)
        rhs = projective_action(M, projective_action(N, th))
        assert proj_dist(lhs, rhs) < 1e-12


def test_projective_action_singular_raises():
    with pytest.raises(ValueError, match="non-invertible"):
        projective_action(np.zeros((2, 2)), 0.3)


def test_inv2_det2_against_numpy():
    rng = np.random.default_rng(1)
    M = rng.normal(size=(7, 2, 2)) + 2 * np.eye(2)
    assert np.allclose(inv2(M), np.linalg.inv(M))
    assert np.allclose(det2(M), np.linalg.det(M))


def test_opnorm2_against_svd():
    rng = np.random.default_rng(2)
    M = rng.normal(size=(30, 2, 2))
    sv = np.linalg.svd(M, compute_uv=False)
    assert np.allclose(opnorm2(M), sv[:, 0])
    assert np.allclose(opnorm2_min(M), sv[:, 1])
