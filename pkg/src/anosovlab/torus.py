"""Flat 2-torus geometry and the projective circle of tangent directions.

Points live in [0,1)^2 with coordinates reduced mod 1.  A direction is an
angle in [0, pi) representing a line through the origin of the tangent
plane; since the tangent bundle of T^2 is trivial, a single global angle
chart is used for every base point.  All functions broadcast over leading
axes.
"""

from __future__ import annotations

import numpy as np

PI = np.pi


def wrap_point(p):
    """Reduce coordinates mod 1 into [0, 1). Idempotent."""
    return np.asarray(p, dtype=float) % 1.0


def wrap_diff(d):
    """Minimal-image representative of a coordinate difference, in [-1/2, 1/2)."""
    return (np.asarray(d, dtype=float) + 0.5) % 1.0 - 0.5


def torus_dist(p, q):
    """Shortest flat-metric distance on T^2, with wraparound."""
    d = wrap_diff(np.asarray(p, dtype=float) - np.asarray(q, dtype=float))
    return np.sqrt(np.sum(d * d, axis=-1))


def wrap_angle(theta):
    """Reduce a direction angle mod pi into [0, pi)."""
    return np.asarray(theta, dtype=float) % PI


def proj_dist(a, b):
    """Distance between two lines in RP^1: min(|a-b|, pi-|a-b|) mod pi. <= pi/2."""
    d = (np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % PI
    return np.minimum(d, PI - d)


def wrap_halfpi(d):
    """Representative of an angle difference mod pi taken in [-pi/2, pi/2)."""
    return (np.asarray(d, dtype=float) + PI / 2) % PI - PI / 2


def direction_vector(theta):
    """Unit vector (cos theta, sin theta); shape (..., 2)."""
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def angle_of(v):
    """Angle in [0, pi) of a nonzero vector (..., 2)."""
    v = np.asarray(v, dtype=float)
    n = np.sum(v * v, axis=-1)
    if np.any(n == 0.0):
        raise ValueError("zero vector has no direction")
    return np.arctan2(v[..., 1], v[..., 0]) % PI


def projective_action(M, theta):
    """Direction of M @ (cos theta, sin theta) for invertible M (..., 2, 2).

    Composition-compatible: action(M @ N, d) == action(M, action(N, d)).
    """
    M = np.asarray(M, dtype=float)
    det = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    if np.any(np.abs(det) < 1e-300):
        raise ValueError("non-invertible differential")
    v = direction_vector(theta)
    w = np.einsum("...ij,...j->...i", M, v)
    return angle_of(w)


def inv2(M):
    """Inverse of a batch of 2x2 matrices."""
    M = np.asarray(M, dtype=float)
    det = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    if np.any(np.abs(det) < 1e-300):
        raise ValueError("non-invertible differential")
    out = np.empty_like(M)
    out[..., 0, 0] = M[..., 1, 1]
    out[..., 1, 1] = M[..., 0, 0]
    out[..., 0, 1] = -M[..., 0, 1]
    out[..., 1, 0] = -M[..., 1, 0]
    return out / det[..., None, None]


def det2(M):
    M = np.asarray(M, dtype=float)
    return M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]


def opnorm2(M):
    """Spectral norm of 2x2 matrices (largest singular value), closed form."""
    M = np.asarray(M, dtype=float)
    a = np.sum(M * M, axis=(-2, -1))
    d = det2(M)
    # singular values s satisfy s^2 = (a +- sqrt(a^2 - 4 det^2)) / 2
    disc = np.sqrt(np.maximum(a * a - 4.0 * d * d, 0.0))
    return np.sqrt((a + disc) / 2.0)


def opnorm2_min(M):
    """Smallest singular value of 2x2 matrices."""
    M = np.asarray(M, dtype=float)
    a = np.sum(M * M, axis=(-2, -1))
    d = det2(M)
    disc = np.sqrt(np.maximum(a * a - 4.0 * d * d, 0.0))
    return np.sqrt(np.maximum((a - disc) / 2.0, 0.0))
