import numpy as np
import pytest

from anosovlab.regularity import (
    Transversal,
    finite_diff_deriv,
    holder_exponent,
    integrate_leaf,
    integrate_leaf_field,
    holonomy,
    holonomy_field,
    holonomy_csv,
)
from anosovlab.transform import Section, DerivField, Band, grid_points
from anosovlab.torus import wrap_diff


def test_transversal_validation():
    with pytest.raises(ValueError):
        Transversal(np.array([0.1, 0.1]), 0.0, 0.6, 5)
    with pytest.raises(ValueError):
        Transversal(np.array([0.1, 0.1]), 0.0, 0.1, 1)
    tau = Transversal(np.array([0.1, 0.1]), np.pi / 2, 0.2, 5)
    pts, params = tau.points()
    assert pts.shape == (5, 2) and params[0] == -0.2 and params[-1] == 0.2


def test_finite_diff_exact_for_linear_angle_field():
    N = 64
    X = grid_points(N)
    theta = 0.8 + 0.05 * np.sin(2 * np.pi * X[..., 0])
    fd = finite_diff_deriv(Section(theta))
    want = 0.05 * 2 * np.pi * np.cos(2 * np.pi * X[..., 0])
    # centered differences of a smooth field: O(h^2) accuracy
    assert np.max(np.abs(fd.h[..., 0] - want)) < 1e-2
    assert np.max(np.abs(fd.h[..., 1])) < 1e-12


def test_holder_exponent_flat_field():
    beta, fit, flags = holder_exponent(DerivField.zero(32))
    assert beta == 1.0 and "flat" in flags


def test_holder_exponent_needs_scales():
    with pytest.raises(ValueError):
        holder_exponent(DerivField.zero(16), scales=[0.5, 0.25])


def test_holder_exponent_seed_reproducible():
    N = 256
    X = grid_points(N)
    h = np.zeros((N, N, 2))
    for k in range(7):
        h[..., 0] += 2.0 ** (-k / 2) * np.cos(2 * np.pi * 2 ** k * X[..., 0])
    b1 = holder_exponent(DerivField(h), seed=11)
    b2 = holder_exponent(DerivField(h), seed=11)
    assert b1 == b2


def test_integrate_leaf_constant_field_is_straight():
    ang = 0.3
    sig = Section.constant(ang, 16)
    band = Band(ang, 0.4)
    pts = integrate_leaf(sig, [0.1, 0.2], arclen=0.3, step=0.01, band=band)
    d = wrap_diff(pts[-1] - pts[0])
    assert np.isclose(np.linalg.norm(d), 0.3, atol=1e-10)
    assert np.isclose(np.arctan2(d[1], d[0]), ang, atol=1e-10)


def test_integrate_leaf_field_orientation_continuity():
    # a field with angles near the 0 ~ pi seam must not flip direction
    field = lambda p: np.full(np.shape(p)[:-1], 0.02) % np.pi
    pts = integrate_leaf_field(field, [0.5, 0.5], arclen=0.5, step=0.01)
    steps = wrap_diff(np.diff(pts, axis=0))
    assert np.all(steps[:, 0] > 0)  # never reverses through the seam


def test_holonomy_along_constant_field_is_isometry():
    ang = np.pi / 4
    sig = Section.constant(ang, 16)
    band = Band(ang, 0.3)
    tau = Transversal(np.array([0.2, 0.2]), np.pi / 2, 0.1, 9)
    tau_p = Transversal(np.array([0.45, 0.2]), np.pi / 2, 0.3, 9)
    res = holonomy(sig, tau, tau_p, max_arclen=1.5, band=band)
    ok = ~np.isnan(res.image_params)
    assert ok.sum() >= 7
    # holonomy between parallel transversals along parallel lines: shift by a constant
    shifts = res.image_params[ok] - res.source_params[ok]
    assert np.ptp(shifts) < 1e-6
    assert res.max_stretch == pytest.approx(1.0, abs=1e-4)


def test_holonomy_rejects_tangent_transversal():
    ang = 0.3
    sig = Section.constant(ang, 16)
    band = Band(ang, 0.3)
    tau = Transversal(np.array([0.2, 0.2]), ang, 0.1, 5)  # tangent to the field
    tau_p = Transversal(np.array([0.5, 0.2]), np.pi / 2, 0.2, 5)
    with pytest.raises(ValueError, match="tangent"):
        holonomy(sig, tau, tau_p, max_arclen=1.0, band=band)


def test_holonomy_csv(tmp_path):
    ang = np.pi / 4
    sig = Section.constant(ang, 16)
    band = Band(ang, 0.3)
    tau = Transversal(np.array([0.2, 0.2]), np.pi / 2, 0.1, 5)
    tau_p = Transversal(np.array([0.4, 0.2]), np.pi / 2, 0.3, 5)
    res = holonomy(sig, tau, tau_p, max_arclen=1.0, band=band)
    path = tmp_path / "holo.csv"
    holonomy_csv(path, res)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# schema=holonomy")
    assert len(lines) == 2 + 5
