import numpy as np
import pytest

from anosovlab.maps import LinearMap, TrigPerturbedMap, MapFamily
from anosovlab.torus import angle_of, proj_dist, projective_action, inv2
from anosovlab.transform import (
    Band,
    Section,
    DerivField,
    FiberInvarianceError,
    ConvergenceError,
    fiber_map,
    graph_transform,
    derivative_transform,
    compose_prefix,
    cone_pullback,
    diagnostics_sweep,
    solve_section,
    default_band,
    grid_points,
    section_to_csv,
    section_from_csv,
)
from anosovlab.cones import ConeField

CAT = np.array([[2, 1], [1, 1]])


def _eig_angles():
    evals, evecs = np.linalg.eigh(CAT.astype(float))
    order = np.argsort(np.abs(evals))
    return (float(angle_of(evecs[:, order[0]])),   # stable
            float(angle_of(evecs[:, order[1]])))   # unstable


def test_band_validation_and_lift():
    with pytest.raises(ValueError):
        Band(0.3, 0.0)
    with pytest.raises(ValueError):
        Band(0.3, np.pi / 4)
    b = Band(0.1, 0.3)
    th = np.array([0.1, 0.1 + np.pi, 0.3])
    lifted = b.lift(th)
    assert np.allclose(lifted, [0.1, 0.1, 0.3])
    assert b.contains(0.35) and not b.contains(0.5)


def test_section_interp_exact_on_nodes():
    s_ang, _ = _eig_angles()
    band = Band(s_ang, 0.4)
    sig = Section.constant(s_ang + 0.2, 32)
    pts = grid_points(32).reshape(-1, 2)
    assert np.max(proj_dist(sig.interp(pts, band), s_ang + 0.2)) < 1e-12


def test_fiber_map_matches_projective_action():
    m = LinearMap(CAT)
    z = 0.7
    got = fiber_map(m, [0.3, 0.4], z)
    want = projective_action(inv2(CAT.astype(float)), z)
    assert proj_dist(got, want) < 1e-12


def test_graph_transform_fixed_point_is_stable_direction():
    s_ang, _ = _eig_angles()
    band = Band(s_ang, 0.3)
    sig = Section.constant(s_ang, 64)
    out = graph_transform(LinearMap(CAT), sig, band)
    assert np.max(proj_dist(out.theta, s_ang)) < 1e-12


def test_graph_transform_band_escape_raises():
    # a band around the unstable direction is repelled by the inverse action
    _, u_ang = _eig_angles()
    band = Band(u_ang, 0.2)
    sig = Section.constant(u_ang + 0.19, 16)
    with pytest.raises(FiberInvarianceError):
        for _ in range(10):
            sig = graph_transform(LinearMap(CAT), sig, band)


def test_compose_prefix_matches_cone_pullback():
    s_ang, u_ang = _eig_angles()
    cones = ConeField(u_ang, s_ang, mu=0.25)
    band = default_band(cones)
    f = TrigPerturbedMap(CAT, 0.05, np.array([[1, 0], [0, 1]]))
    fam = MapFamily.periodic([LinearMap(CAT), f])
    N = 48
    sig = compose_prefix(fam, 25, Section.constant(band.center, N), band)
    X = grid_points(N)
    oracle = cone_pullback(fam, 25, X, band.center)
    assert np.max(proj_dist(sig.theta, oracle)) < 1e-6 + 1.0 / N


def test_compose_prefix_reports_failing_index():
    _, u_ang = _eig_angles()
    band = Band(u_ang, 0.1)
    fam = MapFamily.constant_family(LinearMap(CAT))
    with pytest.raises(FiberInvarianceError) as ei:
        compose_prefix(fam, 8, Section.constant(u_ang + 0.09, 16), band)
    assert ei.value.index is not None


def test_derivative_transform_zero_for_linear():
    s_ang, _ = _eig_angles()
    band = Band(s_ang, 0.3)
    sig = Section.constant(s_ang, 16)
    H = derivative_transform(LinearMap(CAT), sig, DerivField.zero(16), band)
    assert H.sup_norm() < 1e-14


def test_diagnostics_cat_oracle():
    """Independent oracle: differentiate the projective action of the inverse
    cat matrix at its fixed (stable) direction by finite differences."""
    s_ang, _ = _eig_angles()
    band = Band(s_ang, 0.3)
    sig = Section.constant(s_ang, 16)
    d = diagnostics_sweep(LinearMap(CAT), sig, band, beta=0.5)
    Minv = inv2(CAT.astype(float))
    h = 1e-7
    lam_fd = abs((projective_action(Minv, s_ang + h)
                  - projective_action(Minv, s_ang - h)) / (2 * h))
    kappa = np.linalg.svd(CAT.astype(float), compute_uv=False)[0]
    assert d["lambda_hat"] == pytest.approx(lam_fd, abs=1e-6)
    assert d["kappa_hat"] == pytest.approx(kappa, rel=1e-12)
    assert d["delta_hat"] == pytest.approx(lam_fd * kappa, abs=1e-5)
    assert d["delta_beta_hat"] == pytest.approx(lam_fd * kappa ** 1.5, abs=1e-5)


def test_solve_section_periodic_family():
    s_ang, u_ang = _eig_angles()
    cones = ConeField(u_ang, s_ang, mu=0.25)
    band = default_band(cones)
    f = TrigPerturbedMap(CAT, 0.04, np.array([[1, 0], [0, 1]]))
    fam = MapFamily.periodic([LinearMap(CAT), f])
    sigma, H, diag = solve_section(fam, band, resolution=48, tol=1e-8, n_max=80)
    assert diag.residual < 1e-8
    X = grid_points(48)
    oracle = cone_pullback(fam, 40, X, band.center)
    assert np.max(proj_dist(sigma.theta, oracle)) < 1e-6 + 1.0 / 48


def test_solve_section_convergence_error():
    s_ang, _ = _eig_angles()
    band = Band(s_ang, 0.3)
    fam = MapFamily.constant_family(
        TrigPerturbedMap(CAT, 0.05, np.array([[1, 0], [0, 1]])))
    with pytest.raises(ConvergenceError):
        solve_section(fam, band, resolution=32, tol=1e-12, n_max=2)


def test_section_csv_roundtrip(tmp_path):
    s_ang, _ = _eig_angles()
    rng = np.random.default_rng(5)
    sig = Section(s_ang + 0.1 * rng.standard_normal((12, 12)))
    H = DerivField(rng.standard_normal((12, 12, 2)))
    path = tmp_path / "section.csv"
    section_to_csv(path, sig, H)
    first = path.read_text().splitlines()[0]
    assert first.startswith("# schema=section_deriv")
    sig2, H2 = section_from_csv(path)
    assert np.array_equal(sig.theta, sig2.theta)
    assert np.array_equal(H.h, H2.h)
    path2 = tmp_path / "bare.csv"
    section_to_csv(path2, sig)
    sig3, H3 = section_from_csv(path2)
    assert H3 is None and np.array_equal(sig.theta, sig3.theta)
