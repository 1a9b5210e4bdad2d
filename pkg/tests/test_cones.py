import numpy as np
import pytest

from anosovlab.cones import ConeField, check_invariance, expansion_constants, common_condition
from anosovlab.maps import LinearMap, TrigPerturbedMap, MapFamily
from anosovlab.torus import angle_of

CAT = np.array([[2, 1], [1, 1]])


def _cat_cones(mu=0.2):
    evals, evecs = np.linalg.eigh(CAT.astype(float))
    order = np.argsort(np.abs(evals))
    return ConeField(h_angle=float(angle_of(evecs[:, order[1]])),
                     v_angle=float(angle_of(evecs[:, order[0]])), mu=mu)


def test_cone_field_validation():
    with pytest.raises(ValueError):
        ConeField(0.3, 1.0, mu=0.0)
    with pytest.raises(ValueError):
        ConeField(0.3, 1.0, mu=1.0)
    with pytest.raises(ValueError, match="transversal"):
        ConeField(0.3, 0.3 + np.pi, mu=0.2)


def test_slope_classifies_membership():
    cones = _cat_cones(mu=0.3)
    # the cone centers themselves have slope 0
    from anosovlab.torus import direction_vector
    assert cones.slope(direction_vector(cones.h_angle), "u") < 1e-12
    assert cones.slope(direction_vector(cones.v_angle), "s") < 1e-12
    # boundary rays have slope exactly mu
    for which in ("u", "s"):
        for th in cones.boundary_angles(which):
            assert cones.slope(direction_vector(th), which) == pytest.approx(0.3)


def test_cat_map_cone_invariance():
    cones = _cat_cones()
    rep = check_invariance(LinearMap(CAT), cones, grid=16)
    assert rep.invariant_u and rep.invariant_s
    assert rep.angle_margin > 1e-3
    eta_u, eta_s = expansion_constants(LinearMap(CAT), cones, grid=4)
    assert eta_u > 1.0 and eta_s > 1.0
    # expansion within the cones is bounded by the eigenvalue rates
    lam_u = (3 + np.sqrt(5)) / 2
    assert eta_u <= lam_u + 1e-9 and eta_s <= lam_u + 1e-9


def test_rotated_cones_fail():
    """Cones centered away from the eigenframe are not preserved."""
    cones = ConeField(h_angle=0.0, v_angle=np.pi / 2, mu=0.1)
    rep = check_invariance(LinearMap(CAT), cones, grid=8)
    assert not rep.passes
    assert rep.worst_points


def test_common_condition_trig_family():
    cones = _cat_cones(mu=0.25)
    f = TrigPerturbedMap(CAT, 0.05, np.array([[1, 0], [0, 1]]))
    fam = MapFamily.periodic([LinearMap(CAT), f])
    rep = common_condition(fam, cones, n_max=4, grid=24)
    assert rep.passes
    assert rep.eta_u > 1.0 and rep.eta_s > 1.0


def test_common_condition_aggregates_worst_case():
    cones = _cat_cones(mu=0.2)
    fam = MapFamily.constant_family(LinearMap(CAT))
    r1 = common_condition(fam, cones, n_max=1, grid=16)
    r3 = common_condition(fam, cones, n_max=3, grid=16)
    assert r3.angle_margin == pytest.approx(r1.angle_margin)
    assert r3.eta_u == pytest.approx(r1.eta_u)
