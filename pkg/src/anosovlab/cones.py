"""Verification of the common cone condition for a family of torus maps.

A cone field is given by two transversal center directions H (unstable
center) and V (stable center) and a slope aperture mu in (0,1):

    K^s(x) = { v = v1 H + v2 V : |v1| <= mu |v2| },
    K^u(x) = { v = v1 H + v2 V : |v2| <= mu |v1| }.

The checks sample a uniform grid and test boundary rays of each cone
under Df and Df^{-1}; stable-side quantities are sampled at preimage grid
points so no numerical inversion of the map is needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .torus import (
    direction_vector,
    angle_of,
    proj_dist,
    projective_action,
    inv2,
)

MARGIN_PASS = 1e-6


@dataclass(frozen=True)
class ConeField:
    h_angle: float          # center direction of K^u
    v_angle: float          # center direction of K^s
    mu: float

    def __post_init__(self):
        if not 0.0 < self.mu < 1.0:
            raise ValueError("aperture mu must lie in (0, 1)")
        if proj_dist(self.h_angle, self.v_angle) < 1e-9:
            raise ValueError("cone centers must be transversal")

    def frame(self):
        """Columns (H, V) as a 2x2 matrix mapping frame coords to the plane."""
        return np.stack([direction_vector(self.h_angle),
                         direction_vector(self.v_angle)], axis=-1)

    def boundary_angles(self, which):
        """Angles of the two boundary rays of K^u ('u') or K^s ('s')."""
        F = self.frame()
        if which == "u":
            combos = np.array([[1.0, self.mu], [1.0, -self.mu]])
        else:
            combos = np.array([[self.mu, 1.0], [-self.mu, 1.0]])
        return angle_of(np.einsum("ij,kj->ki", F, combos))

    def slope(self, v, which):
        """|minor| / |major| frame-component ratio; <= mu means inside the cone."""
        Finv = inv2(self.frame())
        c = np.einsum("ij,...j->...i", Finv, np.asarray(v, dtype=float))
        if which == "u":
            return np.abs(c[..., 1]) / np.maximum(np.abs(c[..., 0]), 1e-300)
        return np.abs(c[..., 0]) / np.maximum(np.abs(c[..., 1]), 1e-300)

    def cone_directions(self, which, count=17):
        """Angles sampling a cone between its boundary rays (center included)."""
        F = self.frame()
        t = np.linspace(-self.mu, self.mu, count)
        if which == "u":
            combos = np.stack([np.ones_like(t), t], axis=-1)
        else:
            combos = np.stack([t, np.ones_like(t)], axis=-1)
        return angle_of(np.einsum("ij,kj->ki", F, combos))


@dataclass
class ConeReport:
    invariant_s: bool
    invariant_u: bool
    angle_margin: float
    eta_u: float
    eta_s: float
    worst_points: list = field(default_factory=list)

    @property
    def passes(self):
        return (self.invariant_s and self.invariant_u
                and self.angle_margin > MARGIN_PASS
                and min(self.eta_u, self.eta_s) > 1.0)


def _grid_points(grid):
    ax = np.arange(grid) / grid
    return np.stack(np.meshgrid(ax, ax, indexing="ij"), axis=-1).reshape(-1, 2)


def _signed_margins(cones, M, which):
    """Signed angular margin of the image of each boundary ray of a cone.

    Positive: image strictly inside the target cone, measured to the nearest
    boundary ray.  Negative: outside, by the same angular distance.
    """
    bdry = cones.boundary_angles(which)
    margins = []
    for th in bdry:
        img = projective_action(M, th)
        d0 = proj_dist(img, bdry[0])
        d1 = proj_dist(img, bdry[1])
        inside = cones.slope(direction_vector(img), which) <= cones.mu * (1.0 + 1e-12)
        margins.append(np.where(inside, np.minimum(d0, d1), -np.minimum(d0, d1)))
    return np.stack(margins, axis=-1)


def check_invariance(f, cones, grid=64):
    """Cone-field invariance of a single map: Df K^u into K^u, Df^-1 K^s into K^s."""
    pts = _grid_points(grid)
    J = f.tangent(pts)
    Jinv = inv2(J)

    mu_u = _signed_margins(cones, J, "u")        # Df at x, target K^u(f x)
    mu_s = _signed_margins(cones, Jinv, "s")     # D_{f x} f^-1, target K^s(x)

    min_u = mu_u.min(axis=-1)
    min_s = mu_s.min(axis=-1)
    worst = []
    for mins in (min_u, min_s):
        if mins.min() < -1e-12:
            worst.append(tuple(pts[int(np.argmin(mins))]))
    return ConeReport(
        invariant_s=bool(min_s.min() >= -1e-12),
        invariant_u=bool(min_u.min() >= -1e-12),
        angle_margin=float(max(min(min_u.min(), min_s.min()), 0.0)),
        eta_u=float("nan"),
        eta_s=float("nan"),
        worst_points=worst,
    )


def expansion_constants(f, cones, grid=64, n_dirs=17):
    """(eta_u, eta_s): minimal expansion of Df on K^u and of Df^-1 on K^s."""
    pts = _grid_points(grid)
    J = f.tangent(pts)
    Jinv = inv2(J)
    vu = direction_vector(cones.cone_directions("u", n_dirs))
    vs = direction_vector(cones.cone_directions("s", n_dirs))
    eta_u = np.linalg.norm(np.einsum("pij,dj->pdi", J, vu), axis=-1).min()
    eta_s = np.linalg.norm(np.einsum("pij,dj->pdi", Jinv, vs), axis=-1).min()
    return float(eta_u), float(eta_s)


def common_condition(fam, cones, n_max, grid=64, n_dirs=17):
    """Worst-case aggregate of the invariance and expansion checks over n = 1..n_max."""
    agg = None
    for n in range(1, n_max + 1):
        f = fam.spec_at(n)
        rep = check_invariance(f, cones, grid)
        eta_u, eta_s = expansion_constants(f, cones, grid, n_dirs)
        rep.eta_u, rep.eta_s = eta_u, eta_s
        if agg is None:
            agg = rep
        else:
            agg = ConeReport(
                invariant_s=agg.invariant_s and rep.invariant_s,
                invariant_u=agg.invariant_u and rep.invariant_u,
                angle_margin=min(agg.angle_margin, rep.angle_margin),
                eta_u=min(agg.eta_u, rep.eta_u),
                eta_s=min(agg.eta_s, rep.eta_s),
                worst_points=agg.worst_points + rep.worst_points,
            )
    return agg
