"""Regularity analysis of computed sections: derivatives, Hoelder fits,
leaf integration, and holonomy maps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .torus import wrap_point, wrap_diff, wrap_halfpi, direction_vector
from .transform import DerivField, Section, grid_points  # noqa: F401  (re-export)


@dataclass(frozen=True)
class Transversal:
    base: np.ndarray
    angle: float
    half_length: float
    samples: int

    def __post_init__(self):
        object.__setattr__(self, "base", wrap_point(self.base))
        if not 0.0 < self.half_length < 0.5:
            raise ValueError("half_length must lie in (0, 1/2)")
        if self.samples < 2:
            raise ValueError("need at least 2 samples")

    def points(self):
        t = np.linspace(-self.half_length, self.half_length, self.samples)
        return wrap_point(self.base + t[:, None] * direction_vector(self.angle)), t


@dataclass
class HolonomyResult:
    source_params: np.ndarray
    image_params: np.ndarray
    derivative_estimates: np.ndarray
    max_stretch: float


def finite_diff_deriv(sigma):
    """Centered differences of the angle field with wraparound; exact for
    affine angle fields up to rounding."""
    N = sigma.resolution
    th = sigma.theta
    h = np.empty((N, N, 2))
    for axis in range(2):
        d = wrap_halfpi(np.roll(th, -1, axis=axis) - np.roll(th, 1, axis=axis))
        h[..., axis] = d * N / 2.0
    return DerivField(h)


def holder_exponent(field, scales=None, n_pairs=200, seed=0):
    """Empirical Hoelder exponent of a derivative field.

    For each dyadic scale s the sup of ||H(x) - H(y)|| over random pairs at
    distance s is recorded; beta_hat is the least-squares slope of
    log sup vs log s, clamped to [0, 1].  Returns (beta_hat, fit_quality,
    flags) with flags containing "flat" for near-constant fields.
    """
    if scales is None:
        scales = [2.0 ** (-k) for k in range(3, 10)]
    scales = np.asarray(scales, dtype=float)
    if scales.size < 4:
        raise ValueError("need at least 4 scales")

    variation = float(np.ptp(field.h, axis=(0, 1)).max())
    if variation < 1e-9:
        return 1.0, 1.0, ["flat"]

    rng = np.random.default_rng(seed)
    sups = []
    for s in scales:
        x = rng.random((n_pairs, 2))
        psi = rng.random(n_pairs) * 2.0 * np.pi
        y = wrap_point(x + s * np.stack([np.cos(psi), np.sin(psi)], axis=-1))
        d = np.linalg.norm(field.interp(x) - field.interp(y), axis=-1)
        sups.append(d.max())
    sups = np.asarray(sups)
    if np.all(sups <= 0.0):
        return 1.0, 1.0, ["flat"]
    ls = np.log(scales)
    lv = np.log(np.maximum(sups, 1e-300))
    A = np.stack([ls, np.ones_like(ls)], axis=-1)
    coef, res, _, _ = np.linalg.lstsq(A, lv, rcond=None)
    slope = float(coef[0])
    ss_tot = float(np.sum((lv - lv.mean()) ** 2))
    r2 = 1.0 - float(res[0]) / ss_tot if (res.size and ss_tot > 0) else 1.0
    return float(np.clip(slope, 0.0, 1.0)), r2, []


def _field_from_section(sigma, band):
    return lambda pts: sigma.interp(pts, band)


def _oriented_step(field, x, heading, step):
    """One RK4 step along the unit direction field with consistent orientation."""

    def vec(p, hdg):
        v = direction_vector(field(p))
        dot = np.sum(v * hdg, axis=-1, keepdims=True)
        if np.any(np.abs(dot) < 1e-3):
            raise RuntimeError("step too large")
        return np.where(dot < 0, -v, v)

    k1 = vec(x, heading)
    k2 = vec(wrap_point(x + 0.5 * step * k1), k1)
    k3 = vec(wrap_point(x + 0.5 * step * k2), k2)
    k4 = vec(wrap_point(x + step * k3), k3)
    v = (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    return wrap_point(x + step * v), v / np.linalg.norm(v, axis=-1, keepdims=True)


def integrate_leaf(sigma, x0, arclen, step, band):
    """Fourth-order integration of the leaf of the direction field through x0."""
    field = _field_from_section(sigma, band)
    return integrate_leaf_field(field, x0, arclen, step)


def integrate_leaf_field(field, x0, arclen, step, heading=None):
    x = wrap_point(np.asarray(x0, dtype=float))
    if heading is None:
        heading = direction_vector(field(x))
    pts = [x]
    n_steps = int(np.ceil(arclen / step))
    for _ in range(n_steps):
        x, heading = _oriented_step(field, x, heading, step)
        pts.append(x)
    return np.stack(pts, axis=0)


def _cross_to_line(field, x0, heading, line_base, line_angle, max_arclen, step,
                   tol=1e-10):
    """Slide x0 along its leaf until the signed distance to the target line
    changes sign; refine the crossing by bisection on the step fraction."""
    d = direction_vector(line_angle)

    def signed(p):
        off = wrap_diff(p - line_base)
        return d[0] * off[1] - d[1] * off[0]

    x = wrap_point(np.asarray(x0, dtype=float))
    s_prev = signed(x)
    traveled = 0.0
    while traveled < max_arclen:
        x_next, h_next = _oriented_step(field, x, heading, step)
        s_next = signed(x_next)
        if np.sign(s_next) != np.sign(s_prev) or s_next == 0.0:
            lo, hi = 0.0, step
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                xm, _ = _oriented_step(field, x, heading, mid)
                if np.sign(signed(xm)) == np.sign(s_prev):
                    lo = mid
                else:
                    hi = mid
                if hi - lo < tol:
                    break
            xc, _ = _oriented_step(field, x, heading, 0.5 * (lo + hi))
            return xc
        x, heading, s_prev = x_next, h_next, s_next
        traveled += step
    return None


def holonomy_field(field, tau, tau_p, max_arclen, step=None):
    """Holonomy tau -> tau' along the leaves of an arbitrary direction field."""
    if step is None:
        step = max(min(tau.half_length, tau_p.half_length) / 10.0, 1e-4)
    pts, params = tau.points()
    d_target = direction_vector(tau_p.angle)
    images = np.full(len(params), np.nan)
    for k, p in enumerate(pts):
        # initial orientation: toward the target line
        v = direction_vector(field(p))
        gap = wrap_diff(tau_p.base - p)
        if np.dot(v, gap) < 0:
            v = -v
        xc = _cross_to_line(field, p, v, tau_p.base, tau_p.angle, max_arclen, step)
        if xc is not None:
            images[k] = float(np.dot(wrap_diff(xc - tau_p.base), d_target))
    ok = ~np.isnan(images)
    deriv = np.full(len(params), np.nan)
    idx = np.where(ok)[0]
    if idx.size >= 2:
        deriv[idx[:-1]] = np.diff(images[idx]) / np.diff(params[idx])
        deriv[idx[-1]] = deriv[idx[-2]]
    stretch = float(np.nanmax(np.abs(deriv))) if idx.size >= 2 else float("nan")
    return HolonomyResult(params, images, deriv, stretch)


def holonomy(sigma, tau, tau_p, max_arclen, band, step=None):
    """Holonomy along the leaves of a computed section (see holonomy_field)."""
    field = _field_from_section(sigma, band)
    pts, _ = tau.points()
    for t in (tau, tau_p):
        ang = np.abs(wrap_halfpi(field(t.points()[0]) - t.angle))
        if np.min(ang) < 0.1:
            raise ValueError("transversal nearly tangent to the field")
    return holonomy_field(field, tau, tau_p, max_arclen, step)


def holonomy_csv(path, result):
    with open(path, "w") as fh:
        fh.write("# schema=holonomy version=1\n")
        fh.write("param,image_param,deriv\n")
        for p, i, d in zip(result.source_params, result.image_params,
                           result.derivative_estimates):
            fh.write("%.17g,%.17g,%.17g\n" % (p, i, d))
