"""Projectivized skew products, the graph transform, and the invariant section.

The direction field sigma: T^2 -> RP^1 tangent to the non-stationary stable
foliation of a family (f_n) is the fixed object of the graph transform

    (Gamma_n sigma)(x) = direction of Df(x)^{-1} applied to sigma(f_n(x)),

acting on sections whose graphs lie in a band around a center angle.  The
paired derivative transform Psi_n pushes candidate derivative fields so
that the limit pair (sigma*, H*) satisfies H* = D sigma*.  A direct cone
pull-back of a seed direction through the chain of inverse differentials
serves as an independent oracle for sigma*.

Conventions: the skew-product base map is g_n = f_n^{-1}; the fiber map is
h_n(x, z) = angle of D_x(f_n^{-1}) applied to the line at angle z; both
transforms are evaluated on a uniform N x N grid with band-unwrapped
bilinear interpolation (legal because the band radius is < pi/4).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .torus import (
    PI,
    wrap_angle,
    wrap_halfpi,
    proj_dist,
    direction_vector,
    angle_of,
    inv2,
    det2,
    opnorm2,
)
from .maps import inverse_tangent


class FiberInvarianceError(RuntimeError):
    """A transformed section left its band (cones and band are mismatched)."""

    def __init__(self, message, index=None, worst_point=None):
        super().__init__(message)
        self.index = index
        self.worst_point = worst_point


class ConvergenceError(RuntimeError):
    """solve_section hit N_max without meeting the tolerance."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class Band:
    """Tube of angular radius r around a constant center angle."""

    center: float
    radius: float

    def __post_init__(self):
        if not 0.0 < self.radius < PI / 4:
            raise ValueError("band radius must lie in (0, pi/4)")
        object.__setattr__(self, "center", float(wrap_angle(self.center)))

    def lift(self, theta):
        """Angle lift relative to the band center, in center + (-pi/2, pi/2)."""
        return self.center + wrap_halfpi(np.asarray(theta, dtype=float) - self.center)

    def contains(self, theta, tol=1e-12):
        return np.abs(self.lift(theta) - self.center) <= self.radius + tol


@dataclass
class Section:
    """Direction field on the uniform lattice (i/N, j/N); theta has shape (N, N)."""

    theta: np.ndarray

    def __post_init__(self):
        self.theta = wrap_angle(np.asarray(self.theta, dtype=float))
        if self.theta.ndim != 2 or self.theta.shape[0] != self.theta.shape[1]:
            raise ValueError("section grid must be square")

    @property
    def resolution(self):
        return self.theta.shape[0]

    def interp(self, pts, band):
        """Band-unwrapped bilinear interpolation at torus points (..., 2)."""
        lift = band.lift(self.theta)
        return wrap_angle(_bilinear(lift, pts))

    @classmethod
    def constant(cls, theta, resolution):
        return cls(np.full((resolution, resolution), float(theta)))


@dataclass
class DerivField:
    """Candidate derivative field; h has shape (N, N, 2) = covector per grid node."""

    h: np.ndarray

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=float)
        if self.h.ndim != 3 or self.h.shape[-1] != 2:
            raise ValueError("derivative field must have shape (N, N, 2)")

    @property
    def resolution(self):
        return self.h.shape[0]

    def interp(self, pts):
        return np.stack([_bilinear(self.h[..., k], pts) for k in range(2)], axis=-1)

    def sup_norm(self):
        return float(np.max(np.linalg.norm(self.h, axis=-1)))

    @classmethod
    def zero(cls, resolution):
        return cls(np.zeros((resolution, resolution, 2)))


@dataclass
class ContractionDiagnostics:
    lambda_hat: float
    kappa_hat: float
    delta_hat: float
    iterations: int
    residual: float
    beta: Optional[float] = None
    delta_beta_hat: Optional[float] = None
    b_hat: float = float("nan")
    m_hat: float = float("nan")
    notes: list = field(default_factory=list)


def _bilinear(values, pts):
    """Periodic bilinear interpolation of an (N, N) nodal array at (..., 2) points."""
    N = values.shape[0]
    x = np.asarray(pts, dtype=float) % 1.0
    gx = x[..., 0] * N
    gy = x[..., 1] * N
    i0 = np.floor(gx).astype(int) % N
    j0 = np.floor(gy).astype(int) % N
    fx = gx - np.floor(gx)
    fy = gy - np.floor(gy)
    i1 = (i0 + 1) % N
    j1 = (j0 + 1) % N
    v00 = values[i0, j0]
    v10 = values[i1, j0]
    v01 = values[i0, j1]
    v11 = values[i1, j1]
    return ((1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v10
            + (1 - fx) * fy * v01 + fx * fy * v11)


def grid_points(resolution):
    ax = np.arange(resolution) / resolution
    return np.stack(np.meshgrid(ax, ax, indexing="ij"), axis=-1)


def fiber_map(f, x, z):
    """h(x, z): the induced action of D_x(f^{-1}) on the direction z."""
    return angle_of(np.einsum("...ij,...j->...i",
                              inverse_tangent(f, np.asarray(x, dtype=float)),
                              direction_vector(z)))


def graph_transform(f, sigma, band):
    """One sweep of Gamma: (Gamma sigma)(x) = Df(x)^{-1} . sigma(f x), projectively."""
    X = grid_points(sigma.resolution)
    Y = f.apply(X)
    z = sigma.interp(Y, band)
    Minv = inv2(f.tangent(X))
    w = np.einsum("...ij,...j->...i", Minv, direction_vector(z))
    theta = angle_of(w)
    dev = np.abs(wrap_halfpi(theta - band.center))
    if dev.max() > band.radius + 1e-12:
        idx = np.unravel_index(int(np.argmax(dev)), dev.shape)
        raise FiberInvarianceError("fiber invariance violated",
                                   worst_point=tuple(X[idx]))
    return Section(theta)


def compose_prefix(fam, depth, sigma0, band):
    """Gamma_1 o ... o Gamma_depth applied to sigma0 (deepest transform first)."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    sigma = sigma0
    for n in range(depth, 0, -1):
        try:
            sigma = graph_transform(fam.spec_at(n), sigma, band)
        except FiberInvarianceError as e:
            raise FiberInvarianceError(str(e), index=n, worst_point=e.worst_point) from None
    return sigma


def cone_pullback(fam, depth, x, seed):
    """E^s oracle: push x forward ``depth`` steps, pull the seed direction back.

    The working vector is renormalized each step, so arbitrarily deep
    pull-backs stay finite.  Vectorized over leading axes of ``x``.
    """
    x = np.asarray(x, dtype=float)
    orbit = [x]
    for n in range(1, depth + 1):
        orbit.append(fam.spec_at(n).apply(orbit[-1]))
    v = np.broadcast_to(direction_vector(seed), x.shape).copy()
    for n in range(depth, 0, -1):
        J = fam.spec_at(n).tangent(orbit[n - 1])
        v = np.linalg.solve(J, v[..., None])[..., 0]
        v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    return angle_of(v)


def _fiber_jet(f, sigma, band):
    """Per-grid-point data of the fiber map along y = f(x), z = sigma(y).

    Returns (lam, dyh, J, cov_frame) where lam = d h / d z, dyh = d h / d y
    (covector), J = Df at the grid, all evaluated so that no inverse map
    solve is required: M = D_{f x}(f^{-1}) = J^{-1}.
    """
    X = grid_points(sigma.resolution)
    J = f.tangent(X)
    Minv = inv2(J)
    Y = f.apply(X)
    z = sigma.interp(Y, band)
    u = direction_vector(z)
    w = np.einsum("...ij,...j->...i", Minv, u)
    n2 = np.sum(w * w, axis=-1)
    lam = det2(Minv) / n2

    # dM/dy_i = -M (sum_j d_{x_j}J * M_{j i}) M, with d J from the closed form
    dJ = f.dtangent(X)  # (..., a, b, j) = d_j J_ab
    dJ_dy = np.einsum("...abj,...ji->...abi", dJ, Minv)
    dM = -np.einsum("...ab,...bci,...cd->...adi", Minv, dJ_dy, Minv)
    dw = np.einsum("...abi,...b->...ai", dM, u)
    dyh = (w[..., 0, None] * dw[..., 1, :] - w[..., 1, None] * dw[..., 0, :]) / n2[..., None]
    return lam, dyh, J, Y


def derivative_transform(f, sigma, H, band):
    """One sweep of Psi: (Psi H)(x) = [d_y h + d_z h . H(y)] . Df(x), y = f(x)."""
    lam, dyh, J, Y = _fiber_jet(f, sigma, band)
    Hy = H.interp(Y)
    cov = dyh + lam[..., None] * Hy
    return DerivField(np.einsum("...i,...ik->...k", cov, J))


def diagnostics_sweep(f, sigma, band, beta=None):
    """Empirical contraction constants of one family member along ``sigma``."""
    lam, dyh, J, _ = _fiber_jet(f, sigma, band)
    kappa = opnorm2(J)
    lam_abs = np.abs(lam)
    out = {
        "lambda_hat": float(lam_abs.max()),
        "kappa_hat": float(kappa.max()),
        "delta_hat": float((lam_abs * kappa).max()),
        "b_hat": float(max(kappa.max(), lam_abs.max(),
                           np.linalg.norm(dyh, axis=-1).max())),
    }
    if beta is not None:
        out["delta_beta_hat"] = float((lam_abs * kappa ** (1.0 + beta)).max())
    # sampled Lipschitz constant of (x, z) -> Dh, from grid/second differences
    N = sigma.resolution
    dh = np.concatenate([lam[..., None], dyh], axis=-1)
    diffs = [np.abs(np.roll(dh, -1, axis=a) - dh).max() * N for a in (0, 1)]
    dz = 1e-4
    sigma_dz = Section(sigma.theta + dz)
    lam2, dyh2, _, _ = _fiber_jet(f, sigma_dz, band)
    dh2 = np.concatenate([lam2[..., None], dyh2], axis=-1)
    diffs.append(np.abs(dh2 - dh).max() / dz)
    out["m_hat"] = float(max(diffs))
    return out


def _aggregate_diag(sweeps):
    agg = dict(sweeps[0])
    for s in sweeps[1:]:
        for k, v in s.items():
            agg[k] = max(agg[k], v)
    return agg


def solve_section(fam, band, resolution=128, tol=1e-10, n_max=200, beta=None,
                  diag_members=None):
    """Invariant section sigma*, derivative field H*, and contraction diagnostics.

    Constant families iterate the single pair (Gamma, Psi) forward; general
    families recompute the reverse-order prefix Phi_1 o ... o Phi_N from
    scratch at increasing depth N (no cheap incremental reuse exists).
    Stopping: sup projective distance between successive sections < tol.
    """
    sigma0 = Section.constant(band.center, resolution)
    H0 = DerivField.zero(resolution)
    members_used = 1

    if fam.constant:
        f = fam.spec_at(1)
        sigma, H = sigma0, H0
        residual = np.inf
        iterations = 0
        for iterations in range(1, n_max + 1):
            H_new = derivative_transform(f, sigma, H, band)
            sigma_new = graph_transform(f, sigma, band)
            residual = float(proj_dist(sigma_new.theta, sigma.theta).max())
            sigma, H = sigma_new, H_new
            if residual < tol:
                break
        else:
            raise ConvergenceError("no convergence by N_max", residual)
        sweeps = [diagnostics_sweep(f, sigma, band, beta)]
    else:
        prev = None
        sigma, H = sigma0, H0
        residual = np.inf
        iterations = 0
        for depth in range(1, n_max + 1):
            sigma, H = sigma0, H0
            for n in range(depth, 0, -1):
                f = fam.spec_at(n)
                H = derivative_transform(f, sigma, H, band)
                sigma = graph_transform(f, sigma, band)
            iterations = depth
            if prev is not None:
                residual = float(proj_dist(sigma.theta, prev.theta).max())
                if residual < tol:
                    break
            prev = sigma
        else:
            raise ConvergenceError("no convergence by N_max", residual)
        members_used = iterations
        count = diag_members if diag_members is not None else min(members_used, 8)
        sweeps = [diagnostics_sweep(fam.spec_at(n), sigma, band, beta)
                  for n in range(1, count + 1)]

    agg = _aggregate_diag(sweeps)
    diag = ContractionDiagnostics(
        lambda_hat=agg["lambda_hat"],
        kappa_hat=agg["kappa_hat"],
        delta_hat=agg["delta_hat"],
        iterations=iterations,
        residual=residual,
        beta=beta,
        delta_beta_hat=agg.get("delta_beta_hat"),
        b_hat=agg["b_hat"],
        m_hat=agg["m_hat"],
    )
    if diag.delta_hat >= 1.0:
        warnings.warn("contraction condition not verified empirically")
        diag.notes.append("contraction condition not verified empirically")
    return sigma, H, diag


def default_band(cones, margin=0.05):
    """Band centered on the stable-cone center with radius half the aperture + margin."""
    return Band(cones.v_angle, np.arctan(cones.mu) / 2.0 + margin)


# -- CSV serialization -------------------------------------------------------

FMT = "%.17g"


def section_to_csv(path, sigma, H=None):
    N = sigma.resolution
    X = grid_points(N)
    with open(path, "w") as fh:
        if H is None:
            fh.write("# schema=section version=1\n")
            fh.write("i,j,x1,x2,theta\n")
        else:
            fh.write("# schema=section_deriv version=1\n")
            fh.write("i,j,x1,x2,theta,h1,h2\n")
        for i in range(N):
            for j in range(N):
                row = [str(i), str(j), FMT % X[i, j, 0], FMT % X[i, j, 1],
                       FMT % sigma.theta[i, j]]
                if H is not None:
                    row += [FMT % H.h[i, j, 0], FMT % H.h[i, j, 1]]
                fh.write(",".join(row) + "\n")


def section_from_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=2)
    N = int(round(np.sqrt(data.shape[0])))
    theta = data[:, 4].reshape(N, N)
    sigma = Section(theta)
    if data.shape[1] >= 7:
        return sigma, DerivField(data[:, 5:7].reshape(N, N, 2))
    return sigma, None
