"""Sequences of torus diffeomorphisms with closed-form differentials.

Three declarative map kinds are supported:

* ``LinearMap``       -- toral automorphism induced by an integer matrix,
* ``TrigPerturbedMap``-- linear part plus a sinusoidal displacement with
                         integer frequency modes (closed-form derivatives
                         of all orders),
* ``BumpStretchMap``  -- a linear map post-composed with a compactly
                         supported unstable-direction stretch (used by the
                         unbounded-C2 counterexample family).

A ``MapFamily`` is a lazily indexed sequence n >= 1 of such maps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .torus import (
    wrap_point,
    wrap_diff,
    inv2,
    opnorm2,
    opnorm2_min,
)

TWO_PI = 2.0 * np.pi


class InverseSolveError(RuntimeError):
    """Raised when the Newton inverse fails to converge."""


def _newton_invert(m, y, tol=1e-12, max_iter=50):
    """Solve f(x) = y on the torus by damped Newton from the linear-part guess."""
    y = wrap_point(y)
    x = m.linear_inverse_guess(y)
    res = wrap_diff(m.apply(x) - y)
    rnorm = np.linalg.norm(res, axis=-1)
    for _ in range(max_iter):
        if np.all(rnorm < tol):
            return wrap_point(x)
        J = m.tangent(x)
        step = np.linalg.solve(J, res[..., None])[..., 0]
        damp = np.ones_like(rnorm)
        for _ in range(8):
            x_new = wrap_point(x - damp[..., None] * step)
            res_new = wrap_diff(m.apply(x_new) - y)
            rnorm_new = np.linalg.norm(res_new, axis=-1)
            bad = rnorm_new > rnorm
            if not np.any(bad):
                break
            damp = np.where(bad, damp / 2.0, damp)
        x, res, rnorm = x_new, res_new, rnorm_new
    if np.any(rnorm >= tol):
        raise InverseSolveError("inverse solve diverged")
    return wrap_point(x)


@dataclass(frozen=True)
class LinearMap:
    """Toral automorphism x -> M x (mod 1) for an integer matrix with |det| = 1."""

    matrix: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=float)
        if M.shape != (2, 2):
            raise ValueError("matrix must be 2x2")
        if not np.allclose(M, np.round(M)):
            raise ValueError("linear map requires integer entries")
        if abs(abs(np.linalg.det(M)) - 1.0) > 1e-12:
            raise ValueError("linear map requires |det| = 1")
        object.__setattr__(self, "matrix", np.round(M))

    @property
    def hyperbolic(self):
        return abs(np.trace(self.matrix)) > 2.0

    def apply(self, p):
        p = np.asarray(p, dtype=float)
        return wrap_point(np.einsum("ij,...j->...i", self.matrix, p))

    def linear_inverse_guess(self, y):
        Minv = inv2(self.matrix)
        return wrap_point(np.einsum("ij,...j->...i", Minv, np.asarray(y, dtype=float)))

    def inverse_apply(self, p):
        return self.linear_inverse_guess(p)

    def tangent(self, p):
        p = np.asarray(p, dtype=float)
        return np.broadcast_to(self.matrix, p.shape[:-1] + (2, 2)).copy()

    def dtangent(self, p):
        p = np.asarray(p, dtype=float)
        return np.zeros(p.shape[:-1] + (2, 2, 2))


@dataclass(frozen=True)
class TrigPerturbedMap:
    """f(x) = A x + eps * (sin(2 pi k_1 . x), sin(2 pi k_2 . x)) mod 1.

    ``modes`` is a 2x2 integer array whose i-th row is the frequency vector
    k_i of component i.  Integer modes keep the displacement Z^2-periodic,
    so the homotopy class is that of A.
    """

    matrix: np.ndarray
    eps: float
    modes: np.ndarray = field(default_factory=lambda: np.array([[1, 0], [0, 1]]))

    def __post_init__(self):
        base = LinearMap(self.matrix)  # validates the linear part
        object.__setattr__(self, "matrix", base.matrix)
        K = np.asarray(self.modes, dtype=float)
        if K.shape != (2, 2) or not np.allclose(K, np.round(K)):
            raise ValueError("modes must be a 2x2 integer array")
        object.__setattr__(self, "modes", np.round(K))
        if self.eps < 0:
            raise ValueError("eps must be >= 0")
        # invertibility margin: the perturbation gradient must not swallow
        # the smallest singular value of A
        kmax = np.max(np.linalg.norm(self.modes, axis=1))
        if self.eps * TWO_PI * kmax >= opnorm2_min(self.matrix) - 0.01:
            raise ValueError("eps too large for guaranteed invertibility")

    def _phase(self, p):
        return TWO_PI * np.einsum("ij,...j->...i", self.modes, np.asarray(p, dtype=float))

    def apply(self, p):
        p = np.asarray(p, dtype=float)
        lin = np.einsum("ij,...j->...i", self.matrix, p)
        return wrap_point(lin + self.eps * np.sin(self._phase(p)))

    def linear_inverse_guess(self, y):
        Minv = inv2(self.matrix)
        return wrap_point(np.einsum("ij,...j->...i", Minv, np.asarray(y, dtype=float)))

    def inverse_apply(self, p):
        return _newton_invert(self, p)

    def tangent(self, p):
        c = np.cos(self._phase(p))  # (..., 2)
        pert = self.eps * TWO_PI * c[..., :, None] * self.modes
        return self.matrix + pert

    def dtangent(self, p):
        """d/dx_k of Df(x)_{ij}; shape (..., 2, 2, 2) indexed [i, j, k]."""
        s = np.sin(self._phase(p))
        amp = -self.eps * TWO_PI ** 2 * s  # (..., 2) per component i
        return amp[..., :, None, None] * (self.modes[:, :, None] * self.modes[:, None, :])


def _smooth01(t):
    """Quintic smoothstep: C^2, flat to second order at 0 and 1."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def _smooth01_d1(t):
    inside = (t > 0.0) & (t < 1.0)
    t = np.clip(t, 0.0, 1.0)
    return np.where(inside, 30.0 * t * t * (1.0 - t) ** 2, 0.0)


def _smooth01_d2(t):
    inside = (t > 0.0) & (t < 1.0)
    t = np.clip(t, 0.0, 1.0)
    return np.where(inside, 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t), 0.0)


def bump_rho(t):
    """C^2 plateau bump: 1 on [-1/2, 1/2], supported in [-1, 1]."""
    a = np.abs(np.asarray(t, dtype=float))
    return 1.0 - _smooth01(2.0 * a - 1.0)


def bump_rho_d1(t):
    t = np.asarray(t, dtype=float)
    return -2.0 * np.sign(t) * _smooth01_d1(2.0 * np.abs(t) - 1.0)


def bump_rho_d2(t):
    t = np.asarray(t, dtype=float)
    return -4.0 * _smooth01_d2(2.0 * np.abs(t) - 1.0)


@dataclass(frozen=True)
class BumpStretchMap:
    """f = phi o A with phi a compactly supported unstable stretch.

    In the orthonormal eigenframe (e_s, e_u) of the symmetric matrix A,
    centered at ``center``, phi moves only the u-coordinate:

        u -> u * (1 + b_eff * rho(s / w_s) * rho(u / h_u)),

    with ``rho`` the C^2 plateau bump.  The stable axis u = 0 is pointwise
    fixed and phi is the identity outside |s| < w_s, |u| < h_u.
    """

    matrix: np.ndarray
    center: np.ndarray
    e_s: np.ndarray
    e_u: np.ndarray
    b_eff: float
    w_s: float
    h_u: float

    def __post_init__(self):
        base = LinearMap(self.matrix)
        object.__setattr__(self, "matrix", base.matrix)
        object.__setattr__(self, "center", wrap_point(self.center))
        for name in ("e_s", "e_u"):
            v = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, v / np.linalg.norm(v))
        if self.w_s <= 0 or self.h_u <= 0:
            raise ValueError("bump support must have positive extent")
        if max(self.w_s, self.h_u) > 0.25:
            raise ValueError("bump support too large for unambiguous wrapping")

    # -- the bump diffeomorphism phi ------------------------------------

    def _frame_coords(self, q):
        off = wrap_diff(np.asarray(q, dtype=float) - self.center)
        s = np.einsum("...i,i->...", off, self.e_s)
        u = np.einsum("...i,i->...", off, self.e_u)
        return s, u

    def phi_apply(self, q):
        s, u = self._frame_coords(q)
        delta = self.b_eff * u * bump_rho(s / self.w_s) * bump_rho(u / self.h_u)
        return wrap_point(np.asarray(q, dtype=float) + delta[..., None] * self.e_u)

    def phi_displacement(self, q):
        s, u = self._frame_coords(q)
        return self.b_eff * u * bump_rho(s / self.w_s) * bump_rho(u / self.h_u)

    def _delta_grads(self, q):
        """(d delta/ds, d delta/du) at q, plus second partials."""
        s, u = self._frame_coords(q)
        rs = bump_rho(s / self.w_s)
        ru = bump_rho(u / self.h_u)
        rs1 = bump_rho_d1(s / self.w_s) / self.w_s
        ru1 = bump_rho_d1(u / self.h_u) / self.h_u
        rs2 = bump_rho_d2(s / self.w_s) / self.w_s ** 2
        ru2 = bump_rho_d2(u / self.h_u) / self.h_u ** 2
        b = self.b_eff
        d_s = b * u * rs1 * ru
        d_u = b * (ru + u * ru1) * rs
        d_ss = b * u * rs2 * ru
        d_su = b * rs1 * (ru + u * ru1)
        d_uu = b * rs * (2.0 * ru1 + u * ru2)
        return d_s, d_u, d_ss, d_su, d_uu

    def phi_tangent(self, q):
        d_s, d_u, _, _, _ = self._delta_grads(q)
        grad = d_s[..., None] * self.e_s + d_u[..., None] * self.e_u
        I = np.zeros(grad.shape[:-1] + (2, 2))
        I[..., 0, 0] = 1.0
        I[..., 1, 1] = 1.0
        return I + self.e_u[:, None] * grad[..., None, :]

    def _phi_hess(self, q):
        """Second derivative tensor of phi: (..., i, j, k) = d_j d_k phi_i."""
        _, _, d_ss, d_su, d_uu = self._delta_grads(q)
        es, eu = self.e_s, self.e_u
        hess = (
            d_ss[..., None, None] * (es[:, None] * es[None, :])
            + d_su[..., None, None] * (es[:, None] * eu[None, :] + eu[:, None] * es[None, :])
            + d_uu[..., None, None] * (eu[:, None] * eu[None, :])
        )
        return eu[:, None, None] * hess[..., None, :, :]

    # -- the composed map f = phi o A -----------------------------------

    def apply(self, p):
        return self.phi_apply(LinearMap(self.matrix).apply(p))

    def linear_inverse_guess(self, y):
        Minv = inv2(self.matrix)
        return wrap_point(np.einsum("ij,...j->...i", Minv, np.asarray(y, dtype=float)))

    def inverse_apply(self, p):
        return _newton_invert(self, p)

    def tangent(self, p):
        q = LinearMap(self.matrix).apply(p)
        return np.einsum("...ij,jk->...ik", self.phi_tangent(q), self.matrix)

    def dtangent(self, p):
        q = LinearMap(self.matrix).apply(p)
        hess = self._phi_hess(q)  # (..., i, j', k')
        A = self.matrix
        return np.einsum("...ijk,jl,km->...ilm", hess, A, A)

    def sample_hints(self, count=25):
        """Preimages of a grid over the bump support, where the derivative
        extremes live; uniform grids miss the support once it is small."""
        s = np.linspace(-1.0, 1.0, count) * self.w_s
        u = np.linspace(-1.0, 1.0, count) * self.h_u
        S, U = np.meshgrid(s, u, indexing="ij")
        q = self.center + S[..., None] * self.e_s + U[..., None] * self.e_u
        Minv = inv2(self.matrix)
        return wrap_point(np.einsum("ij,...j->...i", Minv, q).reshape(-1, 2))


def inverse_tangent(m, p):
    """D_p(f^{-1}) = [Df(f^{-1}(p))]^{-1}."""
    return inv2(m.tangent(m.inverse_apply(p)))


class MapFamily:
    """Deterministic, lazily indexed sequence of torus diffeomorphisms (n >= 1)."""

    def __init__(self, generator, constant=False, smoothness="C2", label=""):
        self._generator = generator
        self.constant = constant
        self.smoothness = smoothness
        self.label = label

    def spec_at(self, n):
        if n < 1:
            raise ValueError("family indices start at 1")
        return self._generator(n)

    def shift(self, k):
        """Tail family (f_{k+1}, f_{k+2}, ...)."""
        if self.constant:
            return self
        return MapFamily(lambda n: self._generator(n + k), constant=False,
                         smoothness=self.smoothness, label=self.label)

    @classmethod
    def constant_family(cls, spec, **kw):
        return cls(lambda n: spec, constant=True, **kw)

    @classmethod
    def periodic(cls, specs, **kw):
        specs = list(specs)
        if len(specs) == 1:
            return cls.constant_family(specs[0], **kw)
        return cls(lambda n: specs[(n - 1) % len(specs)], **kw)

    @classmethod
    def explicit(cls, specs, **kw):
        specs = list(specs)

        def gen(n):
            if n > len(specs):
                raise IndexError("explicit family exhausted at index %d" % n)
            return specs[n - 1]

        return cls(gen, constant=(len(specs) == 1), **kw)

    @classmethod
    def seeded(cls, specs, seed, **kw):
        """Index n picks uniformly from ``specs`` via a per-index seeded draw."""
        specs = list(specs)

        def gen(n):
            rng = np.random.default_rng([int(seed), int(n)])
            return specs[int(rng.integers(len(specs)))]

        return cls(gen, constant=(len(specs) == 1), **kw)


def _d2_inverse_norm(m, pts):
    """Max-entry norm of D^2(f^{-1}) sampled at f(pts), via the inverse-function rule."""
    J = m.tangent(pts)
    Jinv = inv2(J)
    dJ = m.dtangent(pts)  # (..., i, j, k) = d_k Df_ij at pts
    # D^2 g (at f(x)) = -Jinv . D^2 f [Jinv . , Jinv . ]
    t = np.einsum("...il,...ljk,...jm,...kn->...imn", Jinv, dJ, Jinv, Jinv)
    return np.max(np.abs(t), axis=(-3, -2, -1))


def norm_report(fam, n_max, grid=64):
    """Per-index grid sups of ||Df||, ||Df^-1||, ||D^2 f||, ||D^2 f^-1||.

    Rows are dicts keyed n, df, dfinv, d2f, d2finv.  The second-derivative
    columns use the max-entry norm of the derivative tensor of Df.
    """
    if grid < 16:
        raise ValueError("grid must be >= 16")
    ax = np.arange(grid) / grid
    pts = np.stack(np.meshgrid(ax, ax, indexing="ij"), axis=-1).reshape(-1, 2)
    rows = []
    for n in range(1, n_max + 1):
        m = fam.spec_at(n)
        pts_m = pts
        if hasattr(m, "sample_hints"):
            pts_m = np.concatenate([pts, m.sample_hints()], axis=0)
        J = m.tangent(pts_m)
        rows.append({
            "n": n,
            "df": float(np.max(opnorm2(J))),
            "dfinv": float(np.max(1.0 / opnorm2_min(J))),
            "d2f": float(np.max(np.abs(m.dtangent(pts_m)))),
            "d2finv": float(np.max(_d2_inverse_norm(m, pts_m))),
        })
    return rows
