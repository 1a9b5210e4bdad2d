"""Family with uniform cones but unbounded C^2 norms, and the holonomy
blow-up experiment showing its stable foliation cannot be C^1.

Each member is f_n = phi_n o A where A is a symmetric hyperbolic toral
automorphism and phi_n is a compactly supported stretch by (1 + b) in the
unstable direction over a rectangle R_n that shrinks like eta^{-n} along
the stable line through 0.  The stretch keeps every f_n within a fixed C^1
distance of A (so one cone condition covers the whole family) while the
C^2 norms grow geometrically.  A C^1 stable foliation would force the
holonomy between two fixed transversals to satisfy a mean-value bound;
the experiment measures length ratios that instead grow like (1 + b)^N.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .torus import wrap_point, wrap_diff, angle_of, direction_vector
from .maps import LinearMap, BumpStretchMap, MapFamily
from .cones import ConeField, check_invariance
from .transform import cone_pullback
from .regularity import _cross_to_line


def _cat_matrix():
    return np.array([[2.0, 1.0], [1.0, 1.0]])


@dataclass(frozen=True)
class CounterexampleParams:
    A: np.ndarray = field(default_factory=_cat_matrix)
    s_p: float = 0.3            # stable-line parameter of p
    s_p_prime: float = 0.1      # stable-line parameter of p'
    b: float = 0.1              # unstable expansion margin
    theta: float = 0.1          # slope aperture of K^u used in the expansion check
    eps: float = 0.8            # C^1 closeness budget
    base_ratio: float = 0.01    # rectangle base as a fraction of |p_n - p_n'|
    height_pad: float = 0.1     # extra height of R_n'
    cone_mu: float = 0.35       # aperture for the common-cone verification
    support_frac: float = 0.8   # stable-direction bump support, fraction of |p_n - p_n'|

    def __post_init__(self):
        if self.s_p == self.s_p_prime:
            raise ValueError("p and p' must be distinct")
        if not 0.0 <= self.b <= 0.2:
            raise ValueError("b must lie in [0, 0.2]")
        # bump support along the stable line must miss R_n'
        if self.support_frac + self.base_ratio / 2.0 >= 1.0:
            raise ValueError("rectangle geometry violated")


class CounterexampleGeometry:
    """Eigenframe of A and the per-index rectangles R_n, R_n'."""

    def __init__(self, params):
        self.params = params
        A = np.asarray(params.A, dtype=float)
        if not np.allclose(A, A.T):
            raise ValueError("A must be symmetric (orthogonal eigendirections)")
        evals, evecs = np.linalg.eigh(A)
        order = np.argsort(np.abs(evals))
        self.lam_s = float(evals[order[0]])
        self.eta = float(evals[order[1]])
        if abs(self.eta) <= 1.0:
            raise ValueError("A must be hyperbolic")
        self.e_s = evecs[:, order[0]]
        self.e_u = evecs[:, order[1]]
        self.d0 = abs(params.s_p - params.s_p_prime)
        # overdrive the bump so the minimum over the aperture-theta unstable
        # cone still reaches (1 + b)
        mu = params.theta
        b = params.b
        if b > 0:
            self.b_eff = float(np.sqrt((1.0 + b) ** 2 * (1.0 + mu * mu) - mu * mu) - 1.0)
        else:
            self.b_eff = 0.0

    def height(self, n):
        return self.d0 * abs(self.lam_s) ** n

    def p_n(self, n):
        return wrap_point(self.params.s_p * abs(self.lam_s) ** n * self.e_s)

    def p_n_prime(self, n):
        return wrap_point(self.params.s_p_prime * abs(self.lam_s) ** n * self.e_s)

    def rectangles(self, n):
        h = self.height(n)
        base = h * self.params.base_ratio
        h_prime = abs(self.lam_s) ** n * (self.d0 + self.params.height_pad)
        return {"R": (self.p_n(n), base, h), "R_prime": (self.p_n_prime(n), base, h_prime)}

    def member(self, n):
        h = self.height(n)
        return BumpStretchMap(
            matrix=self.params.A,
            center=self.p_n(n),
            e_s=self.e_s,
            e_u=self.e_u,
            b_eff=self.b_eff,
            w_s=self.params.support_frac * h,
            h_u=h,
        )


def build_family(params):
    geo = CounterexampleGeometry(params)
    fam = MapFamily(geo.member, constant=False, smoothness="C2",
                    label="counterexample")
    fam.geometry = geo
    return fam


def verify_properties(fam, n, grid=24):
    """Numerical check of the defining construction properties plus cone invariance."""
    geo = fam.geometry
    pr = geo.params
    f = fam.spec_at(n)
    report = {}

    # 1. identity on the stable line through 0
    t = np.linspace(-0.45, 0.45, 301)
    line = wrap_point(t[:, None] * geo.e_s)
    disp = np.abs(f.phi_displacement(line))
    report["stable_line_fixed"] = bool(disp.max() < 1e-12)

    # 2. C^1 distance of phi_n to the identity below eps/2
    ax = np.linspace(0, 1, grid, endpoint=False)
    pts = np.stack(np.meshgrid(ax, ax, indexing="ij"), axis=-1).reshape(-1, 2)
    # refine near the bump support, where the derivative extremes live
    h = geo.height(n)
    local = geo.p_n(n) + (np.random.default_rng(0).random((4000, 2)) - 0.5) * (
        2.2 * h * (np.abs(geo.e_s) + np.abs(geo.e_u)))
    pts = np.concatenate([pts, wrap_point(local)], axis=0)
    I = np.eye(2)
    c1 = max(float(np.abs(f.phi_displacement(pts)).max()),
             float(np.max(np.abs(f.phi_tangent(pts) - I))))
    report["c1_close"] = bool(c1 < pr.eps / 2.0)
    report["c1_distance"] = c1

    # 3. expansion (1 + b) on the plateau of R_n for aperture-theta cone vectors
    s_loc = np.linspace(-0.45, 0.45, 21) * pr.support_frac * h
    u_loc = np.linspace(-0.5, 0.5, 21) * h
    S, U = np.meshgrid(s_loc, u_loc, indexing="ij")
    plateau = wrap_point(geo.p_n(n) + S[..., None] * geo.e_s + U[..., None] * geo.e_u)
    slopes = np.linspace(-pr.theta, pr.theta, 9)
    dirs = geo.e_u[None, :] + slopes[:, None] * geo.e_s[None, :]
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    Dphi = f.phi_tangent(plateau)
    ratios = np.linalg.norm(np.einsum("...ij,dj->...di", Dphi, dirs), axis=-1)
    report["expansion"] = bool(ratios.min() >= (1.0 + pr.b) * (1.0 - 1e-9))
    report["expansion_min"] = float(ratios.min())

    # 4. exact identity on R_n'
    center, base, hp = geo.rectangles(n)["R_prime"]
    S, U = np.meshgrid(np.linspace(-0.5, 0.5, 11) * base,
                       np.linspace(-0.5, 0.5, 11) * hp, indexing="ij")
    rp = wrap_point(center + S[..., None] * geo.e_s + U[..., None] * geo.e_u)
    ident = (np.abs(f.phi_displacement(rp)).max() < 1e-15
             and np.max(np.abs(f.phi_tangent(rp) - I)) < 1e-15)
    report["identity_on_R_prime"] = bool(ident)

    # cone invariance of the full composed map
    cones = ConeField(h_angle=float(angle_of(geo.e_u)),
                      v_angle=float(angle_of(geo.e_s)), mu=pr.cone_mu)
    inv = check_invariance(f, cones, grid=32)
    report["cone_invariant"] = bool(inv.invariant_s and inv.invariant_u
                                    and inv.angle_margin > 1e-6)
    report["passes"] = all(report[k] for k in
                           ("stable_line_fixed", "c1_close", "expansion",
                            "identity_on_R_prime", "cone_invariant"))
    return report


def _pullback_length_factor(fam, N, x0):
    """log of || D(f_1^{-1} o ... o f_N^{-1}) e_u || along the orbit of x0."""
    geo = fam.geometry
    orbit = [np.asarray(x0, dtype=float)]
    for k in range(1, N + 1):
        orbit.append(fam.spec_at(k).apply(orbit[-1]))
    v = geo.e_u.copy()
    log_len = 0.0
    for k in range(N, 0, -1):
        J = fam.spec_at(k).tangent(orbit[k - 1])
        v = np.linalg.solve(J, v)
        nv = np.linalg.norm(v)
        log_len += np.log(nv)
        v /= nv
    return log_len


def blowup_experiment(params, n_max, depth=30, leaf_steps=40):
    """Length ratios length(H(I_N)) / length(I_N) for the segment I_N whose
    forward image spans the plateau of R_N.

    Direct evaluation of the holonomy at the scale of I_N (about eta^{-2N})
    would drown in rounding, so each ratio is assembled through the exact
    conjugation length(H(I)) = eta^{-N} length(H_N(f_N...f_1 I)): the image
    segment J_N spanning R_N is fixed, its holonomy image is measured along
    the stable field of the tail family at the scale eta^{-N}, and
    length(I_N) comes from the multiplicative pull-back of the unstable
    tangent along the orbit.  All three factors are well conditioned.
    """
    fam = build_family(params)
    geo = fam.geometry
    eta = abs(geo.eta)
    seed_angle = float(angle_of(geo.e_s))
    rows = []
    for N in range(1, n_max + 1):
        h = geo.height(N)
        pN = geo.p_n(N)
        pNp = geo.p_n_prime(N)
        ends = wrap_point(pN + np.array([[0.5], [-0.5]]) * h * geo.e_u)

        tail = fam.shift(N)
        fld = lambda pts: cone_pullback(tail, depth, pts, seed_angle)

        step = h / leaf_steps
        crossings = []
        gap = wrap_diff(pNp - pN)
        for e in ends:
            v = direction_vector(fld(e))
            if np.dot(v, gap) < 0:
                v = -v
            xc = _cross_to_line(fld, e, v, pNp, float(angle_of(geo.e_u)),
                                max_arclen=4.0 * np.linalg.norm(gap), step=step,
                                tol=min(1e-10, step * 1e-4))
            crossings.append(xc)
        if any(c is None for c in crossings):
            rows.append({"N": N, "seg_len": np.nan, "img_len": np.nan,
                         "ratio": np.nan, "valid": False})
            continue
        u_params = [float(np.dot(wrap_diff(c - pNp), geo.e_u)) for c in crossings]
        img_len_N = abs(u_params[0] - u_params[1])

        log_pull = _pullback_length_factor(fam, N, wrap_point(geo.params.s_p * geo.e_s))
        seg_len = h * np.exp(log_pull)
        img_len = img_len_N * eta ** (-N)
        rows.append({"N": N, "seg_len": seg_len, "img_len": img_len,
                     "ratio": img_len / seg_len, "valid": True})
    return rows


def fitted_growth_rate(rows):
    """Least-squares slope of log ratio vs N over the valid rows."""
    ns = np.array([r["N"] for r in rows if r["valid"]], dtype=float)
    lr = np.log([r["ratio"] for r in rows if r["valid"]])
    if ns.size < 2:
        return float("nan")
    A = np.stack([ns, np.ones_like(ns)], axis=-1)
    coef, _, _, _ = np.linalg.lstsq(A, lr, rcond=None)
    return float(coef[0])


def blowup_csv(path, rows):
    with open(path, "w") as fh:
        fh.write("# schema=blowup version=1\n")
        fh.write("N,seg_len,img_len,ratio\n")
        for r in rows:
            fh.write("%d,%.17g,%.17g,%.17g\n"
                     % (r["N"], r["seg_len"], r["img_len"], r["ratio"]))
