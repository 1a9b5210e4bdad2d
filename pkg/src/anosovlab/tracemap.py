"""Trace maps, Fricke-Vogt surfaces, and Sturmian spectrum approximation.

The trace maps T_k act on R^3 by

    (x, y, z) -> (x U_k(y) - z U_{k-1}(y), x U_{k-1}(y) - z U_{k-2}(y), y)

with U_k the Chebyshev polynomials of the second kind.  An energy E
belongs to the Sturmian spectrum for coupling lambda and frequency with
continued-fraction digits (a_i) iff the orbit of ((E - lambda)/2, E/2, 1)
under T_{a_1}, T_{a_2}, ... stays bounded; the scan below classifies
sampled energies by non-escape within a finite iteration budget, which
yields an outer approximation of the spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

OVERFLOW_GUARD = 1e150


def _asnum(a):
    """float array view, except object dtype (e.g. Fractions) passes through.

    The Fricke-Vogt invariant is preserved by the trace maps only in exact
    arithmetic once orbits leave [-1, 1]^3, so the algebraic functions accept
    exact number types unchanged.
    """
    a = np.asarray(a)
    return a if a.dtype == object else a.astype(float)


def chebyshev_u(k, y):
    """U_k(y), Chebyshev of the second kind; k >= -1, vectorized in y."""
    if k < -1:
        raise ValueError("k must be >= -1")
    y = _asnum(y)
    if k == -1:
        return np.zeros_like(y)
    prev = np.zeros_like(y)   # U_{-1}
    cur = np.ones_like(y)     # U_0
    for _ in range(k):
        prev, cur = cur, 2 * y * cur - prev
    return cur


def trace_map(k, p):
    """T_k applied to points (..., 3)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    p = _asnum(p)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    uk2 = np.zeros_like(y)  # U_{-1}
    uk1 = np.ones_like(y)   # U_0
    uk = 2 * y * uk1 - uk2
    for _ in range(k - 1):
        uk2, uk1, uk = uk1, uk, 2 * y * uk - uk1
    return np.stack([x * uk - z * uk1, x * uk1 - z * uk2, y], axis=-1)


def fricke_vogt(p):
    """I(p) = x^2 + y^2 + z^2 - 2xyz - 1; p lies on S_lambda iff I = lambda^2/4."""
    p = _asnum(p)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    return x * x + y * y + z * z - 2 * x * y * z - 1


def spectrum_line(lam, E):
    """Point ((E - lambda)/2, E/2, 1) of the line L_lambda."""
    E = np.asarray(E, dtype=float)
    return np.stack([(E - lam) / 2.0, E / 2.0, np.ones_like(E)], axis=-1)


@dataclass
class OrbitVerdict:
    bounded: bool
    escape_step: Optional[int] = None


def _orbit_escape_steps(lam, cf_prefix, E, escape_radius, max_iters):
    """Vectorized non-escape test; returns escape step per energy (-1: bounded)."""
    E = np.atleast_1d(np.asarray(E, dtype=float))
    p = spectrum_line(lam, E)
    alive = np.ones(E.shape, dtype=bool)
    steps = np.full(E.shape, -1, dtype=int)
    n_digits = len(cf_prefix)
    for it in range(max_iters):
        k = int(cf_prefix[it % n_digits])  # digits recycle past the prefix
        p[alive] = trace_map(k, p[alive])
        np.clip(p, -OVERFLOW_GUARD, OVERFLOW_GUARD, out=p)
        escaped = alive & (np.max(np.abs(p), axis=-1) > escape_radius)
        steps[escaped] = it + 1
        alive &= ~escaped
        if not alive.any():
            break
    return steps


def orbit_bounded(lam, cf_prefix, E, escape_radius=10.0, max_iters=10000):
    """bounded-so-far / escaped(step) verdict for a single energy."""
    if not cf_prefix or any(a < 1 for a in cf_prefix):
        raise ValueError("cf_prefix must be nonempty with entries >= 1")
    step = int(_orbit_escape_steps(lam, cf_prefix, [E], escape_radius, max_iters)[0])
    return OrbitVerdict(bounded=(step < 0), escape_step=None if step < 0 else step)


@dataclass
class SpectrumApprox:
    lam: float
    cf_prefix: List[int]
    intervals: List[Tuple[float, float]]
    escape_radius: float
    max_iters: int
    resolution: float
    metadata: dict = field(default_factory=dict)


def spectrum_scan(lam, cf_prefix, window, initial_grid=256, refine_depth=10,
                  escape_radius=10.0, max_iters=10000):
    """Outer approximation of the spectrum by bisection-refined non-escape.

    The window is sampled uniformly; boundary cells (where the verdict
    flips) are bisected ``refine_depth`` times.  Output intervals extend
    each run of bounded samples out to the nearest escaped sample, so the
    true bounded set at this iteration budget is contained in their union.
    """
    if not cf_prefix or any(a < 1 for a in cf_prefix):
        raise ValueError("cf_prefix must be nonempty with entries >= 1")
    e_min, e_max = float(window[0]), float(window[1])
    cell = (e_max - e_min) / initial_grid if e_max > e_min else 0.0
    resolution = cell / 2 ** refine_depth if cell else 0.0
    approx = SpectrumApprox(lam=float(lam), cf_prefix=list(cf_prefix),
                            intervals=[], escape_radius=float(escape_radius),
                            max_iters=int(max_iters), resolution=resolution,
                            metadata={"digits_recycled": True,
                                      "window": (e_min, e_max)})
    if e_max <= e_min:
        return approx

    E = np.linspace(e_min, e_max, initial_grid + 1)
    bounded = _orbit_escape_steps(lam, cf_prefix, E, escape_radius, max_iters) < 0

    samples = list(zip(E.tolist(), bounded.tolist()))
    extra = []
    for i in range(len(samples) - 1):
        (e0, b0), (e1, b1) = samples[i], samples[i + 1]
        if b0 == b1:
            continue
        lo, hi, blo = e0, e1, b0
        for _ in range(refine_depth):
            mid = 0.5 * (lo + hi)
            bm = bool(_orbit_escape_steps(lam, cf_prefix, [mid],
                                          escape_radius, max_iters)[0] < 0)
            extra.append((mid, bm))
            if bm == blo:
                lo = mid
            else:
                hi = mid
    samples = sorted(samples + extra)

    intervals = []
    run_start = None
    prev_escaped_e = e_min
    for idx, (e, b) in enumerate(samples):
        if b and run_start is None:
            run_start = prev_escaped_e if idx > 0 else e
        if not b:
            if run_start is not None:
                intervals.append((run_start, e))
                run_start = None
            prev_escaped_e = e
    if run_start is not None:
        intervals.append((run_start, samples[-1][0]))
    approx.intervals = intervals
    return approx


def box_counts(intervals, scales):
    """Number of size-s grid boxes meeting the interval union, per scale."""
    counts = []
    ivs = sorted(intervals)
    for s in scales:
        ranges = [(int(np.floor(a / s)), int(np.floor(b / s))) for a, b in ivs]
        total = 0
        cur_lo, cur_hi = ranges[0]
        for lo, hi in ranges[1:]:
            if lo <= cur_hi:
                cur_hi = max(cur_hi, hi)
            else:
                total += cur_hi - cur_lo + 1
                cur_lo, cur_hi = lo, hi
        total += cur_hi - cur_lo + 1
        counts.append(total)
    return counts


def box_dimension(intervals, scales, resolution=None):
    """Box-counting dimension of a union of intervals.

    ``intervals`` may be a SpectrumApprox (resolution taken from it) or a
    list of (lo, hi) pairs with ``resolution`` supplied.  Returns
    (dim_hat, fit_quality, flags).
    """
    if isinstance(intervals, SpectrumApprox):
        resolution = intervals.resolution
        intervals = intervals.intervals
    scales = np.asarray(scales, dtype=float)
    if scales.size < 4:
        raise ValueError("need at least 4 scales")
    if resolution is not None and np.any(scales < resolution):
        finest = scales[scales >= resolution]
        msg = ("scales finer than the approximation resolution; finest "
               "admissible scale is %.17g" % (finest.min() if finest.size else resolution))
        raise ValueError(msg)
    if not intervals:
        return 0.0, 1.0, ["empty"]

    counts = np.asarray(box_counts(intervals, scales), dtype=float)
    ls = np.log(1.0 / scales)
    lc = np.log(counts)
    A = np.stack([ls, np.ones_like(ls)], axis=-1)
    coef, res, _, _ = np.linalg.lstsq(A, lc, rcond=None)
    ss_tot = float(np.sum((lc - lc.mean()) ** 2))
    r2 = 1.0 - float(res[0]) / ss_tot if (res.size and ss_tot > 0) else 1.0
    return float(coef[0]), r2, []


def continued_fraction(alpha, n_digits):
    """First n continued-fraction digits of alpha in (0,1) via the Gauss map."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    digits = []
    x = float(alpha)
    for i in range(n_digits):
        if x < 1e-15:
            raise ValueError("near-rational collapse at digit %d" % (i + 1))
        inv = 1.0 / x
        a = int(np.floor(inv))
        digits.append(a)
        x = inv - a
    return digits


def spectrum_csv(path, approx):
    with open(path, "w") as fh:
        fh.write("# schema=spectrum version=1\n")
        fh.write("E_lo,E_hi\n")
        for lo, hi in approx.intervals:
            fh.write("%.17g,%.17g\n" % (lo, hi))


def dimension_csv(path, scales, counts):
    with open(path, "w") as fh:
        fh.write("# schema=dimension version=1\n")
        fh.write("scale,box_count\n")
        for s, c in zip(scales, counts):
            fh.write("%.17g,%d\n" % (s, c))
