"""Batch front-end: config-file driven runs writing CSV artifacts and a report.

Usage: anosovlab --config run.cfg --out results/ [--seed N] [--threads N]

The config is flat sectioned key=value text.  [run] selects the
subcommand; [family] declares the map sequence; per-subcommand numeric
blocks follow.  Exit codes: 0 success, 2 validation error, 3 numerical
failure (partial outputs are kept).
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys

import numpy as np

from . import cones as cones_mod
from . import counterexample as cx
from . import regularity as reg
from . import tracemap as tm
from . import transform as tf
from .maps import LinearMap, TrigPerturbedMap, MapFamily, InverseSolveError
from .torus import angle_of

SCHEMA = {
    "run": {"subcommand"},
    "family": {"kind", "matrix", "epsilon", "modes", "sequence-mode", "seed",
               "explicit-list"},
    "cones": {"mu", "h-angle", "v-angle", "grid", "n-max"},
    "section": {"grid", "tol", "n-max", "band-radius", "beta"},
    "regularity": {"scales", "pairs"},
    "counterexample": {"b", "n-max", "eps", "theta", "mu", "grid"},
    "sturmian": {"lambda", "cf", "alpha", "cf-length", "window", "initial-grid",
                 "refine-depth", "escape-radius", "max-iters"},
    "dimension": {"scales"},
}

SUBCOMMANDS = {"check-cones", "compute-section", "estimate-regularity",
               "counterexample", "sturmian", "dimension"}


class ConfigError(ValueError):
    pass


def load_config(path):
    cp = configparser.ConfigParser(comment_prefixes=("#",),
                                   inline_comment_prefixes=("#",),
                                   delimiters=("=",))
    with open(path) as fh:
        cp.read_file(fh)
    cfg = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError("unknown section [%s]" % section)
        for key in cp[section]:
            if key not in SCHEMA[section]:
                raise ConfigError("unknown key %r in [%s]" % (key, section))
        cfg[section] = dict(cp[section])
    sub = cfg.get("run", {}).get("subcommand")
    if sub not in SUBCOMMANDS:
        raise ConfigError("missing or unknown subcommand: %r" % sub)
    return cfg


def _parse_matrix(text):
    vals = [float(v) for v in text.replace(";", ",").split(",")]
    if len(vals) != 4:
        raise ConfigError("matrix needs 4 comma-separated entries")
    return np.array(vals).reshape(2, 2)


def build_family(cfg):
    fam_cfg = cfg.get("family", {})
    kind = fam_cfg.get("kind", "linear")
    matrix = _parse_matrix(fam_cfg.get("matrix", "2,1,1,1"))
    if kind == "linear":
        spec = LinearMap(matrix)
        smooth = "Cinf"
    elif kind == "trig-perturbed":
        eps = float(fam_cfg.get("epsilon", "0.05"))
        modes = _parse_matrix(fam_cfg.get("modes", "1,0,0,1"))
        spec = TrigPerturbedMap(matrix, eps, modes)
        smooth = "Cinf"
    else:
        raise ConfigError("unknown family kind %r" % kind)
    mode = fam_cfg.get("sequence-mode", "constant")
    if mode == "constant":
        return MapFamily.constant_family(spec, smoothness=smooth)
    raise ConfigError("unsupported sequence-mode %r for CLI families" % mode)


def _stable_unstable_angles(matrix):
    evals, evecs = np.linalg.eig(np.asarray(matrix, dtype=float))
    order = np.argsort(np.abs(evals))
    return (float(angle_of(np.real(evecs[:, order[0]]))),
            float(angle_of(np.real(evecs[:, order[1]]))))


def default_cones(cfg):
    fam_cfg = cfg.get("family", {})
    matrix = _parse_matrix(fam_cfg.get("matrix", "2,1,1,1"))
    s_ang, u_ang = _stable_unstable_angles(matrix)
    c = cfg.get("cones", {})
    return cones_mod.ConeField(
        h_angle=float(c.get("h-angle", u_ang)),
        v_angle=float(c.get("v-angle", s_ang)),
        mu=float(c.get("mu", "0.2")),
    )


def write_report(out_dir, lines, diag=None):
    with open(os.path.join(out_dir, "report.txt"), "w") as fh:
        for ln in lines:
            fh.write(ln + "\n")
        fh.write("diagnostics:\n")
        if diag is not None:
            fh.write("  λ̂ = %.17g\n" % diag.lambda_hat)
            fh.write("  κ̂ = %.17g\n" % diag.kappa_hat)
            fh.write("  Δ̂ = %.17g\n" % diag.delta_hat)
            if diag.delta_beta_hat is not None:
                fh.write("  Δ̂_β = %.17g (β = %.17g)\n"
                         % (diag.delta_beta_hat, diag.beta))
            fh.write("  residual = %.17g\n" % diag.residual)
            fh.write("  iterations = %d\n" % diag.iterations)
        else:
            fh.write("  λ̂ = n/a\n  κ̂ = n/a\n  Δ̂ = n/a\n")


def _run_check_cones(cfg, out_dir, seed):
    fam = build_family(cfg)
    cones = default_cones(cfg)
    c = cfg.get("cones", {})
    rep = cones_mod.common_condition(fam, cones, n_max=int(c.get("n-max", "4")),
                                     grid=int(c.get("grid", "64")))
    with open(os.path.join(out_dir, "cone_report.csv"), "w") as fh:
        fh.write("# schema=cone_report version=1\n")
        fh.write("invariant_s,invariant_u,angle_margin,eta_u,eta_s,passes\n")
        fh.write("%d,%d,%.17g,%.17g,%.17g,%d\n" %
                 (rep.invariant_s, rep.invariant_u, rep.angle_margin,
                  rep.eta_u, rep.eta_s, rep.passes))
    write_report(out_dir, ["check-cones: %s" % ("PASS" if rep.passes else "FAIL"),
                           "angle_margin = %.17g" % rep.angle_margin,
                           "eta_u = %.17g, eta_s = %.17g" % (rep.eta_u, rep.eta_s)])
    return 0


def _solve_from_cfg(cfg):
    fam = build_family(cfg)
    cones = default_cones(cfg)
    s = cfg.get("section", {})
    band_r = s.get("band-radius")
    band = (tf.Band(cones.v_angle, float(band_r)) if band_r
            else tf.default_band(cones))
    beta = s.get("beta")
    sigma, H, diag = tf.solve_section(
        fam, band,
        resolution=int(s.get("grid", "128")),
        tol=float(s.get("tol", "1e-10")),
        n_max=int(s.get("n-max", "200")),
        beta=float(beta) if beta else None,
    )
    return sigma, H, diag, band


def _run_compute_section(cfg, out_dir, seed):
    sigma, H, diag, _ = _solve_from_cfg(cfg)
    tf.section_to_csv(os.path.join(out_dir, "section.csv"), sigma, H)
    write_report(out_dir, ["compute-section: converged"], diag)
    return 0


def _run_estimate_regularity(cfg, out_dir, seed):
    sigma, H, diag, _ = _solve_from_cfg(cfg)
    tf.section_to_csv(os.path.join(out_dir, "section.csv"), sigma, H)
    r = cfg.get("regularity", {})
    scales = ([float(x) for x in r["scales"].split(",")] if "scales" in r
              else [2.0 ** (-k) for k in range(3, 10)])
    n_pairs = int(r.get("pairs", "200"))
    fd = reg.finite_diff_deriv(sigma)
    beta_hat, fit, flags = reg.holder_exponent(fd, scales, n_pairs, seed=seed)
    rng = np.random.default_rng(seed)
    sups = []
    for s in scales:
        x = rng.random((n_pairs, 2))
        psi = rng.random(n_pairs) * 2 * np.pi
        y = (x + s * np.stack([np.cos(psi), np.sin(psi)], axis=-1)) % 1.0
        sups.append(float(np.linalg.norm(fd.interp(x) - fd.interp(y), axis=-1).max()))
    with open(os.path.join(out_dir, "holder.csv"), "w") as fh:
        fh.write("# schema=holder version=1\n")
        fh.write("scale,sup_diff\n")
        for s, v in zip(scales, sups):
            fh.write("%.17g,%.17g\n" % (s, v))
    write_report(out_dir,
                 ["estimate-regularity: beta_hat = %.17g (fit %.6g)%s"
                  % (beta_hat, fit, " flags=" + ",".join(flags) if flags else "")],
                 diag)
    return 0


def _run_counterexample(cfg, out_dir, seed):
    c = cfg.get("counterexample", {})
    params = cx.CounterexampleParams(
        b=float(c.get("b", "0.1")),
        eps=float(c.get("eps", "0.8")),
        theta=float(c.get("theta", "0.1")),
        cone_mu=float(c.get("mu", "0.35")),
    )
    n_max = int(c.get("n-max", "10"))
    rows = cx.blowup_experiment(params, n_max)
    cx.blowup_csv(os.path.join(out_dir, "blowup.csv"), rows)
    from .maps import norm_report
    fam = cx.build_family(params)
    norms = norm_report(fam, n_max, grid=int(c.get("grid", "32")))
    with open(os.path.join(out_dir, "norms.csv"), "w") as fh:
        fh.write("# schema=norms version=1\n")
        fh.write("n,df,dfinv,d2f,d2finv\n")
        for r in norms:
            fh.write("%d,%.17g,%.17g,%.17g,%.17g\n"
                     % (r["n"], r["df"], r["dfinv"], r["d2f"], r["d2finv"]))
    rate = cx.fitted_growth_rate(rows)
    write_report(out_dir, ["counterexample: fitted log-ratio slope = %.17g" % rate,
                           "reference log(1 + b/2) = %.17g"
                           % np.log1p(params.b / 2.0)])
    return 0


def _sturmian_scan(cfg):
    s = cfg.get("sturmian", {})
    lam = float(s.get("lambda", "0"))
    if "cf" in s:
        cf = [int(x) for x in s["cf"].split(",")]
    elif "alpha" in s:
        cf = tm.continued_fraction(float(s["alpha"]), int(s.get("cf-length", "12")))
    else:
        cf = [1] * 12
    window = [float(x) for x in s.get("window", "-3,3").split(",")]
    return tm.spectrum_scan(
        lam, cf, window,
        initial_grid=int(s.get("initial-grid", "256")),
        refine_depth=int(s.get("refine-depth", "10")),
        escape_radius=float(s.get("escape-radius", "10")),
        max_iters=int(s.get("max-iters", "10000")),
    )


def _run_sturmian(cfg, out_dir, seed):
    approx = _sturmian_scan(cfg)
    tm.spectrum_csv(os.path.join(out_dir, "spectrum.csv"), approx)
    total = sum(hi - lo for lo, hi in approx.intervals)
    write_report(out_dir,
                 ["sturmian: %d intervals, total length %.17g, resolution %.17g"
                  % (len(approx.intervals), total, approx.resolution),
                  "digits recycle periodically past the prefix"])
    return 0


def _run_dimension(cfg, out_dir, seed):
    approx = _sturmian_scan(cfg)
    tm.spectrum_csv(os.path.join(out_dir, "spectrum.csv"), approx)
    d = cfg.get("dimension", {})
    scales = ([float(x) for x in d["scales"].split(",")] if "scales" in d
              else [2.0 ** (-k) for k in range(2, 9)])
    dim_hat, fit, flags = tm.box_dimension(approx, scales)
    counts = tm.box_counts(approx.intervals, scales) if approx.intervals else [0] * len(scales)
    tm.dimension_csv(os.path.join(out_dir, "dimension.csv"), scales, counts)
    write_report(out_dir,
                 ["dimension: dim_hat = %.17g (fit %.6g)%s"
                  % (dim_hat, fit, " flags=" + ",".join(flags) if flags else "")])
    return 0


RUNNERS = {
    "check-cones": _run_check_cones,
    "compute-section": _run_compute_section,
    "estimate-regularity": _run_estimate_regularity,
    "counterexample": _run_counterexample,
    "sturmian": _run_sturmian,
    "dimension": _run_dimension,
}


def main(argv=None):
    ap = argparse.ArgumentParser(prog="anosovlab")
    ap.add_argument("--config", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=0)  # 0 = auto; results independent
    args = ap.parse_args(argv)

    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError, configparser.Error) as e:
        print("config error: %s" % e, file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)
    sub = cfg["run"]["subcommand"]
    try:
        return RUNNERS[sub](cfg, args.out, args.seed)
    except ConfigError as e:
        print("config error: %s" % e, file=sys.stderr)
        return 2
    except (tf.FiberInvarianceError, tf.ConvergenceError, InverseSolveError,
            ValueError) as e:
        print("numerical failure: %s" % e, file=sys.stderr)
        with open(os.path.join(args.out, "report.txt"), "w") as fh:
            fh.write("FAILED: %s\nλ̂ = n/a\nκ̂ = n/a\nΔ̂ = n/a\n" % e)
        return 3


if __name__ == "__main__":
    sys.exit(main())
