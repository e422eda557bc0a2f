"""Command-line surface: reproducible seeded runs with file outputs.

Commands: solve, probe, verify-transform, coefficients, hodograph, report.
Every run writes a manifest.json echoing the fully resolved configuration,
so identical configurations reproduce byte-identical CSV and PGM outputs.

Map grammar (flat tokens joined by '+'):
    linear:a_re,a_im,b_re,b_im      a*zeta + b*conj(zeta)
    kabs:k                          k*|zeta|
    smoothsat:a_re,a_im,b_re,b_im,s a*zeta + b*conj(zeta) + s*zeta/(1+|zeta|)
    zterm:amp_re,amp_im,k1,k2       + amp*sin(2*pi*(k1*x + k2*y)/L)
    wterm:c_re,c_im                 + c*w/(1+|w|)
A bare autonomous token selects the gradient-only solvers; any zterm/wterm
upgrades the map to the full solver (use --damping to stabilize it).

Forcing grammar for --h:
    zero                            the zero field (default)
    trig:re,im,k1,k2[+re,im,k1,k2]  sum of complex waves
    <path>                          a BFLD1 field file
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    distortion_stats,
    gradient_equation_check,
    hodograph_check,
    recover_coefficients,
    second_order_probe,
    sobolev_probe,
    directional_derivative_fields,
)
from .autonomous import AutonomousMap, abs_map, linear_map, smooth_saturating_map, solve_autonomous
from .constant_coefficient import (
    CCParams,
    compute_mu_nu,
    reduction_residual,
    solve_cc_changevar,
    verify_transform,
)
from .fullnonlinear import FullMap, solve_full
from .grid import GridField, GridSpec, lp_norm, read_field, write_field
from .operators import derivative_pair, resample
from .synth import trig_field

_FMT = "%.17g"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits 1 on usage errors (2 means non-convergence)."""

    def error(self, message):
        raise _UsageError(message)


def _complex_arg(s: str) -> complex:
    try:
        re_s, im_s = s.split(",")
        return complex(float(re_s), float(im_s))
    except ValueError:
        raise _UsageError(f"expected 're,im', got {s!r}") from None


def _floats(token: str, body: str, count: int) -> list[float]:
    parts = body.split(",")
    if len(parts) != count:
        raise _UsageError(f"bad map token {token!r}: expected {count} numbers")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise _UsageError(f"bad map token {token!r}: non-numeric field") from None


def parse_map(spec_str: str, L: float):
    """Parse the map mini-language into an AutonomousMap or FullMap."""
    base: AutonomousMap | None = None
    zterms: list[tuple[complex, int, int]] = []
    wterms: list[complex] = []
    for token in spec_str.split("+"):
        head, _, body = token.partition(":")
        if head == "linear":
            ar, ai, br, bi = _floats(token, body, 4)
            m = linear_map(complex(ar, ai), complex(br, bi))
        elif head == "kabs":
            (k,) = _floats(token, body, 1)
            m = abs_map(k)
        elif head == "smoothsat":
            ar, ai, br, bi, s = _floats(token, body, 5)
            m = smooth_saturating_map(complex(ar, ai), complex(br, bi), s)
        elif head == "zterm":
            ar, ai, k1, k2 = _floats(token, body, 4)
            zterms.append((complex(ar, ai), int(k1), int(k2)))
            continue
        elif head == "wterm":
            cr, ci = _floats(token, body, 2)
            wterms.append(complex(cr, ci))
            continue
        else:
            raise _UsageError(f"unknown map token {token!r}")
        if base is not None:
            raise _UsageError(f"duplicate base map token {token!r}")
        base = m
    if base is None:
        raise _UsageError(f"map {spec_str!r} lacks a base token (linear/kabs/smoothsat)")
    if not zterms and not wterms:
        return base

    aeval = base.eval
    freq = 2.0 * math.pi / L

    def full_eval(z, w, zeta):
        out = aeval(zeta)
        for amp, k1, k2 in zterms:
            out = out + amp * np.sin(freq * (k1 * np.real(z) + k2 * np.imag(z)))
        for cw in wterms:
            out = out + cw * w / (1.0 + np.abs(w))
        return out

    return FullMap(eval=full_eval, k=base.k, name=spec_str)


def _parse_h(h_arg: str | None, spec: GridSpec) -> GridField:
    if h_arg is None or h_arg == "zero":
        return trig_field(spec, [])
    if h_arg.startswith("trig:"):
        waves = []
        for part in h_arg[len("trig:"):].split("+"):
            re_s, im_s, k1, k2 = _floats(h_arg, part, 4)
            waves.append((int(k1), int(k2), complex(re_s, im_s)))
        return trig_field(spec, waves)
    f = read_field(h_arg)
    if f.spec.n != spec.n:
        f = resample(f, spec.n)
    if f.spec != spec:
        raise _UsageError(f"forcing file grid {f.spec} does not match requested {spec}")
    return f


def _write_csv(path: Path, header: list[str], rows) -> None:
    def fmt(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        if isinstance(v, float):
            return _FMT % v
        return str(v)

    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def _write_pgm(path: Path, data: np.ndarray) -> dict:
    lo, hi = float(data.min()), float(data.max())
    if hi > lo:
        img = np.round(255.0 * (data - lo) / (hi - lo)).astype(np.uint8)
    else:
        img = np.zeros(data.shape, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{data.shape[1]} {data.shape[0]}\n255\n".encode())
        fh.write(img.tobytes())
    return {"min": lo, "max": hi}


def _write_manifest(outdir: Path, payload: dict) -> None:
    payload = dict(payload)
    payload["version"] = __version__
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_solve(args) -> int:
    spec = GridSpec(args.grid, args.period)
    mapping = parse_map(args.map, spec.L)
    h = _parse_h(args.h, spec)
    out = _outdir(args)

    if args.solver == "changevar":
        if not isinstance(mapping, AutonomousMap) or mapping.linf is None \
                or mapping.linf.C != 0.0:
            raise _UsageError("--solver changevar requires a linear:* map")
        p = CCParams(mapping.linf.a, mapping.linf.b)
        f, report = solve_cc_changevar(p, h, args.mean)
    elif isinstance(mapping, AutonomousMap):
        f, report = solve_autonomous(mapping, h, args.mean, tol=args.tol,
                                     max_iter=args.max_iter)
    else:
        f, report = solve_full(mapping, args.mean, tol=args.tol,
                               max_iter=args.max_iter, damping=args.damping,
                               spec=spec)

    write_field(f, out / "solution.bfld")
    rows = [(i + 1, r) for i, r in enumerate(report.residual_history)]
    _write_csv(out / "report.csv", ["iteration", "residual"], rows)
    _write_csv(out / "summary.csv",
               ["iterations", "final_residual", "contraction_ratio", "converged"],
               [(report.iterations, report.final_residual,
                 report.contraction_ratio, report.converged)])
    fz, _ = derivative_pair(f)
    scale = _write_pgm(out / "fz_heatmap.pgm", np.abs(fz.values))
    _write_manifest(out, {
        "command": "solve",
        "config": {
            "map": args.map, "grid": args.grid, "period": args.period,
            "mean": [args.mean.real, args.mean.imag], "h": args.h or "zero",
            "tol": args.tol, "max_iter": args.max_iter, "damping": args.damping,
            "solver": args.solver, "seed": args.seed,
        },
        "outputs": ["solution.bfld", "report.csv", "summary.csv", "fz_heatmap.pgm"],
        "heatmap_scale": scale,
        "result": {"converged": report.converged, "iterations": report.iterations,
                   "final_residual": report.final_residual},
    })
    print(f"converged={report.converged} iterations={report.iterations} "
          f"final_residual={report.final_residual:.3e} "
          f"contraction_ratio={report.contraction_ratio:.4f}")
    return 0 if report.converged else 2


def _solve_ladder(args, spec_str: str, n0: int, levels: int, period: float,
                  mean: complex, tol: float, max_iter: int):
    fields = []
    for lev in range(levels):
        spec = GridSpec(n0 * (2 ** lev), period)
        mapping = parse_map(spec_str, spec.L)
        h = _parse_h(args.h, spec)
        if isinstance(mapping, AutonomousMap):
            f, rep = solve_autonomous(mapping, h, mean, tol=tol, max_iter=max_iter)
        else:
            f, rep = solve_full(mapping, mean, tol=tol, max_iter=max_iter,
                                damping=args.damping, spec=spec)
        if not rep.converged:
            raise _UsageError(f"ladder solve at n={spec.n} did not converge")
        fields.append(f)
    return fields


def cmd_probe(args) -> int:
    pairs = None
    if args.fields:
        fields = [read_field(p) for p in args.fields]
    elif args.extremal is not None:
        from .synth import radial_extremal_pair

        fields, pairs = [], []
        for lev in range(args.levels):
            spec = GridSpec(args.grid * (2 ** lev), args.period)
            g, gz, gzb = radial_extremal_pair(spec, args.extremal)
            fields.append(g)
            pairs.append((gz, gzb))
    elif args.map:
        fields = _solve_ladder(args, args.map, args.grid, args.levels,
                               args.period, args.mean, args.tol, args.max_iter)
    else:
        raise _UsageError("probe needs --fields, --map or --extremal")
    if len(fields) < 3:
        raise _UsageError(f"need at least 3 ladder levels, got {len(fields)}")

    p_grid = np.arange(args.p_min, args.p_max + 1e-9, args.p_step)
    if args.second_order:
        if args.k is None:
            raise _UsageError("--second-order requires --k")
        report = second_order_probe(fields, args.k, p_grid)
    else:
        report = sobolev_probe(fields, p_grid, pairs=pairs)

    out = _outdir(args)
    rows = list(report.norm_rows())
    rows.append(("summary", report.p_critical, report.fit_r2,
                 report.tail_exponent, report.distortion_max))
    _write_csv(out / "regularity.csv",
               ["p", "level", "norm", "power_mean", "stable"], rows)
    _write_manifest(out, {
        "command": "probe",
        "config": {
            "fields": list(args.fields) if args.fields else None,
            "map": args.map, "extremal": args.extremal, "grid": args.grid,
            "levels": args.levels, "period": args.period,
            "mean": [args.mean.real, args.mean.imag], "h": args.h or "zero",
            "p_min": args.p_min, "p_max": args.p_max, "p_step": args.p_step,
            "second_order": args.second_order, "k": args.k, "seed": args.seed,
            "tol": args.tol, "max_iter": args.max_iter, "damping": args.damping,
        },
        "outputs": ["regularity.csv"],
        "result": {"p_critical": report.p_critical, "fit_r2": report.fit_r2},
    })
    p_c = "inf" if math.isinf(report.p_critical) else _FMT % report.p_critical
    print(f"p_critical={p_c} fit_r2={_FMT % report.fit_r2}")
    return 0


def cmd_verify_transform(args) -> int:
    p = CCParams(args.a, args.b)  # raises on ellipticity violation -> exit 1
    cv = compute_mu_nu(p)
    res_ab = verify_transform(p, cv, trials=args.trials, seed=args.seed)
    res_exact = reduction_residual(p, cv, trials=args.trials, seed=args.seed)
    bound_mu_printed = abs(cv.mu) * (1 - abs(p.b) ** 2) - abs(p.a)
    bound_nu_printed = abs(cv.nu) * (1 - abs(p.a) ** 2) - abs(p.b)
    bound_mu = abs(cv.mu) * (1 - abs(p.b)) - abs(p.a)
    bound_nu = abs(cv.nu) * (1 - abs(p.a)) - abs(p.b)
    print(f"mu={cv.mu.real:.12g}{cv.mu.imag:+.12g}j "
          f"nu={cv.nu.real:.12g}{cv.nu.imag:+.12g}j path={cv.path}")
    print(f"residual_ab_form={res_ab:.3e} residual_reduction={res_exact:.3e}")
    print(f"bound_excess_squared_denominators: mu={bound_mu_printed:.3e} "
          f"nu={bound_nu_printed:.3e}")
    print(f"bound_excess_provable: mu={bound_mu:.3e} nu={bound_nu:.3e}")
    if args.out:
        out = _outdir(args)
        _write_csv(out / "transform.csv",
                   ["mu_re", "mu_im", "nu_re", "nu_im", "path",
                    "residual_ab_form", "residual_reduction"],
                   [(cv.mu.real, cv.mu.imag, cv.nu.real, cv.nu.imag, cv.path,
                     res_ab, res_exact)])
        _write_manifest(out, {
            "command": "verify-transform",
            "config": {"a": [args.a.real, args.a.imag],
                       "b": [args.b.real, args.b.imag],
                       "trials": args.trials, "seed": args.seed},
            "outputs": ["transform.csv"],
            "result": {"residual_ab_form": res_ab, "path": cv.path},
        })
    return 0 if res_ab <= 1e-8 else 2


def cmd_coefficients(args) -> int:
    f = read_field(args.field)
    fx, fy = directional_derivative_fields(f)
    coeffs = recover_coefficients(fx, fy, args.k)
    check = gradient_equation_check(f, coeffs)
    out = _outdir(args)
    mu, nu, flg = coeffs.mu.values, coeffs.nu.values, coeffs.flagged
    n = f.spec.n
    rows = [(i, j, mu[i, j].real, mu[i, j].imag, nu[i, j].real, nu[i, j].imag,
             bool(flg[i, j])) for i in range(n) for j in range(n)]
    _write_csv(out / "coefficients.csv",
               ["row", "col", "mu_re", "mu_im", "nu_re", "nu_im", "flagged"], rows)
    good = ~flg
    max_sum = float(np.max(np.abs(mu[good]) + np.abs(nu[good]))) if good.any() else 0.0
    _write_csv(out / "coefficients_summary.csv",
               ["flagged_fraction", "max_mu_plus_nu", "gradient_residual", "k_prime"],
               [(coeffs.flagged_fraction, max_sum, check.residual, check.k_prime)])
    _write_manifest(out, {
        "command": "coefficients",
        "config": {"field": str(args.field), "k": args.k, "seed": args.seed},
        "outputs": ["coefficients.csv", "coefficients_summary.csv"],
        "result": {"flagged_fraction": coeffs.flagged_fraction,
                   "gradient_residual": check.residual, "k_prime": check.k_prime},
    })
    print(f"flagged_fraction={coeffs.flagged_fraction:.4f} "
          f"max_mu_plus_nu={max_sum:.6f} gradient_residual={check.residual:.3e} "
          f"k_prime={check.k_prime:.6f}")
    return 0


def cmd_hodograph(args) -> int:
    f = read_field(args.field)
    mapping = parse_map(args.map, f.spec.L)
    if not isinstance(mapping, AutonomousMap):
        raise _UsageError("hodograph requires an autonomous (gradient-only) map")
    result = hodograph_check(f, mapping, args.points, seed=args.seed,
                             min_jacobian=args.min_jacobian)
    out = _outdir(args)
    _write_csv(out / "hodograph.csv",
               ["max_identity_residual", "max_derivative_ratio", "accepted", "skipped"],
               [(result.max_identity_residual, result.max_derivative_ratio,
                 result.accepted, result.skipped)])
    _write_manifest(out, {
        "command": "hodograph",
        "config": {"field": str(args.field), "map": args.map,
                   "points": args.points, "seed": args.seed,
                   "min_jacobian": args.min_jacobian},
        "outputs": ["hodograph.csv"],
        "result": {"max_identity_residual": result.max_identity_residual,
                   "accepted": result.accepted, "skipped": result.skipped},
    })
    print(f"max_identity_residual={result.max_identity_residual:.3e} "
          f"max_derivative_ratio={result.max_derivative_ratio:.6f} "
          f"accepted={result.accepted} skipped={result.skipped}")
    return 0


def cmd_report(args) -> int:
    f = read_field(args.field)
    st = distortion_stats(f)
    fz, fzb = derivative_pair(f)
    out = _outdir(args)
    rows = [(p, lp_norm(fz, p), lp_norm(fzb, p)) for p in (1.0, 2.0, 4.0, 8.0)]
    _write_csv(out / "norms.csv", ["p", "fz_norm", "fzbar_norm"], rows)
    _write_csv(out / "distortion.csv",
               ["max", "q50", "q90", "q99", "degenerate_fraction"],
               [(st.max, *st.quantiles, st.degenerate_fraction)])
    _write_manifest(out, {
        "command": "report",
        "config": {"field": str(args.field), "seed": args.seed},
        "outputs": ["norms.csv", "distortion.csv"],
        "result": {"distortion_max": st.max,
                   "degenerate_fraction": st.degenerate_fraction},
    })
    print(f"distortion_max={st.max:.6f} degenerate_fraction={st.degenerate_fraction:.5f}")
    return 0


def _limit_threads() -> None:
    cap = os.environ.get("BELTRAMI_THREADS")
    if not cap:
        return
    try:
        limit = int(cap)
    except ValueError:
        raise _UsageError(f"BELTRAMI_THREADS must be an integer, got {cap!r}") from None
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(limit)
    except ImportError:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(limit))


def build_parser() -> _Parser:
    parser = _Parser(prog="beltrami",
                     description="Spectral Beltrami-equation solvers on a torus")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, out_required=True):
        sp.add_argument("--seed", type=int, default=0, help="seed for all sampling")
        sp.add_argument("--out", required=out_required, help="output directory")

    sp = sub.add_parser("solve", help="solve one equation and write the field")
    sp.add_argument("--map", required=True)
    sp.add_argument("--grid", type=int, required=True)
    sp.add_argument("--period", type=float, default=2.0 * math.pi)
    sp.add_argument("--mean", type=_complex_arg, default=complex(1.0, 0.0))
    sp.add_argument("--h", default=None)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--max-iter", type=int, default=2000)
    sp.add_argument("--damping", type=float, default=1.0)
    sp.add_argument("--solver", choices=["fixed-point", "changevar"],
                    default="fixed-point")
    common(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("probe", help="integrability probe over a refinement ladder")
    sp.add_argument("--fields", nargs="*", default=None)
    sp.add_argument("--map", default=None)
    sp.add_argument("--extremal", type=float, default=None,
                    help="built-in radial test field with this distortion")
    sp.add_argument("--grid", type=int, default=64)
    sp.add_argument("--levels", type=int, default=3)
    sp.add_argument("--period", type=float, default=2.0 * math.pi)
    sp.add_argument("--mean", type=_complex_arg, default=complex(1.0, 0.0))
    sp.add_argument("--h", default=None)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--max-iter", type=int, default=2000)
    sp.add_argument("--damping", type=float, default=1.0)
    sp.add_argument("--p-min", type=float, default=2.0)
    sp.add_argument("--p-max", type=float, default=8.0)
    sp.add_argument("--p-step", type=float, default=0.2)
    sp.add_argument("--second-order", action="store_true")
    sp.add_argument("--k", type=float, default=None)
    common(sp)
    sp.set_defaults(func=cmd_probe)

    sp = sub.add_parser("verify-transform",
                        help="audit the change-of-variables reduction")
    sp.add_argument("--a", type=_complex_arg, required=True)
    sp.add_argument("--b", type=_complex_arg, required=True)
    sp.add_argument("--trials", type=int, default=8)
    common(sp, out_required=False)
    sp.set_defaults(func=cmd_verify_transform)

    sp = sub.add_parser("coefficients",
                        help="recover pointwise coefficients from a solution")
    sp.add_argument("--field", required=True)
    sp.add_argument("--k", type=float, required=True)
    common(sp)
    sp.set_defaults(func=cmd_coefficients)

    sp = sub.add_parser("hodograph", help="probe the local-inverse identity")
    sp.add_argument("--field", required=True)
    sp.add_argument("--map", required=True)
    sp.add_argument("--points", type=int, default=64)
    sp.add_argument("--min-jacobian", type=float, default=0.1)
    common(sp)
    sp.set_defaults(func=cmd_hodograph)

    sp = sub.add_parser("report", help="distortion and norm summary of a field")
    sp.add_argument("--field", required=True)
    common(sp)
    sp.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    try:
        _limit_threads()
        parser = build_parser()
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
