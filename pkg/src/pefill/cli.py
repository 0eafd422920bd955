"""Command-line interface: ``pefill <subcommand> [options]``."""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from ._util import dumps
from .config import load_settings
from .einstein_ode import FORMS, GEOMETRIC, integrate_profiles, series_seed
from .errors import PefillError
from .gates import quotient_ball_volume, volume_comparison, yamabe_product, yamabe_sphere
from .profile import HyperbolicFilling, hyperbolic_profile
from .renvol import (build_chart, extract_renormalized_volume, gauss_bonnet_check,
                     hyperbolic_renormalized_volume)
from .report import fillings, scan, verify_all
from .schwarzschild import (SchwarzschildParams, branch_horizons,
                            renormalized_volume_closed_form)


class UsageError(Exception):
    pass


def _emit(obj):
    sys.stdout.write(dumps(obj) + "\n")


def _schwarzschild_from_args(args, settings):
    if args.s_h is not None:
        return SchwarzschildParams.from_horizon(settings.n, args.s_h, settings.omega_n)
    if args.lam is None:
        raise UsageError("give --s-h, or --lambda with --branch")
    branches = dict(branch_horizons(settings.n, args.lam))
    if not branches:
        raise UsageError(f"no Schwarzschild filling for lambda = {args.lam}")
    branch = args.branch or ("double" if "double" in branches else None)
    if branch not in branches:
        raise UsageError(f"--branch must be one of {sorted(branches)} for lambda = {args.lam}")
    return SchwarzschildParams.from_horizon(settings.n, branches[branch], settings.omega_n)


def _filling(args, settings):
    if args.metric == "hyperbolic":
        if args.lam is None:
            raise UsageError("--lambda is required for the hyperbolic metric")
        return HyperbolicFilling(settings.n, args.lam)
    return _schwarzschild_from_args(args, settings)


def cmd_fillings(args, settings):
    _emit(fillings(settings.n, args.lam, settings).to_dict())
    return 0


def cmd_scan(args, settings):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            scan(settings.n, args.lambda_min, args.lambda_max, args.steps, fh, settings)
    else:
        scan(settings.n, args.lambda_min, args.lambda_max, args.steps, sys.stdout, settings)
    return 0


def cmd_ode_verify(args, settings):
    n = settings.n
    seed = series_seed(n, args.order or settings.series_order)
    sol = integrate_profiles(n, seed, args.G0, args.r_max or settings.ode_r_max,
                             args.tol or settings.ode_tol, r0=settings.ode_r0,
                             num=settings.ode_points, form=args.form)
    p = sol.profile
    summary = sol.summary()
    exact = hyperbolic_profile(n, args.G0, r=p.r)
    summary["max_rel_dev_F"] = float(np.max(np.abs(p.F - exact.F) / np.cosh(p.r)))
    summary["max_rel_dev_G"] = float(np.max(np.abs(p.G - exact.G) / (args.G0 * np.cosh(p.r))))
    limit = 10.0 * sol.tol
    summary["residual_limit"] = limit
    summary["pass"] = bool(sol.max_residual <= limit)
    if args.profile_out:
        p.to_csv(args.profile_out)
    _emit(summary)
    return 0 if summary["pass"] else 1


def cmd_gb_check(args, settings):
    filling = _filling(args, settings)
    out = gauss_bonnet_check(filling, chi=args.chi, convention=settings.weyl_convention,
                             method=args.method, r_max=settings.profile_r_max,
                             num=settings.profile_points)
    _emit(out)
    return 0 if out["pass"] else 1


def cmd_renvol(args, settings):
    filling = _filling(args, settings)
    if args.method == "closed-form":
        if isinstance(filling, HyperbolicFilling):
            v = hyperbolic_renormalized_volume(filling.n, filling.lam)
        else:
            v = renormalized_volume_closed_form(filling.n, filling.s_h)
        out = {"method": "closed-form", "v_ren": v, "uncertainty": 0.0, "coefficients": None,
               "residual": 0.0}
    else:
        eps = np.geomspace(settings.eps_hi, settings.eps_lo, settings.eps_points)
        ex = extract_renormalized_volume(build_chart(filling), eps, n_tail=settings.fit_tail)
        out = {"method": "quadrature-fit", "v_ren": ex.v_ren, "uncertainty": ex.uncertainty,
               "coefficients": ex.coefficients, "residual": ex.residual,
               "condition": ex.condition}
    out["metric"] = args.metric
    out["lambda"] = filling.lam
    if not isinstance(filling, HyperbolicFilling):
        out["s_h"] = filling.s_h
    _emit(out)
    return 0


def cmd_yamabe(args, settings):
    res = yamabe_product(args.n or settings.n, args.lam, args.grid or settings.yamabe_grid)
    _emit(res.to_dict(minimizer=args.minimizer))
    return 0


def cmd_volume_comparison(args, settings):
    n = 3
    radii = tuple(args.r) if args.r else settings.mc_radii
    samples = args.samples or settings.mc_samples
    seed = settings.mc_seed if args.seed is None else args.seed
    Y = yamabe_product(n, args.lam, settings.yamabe_grid).value
    out = volume_comparison(args.lam, Y, radii, samples, seed, n=n,
                            center_distance=args.center_distance, workers=settings.workers)
    out["yamabe_sphere"] = yamabe_sphere(n)
    out["estimates"] = [quotient_ball_volume(args.lam, args.center_distance, r, samples, seed + i,
                                             workers=settings.workers).to_dict()
                        for i, r in enumerate(radii)]
    _emit(out)
    return 0 if out["pass"] else 1


def cmd_verify_all(args, settings):
    status, summary = verify_all(settings)
    _emit(summary)
    return status


def _positive(text):
    v = float(text)
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value settings file")
    common.add_argument("--n", type=int, help="boundary dimension (default from settings)")
    common.add_argument("--omega", type=_positive, dest="omega_n", help="mass normalization")
    common.add_argument("--weyl-convention", choices=("pair", "full"))
    common.add_argument("--workers", type=int)

    parser = argparse.ArgumentParser(prog="pefill", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fillings", parents=[common], help="all fillings for one lambda")
    p.add_argument("--lambda", dest="lam", type=_positive, required=True)
    p.set_defaults(func=cmd_fillings)

    p = sub.add_parser("scan", parents=[common], help="CSV table over a lambda range")
    p.add_argument("--lambda-min", type=_positive, required=True)
    p.add_argument("--lambda-max", type=_positive, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("ode-verify", parents=[common], help="integrate the reduced Einstein ODE")
    p.add_argument("--G0", type=_positive, default=1.0)
    p.add_argument("--r-max", type=_positive)
    p.add_argument("--tol", type=_positive)
    p.add_argument("--order", type=int, help="series order (odd)")
    p.add_argument("--form", choices=FORMS, default=GEOMETRIC)
    p.add_argument("--profile-out", help="write the profile CSV here")
    p.set_defaults(func=cmd_ode_verify)

    for name, func, helptext in (("gb-check", cmd_gb_check, "Gauss-Bonnet consistency"),
                                 ("renvol", cmd_renvol, "renormalized volume")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--metric", choices=("hyperbolic", "schwarzschild"), required=True)
        p.add_argument("--lambda", dest="lam", type=_positive)
        p.add_argument("--s-h", type=_positive)
        p.add_argument("--branch", choices=("plus", "minus", "double"))
        p.add_argument("--method", choices=("closed-form", "quadrature-fit"),
                       default="quadrature-fit")
        if name == "gb-check":
            p.add_argument("--chi", type=int)
        p.set_defaults(func=func)

    p = sub.add_parser("yamabe", parents=[common], help="Yamabe constant of the boundary")
    p.add_argument("--lambda", dest="lam", type=_positive, required=True)
    p.add_argument("--grid", type=int)
    p.add_argument("--minimizer", action="store_true", help="include the sampled minimizer")
    p.set_defaults(func=cmd_yamabe)

    p = sub.add_parser("volume-comparison", parents=[common], help="Monte-Carlo ball volumes")
    p.add_argument("--lambda", dest="lam", type=_positive, required=True)
    p.add_argument("--r", type=_positive, action="append", help="radius (repeatable)")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--center-distance", type=float, default=0.0)
    p.set_defaults(func=cmd_volume_comparison)

    p = sub.add_parser("verify-all", parents=[common], help="run every verification check")
    p.add_argument("--samples", type=int, dest="mc_samples")
    p.set_defaults(func=cmd_verify_all)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        overrides = {"n": args.n, "omega_n": args.omega_n,
                     "weyl_convention": args.weyl_convention, "workers": args.workers,
                     "mc_samples": getattr(args, "mc_samples", None)}
        settings = load_settings(args.config, **overrides)
        return args.func(args, settings)
    except (UsageError, FileNotFoundError) as exc:
        print(f"pefill: error: {exc}", file=sys.stderr)
        return 2
    except (PefillError, ValueError) as exc:
        print(f"pefill: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, ValueError) else 1


if __name__ == "__main__":
    sys.exit(main())
