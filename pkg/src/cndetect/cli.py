"""
Command-line front end.

Exit status: 0 on success, 2 on I/O or parse errors, 3 on invalid
configuration.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import dataio, plot
from .core_approx import ApproxConfig, ConfigError, IllConditionedError
from .detector import DetectionReport, Knot, SeriesTooShortError, detect
from .spline_fit import InadmissibleKnotsError, fit_spline
from .synthetic import add_noise, make_paper_poly, run_monte_carlo, sample

log = logging.getLogger("cndetect")

EXIT_OK, EXIT_IO, EXIT_CONFIG = 0, 2, 3


class CLIError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _add_approx_args(p):
    g = p.add_argument_group("approximation")
    g.add_argument("--order", type=int, default=2, help="derivative order n (default 2)")
    g.add_argument("--degree-left", type=int)
    g.add_argument("--degree-right", type=int)
    g.add_argument("--support-left", type=int)
    g.add_argument("--support-right", type=int)
    g.add_argument("--normalize-x", action="store_true",
                   help="rescale each window to [-1, 1] before solving")
    g.add_argument("--confidence", type=float, default=0.95)
    g.add_argument("--min-separation", type=int)
    g.add_argument("--per-point", action="store_true",
                   help="test each point at --confidence instead of the whole scan")


def _approx_config(args):
    if not 0 < args.confidence < 1:
        raise CLIError("--confidence must lie in (0, 1)", EXIT_CONFIG)
    if args.min_separation is not None and args.min_separation < 1:
        raise CLIError("--min-separation must be >= 1", EXIT_CONFIG)
    try:
        return ApproxConfig(
            order=args.order,
            degree_left=args.degree_left,
            degree_right=args.degree_right,
            support_left=args.support_left,
            support_right=args.support_right,
            normalize_x=args.normalize_x,
        )
    except ConfigError as exc:
        raise CLIError(str(exc), EXIT_CONFIG) from None


def _read(args):
    try:
        return dataio.read_series(args.input, args.x_col, args.y_col)
    except OSError as exc:
        raise CLIError(f"cannot read {args.input}: {exc.strerror or exc}", EXIT_IO) from None
    except dataio.DataError as exc:
        raise CLIError(str(exc), EXIT_IO) from None


def _write(fn, *a):
    try:
        fn(*a)
    except OSError as exc:
        raise CLIError(f"cannot write {a[-1]}: {exc.strerror or exc}", EXIT_IO) from None


def cmd_detect(args):
    cfg = _approx_config(args)
    if args.sigma is not None and args.sigma < 0:
        raise CLIError("--sigma must be >= 0", EXIT_CONFIG)
    series = _read(args)
    try:
        report = detect(
            series,
            cfg,
            sigma=args.sigma,
            confidence=args.confidence,
            min_separation=args.min_separation,
            familywise=not args.per_point,
        )
    except (SeriesTooShortError, IllConditionedError) as exc:
        raise CLIError(str(exc), EXIT_CONFIG) from None

    profile_path = args.profile
    if profile_path is None and args.out != "-":
        profile_path = str(Path(args.out).with_suffix("")) + ".profile.csv"
    if profile_path is not None:
        _write(dataio.write_profile, report.profile, profile_path)
    _write(dataio.dump_json, report.to_dict(profile_path), args.out)
    if args.plot:
        _write(plot.write_svg, series, report, args.plot)
    log.info("%d knot(s) found", len(report.knots))
    return EXIT_OK


def cmd_synth(args):
    if args.sigma < 0 or args.num_points < 2:
        raise CLIError("--sigma must be >= 0 and --num-points >= 2", EXIT_CONFIG)
    series = add_noise(sample(make_paper_poly(), args.num_points), args.sigma, args.seed)
    _write(dataio.write_series, series, args.out)
    return EXIT_OK


def cmd_montecarlo(args):
    if args.m < 1:
        raise CLIError("--m must be >= 1", EXIT_CONFIG)
    if args.sigma < 0 or args.num_points < 2:
        raise CLIError("--sigma must be >= 0 and --num-points >= 2", EXIT_CONFIG)
    cfg = _approx_config(args)
    summary = run_monte_carlo(
        args.m,
        sigma=args.sigma,
        num_points=args.num_points,
        cfg=cfg,
        base_seed=args.seed,
        confidence=args.confidence,
        min_separation=args.min_separation,
        workers=args.workers,
    )
    _write(dataio.dump_json, summary.as_dict(), args.out)
    return EXIT_OK


def _load_report(path, profile_override=None):
    try:
        data = json.loads(Path(path).read_text())
        profile_path = profile_override or data.get("profile_path")
        if profile_path is None:
            raise CLIError(f"{path} names no profile; pass --profile", EXIT_IO)
        profile = dataio.read_profile(profile_path)
        knots = data["knots"]
    except OSError as exc:
        raise CLIError(f"cannot read report: {exc.strerror or exc}", EXIT_IO) from None
    except (ValueError, KeyError) as exc:
        raise CLIError(f"malformed report {path}: {exc}", EXIT_IO) from None
    zetas = [p.zeta for p in profile]
    knot_objs = []
    for k in knots:
        z = k["z"] if k["z"] is not None else float("nan")
        idx = min(range(len(zetas)), key=lambda i: abs(zetas[i] - k["zeta"])) if zetas else -1
        knot_objs.append(Knot(k["zeta"], k["delta_t"], z, int(k["sign"]), idx))
    return DetectionReport(profile, knot_objs, data.get("config", {}), data.get("sigma_hat"))


def cmd_plot(args):
    series = _read(args)
    report = _load_report(args.report, args.profile)
    _write(plot.write_svg, series, report, args.out)
    return EXIT_OK


def cmd_fit(args):
    series = _read(args)
    if args.knots is not None:
        knots = [float(v) for v in args.knots.split(",") if v.strip()]
    elif args.report is not None:
        try:
            knots = [k["zeta"] for k in json.loads(Path(args.report).read_text())["knots"]]
        except OSError as exc:
            raise CLIError(f"cannot read report: {exc.strerror or exc}", EXIT_IO) from None
        except (ValueError, KeyError) as exc:
            raise CLIError(f"malformed report {args.report}: {exc}", EXIT_IO) from None
    else:
        knots = []
    try:
        model = fit_spline(series, knots, args.degree)
    except (InadmissibleKnotsError, ValueError) as exc:
        raise CLIError(str(exc), EXIT_CONFIG) from None
    out = {
        "schema_version": 1,
        "degree": model.degree,
        "interior_knots": model.interior_knots.tolist(),
        "knots": model.knots.tolist(),
        "coefficients": model.coefficients.tolist(),
        "rms_residual": model.rms_residual,
    }
    _write(dataio.dump_json, out, args.out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cndetect", description="Detect jumps in the n-th derivative of sampled data."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_input(p):
        p.add_argument("input", help="CSV file with x and y columns")
        p.add_argument("--x-col", help="column name or 0-based index of x")
        p.add_argument("--y-col", help="column name or 0-based index of y")

    p = sub.add_parser("detect", help="scan a series and report discontinuities")
    add_input(p)
    _add_approx_args(p)
    p.add_argument("--sigma", type=float, help="noise std (estimated when omitted)")
    p.add_argument("--seed", type=int, default=0, help="unused; accepted for symmetry")
    p.add_argument("--out", default="-", help="report JSON path (default stdout)")
    p.add_argument("--profile", help="profile CSV path (default next to --out)")
    p.add_argument("--plot", help="also write an SVG display here")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("synth", help="write the piecewise-quadratic test signal")
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--num-points", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("montecarlo", help="repeat synth + detect and summarize")
    p.add_argument("--m", type=int, default=1000)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--num-points", type=int, default=100)
    p.add_argument("--seed", type=int, default=0, help="base seed; iteration i uses seed+i")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="-")
    _add_approx_args(p)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("plot", help="render a saved report as SVG")
    add_input(p)
    p.add_argument("--report", required=True)
    p.add_argument("--profile")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("fit", help="least-squares B-spline with given or detected knots")
    add_input(p)
    p.add_argument("--report", help="take interior knots from a detection report")
    p.add_argument("--knots", help="comma-separated interior knots")
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"cndetect: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
