"""Command-line front end: ``vrigid analyze|classify|fit|verify|render``."""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field, replace

from .classifier import ClassifierTolerances, classify_case, detect_affine_direction
from .direction_set import Tolerances, estimate_h3_profile, sample_direction_set
from .errors import IoError, ParseError, UsageError, VRigidError
from .family_fit import accept_threshold, all_fits, select_fit
from .formats import (pgm_text, profile_csv_text, raster_pixels, read_grid_csv, read_spec_file,
                      sample_csv_text, write_text)
from .function_model import Expression, FunctionSpec, Window, default_ladder
from .verdict import ISOMETRY_CLASSES, Analysis, RigidityReport, VerificationPlan, analyze, _plain

COMMANDS = ("analyze", "classify", "fit", "verify", "render")
DEFAULT_C_LIST = (0.5, 2.0, 10.0)
# --tol keys: name -> (target, field, lower bound exclusive, upper bound inclusive)
TOL_KEYS = {
    "residual": ("plan", "residual_tol", 0.0, 1.0),
    "min_coverage": ("plan", "min_coverage", 0.0, 1.0),
    "eps_pole": ("audit", "eps_pole", 0.0, 1.0),
    "tau_lsc": ("audit", "tau_lsc", 0.0, 2.0),
    "tau_cvx": ("audit", "tau_cvx", 0.0, math.inf),
    "tau_sym": ("audit", "tau_sym", 0.0, math.pi),
    "tau_zero": ("classifier", "tau_zero", 0.0, 1.0),
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    source: str  # "f", "spec" or "grid"
    source_value: str
    window: Window | None = None
    ladder: int = 3
    nbins: int = 360
    npairs: int = 1000
    c_list: tuple = DEFAULT_C_LIST
    seed: int = 0
    isometry_class: str = "all"
    out: str | None = None
    profile: str | None = None
    raster: str | None = None
    sample: str | None = None
    raster_size: tuple = (720, 360)
    tol: dict = field(default_factory=dict)

    def plan(self) -> VerificationPlan:
        audit = Tolerances(**{TOL_KEYS[k][1]: v for k, v in self.tol.items() if TOL_KEYS[k][0] == "audit"})
        clf = ClassifierTolerances(**{TOL_KEYS[k][1]: v for k, v in self.tol.items()
                                      if TOL_KEYS[k][0] == "classifier"})
        extra = {TOL_KEYS[k][1]: v for k, v in self.tol.items() if TOL_KEYS[k][0] == "plan"}
        return VerificationPlan(c_list=self.c_list, isometry_class=self.isometry_class, window=self.window,
                                ladder_rungs=self.ladder, nbins=self.nbins, npairs=self.npairs, seed=self.seed,
                                tolerances=audit, classifier=clf, **extra)


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2, which the CLI reserves for NotRigidEvidence."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _c_list(text: str):
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty c list")
    if any(not (c > 0 and math.isfinite(c)) for c in values):
        raise argparse.ArgumentTypeError("every c must be positive and finite")
    return values


def _tol(text: str):
    key, sep, value = text.partition("=")
    key = key.strip()
    if not sep or key not in TOL_KEYS:
        raise argparse.ArgumentTypeError(f"expected key=value with key in {sorted(TOL_KEYS)}, got {text!r}")
    try:
        v = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance {key} is not a number: {value!r}") from None
    _, _, lo, hi = TOL_KEYS[key]
    if not (lo < v <= hi):
        raise argparse.ArgumentTypeError(f"tolerance {key} must lie in ({lo}, {hi}], got {v}")
    return key, v


def _positive_int(text: str):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonempty_path(text: str):
    if not text.strip():
        raise argparse.ArgumentTypeError("path must be nonempty")
    return text


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vrigid", description="Numerical vertical-rigidity analysis of f: R^2 -> R.",
                     epilog="Exit codes: 0 RigidCertified, 2 NotRigidEvidence, 3 Unknown, 1 error.")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    helps = {
        "analyze": "run everything and write the certificate report",
        "classify": "estimate the h3 profile and classify the strip shape",
        "fit": "fit the rigid families",
        "verify": "build and check witnesses for every c",
        "render": "write the direction-set raster, profile and sample CSV",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name], formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--f", dest="expr", metavar="EXPR", help="expression in x and y")
        src.add_argument("--spec", metavar="FILE", help="function spec file (key = value lines)")
        src.add_argument("--grid", metavar="CSV", help="sampled grid with header x,y,z")
        p.add_argument("--window", nargs=4, type=float, metavar=("XMIN", "XMAX", "YMIN", "YMAX"),
                       help="analysis window (default: grid hull, else [-3,3]^2)")
        p.add_argument("--ladder", type=_positive_int, default=3, help="number of nested windows")
        p.add_argument("--bins", type=_positive_int, default=360, help="azimuth bins (even, >= 8)")
        p.add_argument("--pairs", type=_positive_int, default=1000, help="random chords sampled")
        p.add_argument("--c-list", type=_c_list, default=DEFAULT_C_LIST, metavar="C1,C2,...",
                       help="scales c to certify")
        p.add_argument("--seed", type=int, default=0, help="random seed")
        p.add_argument("--isometry-class", choices=ISOMETRY_CLASSES, default="all",
                       help="isometries allowed as witnesses")
        p.add_argument("--out", type=_nonempty_path, metavar="JSON", help="report path (default: stdout)")
        p.add_argument("--profile", type=_nonempty_path, metavar="CSV", help="write the h3 profile")
        p.add_argument("--raster", type=_nonempty_path, metavar="PGM", help="write the sphere raster")
        p.add_argument("--sample", type=_nonempty_path, metavar="CSV", help="write the sampled directions")
        p.add_argument("--raster-size", nargs=2, type=_positive_int, default=(720, 360),
                       metavar=("W", "H"), help="raster width and height")
        p.add_argument("--tol", type=_tol, nargs="+", action="extend", default=[], metavar="KEY=VALUE",
                       help=f"tolerance overrides, keys: {', '.join(TOL_KEYS)}")
    return parser


def parse_inputs(argv) -> tuple[RunConfig, FunctionSpec]:
    """Resolve flags and read the function source; UsageError for flags, ParseError for files."""
    args = build_parser().parse_args(list(argv))
    if args.command is None:
        raise UsageError("vrigid: a command is required, one of " + ", ".join(COMMANDS))
    if args.bins < 8 or args.bins % 2:
        raise UsageError(f"--bins must be even and >= 8, got {args.bins}")
    window = None
    if args.window is not None:
        xmin, xmax, ymin, ymax = args.window
        if not all(math.isfinite(v) for v in args.window) or not (xmin < xmax and ymin < ymax):
            raise UsageError("--window needs finite XMIN < XMAX and YMIN < YMAX")
        window = Window(xmin, xmax, ymin, ymax)
    if args.expr is not None:
        source, value = "f", args.expr
        spec = FunctionSpec(Expression.parse(args.expr))
    elif args.spec is not None:
        source, value = "spec", args.spec
        spec = read_spec_file(args.spec)
    else:
        source, value = "grid", args.grid
        spec = read_grid_csv(args.grid)
    config = RunConfig(command=args.command, source=source, source_value=value, window=window,
                       ladder=args.ladder, nbins=args.bins, npairs=args.pairs, c_list=tuple(args.c_list),
                       seed=args.seed, isometry_class=args.isometry_class, out=args.out, profile=args.profile,
                       raster=args.raster, sample=args.sample, raster_size=tuple(args.raster_size),
                       tol=dict(args.tol))
    return config, spec


def run_pipeline(config: RunConfig, spec: FunctionSpec) -> Analysis:
    return analyze(spec, config.plan())


def render_outputs(report: RigidityReport | None, profile, sample, config: RunConfig, stdout=None) -> None:
    """Write the report (file or stdout) and whichever of profile CSV, sample CSV and raster were requested."""
    if report is not None:
        if config.out:
            write_text(config.out, report.to_json())
        elif stdout is not None:
            stdout.write(report.to_json())
    if config.profile and profile is not None:
        write_text(config.profile, profile_csv_text(profile))
    if config.sample and sample is not None:
        write_text(config.sample, sample_csv_text(sample))
    if config.raster and sample is not None:
        w, h = config.raster_size
        write_text(config.raster, pgm_text(raster_pixels(sample.directions, w, h)))


def _dump(data, config: RunConfig, stdout) -> None:
    text = json.dumps(_plain(data), indent=2, allow_nan=False) + "\n"
    if config.out:
        write_text(config.out, text)
    else:
        stdout.write(text)


def _profile_and_sample(config, spec):
    plan = config.plan()
    window = plan.resolved_window(spec)
    profile = estimate_h3_profile(spec, default_ladder(window, plan.ladder_rungs), plan.nbins, seed=plan.seed)
    sample = sample_direction_set(spec, window, plan.npairs, plan.seed)
    return plan, window, profile, sample


def execute(config: RunConfig, spec: FunctionSpec, stdout=None) -> int:
    stdout = stdout or sys.stdout
    if config.command in ("analyze", "verify"):
        result = run_pipeline(config, spec)
        if config.command == "analyze":
            render_outputs(result.report, result.profile, result.sample, config, stdout)
        else:
            r = result.report
            _dump({"input": r.input, "fit": r.fit, "per_c": r.per_c, "verdict": r.verdict}, config, stdout)
            render_outputs(None, result.profile, result.sample, config)
        return result.report.exit_code
    if config.command == "classify":
        plan, window, profile, sample = _profile_and_sample(config, spec)
        affine = detect_affine_direction(spec, window, seed=plan.seed)
        case = classify_case(profile, affine, plan.classifier)
        _dump({"function": spec.describe(), "window": window.as_list(), "profile": profile.summary(),
               "case": case.to_dict()}, config, stdout)
        render_outputs(None, profile, sample, config)
        return 0
    if config.command == "fit":
        plan = config.plan()
        window = plan.resolved_window(spec)
        fits = all_fits(spec, window)
        chosen = select_fit(fits, plan.residual_tol)
        _dump({"function": spec.describe(), "window": window.as_list(),
               "fits": {n: (None if f is None else dict(f.to_dict(), accepted=bool(
                   f.rms <= accept_threshold(f, plan.residual_tol)))) for n, f in fits.items()},
               "selected": None if chosen is None else chosen.family}, config, stdout)
        return 0
    # render
    _, _, profile, sample = _profile_and_sample(config, spec)
    if not (config.raster or config.profile or config.sample):
        config = replace(config, raster="sphere.pgm")
    render_outputs(None, profile, sample, config)
    return 0


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        config, spec = parse_inputs(argv)
        return execute(config, spec)
    except (UsageError, ParseError, IoError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (VRigidError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
