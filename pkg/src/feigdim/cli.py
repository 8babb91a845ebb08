"""Command line: fixpoint, verify, dimension, figures.

Exit codes: 0 ok, 2 Newton did not converge, 3 certificate inconclusive,
4 integrity (checksum/parse/certificate mismatch), 5 rigor abort, 64 usage.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

from . import __version__
from .ball import load_ball, save_ball
from .config import RunConfig, build_config, read_config_file
from .errors import (
    CertificateError,
    ChecksumMismatch,
    CompositionDivergence,
    ContractionViolation,
    DomainExceeded,
    FeigdimError,
    Inconclusive,
    NodeOrderViolation,
    NoConvergence,
    ParseError,
    PositiveSignWitness,
    SingularAlpha,
    WidthAbort,
)
from .ifs import dimension_run
from .interval import Interval, format_outward
from .monotonicity import (
    PANELS,
    certify,
    cover_rectangles_from_certificate,
    emit_cover_rectangles,
    load_certificate,
    save_certificate,
)
from .renorm import RenormConfig, alpha_of, make_ball, newton_fixpoint

EXIT_OK = 0
EXIT_NO_CONVERGENCE = 2
EXIT_INCONCLUSIVE = 3
EXIT_INTEGRITY = 4
EXIT_RIGOR_ABORT = 5
EXIT_USAGE = 64

DIGITS = 17
PANEL_FILES = {"g": "g", "g'": "gp", "g''": "gpp", "psi0": "psi0", "psi1": "psi1",
               "psi0'": "psi0p", "psi1'": "psi1p"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _threads(text):
    if text == "auto":
        import os
        return os.cpu_count() or 1
    return _positive_int(text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="feigdim", description=(
        "Rigorous Hausdorff dimension bounds for the period-doubling attractor."))
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    common = _Parser(add_help=False)
    common.add_argument("--degree", type=int, choices=(2, 3, 4), required=True)
    common.add_argument("--config", help="key = value file; flags override it")
    common.add_argument("--truncation", type=int, dest="truncation_N")
    common.add_argument("--rho", type=float)
    common.add_argument("--radius", type=float)
    common.add_argument("--tol-newton", type=float, dest="newton_tol")
    common.add_argument("--tol-inverse", type=float, dest="inverse_tol")
    common.add_argument("--tol-partition", type=float, dest="partition_tol")
    common.add_argument("--threads", type=_threads)
    common.add_argument("--ball")
    common.add_argument("--cert")
    common.add_argument("--out")

    sub.add_parser("fixpoint", parents=[common], help="compute a ball center by Newton")
    p = sub.add_parser("verify", parents=[common], help="certify g' < 0 and g'' < 0 on J")
    p.add_argument("--max-depth", type=int, dest="max_depth")
    p = sub.add_parser("dimension", parents=[common], help="dimension brackets per generation")
    p.add_argument("--generations", type=_positive_int)
    p = sub.add_parser("figures", parents=[common], help="rectangle covers for plotting")
    p.add_argument("--grid", type=_positive_int)
    p.add_argument("--max-depth", type=int, dest="max_depth")
    return parser


_CONFIG_KEYS = ("truncation_N", "rho", "radius", "newton_tol", "inverse_tol", "partition_tol",
                "threads", "ball", "cert", "out", "max_depth", "generations", "grid")


def config_from_args(args) -> RunConfig:
    file_values = read_config_file(args.config) if args.config else {}
    overrides = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
    overrides["degree_d"] = args.degree
    return build_config(args.degree, file_values, overrides)


def _say(msg, stream=None):
    print(msg, file=stream or sys.stdout, flush=True)


def _fmt(x: Interval, digits=DIGITS) -> str:
    lo, hi = format_outward(x, digits)
    return f"[{lo}, {hi}]"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_fixpoint(cfg: RunConfig) -> int:
    rc = RenormConfig(degree_d=cfg.degree_d, truncation_N=cfg.truncation_N,
                      newton_tol=cfg.newton_tol, seed_coeffs=(cfg.seed,), rho=cfg.rho)
    try:
        coeffs, residual = newton_fixpoint(rc)
    except NoConvergence as exc:
        _say(f"no convergence: {exc}", sys.stderr)
        _say(f"best_residual = {exc.best_residual:.3e}")
        return EXIT_NO_CONVERGENCE
    except CompositionDivergence as exc:
        _say(f"no convergence: {exc}", sys.stderr)
        return EXIT_NO_CONVERGENCE
    ball = make_ball(rc, coeffs, cfg.radius, residual, radius_supplied=True, t_max=cfg.t_max)
    try:
        consts = alpha_of(ball)
    except SingularAlpha as exc:
        _say(f"no convergence: {exc}", sys.stderr)
        return EXIT_NO_CONVERGENCE
    path = cfg.ball_path
    path.parent.mkdir(parents=True, exist_ok=True)
    digest = save_ball(ball, path)
    _say(f"ball = {path}")
    _say(f"checksum = {digest}")
    _say(f"degree_d = {cfg.degree_d}")
    _say(f"truncation_N = {cfg.truncation_N}")
    _say(f"residual_l1 = {residual:.3e}")
    _say(f"tail_mass = {ball.provenance.tail_mass:.3e}")
    _say(f"radius = {cfg.radius:.3e}")
    _say(f"assumed_rigorous = {str(ball.provenance.assumed_rigorous).lower()}")
    _say(f"alpha = {_fmt(consts.alpha)}")
    _say(f"alpha_inv = {_fmt(consts.alpha_inv)}")
    return EXIT_OK


def _load_ball(cfg):
    return load_ball(cfg.ball_path)


def cmd_verify(cfg: RunConfig) -> int:
    ball = _load_ball(cfg)
    try:
        cert = certify(ball, max_depth=cfg.max_depth, margin=cfg.margin)
    except (Inconclusive, PositiveSignWitness) as exc:
        sub = getattr(exc, "subinterval", None)
        _say(f"inconclusive: {exc}")
        if sub is not None:
            _say(f"subinterval = {_fmt(sub)}")
        return EXIT_INCONCLUSIVE
    path = cfg.cert_path
    path.parent.mkdir(parents=True, exist_ok=True)
    save_certificate(cert, path)
    finest = min(x.width() for x, _ in cert.cover)
    _say(f"certificate = {path}")
    _say(f"J = {_fmt(cert.J)}")
    _say(f"gprime_negative = {str(cert.gprime_negative).lower()}")
    _say(f"gsecond_negative = {str(cert.gsecond_negative).lower()}")
    _say(f"gsecond_leaves = {len(cert.cover)}")
    _say(f"gprime_leaves = {cert.gprime_leaves}")
    _say(f"max_depth_used = {cert.max_depth_used}")
    _say(f"finest_leaf_width = {finest:.6e}")
    _say(f"min_abs_gprime >= {format_outward(Interval(cert.min_abs_gprime, cert.min_abs_gprime), 10)[0]}")
    return EXIT_OK


def _row_text(row) -> str:
    lo, hi = format_outward(Interval(row.r_n, row.s_n), DIGITS)
    return f"{row.generation},{lo},{hi},{row.node_count},{row.max_width:.3e}"


def cmd_dimension(cfg: RunConfig) -> int:
    ball = _load_ball(cfg)
    cert = load_certificate(cfg.cert_path, ball)
    out = cfg.dimension_path
    out.parent.mkdir(parents=True, exist_ok=True)
    header = ("# ball_checksum = " + ball.checksum + "\n"
              "generation,r_n,s_n,node_count,max_endpoint_width")
    _say(header)
    status = EXIT_OK
    with out.open("w", encoding="ascii") as fh:
        fh.write(header + "\n")

        def emit(row):
            text = _row_text(row)
            fh.write(text + "\n")
            fh.flush()
            _say(text)
            _say(f"generation {row.generation}: {row.wall_time:.2f} s", sys.stderr)

        try:
            rows = dimension_run(cfg.degree_d, cfg.generations, ball, cert,
                                 threads=cfg.threads, inverse_tol=cfg.inverse_tol,
                                 partition_tol=cfg.partition_tol, width_limit=cfg.width_limit,
                                 on_generation=emit)
        except (WidthAbort, ContractionViolation, NodeOrderViolation) as exc:
            _say(f"rigor abort: {exc}", sys.stderr)
            rows = getattr(exc, "partial", [])
            status = EXIT_RIGOR_ABORT
    if rows:
        last = rows[-1]
        lo, hi = format_outward(Interval(last.r_n, last.s_n), DIGITS)
        _say(f"# {lo} <= dim_H(A_{cfg.degree_d}) <= {hi}  (generation {last.generation})")
    return status


def _write_rects(path: Path, rects):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x_lo", "x_hi", "y_lo", "y_hi", "function_tag", "degree"])
    for r in rects:
        xl, xh = format_outward(Interval(r.x_lo, r.x_hi), DIGITS)
        yl, yh = format_outward(Interval(r.y_lo, r.y_hi), DIGITS)
        w.writerow([xl, xh, yl, yh, r.tag, r.degree])
    path.write_text(buf.getvalue(), encoding="ascii")


def cmd_figures(cfg: RunConfig) -> int:
    ball = _load_ball(cfg)
    cert = load_certificate(cfg.cert_path, ball)
    outdir = cfg.figures_dir
    outdir.mkdir(parents=True, exist_ok=True)
    for which in PANELS:
        rects = emit_cover_rectangles(ball, which, cfg.grid, cert)
        _write_rects(outdir / f"panel_{PANEL_FILES[which]}.csv", rects)
    _write_rects(outdir / "panel_gpp_cert.csv", cover_rectangles_from_certificate(cert))
    # panel f: the convergence series, if a dimension run exists
    series = cfg.dimension_path
    if series.exists():
        (outdir / "panel_f.csv").write_text(series.read_text())
    _say(f"figures = {outdir}")
    return EXIT_OK


COMMANDS = {"fixpoint": cmd_fixpoint, "verify": cmd_verify,
            "dimension": cmd_dimension, "figures": cmd_figures}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ValueError, ParseError, OSError) as exc:
        _say(f"usage error: {exc}", sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](cfg)
    except (ChecksumMismatch, ParseError, CertificateError, FileNotFoundError) as exc:
        _say(f"integrity error: {exc}", sys.stderr)
        return EXIT_INTEGRITY
    except DomainExceeded as exc:
        _say(f"rigor abort: {exc}", sys.stderr)
        return EXIT_RIGOR_ABORT
    except FeigdimError as exc:
        _say(f"error: {exc}", sys.stderr)
        return EXIT_RIGOR_ABORT


if __name__ == "__main__":
    sys.exit(main())
