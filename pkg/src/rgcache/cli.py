"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 solver failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import image
from .bench import bench_dataset
from .pipeline import METHODS, EnhanceConfig, dump_intermediates, enhance_detailed
from .retinex import decompose, render_reflectance_vis
from .smoothing import SMOOTHER_KINDS, SmootherConfig, SolverError
from .weights import PyramidConfig

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("rgcache")

# config-file key -> (argparse dest, type)
CONFIG_KEYS = {
    "method": ("method", str),
    "methods": ("methods", str),
    "detail": ("detail", float),
    "levels": ("levels", int),
    "filter": ("filter", str),
    "lambda": ("lam", float),
    "sigma": ("sigma", float),
    "iterations": ("iterations", int),
    "K": ("K", int),
    "solver_tol": ("solver_tol", float),
    "solver_max_iter": ("solver_max_iter", int),
    "jobs": ("jobs", int),
    "report": ("report", str),
}

DEFAULTS = {
    "method": "rg-cache",
    "methods": "identity,he,cache,rg-cache",
    "detail": 0.5,
    "levels": 4,
    "filter": "rtv",
    "lam": 0.01,
    "sigma": 3.0,
    "iterations": 4,
    "K": 256,
    "solver_tol": 1e-5,
    "solver_max_iter": 1000,
    "jobs": 1,
    "report": "bench.csv",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        dest, typ = CONFIG_KEYS[key]
        try:
            out[dest] = typ(value)
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return out


def _add_tuning(p: argparse.ArgumentParser) -> None:
    p.add_argument("--detail", "-e", type=float, help="reflectance scale e (default 0.5)")
    p.add_argument("--levels", "-L", type=int, help="pyramid levels (default 4)")
    p.add_argument("--filter", choices=SMOOTHER_KINDS, help="illumination smoother (default rtv)")
    p.add_argument("--lambda", dest="lam", type=float, help="RTV smoothness weight (default 0.01)")
    p.add_argument("--sigma", type=float, help="smoother scale in pixels (default 3.0)")
    p.add_argument("--iterations", type=int, help="RTV IRLS rounds (default 4)")
    p.add_argument("--K", type=int, help="histogram bins (default 256)")
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rgcache", description="Reflectance-guided histogram equalization.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("enhance", help="enhance one image")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--dump-intermediates", metavar="DIR", help="write I, R, weights, histogram/LUT here")
    _add_tuning(p)

    p = sub.add_parser("decompose", help="write illumination and reflectance visualization")
    p.add_argument("input")
    p.add_argument("-o", "--outdir", required=True)
    _add_tuning(p)

    p = sub.add_parser("bench", help="run methods over a directory of images")
    p.add_argument("--dataset", required=True)
    p.add_argument("--methods", help="comma-separated (default identity,he,cache,rg-cache)")
    p.add_argument("--report", help="CSV output path (default bench.csv); table goes to <report>.txt")
    p.add_argument("--jobs", type=int, help="worker processes (default 1)")
    p.add_argument("--no-timing", action="store_true", help="leave timing columns empty for diffable reports")
    _add_tuning(p)
    return parser


def resolve_options(args: argparse.Namespace) -> dict:
    opts = dict(DEFAULTS)
    if getattr(args, "config", None):
        opts.update(read_config(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    return opts


def config_from(opts: dict, method: str | None = None) -> EnhanceConfig:
    try:
        return EnhanceConfig(
            method=method or opts["method"],
            detail=opts["detail"],
            pyramid=PyramidConfig(levels=opts["levels"]),
            smoother=SmootherConfig(
                kind=opts["filter"],
                lam=opts["lam"],
                sigma=opts["sigma"],
                iterations=opts["iterations"],
                solver_tol=opts["solver_tol"],
                solver_max_iter=opts["solver_max_iter"],
            ),
            K=opts["K"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_enhance(args, opts) -> int:
    cfg = config_from(opts)
    c_in = image.load_image(args.input)
    keep = bool(args.dump_intermediates)
    res = enhance_detailed(c_in, cfg, keep_intermediates=keep)
    image.save_image(res.image, args.output)
    if keep:
        dump_intermediates(res, args.dump_intermediates, Path(args.output).stem)
    log.info("%s -> %s (%.0f ms)", args.input, args.output, res.total_seconds * 1e3)
    return EXIT_OK


def cmd_decompose(args, opts) -> int:
    cfg = config_from(opts)
    c_in = image.load_image(args.input)
    d = decompose(image.lightness_of(c_in), cfg.smoother)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.input).stem
    image.save_gray(d.illumination, outdir / f"{stem}_illumination.png", normalize=False)
    image.save_image(render_reflectance_vis(d), outdir / f"{stem}_reflectance.png")
    return EXIT_OK


def cmd_bench(args, opts) -> int:
    methods = [m.strip() for m in opts["methods"].split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise UsageError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
    cfg = config_from(opts, method=methods[0])
    report = bench_dataset(args.dataset, methods, cfg, jobs=max(1, opts["jobs"]))
    timing = not args.no_timing
    table = report.render_table(timing=timing)
    report_path = Path(opts["report"])
    report_path.write_text(report.to_csv(timing=timing))
    Path(str(report_path) + ".txt").write_text(table)
    sys.stdout.write(table)
    return EXIT_OK


COMMANDS = {"enhance": cmd_enhance, "decompose": cmd_decompose, "bench": cmd_bench}


def run_cli(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
        opts = resolve_options(args)
        return COMMANDS[args.command](args, opts)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, image.ImageFormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    sys.exit(run_cli())
