"""Command-line front end.

Subcommands::

    wconvex noise    --input clean.pgm --output noisy.pgm --sigma 0.05 --seed 0
    wconvex denoise  --input noisy.pgm --output x.pgm [--residual r.npy] [--reference clean.pgm]
    wconvex metrics  --input test.pgm --reference clean.pgm
    wconvex curves   --penalty mcp --output mcp.csv
    wconvex certify
    wconvex phantom  --output clean.pgm

Metrics are printed as ``key=value`` lines.  Any error exits non-zero.
"""

from __future__ import annotations

import argparse
import sys

from . import _backend
from .errors import WconvexError
from .imaging import add_noise, export_curves, make_phantom, metrics, read_image, write_image
from .pipeline import certify_penalty, denoise, make_spec
from .solver import SolverConfig


def _filters(value):
    if value in ("default", "diff", "dct3") or value.startswith("file:"):
        return value
    raise argparse.ArgumentTypeError("expected default, diff, dct3 or file:<path>")


def _add_penalty_args(p):
    p.add_argument("--penalty", choices=["mcp", "scad", "welsch"], default="welsch")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="threshold/scale (default: 0.2 for welsch, 0.05 otherwise)")
    p.add_argument("--gamma", type=float, default=None,
                   help="concavity parameter for mcp/scad (default: 2 for mcp, 3.7 for scad)")


def build_parser():
    parser = argparse.ArgumentParser(prog="wconvex", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("denoise", help="solve the denoising problem for one image")
    _add_penalty_args(p)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--residual", help="write y - x_hat here (.npy keeps it exact)")
    p.add_argument("--reference", help="clean image; prints metrics of input and output")
    p.add_argument("--filters", type=_filters, default="default")
    p.add_argument("--target-rho", type=float, default=0.9)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--unfold", type=int, metavar="K", help="run exactly K iterations")

    p = sub.add_parser("noise", help="add seeded Gaussian noise")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("metrics", help="compare an image against a reference")
    p.add_argument("--input", required=True)
    p.add_argument("--reference", required=True)

    p = sub.add_parser("curves", help="export penalty, derivative and prox curves as CSV")
    _add_penalty_args(p)
    p.add_argument("--output", required=True)
    p.add_argument("--range", nargs=2, type=float, default=None, metavar=("XMIN", "XMAX"))
    p.add_argument("--n", type=int, default=1001)

    p = sub.add_parser("certify", help="check closed-form moduli against grid estimates")
    _add_penalty_args(p)
    p.add_argument("--all", action="store_true", help="certify the built-in reference set")

    p = sub.add_parser("phantom", help="write the synthetic test image")
    p.add_argument("--output", required=True)
    p.add_argument("--size", type=int, default=128)
    return parser


def _emit(report, prefix=""):
    for line in report.lines():
        print(prefix + line)


def cmd_denoise(args):
    y = read_image(args.input)
    spec = make_spec(args.penalty, args.lam, args.gamma)
    cfg = SolverConfig(max_iters=args.iters, tol=args.tol, unfold_k=args.unfold)
    res = denoise(y.samples, spec, args.filters, args.target_rho, cfg)
    write_image(res.denoised, args.output)
    if args.residual:
        write_image(res.residual, args.residual)
    tr = res.trace
    print(f"backend={_backend.NAME}")
    print(f"rho_total={res.reg.rho_total!r}")
    print(f"step={tr.step!r}")
    print(f"iters={tr.iters_run}")
    print(f"converged={str(tr.converged).lower()}")
    print(f"objective={tr.objective[-1]!r}")
    print(f"grad_residual={tr.grad_residual[-1]!r}")
    if args.reference:
        ref = read_image(args.reference)
        _emit(metrics(ref, y), "input_")
        _emit(metrics(ref, res.denoised), "output_")
    return 0


def cmd_noise(args):
    write_image(add_noise(read_image(args.input), args.sigma, args.seed), args.output)
    return 0


def cmd_metrics(args):
    _emit(metrics(read_image(args.reference), read_image(args.input)))
    return 0


def cmd_curves(args):
    spec = make_spec(args.penalty, args.lam, args.gamma)
    if args.range is None:
        reach = spec.lam * (spec.gamma or 2.0) * 1.5
        args.range = (-reach, reach)
    export_curves(spec, args.range, args.n, args.output)
    return 0


def cmd_certify(args):
    if args.all:
        specs = [make_spec("mcp", 1.0, g) for g in (1.5, 2.0, 5.0)]
        specs += [make_spec("scad", 1.0, 3.0), make_spec("scad", 1.0, 3.7), make_spec("welsch", 1.0)]
    else:
        specs = [make_spec(args.penalty, args.lam, args.gamma)]
    rows = [certify_penalty(s) for s in specs]
    for r in rows:
        print(r.line())
    ok = all(r.ok for r in rows)
    print(f"result={'pass' if ok else 'fail'}")
    return 0 if ok else 1


def cmd_phantom(args):
    write_image(make_phantom(args.size), args.output)
    return 0


COMMANDS = {
    "denoise": cmd_denoise,
    "noise": cmd_noise,
    "metrics": cmd_metrics,
    "curves": cmd_curves,
    "certify": cmd_certify,
    "phantom": cmd_phantom,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (WconvexError, OSError, ValueError) as exc:
        print(f"wconvex: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
