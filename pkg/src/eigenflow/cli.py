"""Command-line entry points.

    eigenflow run <config-file> [...] [--jobs N] [--out DIR]
    eigenflow validate <field-file> --lambda X --functional TV
    eigenflow spectrum <field-file> --t-end T --dt D
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import fieldio
from .analysis import spectral_transform, validate_eigenfunction
from .errors import EigenflowError
from .experiment import parse_config_file, run_experiment
from .functionals import FunctionalKind
from .grid import null_project


def _kind_from_args(args) -> FunctionalKind:
    name = args.functional.lower()
    if name == "tv":
        return FunctionalKind.tv()
    if name == "tgv2":
        return FunctionalKind.tgv2(args.alpha0, args.alpha1)
    raise SystemExit(f"unknown functional {args.functional!r}")


def _run_one(config_path: str, out_base: str | None) -> int:
    cfg = parse_config_file(config_path)
    outdir = cfg.output_dir
    if out_base:
        stem = os.path.splitext(os.path.basename(config_path))[0]
        outdir = os.path.join(out_base, stem)
    return run_experiment(cfg, output_dir=outdir)


def _cmd_run(args) -> int:
    if args.jobs > 1 and len(args.configs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(
                pool.map(_run_one, args.configs, [args.out] * len(args.configs))
            )
    else:
        codes = [_run_one(c, args.out) for c in args.configs]
    return max(codes)


def _cmd_validate(args) -> int:
    kind = _kind_from_args(args)
    u = fieldio.load_text(args.field)
    report = validate_eigenfunction(u, args.lam, kind)
    sys.stdout.write(report.render())
    return 0 if report.all_ok else 2


def _cmd_spectrum(args) -> int:
    kind = _kind_from_args(args)
    f = null_project(fieldio.load_text(args.field), kind)
    sr = spectral_transform(f, kind, dt=args.dt, t_end=args.t_end)
    csv = sr.spectrum_csv()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(csv)
    else:
        sys.stdout.write(csv)
    return 0


def _add_functional_args(p):
    p.add_argument("--functional", default="TV", help="TV or TGV2")
    p.add_argument("--alpha0", type=float, default=2.0)
    p.add_argument("--alpha1", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eigenflow",
        description="Generate and analyze nonlinear eigenfunctions of TV/TGV2.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute experiment config file(s)")
    p_run.add_argument("configs", nargs="+", metavar="config-file")
    p_run.add_argument("--jobs", type=int, default=1, metavar="N")
    p_run.add_argument("--out", default=None, metavar="DIR")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="validate a claimed eigenpair")
    p_val.add_argument("field", metavar="field-file")
    p_val.add_argument("--lambda", dest="lam", type=float, required=True)
    _add_functional_args(p_val)
    p_val.set_defaults(func=_cmd_validate)

    p_spec = sub.add_parser("spectrum", help="spectral transform of a field")
    p_spec.add_argument("field", metavar="field-file")
    p_spec.add_argument("--t-end", dest="t_end", type=float, required=True)
    p_spec.add_argument("--dt", type=float, required=True)
    p_spec.add_argument("--out", default=None)
    _add_functional_args(p_spec)
    p_spec.set_defaults(func=_cmd_spectrum)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (EigenflowError, OSError) as exc:
        print(f"eigenflow: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
