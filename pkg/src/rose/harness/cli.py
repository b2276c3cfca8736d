"""Command line: ``rose run|scenario|sweep|list|calibrate``.

Exit codes: 0 success, 1 physics or regression failure, 2 usage or parse
error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from ..errors import (ConfigurationError, InvalidInputError, ParseError, RoseError,
                      SemanticError, StepSizeError)
from ..propagation import calibrate_coupling, nominal_coupling, probe_transmission
from . import runner, sweep

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _grid_flags(p):
    p.add_argument("--out", type=Path, default=Path("rose_out"), help="output directory")
    p.add_argument("--dt", type=float, help="time step override (s)")
    p.add_argument("--ndet", type=int, help="number of detuning samples")
    p.add_argument("--nz", type=int, help="number of slices")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="rose", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    p = sub.add_parser("run", help="run a sequence file")
    p.add_argument("file", type=Path)
    _grid_flags(p)
    p = sub.add_parser("scenario", help="run a packaged scenario")
    p.add_argument("name")
    _grid_flags(p)
    p = sub.add_parser("sweep", help="run a sweep file")
    p.add_argument("file", type=Path)
    _grid_flags(p)
    sub.add_parser("list", help="list packaged scenarios")
    p = sub.add_parser("calibrate", help="calibrate the coupling for a sequence file")
    p.add_argument("file", type=Path)
    p.add_argument("--dt", type=float)
    p.add_argument("--ndet", type=int)
    p.add_argument("--nz", type=int)
    return ap


def _report(outcome) -> int:
    for k, v in outcome.result.summary().items():
        if v is not None:
            print(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}")
    for key, measured, ok, expected in outcome.checks:
        shown = "n/a" if measured is None else f"{measured:.6g}"
        print(f"{'PASS' if ok else 'FAIL'} {key}={shown} (expected {expected})")
    for kind, path in outcome.files.items():
        print(f"wrote {kind}: {path}")
    return EXIT_OK if outcome.passed else EXIT_FAIL


def _load(path, args):
    spec = runner.load_file(path, check_grid=False)
    return runner.with_grid(spec, args.dt, args.ndet, args.nz)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.verb == "list":
            for name in runner.list_scenarios():
                print(f"{name}: {runner.load_scenario(name).description}")
            return EXIT_OK
        if args.verb == "scenario":
            out = runner.run_scenario(args.name, args.out, dt=args.dt, ndet=args.ndet, nz=args.nz)
            return _report(out)
        if args.verb == "run":
            return _report(runner.run_spec(_load(args.file, args), args.out))
        if args.verb == "calibrate":
            spec = _load(args.file, args)
            k = calibrate_coupling(spec.medium, spec.grid)
            t = probe_transmission(spec.medium, spec.grid, k)
            print(f"coupling={k!r}")
            print(f"coupling_over_nominal={k / nominal_coupling(spec.medium, spec.grid):.6f}")
            print(f"transmission={t:.6g} (target {math.exp(-spec.medium.alphaL):.6g})")
            return EXIT_OK
        if args.verb == "sweep":
            spec = sweep.load_sweep(args.file)
            overrides = {"dt": args.dt, "ndet": args.ndet, "nz": args.nz}
            path = args.out / f"{args.file.stem}.csv"
            rows = sweep.run_sweep(spec, path, grid_overrides=overrides)
            for r in rows:
                print(",".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                               for k, v in r.items()))
            print(f"wrote sweep: {path}")
            return EXIT_OK
    except (ParseError, SemanticError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigurationError, StepSizeError, RoseError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
