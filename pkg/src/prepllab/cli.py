"""``prepllab`` command-line front end.

Exit codes: 0 success, 1 input or parse error, 2 computation failure,
3 an experiment verdict failed.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import List, Optional

from .descriptor import DescriptorError, builtin_family, load_family, parse_marked_point
from .exact import GaussianRational
from .experiments import (
    DOUBLE_RECT,
    MANDELBROT_RECT,
    run_common_prep_table,
    run_double_mandelbrot,
    run_simultaneous_prep,
    run_stability_dichotomy,
    run_unicritical_pcf_density,
)
from .family import DegenerateFiber, FamilyError, IterationCapExceeded, specialize
from .green import NonConvergence, green_value, marked_potential_grid
from .gridio import csv_bytes, dumps_json, atomic_write, write_pgm
from .measures import ddc, phi_rank_marked
from .preperiodic import PersistentlyPreperiodic, orbit_return_distance, prep_equation, solve_parameters

log = logging.getLogger("prepllab")

EXPERIMENTS = ("dichotomy", "pcf-density", "double-mandelbrot", "simultaneous-prep",
               "common-prep-table")

# flags whose values may legitimately start with '-'
_VALUE_FLAGS = ("--rect", "--z", "--shift", "--param")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _rect(text: str):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad rectangle {text!r}") from None
    if len(vals) != 4 or not (vals[0] < vals[1] and vals[2] < vals[3]):
        raise argparse.ArgumentTypeError("rectangle must be x0,x1,y0,y1 with x0<x1, y0<y1")
    return tuple(vals)


def _res(text: str):
    try:
        vals = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad resolution {text!r}") from None
    if len(vals) == 1:
        vals *= 2
    if len(vals) != 2 or min(vals) < 3:
        raise argparse.ArgumentTypeError("resolution must be NX[,NY] with NX, NY >= 3")
    return tuple(vals)


def _complex(text: str) -> complex:
    t = text.strip().lower()
    if t in ("inf", "infinity"):
        return complex("inf")
    try:
        return complex(GaussianRational.parse(t))
    except ValueError:
        pass
    try:
        return complex(t.replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad complex number {text!r}") from None


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--rect", type=_rect, help="x0,x1,y0,y1")
    p.add_argument("--res", type=_res, help="NX[,NY]")
    p.add_argument("--tol", type=_positive, default=None)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "pgm", "json"), default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="prepllab", description="Preperiodic points and bifurcation potentials.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def family_flags(p, point=True):
        p.add_argument("--family", "--map", dest="family", default="builtin:quad",
                       help="builtin:NAME or path to a JSON descriptor")
        if point:
            p.add_argument("--point", default=None,
                           help="marked point: descriptor name, inf, or coefficients A[:B]")

    p = sub.add_parser("green-eval", parents=[common], help="certified escape rate at one point")
    family_flags(p, point=False)
    p.add_argument("--z", type=_complex, required=True)
    p.add_argument("--param", type=_complex, default=0j, help="parameter s of the fiber")

    for name, text in (("potential", "marked-point potential on a grid"),
                       ("ddc", "discrete dd^c of the potential")):
        p = sub.add_parser(name, parents=[common], help=text)
        family_flags(p)

    p = sub.add_parser("prep-params", parents=[common], help="preperiodicity equation and roots")
    family_flags(p)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--deflate", action="store_true")
    p.add_argument("--precision", type=int, default=30)

    p = sub.add_parser("common-prep", parents=[common], help="common preperiodic points table")
    p.add_argument("--pair", nargs=2, action="append", metavar=("F", "G"), required=True)

    p = sub.add_parser("rank", parents=[common], help="rank verdict of a marked point")
    family_flags(p)
    p.add_argument("--threshold", type=_positive, default=None)

    p = sub.add_parser("experiment", parents=[common], help="run a packaged scenario")
    p.add_argument("id", choices=EXPERIMENTS)
    family_flags(p)
    p.add_argument("--point2", default=None)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--shift", default="10")
    p.add_argument("--pair", nargs=2, action="append", metavar=("F", "G"))
    p.add_argument("--timing", action="store_true", help="include wall time in the report")
    return parser


def _fix_negative_values(argv: List[str]) -> List[str]:
    out, it = [], iter(argv)
    for tok in it:
        if tok in _VALUE_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def _point(args, named):
    if args.point is None:
        if "crit" in named:
            return named["crit"]
        return parse_marked_point("0")
    return parse_marked_point(args.point, named)


def _emit(args, data: bytes) -> None:
    if args.out:
        atomic_write(args.out, data)
    else:
        sys.stdout.write(data.decode())


def _grid_output(args, rect, nx, ny, values, tol, extra: Optional[dict] = None) -> None:
    fmt = args.format
    if fmt == "json":
        _emit(args, dumps_json({"rect": list(rect), "nx": nx, "ny": ny, "tol": tol,
                                "values": values, **(extra or {})}).encode())
        return
    if fmt == "pgm":
        if not args.out:
            raise UsageError("--format pgm needs --out")
        write_pgm(args.out, values)
    else:
        _emit(args, csv_bytes(rect, nx, ny, values, tol))
        if fmt is None and args.out:
            write_pgm(os.path.splitext(args.out)[0] + ".pgm", values)
    if extra:
        sys.stderr.write(dumps_json(extra))


# ---------------------------------------------------------------------------


def _cmd_green_eval(args) -> int:
    fam, _, _ = load_family(args.family)
    f = specialize(fam, args.param)
    tol = args.tol or 1e-9
    gv = green_value(f, args.z, tol)
    if args.format == "json":
        _emit(args, dumps_json({"value": gv.value, "error": gv.error,
                                "iterations": gv.iterations, "tol": tol}).encode())
    else:
        _emit(args, f"{gv.value:.17g}\nerror {gv.error:.3g}\niterations {gv.iterations}\n".encode())
    return 0


def _grid_args(args, default_rect=MANDELBROT_RECT, default_res=(256, 256)):
    rect = args.rect or default_rect
    nx, ny = args.res or default_res
    return rect, nx, ny, args.tol or 1e-8


def _cmd_potential(args) -> int:
    fam, named, _ = load_family(args.family)
    a = _point(args, named)
    rect, nx, ny, tol = _grid_args(args)
    pot = marked_potential_grid(fam, a, rect, nx, ny, tol, args.threads)
    values = pot.values.copy()
    values[pot.mask] = float("nan")
    _grid_output(args, pot.rect, nx, ny, values, tol,
                 {"error": pot.error, "max_iterations": pot.iterations,
                  "masked_cells": int(pot.mask.sum())} if args.verbose else None)
    return 0


def _cmd_ddc(args) -> int:
    fam, named, _ = load_family(args.family)
    a = _point(args, named)
    rect, nx, ny, tol = _grid_args(args)
    mu = ddc(marked_potential_grid(fam, a, rect, nx, ny, tol, args.threads))
    summary = {"total_mass": mu.total, "slack": mu.slack, "clamped_total": mu.clamped_total}
    if args.format == "json":
        _emit(args, dumps_json({"rect": list(mu.rect), "nx": nx, "ny": ny, "tol": tol,
                                "masses": mu.masses, **summary}).encode())
        return 0
    _grid_output(args, mu.rect, nx, ny, mu.masses, tol)
    if args.out:
        sys.stdout.write(dumps_json(summary))
    else:
        sys.stderr.write(dumps_json(summary))
    return 0


def _cmd_prep_params(args) -> int:
    fam, named, _ = load_family(args.family)
    a = _point(args, named)
    eq = prep_equation(fam, a, args.m, args.n, deflate=args.deflate)
    roots = solve_parameters(eq, args.precision)
    doc = {
        "family": str(fam),
        "marked_point": str(a),
        "m": args.m,
        "n": args.n,
        "deflated": eq.deflated,
        "degree": eq.degree,
        "coefficients": eq.poly.to_strings(),
        "roots": [{"value": r.value, "residual": r.residual, "separation": r.separation,
                   "multiplicity": r.multiplicity, "flag": r.multiplicity_flag,
                   "orbit_distance": orbit_return_distance(fam, a, r.value, args.m, args.n)}
                  for r in roots],
        "unconverged": roots.unconverged,
        "count_with_multiplicity": roots.count_with_multiplicity(),
    }
    _emit(args, dumps_json(doc).encode())
    return 0 if roots.complete else 2


def _pairs(raw):
    out = []
    for f_spec, g_spec in raw:
        f, _, lf = load_family(f_spec)
        g, _, lg = load_family(g_spec)
        out.append((f, g, f"{lf or f_spec} | {lg or g_spec}"))
    return out


def _cmd_common_prep(args) -> int:
    report = run_common_prep_table(_pairs(args.pair), args.depth or 5)
    _emit(args, dumps_json(report.outputs).encode())
    return 0


def _cmd_rank(args) -> int:
    fam, named, _ = load_family(args.family)
    a = _point(args, named)
    rect, nx, ny, tol = _grid_args(args)
    v = phi_rank_marked(fam, a, rect, (nx, ny), args.threshold, tol, threads=args.threads)
    _emit(args, dumps_json({"rank": v.rank, "certified": v.certified, "status": v.status,
                            "mass": v.mass, "threshold": v.threshold,
                            "certificate": v.certificate}).encode())
    return 0


def _cmd_experiment(args) -> int:
    res = args.res
    depth = args.depth
    if args.id == "dichotomy":
        fam, named, label = load_family(args.family)
        report = run_stability_dichotomy(fam, _point(args, named), args.rect or MANDELBROT_RECT,
                                         res or (256, 256), depth or 5, args.tol or 1e-8,
                                         args.threads, label)
    elif args.id == "pcf-density":
        report = run_unicritical_pcf_density(args.d, args.n_max, args.rect or MANDELBROT_RECT,
                                             res or (512, 512), args.tol or 1e-8, args.threads)
    elif args.id == "double-mandelbrot":
        try:
            shift = GaussianRational.parse(args.shift)
        except ValueError as exc:
            raise UsageError(f"--shift: {exc}") from None
        report = run_double_mandelbrot(shift, args.rect or DOUBLE_RECT, res or (512, 512),
                                       depth or 5, args.tol or 1e-8, args.threads)
    elif args.id == "simultaneous-prep":
        fam, named, label = load_family(args.family)
        a = _point(args, named)
        b = parse_marked_point(args.point2 or "1", named)
        report = run_simultaneous_prep(fam, a, b, depth or 4, label)
    else:
        pairs = _pairs(args.pair) if args.pair else [
            (builtin_family("z2")[0], builtin_family("cheb2")[0], "z^2 | z^2 - 2")]
        report = run_common_prep_table(pairs, depth or 5)
    for w in report.warnings:
        sys.stderr.write(f"warning: {w}\n")
    if not args.timing:
        sys.stderr.write(f"wall time {report.wall_time:.2f} s\n")
    _emit(args, dumps_json(report.to_dict(timing=args.timing)).encode())
    return 0 if report.passed else 3


COMMANDS = {
    "green-eval": _cmd_green_eval,
    "potential": _cmd_potential,
    "ddc": _cmd_ddc,
    "prep-params": _cmd_prep_params,
    "common-prep": _cmd_common_prep,
    "rank": _cmd_rank,
    "experiment": _cmd_experiment,
}


def cli_main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(_fix_negative_values(argv))
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        sys.stderr.write("prepllab: --threads must be >= 1\n")
        return 1
    try:
        return COMMANDS[args.command](args)
    except (UsageError, DescriptorError, FamilyError, ValueError) as exc:
        sys.stderr.write(f"prepllab: {exc}\n")
        return 1
    except (NonConvergence, IterationCapExceeded, DegenerateFiber, PersistentlyPreperiodic,
            ArithmeticError, MemoryError) as exc:
        sys.stderr.write(f"prepllab: computation failed: {type(exc).__name__}: {exc}\n")
        return 2


def main() -> None:
    sys.exit(cli_main())
