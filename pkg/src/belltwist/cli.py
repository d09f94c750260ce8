"""Command-line front end: ``python -m belltwist <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import dimensional_bound
from .catalog import AXES, rotation_scan, scan_surface
from .core import BellError, EnumerationTooLarge, matrix_digest, read_matrix_csv
from .modify import ShiftSpec, TwistSpec, shift, twist
from .optimize import SearchConfig, optimize_dimension_ratio, optimize_violation, violation_histogram
from .report import RunManifest, bound_report, dumps, modified_report, seesaw_report, with_manifest

EXIT_OK, EXIT_INVALID, EXIT_BUDGET = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1 rather than argparse's 2, which is reserved for budget rejections."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return n


def _nonnegative(text: str) -> int:
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return n


def _objective(text: str):
    if text == "violation":
        return text, None
    if text.startswith("dim:"):
        try:
            return "dimension_ratio", _positive(text[4:])
        except (ValueError, argparse.ArgumentTypeError):
            pass
    raise argparse.ArgumentTypeError(f"objective must be 'violation' or 'dim:K' with K >= 1, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="belltwist", description="Bounds and Tsirelson-preserving modifications of correlation Bell inequalities.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def output(q):
        q.add_argument("-o", "--output", help="write here instead of stdout")

    q = sub.add_parser("bounds", help="B, T, nu and the tightness certificate as JSON")
    q.add_argument("matrix", help="headerless CSV coefficient matrix")
    q.add_argument("--dprime", type=_positive, action="append", default=[], help="also estimate T_d' (repeatable)")
    q.add_argument("--restarts", type=_positive, default=50)
    q.add_argument("--seed", type=int, help="required with --dprime")
    output(q)

    q = sub.add_parser("seesaw", help="see-saw lower estimate of T_d'")
    q.add_argument("matrix")
    q.add_argument("--dprime", type=_positive, required=True)
    q.add_argument("--restarts", type=_positive, default=50)
    q.add_argument("--seed", type=int, required=True)
    output(q)

    for name, text in (("twist", "rotate singular vectors"), ("shift", "move singular values")):
        q = sub.add_parser(name, help=text)
        q.add_argument("matrix")
        q.add_argument("--spec", required=True, help="JSON spec file")
        if name == "shift":
            q.add_argument("--force", action="store_true", help="allow an inadmissible shift if the result still certifies")
        output(q)

    q = sub.add_parser("optimize", help="search shifts and twists for a larger objective")
    q.add_argument("matrix")
    q.add_argument("--objective", type=_objective, default=("violation", None), help="violation or dim:K")
    q.add_argument("--samples", type=_nonnegative, default=1000, help="global random samples")
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--local-starts", type=_positive, default=4)
    q.add_argument("--random-directions", type=_nonnegative, default=0)
    q.add_argument("--boundary-fraction", type=float, default=0.0)
    q.add_argument("--restarts", type=_positive, default=20, help="see-saw restarts for dim:K")
    q.add_argument("--max-evals", type=_positive, default=50_000)
    q.add_argument("--no-refine", action="store_true", help="skip the pattern search")
    q.add_argument("--no-twist", action="store_true")
    q.add_argument("--no-shift", action="store_true")
    q.add_argument("--epsilon", action="store_true", help="pull boundary singular values in by 1e-6 ||g||")
    output(q)

    q = sub.add_parser("scan", help="rotated-inequality violation while one lab angle varies (CSV)")
    for a in ("phi", "theta", "psi"):
        q.add_argument(a, type=float)
    q.add_argument("--axis", choices=sorted(AXES), default="yaw")
    q.add_argument("--steps", type=_positive, default=360)
    q.add_argument("--surface", action="store_true", help="emit the (phi, theta, T/B) grid at fixed psi instead")
    output(q)

    q = sub.add_parser("histogram", help="violation samples of random or twisted 3x3 inequalities")
    q.add_argument("--mode", choices=("random", "twisted"), required=True)
    q.add_argument("--n", type=_positive, required=True)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--restarts", type=_positive, default=10, help="see-saw restarts in random mode")
    q.add_argument("--csv", help="also write the (index, nu) series here")
    output(q)

    q = sub.add_parser("repro", help="run reproduction checks and print PASS/FAIL lines")
    q.add_argument("target", help="chsh, gisin6, gisin3, fr2..fr5, rotated, verifier, d6, preserve, oracle, histogram, determinism or all")
    q.add_argument("--outdir", help="keep histogram CSVs and determinism outputs here")
    return p


def _emit(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load(path: str) -> np.ndarray:
    return read_matrix_csv(path)


def _manifest(args, seed=None, g=None) -> RunManifest:
    skip = {"command", "output", "csv", "outdir"}
    arguments = {k: v for k, v in vars(args).items() if k not in skip}
    if "objective" in arguments:
        kind, dp = arguments["objective"]
        arguments["objective"] = kind if dp is None else f"dim:{dp}"
    return RunManifest(args.command, arguments, seed, matrix_sha256=None if g is None else matrix_digest(g))


def _bounds(args):
    if args.dprime and args.seed is None:
        raise BellError("--seed is required together with --dprime")
    g = _load(args.matrix)
    doc = bound_report(g, args.dprime, restarts=args.restarts, seed=args.seed or 0)
    _emit(dumps(with_manifest(doc, _manifest(args, args.seed, g))), args.output)


def _seesaw(args):
    g = _load(args.matrix)
    res = dimensional_bound(g, args.dprime, restarts=args.restarts, seed=args.seed)
    _emit(dumps(with_manifest(seesaw_report(g, res), _manifest(args, args.seed, g))), args.output)


def _read_spec(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise BellError(f"{path}: invalid JSON ({e})") from None


def _twist(args):
    g = _load(args.matrix)
    data = _read_spec(args.spec)
    try:
        spec = TwistSpec.from_dict(data)
    except (KeyError, TypeError) as e:
        raise BellError(f"{args.spec}: not a twist spec ({e})") from None
    gp = twist(g, spec)
    doc = modified_report(g, gp, spec.to_dict())
    _emit(dumps(with_manifest(doc, _manifest(args, None, g))), args.output)


def _shift(args):
    g = _load(args.matrix)
    data = _read_spec(args.spec)
    try:
        spec = ShiftSpec.from_dict(data)
    except (KeyError, TypeError) as e:
        raise BellError(f"{args.spec}: not a shift spec ({e})") from None
    gp = shift(g, spec, force=args.force)
    doc = modified_report(g, gp, spec.to_dict())
    _emit(dumps(with_manifest(doc, _manifest(args, None, g))), args.output)


def _optimize(args):
    g = _load(args.matrix)
    kind, dprime = args.objective
    cfg = SearchConfig(
        global_samples=args.samples,
        local_refine=not args.no_refine,
        local_starts=args.local_starts,
        random_directions=args.random_directions,
        boundary_fraction=args.boundary_fraction,
        seed=args.seed,
        seesaw_restarts=args.restarts,
        use_shift=not args.no_shift,
        use_twist=not args.no_twist,
        max_evals=args.max_evals,
        epsilon_regularize=args.epsilon,
    )
    res = optimize_violation(g, cfg) if kind == "violation" else optimize_dimension_ratio(g, dprime, cfg)
    doc = {**res.to_dict(), "input_sha256": matrix_digest(g), "matrix_sha256": matrix_digest(res.best_matrix)}
    _emit(dumps(with_manifest(doc, _manifest(args, args.seed, g))), args.output)


def _scan(args):
    if args.surface:
        rows = scan_surface(args.psi, args.steps)
    else:
        rows = rotation_scan((args.phi, args.theta, args.psi), args.axis, args.steps)
    _emit("".join(",".join(repr(float(x)) for x in row) + "\n" for row in rows), args.output)


def _histogram(args):
    hist = violation_histogram(args.mode, args.n, args.seed, restarts=args.restarts)
    if args.csv:
        Path(args.csv).write_text(hist.to_csv())
    doc = {**hist.summary(), "csv": args.csv}
    _emit(dumps(with_manifest(doc, _manifest(args, args.seed))), args.output)


def _repro(args) -> int:
    from .repro import all_targets, run

    targets = all_targets() if args.target == "all" else [args.target]
    unknown = [t for t in targets if t not in all_targets()]
    if unknown:
        raise BellError(f"unknown repro target {unknown[0]!r}; use one of {', '.join(all_targets())} or all")
    failed = 0
    with tempfile.TemporaryDirectory() as tmp:
        workdir = Path(args.outdir) if args.outdir else Path(tmp)
        for t in targets:
            for check in run(t, workdir / t):
                print(check.line(), flush=True)
                failed += not check.passed
    return EXIT_INVALID if failed else EXIT_OK


COMMANDS = {
    "bounds": _bounds,
    "seesaw": _seesaw,
    "twist": _twist,
    "shift": _shift,
    "optimize": _optimize,
    "scan": _scan,
    "histogram": _histogram,
    "repro": _repro,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return COMMANDS[args.command](args) or EXIT_OK
    except EnumerationTooLarge as e:
        print(f"belltwist: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (BellError, OSError) as e:
        print(f"belltwist: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
