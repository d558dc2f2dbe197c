"""Command-line interface: ``tvfrechet {fit,cv,jumps,simulate}``.

Exit codes: 0 success, 2 invalid arguments or input, 3 convergence failure
(with ``--strict``, or when a Fréchet-mean iteration fails). Every error
is reported as one stderr line starting with ``tvfrechet: error:``.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConvergenceFailure, InvalidInput, TVFrechetError
from .io import SPACE_NAMES, load_series
from .selection import cross_validate, lambda_grid, select_lambda_by_jumps
from .sim import SimConfig, default_workers, run_experiment
from .solver import SolverConfig, fit

PROG = "tvfrechet"
EXIT_OK, EXIT_INVALID, EXIT_CONVERGENCE = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_INVALID, f"{PROG}: error: usage: {message.splitlines()[0]}\n")


class NotConverged(TVFrechetError):
    """Raised after the partial result is written, in --strict mode."""


def parse_grid(spec: str):
    """``lo:hi:count[:log|lin]`` -> array of lambdas (log-spaced by default)."""
    parts = spec.split(":")
    if len(parts) not in (3, 4):
        raise InvalidInput(f"lambda grid {spec!r} is not lo:hi:count[:log|lin]")
    mode = parts[3] if len(parts) == 4 else "log"
    if mode not in ("log", "lin"):
        raise InvalidInput(f"lambda grid spacing must be 'log' or 'lin', got {mode!r}")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise InvalidInput(f"lambda grid {spec!r} has non-numeric fields") from None
    return lambda_grid(lo, hi, count, log=(mode == "log"))


def parse_range(spec: str):
    parts = spec.split(":")
    try:
        lo, hi = (float(p) for p in parts)
    except ValueError:
        raise InvalidInput(f"lambda range {spec!r} is not LO:HI") from None
    return lo, hi


def _solver_config(args, lam=0.0) -> SolverConfig:
    return SolverConfig(lam=lam, alpha0=args.alpha0, max_cycles=args.max_cycles,
                        rel_tol=args.rel_tol, jump_merge_tol=args.jump_merge_tol)


def _write(doc: dict, output: str):
    text = json.dumps(doc, indent=2)
    if output == "-":
        sys.stdout.write(text + "\n")
        return
    try:
        Path(output).write_text(text + "\n")
    except OSError as exc:
        raise InvalidInput(f"cannot write {output}: {exc.strerror}") from None


def _finish(doc: dict, result, args, command: str):
    doc = {"command": command, **doc}
    _write(doc, args.output)
    if not result.converged:
        msg = (f"stopped at max_cycles={result.cycles_run} before the objective settled "
               f"to rel_tol={args.rel_tol:g}")
        if args.strict:
            raise NotConverged(msg)
        print(f"{PROG}: warning: {msg}", file=sys.stderr)
    return EXIT_OK


def cmd_fit(args) -> int:
    space, series = load_series(args.input, args.space, args.scale, args.quantile_grid)
    result = fit(series, space, _solver_config(args, args.lam))
    return _finish(result.to_dict(space), result, args, "fit")


def cmd_cv(args) -> int:
    space, series = load_series(args.input, args.space, args.scale, args.quantile_grid)
    grid = parse_grid(args.lambda_grid)
    cfg = _solver_config(args)
    best, errors = cross_validate(series, space, grid, args.folds, args.seed, cfg)
    result = fit(series, space, cfg.with_lambda(best))
    doc = result.to_dict(space)
    doc["cv"] = {"folds": args.folds, "seed": args.seed, "grid": [float(v) for v in grid],
                 "errors": [float(e) for e in errors], "selected_lambda": best}
    return _finish(doc, result, args, "cv")


def cmd_jumps(args) -> int:
    space, series = load_series(args.input, args.space, args.scale, args.quantile_grid)
    sel = select_lambda_by_jumps(series, space, args.target_jumps,
                                 parse_range(args.lambda_range), _solver_config(args))
    doc = sel.fit.to_dict(space)
    doc["selection"] = {
        "target_jumps": args.target_jumps,
        "achieved_jumps": sel.jump_count,
        "exact": sel.exact,
        "monotone": sel.monotone,
        "evaluations": [[lam, count] for lam, count in sel.evaluations],
    }
    if not sel.exact:
        print(f"{PROG}: warning: no lambda in range gives exactly {args.target_jumps} jumps; "
              f"closest is {sel.jump_count} at lambda={sel.lam:g}", file=sys.stderr)
    return _finish(doc, sel.fit, args, "jumps")


def cmd_simulate(args) -> int:
    cfg = SimConfig.from_json(args.config)
    workers = args.parallel if args.parallel is not None else default_workers()
    if workers < 1:
        raise InvalidInput("--parallel must be at least 1")
    report = run_experiment(cfg, workers=workers)
    try:
        js, cs = report.write(args.output)
    except OSError as exc:
        raise InvalidInput(f"cannot write to {args.output}: {exc.strerror}") from None
    print(report.summary())
    print(f"wrote {js} and {cs}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog=PROG, description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def data_command(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--space", required=True, choices=SPACE_NAMES)
        sp.add_argument("--input", required=True, help="CSV file, fit JSON, or sample directory")
        sp.add_argument("--output", required=True, help="result JSON path ('-' for stdout)")
        sp.add_argument("--quantile-grid", type=int, default=None, metavar="G",
                        help="quantile grid size for wasserstein (default: input width or 1000)")
        sp.add_argument("--scale", type=float, default=1.0, help="multiply all inputs by this")
        sp.add_argument("--alpha0", type=float, default=None, help="initial step size (default 1.0)")
        sp.add_argument("--max-cycles", type=int, default=500)
        sp.add_argument("--rel-tol", type=float, default=1e-8)
        sp.add_argument("--jump-merge-tol", type=float, default=1e-3)
        sp.add_argument("--strict", action="store_true",
                        help="exit 3 if the solver stops at --max-cycles")
        return sp

    f = data_command("fit", "fit at a fixed lambda")
    f.add_argument("--lambda", dest="lam", type=float, required=True)
    f.set_defaults(func=cmd_fit)

    c = data_command("cv", "choose lambda by K-fold cross-validation")
    c.add_argument("--lambda-grid", required=True, metavar="LO:HI:COUNT[:log|lin]")
    c.add_argument("--folds", type=int, default=5)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_cv)

    j = data_command("jumps", "smallest lambda giving a target jump count")
    j.add_argument("--target-jumps", type=int, required=True)
    j.add_argument("--lambda-range", required=True, metavar="LO:HI")
    j.set_defaults(func=cmd_jumps)

    s = sub.add_parser("simulate", help="run a Monte-Carlo cell from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--output", required=True, help="directory for report.json and replicates.csv")
    s.add_argument("--parallel", type=int, default=None,
                   help="worker processes (default: $TVFRECHET_THREADS or 1)")
    s.set_defaults(func=cmd_simulate)
    return p


def _line(exc) -> str:
    return " ".join(str(exc).split())


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NotConverged, ConvergenceFailure) as exc:
        print(f"{PROG}: error: convergence: {_line(exc)}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except InvalidInput as exc:
        print(f"{PROG}: error: invalid: {_line(exc)}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
