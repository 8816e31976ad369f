"""Command-line interface.

Subcommands: ``test-eigenvalue``, ``ci``, ``test-equality`` and ``simulate``.
Exit status is 0 on success, 1 on a numeric or runtime failure and 2 on a
usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import inference as inf
from . import simulation as sim
from ._backend import BACKEND
from .matrix import SpectralDecomposition, SymmetricMatrix, eigenvalues_only
from .matrixfile import read_matrix_csv
from .sampling import StreamKey
from .specfun import DomainError

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _probability(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"gamma must lie strictly between 0 and 1, got {v}")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {v}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}")
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _list_of(conv):
    def parse(text: str):
        items = [t for t in text.replace(" ", ",").split(",") if t]
        if not items:
            raise argparse.ArgumentTypeError("empty list")
        return [conv(t) for t in items]
    return parse


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default=None, help="output format")
    common.add_argument("--seed", type=_seed, default=None, help="random seed for Monte Carlo steps")
    common.add_argument("--reps", type=_positive_int, default=None, help="Monte Carlo replications")

    matrix_in = argparse.ArgumentParser(add_help=False)
    matrix_in.add_argument("--input", required=True, help="CSV file with the p x p matrix")
    matrix_in.add_argument("--n", type=_positive_int, required=True, help="Wishart degrees of freedom")
    matrix_in.add_argument(
        "--input-kind", choices=("scatter", "covariance"), default="scatter",
        help="scatter: the file holds S ~ W_p(n, Sigma); covariance: it holds S / n",
    )
    matrix_in.add_argument("--gamma", type=_probability, default=0.05)

    parser = argparse.ArgumentParser(
        prog="wishart-eig",
        description="Eigenvalue tests and confidence bounds for Wishart matrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test-eigenvalue", parents=[common, matrix_in],
                       help="one-sided test of lambda_m >= lambda_star")
    p.add_argument("--m", type=_positive_int, required=True)
    p.add_argument("--lambda-star", type=_positive_float, required=True)

    p = sub.add_parser("ci", parents=[common, matrix_in],
                       help="upper confidence bounds for the largest or smallest eigenvalue")
    p.add_argument("--target", choices=("largest", "smallest"), required=True)

    p = sub.add_parser("test-equality", parents=[common, matrix_in],
                       help="LR test that the p - m smallest eigenvalues are equal")
    p.add_argument("--m", type=_positive_int, required=True)
    p.add_argument("--method", choices=("dispersion", "large_sample", "both"), default="both")

    p = sub.add_parser("simulate", parents=[common], help="regenerate the coverage / type I error tables")
    p.add_argument("--table", type=int, choices=(1, 2), required=True)
    p.add_argument("--n-grid", type=_list_of(_positive_int), default=None)
    p.add_argument("--beta-grid", type=_list_of(_positive_float), default=None)
    p.add_argument("--gammas", type=_list_of(_probability), default=None)
    p.add_argument("--p", type=_positive_int, default=3)
    p.add_argument("--m", type=_positive_int, default=1)
    p.add_argument("--xi", type=_list_of(_positive_float), default=None)
    p.add_argument("--alpha", type=_positive_float, default=1.0)
    p.add_argument("--mc-reps", type=_positive_int, default=inf.DEFAULT_MC_REPS,
                   help="replications for Monte Carlo critical points (only used when p - m > 2)")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--checkpoint", default=None, help="JSON-lines file for resumable runs")
    return parser


# ---------------------------------------------------------------------------


def _load(args) -> tuple[SymmetricMatrix, SpectralDecomposition]:
    try:
        s = read_matrix_csv(args.input)
    except OSError as exc:
        raise UsageError(f"cannot read {args.input}: {exc}") from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.input_kind == "covariance":
        s = SymmetricMatrix(s.entries * args.n)
    if args.n < s.p:
        raise UsageError(f"n={args.n} is smaller than the dimension p={s.p}")
    return s, SpectralDecomposition(eigenvalues_only(s))


def _config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("out", "format")}
    cfg["backend"] = BACKEND
    return cfg


def _resolve_mc(args) -> tuple[StreamKey, int]:
    # record the effective values so the echoed config is self-contained
    if args.seed is None:
        args.seed = inf.DEFAULT_KEY.seed
    if args.reps is None:
        args.reps = inf.DEFAULT_MC_REPS
    return StreamKey(args.seed), args.reps


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        name = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, name + "."))
        elif isinstance(v, list):
            out[name] = json.dumps(v)
        else:
            out[name] = v
    return out


def _emit(args, report: dict) -> None:
    if (args.format or "json") == "csv":
        flat = _flatten(report)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(flat.keys())
        w.writerow(["" if v is None else v for v in flat.values()])
        text = buf.getvalue()
    else:
        text = json.dumps(report, indent=2) + "\n"
    _write(args.out, text)


def _write(out: str | None, text: str) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def cmd_test_eigenvalue(args) -> int:
    _, decomp = _load(args)
    if args.m > decomp.p:
        raise UsageError(f"m={args.m} exceeds the dimension p={decomp.p}")
    if args.m > args.n:
        raise UsageError(f"m={args.m} exceeds n={args.n}")
    key, reps = _resolve_mc(args)
    outcome = inf.test_eigenvalue(decomp, args.m, args.n, args.lambda_star, args.gamma, reps, key)
    report = {"command": "test-eigenvalue", **outcome.to_dict(), "seed": key.seed,
              "eigenvalues": decomp.eigenvalues.tolist(), "config": _config(args)}
    _emit(args, report)
    return EXIT_OK


def cmd_ci(args) -> int:
    _, decomp = _load(args)
    l = decomp.eigenvalues
    stat = float(l[0] if args.target == "largest" else l[-1])
    bounds: dict[str, float | None] = {}
    errors: dict[str, str] = {}
    try:
        if args.target == "largest":
            bounds["large_sample"] = inf.ci_largest_large_sample(stat, args.n, args.gamma).upper
        else:
            bounds["large_sample"] = inf.ci_smallest_large_sample(stat, args.n, args.gamma).upper
    except inf.NonPositiveDenominatorError as exc:
        bounds["large_sample"] = None
        errors["large_sample"] = str(exc)
    if args.target == "largest":
        bounds["dispersion"] = inf.ci_largest_dispersion(stat, args.n, args.gamma).upper
    else:
        bounds["dispersion"] = inf.ci_smallest_dispersion(stat, args.n, decomp.p, args.gamma).upper
    report = {"command": "ci", "target": args.target, "statistic": stat, "gamma": args.gamma,
              "n": args.n, "p": decomp.p, "bounds": bounds, "errors": errors, "config": _config(args)}
    _emit(args, report)
    return EXIT_OK


def cmd_test_equality(args) -> int:
    _, decomp = _load(args)
    p = decomp.p
    if p - args.m < 2:
        raise UsageError(
            f"the equality test needs at least two trailing eigenvalues (p - m >= 2); got p={p}, m={args.m}"
        )
    key, reps = _resolve_mc(args)
    methods = ("dispersion", "large_sample") if args.method == "both" else (args.method,)
    crit = {
        "dispersion": inf.lr_critical_dispersion(p, args.m, args.n, args.gamma, reps, key),
        "large_sample": inf.lr_critical_large_sample(p, args.m, args.n, args.gamma),
    }
    decisions = [inf.test_equality_smallest(decomp, p, args.m, args.n, args.gamma, meth, reps, key).to_dict()
                 for meth in methods]
    report = {"command": "test-equality", "statistic": decisions[0]["statistic"], "gamma": args.gamma,
              "critical_points": crit, "decisions": decisions, "seed": key.seed, "config": _config(args)}
    _emit(args, report)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.seed is None:
        args.seed = sim.SimulationGrid.__dataclass_fields__["seed"].default
    if args.reps is None:
        args.reps = sim.SimulationGrid.__dataclass_fields__["reps"].default
    kwargs = dict(p=args.p, m=args.m, alpha=args.alpha, mc_reps=args.mc_reps)
    if args.n_grid is not None:
        kwargs["n_values"] = tuple(args.n_grid)
    if args.beta_grid is not None:
        kwargs["beta_values"] = tuple(args.beta_grid)
    if args.gammas is not None:
        kwargs["gammas"] = tuple(args.gammas)
    kwargs["reps"] = args.reps
    kwargs["seed"] = args.seed
    kwargs["xi"] = tuple(args.xi) if args.xi is not None else (1.0,) * args.p
    try:
        grid = sim.SimulationGrid(**kwargs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.out is not None:
        parent = Path(args.out).resolve().parent
        if not parent.is_dir():
            raise OSError(f"output directory {parent} does not exist")
    result = sim.run_table(args.table, grid, workers=args.workers, checkpoint=args.checkpoint)
    text = sim.to_json(result) if args.format == "json" else sim.to_csv(result)
    _write(args.out, text)
    summary = sys.stdout if args.out is not None else sys.stderr
    _print_summary(result, summary)
    return EXIT_OK if all(c.error is None for c in result.cells) else EXIT_FAILURE


def _print_summary(result: "sim.TableResult", stream) -> None:
    tol = sim.TABLE1_TOL if result.table == 1 else sim.TABLE2_TOL
    stream.write(f"Table {result.table}: '*' marks rates within {tol:g} of the target "
                 f"({', '.join(f'{k}->{v:g}' for k, v in result.targets.items())})\n")
    stream.write("n\tbeta\t" + "\t".join(result.columns) + "\n")
    for c in result.cells:
        if c.error:
            stream.write(f"{c.n}\t{c.beta:g}\tERROR: {c.error}\n")
            continue
        cells = [f"{c.rates[k]:.3f}{'*' if c.bold[k] else ''}" for k in result.columns]
        stream.write(f"{c.n}\t{c.beta:g}\t" + "\t".join(cells) + "\n")


COMMANDS = {
    "test-eigenvalue": cmd_test_eigenvalue,
    "ci": cmd_ci,
    "test-equality": cmd_test_equality,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on usage errors
    try:
        return COMMANDS[args.command](args)
    except (UsageError, DomainError) as exc:
        parser.print_usage(sys.stderr)
        print(f"wishart-eig {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, OSError, ValueError) as exc:
        print(f"wishart-eig {args.command}: failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
