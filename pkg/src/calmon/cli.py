"""Command-line front end: monitor a series, test a file, run power grids.

Subcommands
-----------
monitor   stream values through a betting strategy, emitting one CSV row
          per observation with the merged e-process state
test      one-shot evaluation of a file (e-value methods or baselines)
simulate  power grids over (bias, dispersion) scenarios, written as CSV
density   boundary-corrected kernel density table of a value file

Input files hold one value per row (two comma-separated values for the
quantile hypothesis); an optional header row is detected automatically.
All floating output uses 12 significant digits with '.' as the decimal
separator.
"""

from __future__ import annotations

import argparse
import contextlib
import sys

import numpy as np

from .baselines import bonferroni_pair, chisquare_uniform, ks_one_sided, ks_two_sided
from .betting_continuous import BetaBettingStrategy, KernelBettingStrategy
from .betting_discrete import BetaBinomialBettingStrategy, EmpiricalBettingStrategy
from .betting_stochorder import QuantilePairBettingStrategy, StochOrderBettingStrategy
from .eprocess import EProcess
from .errors import BandwidthError
from .kde import density_table, plugin_bandwidth
from .simulate import (
    DEFAULT_SEED,
    Scenario,
    TEST_REGISTRY,
    generate,
    run_power_grid,
    unfocused_scenario,
)

E_METHODS = (
    "beta",
    "kernel",
    "betabinomial",
    "empirical",
    "grenander",
    "bernstein",
    "quantile-pair",
)
BASELINE_METHODS = ("ks", "ks-greater", "ks-less", "chisq", "ks-bonferroni")

_METHOD_HYPOTHESES = {
    "beta": {"cuf"},
    "kernel": {"cuf"},
    "betabinomial": {"duf"},
    "empirical": {"duf"},
    "grenander": {"st", "st-mirror", "quantile"},
    "bernstein": {"st", "st-mirror", "quantile"},
    "quantile-pair": {"quantile"},
    "ks": {"cuf"},
    "ks-greater": {"cuf", "st", "st-mirror"},
    "ks-less": {"cuf", "st", "st-mirror"},
    "chisq": {"duf"},
    "ks-bonferroni": {"quantile"},
}


def _fmt(x) -> str:
    if x is None:
        return "nan"
    return format(float(x), ".12g")


def _parse_hypothesis(text: str) -> tuple[str, int | None]:
    if text.startswith("duf:"):
        try:
            m = int(text.split(":", 1)[1])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad category count in {text!r}")
        if m < 2:
            raise argparse.ArgumentTypeError("duf needs at least 2 categories")
        return "duf", m
    if text in ("cuf", "st", "st-mirror", "quantile"):
        return text, None
    raise argparse.ArgumentTypeError(
        f"hypothesis must be cuf, duf:M, st, st-mirror or quantile, got {text!r}"
    )


def _check_compat(parser, method: str, hypothesis: str) -> None:
    allowed = _METHOD_HYPOTHESES[method]
    if hypothesis not in allowed:
        parser.error(
            f"method {method!r} is incompatible with hypothesis {hypothesis!r}"
            f" (allowed: {sorted(allowed)})"
        )


def _build_strategy(method: str, hypothesis: str, m: int | None, lag: int, warmup: int | None):
    kwargs = {"lag": lag}
    if warmup is not None:
        kwargs["warmup"] = warmup
    if method == "beta":
        return BetaBettingStrategy(**kwargs)
    if method == "kernel":
        return KernelBettingStrategy(**kwargs)
    if method == "betabinomial":
        return BetaBinomialBettingStrategy(m, **kwargs)
    if method == "empirical":
        return EmpiricalBettingStrategy(m, **kwargs)
    if method in ("grenander", "bernstein"):
        if hypothesis == "quantile":
            return QuantilePairBettingStrategy(estimator=method, **kwargs)
        return StochOrderBettingStrategy(null=hypothesis, estimator=method, **kwargs)
    if method == "quantile-pair":
        return QuantilePairBettingStrategy(estimator="grenander", **kwargs)
    raise ValueError(f"unknown method {method!r}")


# ----------------------------------------------------------------------
# row parsing


class RowError(ValueError):
    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


def _parse_rows(lines, hypothesis: str, m: int | None, strict: bool):
    """Yield (line_number, parsed_value); skips or aborts on bad rows."""
    want = 2 if hypothesis == "quantile" else 1
    header_allowed = True
    for line_number, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            continue
        fields = [f.strip() for f in text.split(",")]
        try:
            if len(fields) != want:
                raise RowError(line_number, f"expected {want} column(s), found {len(fields)}")
            try:
                values = [float(f) for f in fields]
            except ValueError:
                if header_allowed:
                    header_allowed = False
                    continue
                raise RowError(line_number, f"cannot parse {text!r} as numbers")
            header_allowed = False
            if hypothesis == "quantile":
                parsed = (values[0], values[1])
            elif hypothesis == "duf":
                r = int(values[0])
                if r != values[0] or not (1 <= r <= m):
                    raise RowError(line_number, f"expected an integer in 1..{m}, got {text!r}")
                parsed = r
            else:
                parsed = values[0]
            yield line_number, parsed
        except RowError as err:
            if strict:
                raise
            print(f"calmon: skipping {err}", file=sys.stderr)


def _open_input(path: str | None):
    if path is None or path == "-":
        return contextlib.nullcontext(sys.stdin)
    return open(path, "r", encoding="utf-8")


def _open_output(path: str | None):
    if path is None or path == "-":
        return sys.stdout
    return open(path, "w", encoding="utf-8", newline="")


# ----------------------------------------------------------------------
# subcommands


def _cmd_monitor(args, parser) -> int:
    hypothesis, m = args.hypothesis
    _check_compat(parser, args.method, hypothesis)
    if args.method in BASELINE_METHODS:
        parser.error("monitor needs an e-value method")
    strategy = _build_strategy(args.method, hypothesis, m, args.lag, args.warmup)
    process = EProcess(lag=args.lag)
    out = _open_output(args.output)
    try:
        value_cols = (
            ["value_upper", "value_lower"] if hypothesis == "quantile" else ["value"]
        )
        out.write(
            ",".join(["t", *value_cols, "e_step", "e_merged", "running_max", "p_value", "tau_statistic"])
            + "\n"
        )
        out.flush()
        with _open_input(args.input) as source:
            for line_number, value in _parse_rows(source, hypothesis, m, args.strict):
                try:
                    e = strategy.step(value)
                except ValueError as err:
                    if args.strict:
                        raise RowError(line_number, str(err))
                    print(f"calmon: skipping line {line_number}: {err}", file=sys.stderr)
                    continue
                rec = process.push(e)
                values = value if hypothesis == "quantile" else (value,)
                row = [
                    str(rec.t),
                    *(_fmt(v) for v in values),
                    _fmt(rec.e_step),
                    _fmt(rec.e_merged),
                    _fmt(rec.running_max),
                    _fmt(rec.p_value),
                    _fmt(rec.tau_statistic),
                ]
                out.write(",".join(row) + "\n")
                out.flush()
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _run_baseline(method: str, values, m: int | None):
    if method == "ks":
        result = ks_two_sided(values)
    elif method == "ks-greater":
        result = ks_one_sided(values, "greater")
    elif method == "ks-less":
        result = ks_one_sided(values, "less")
    elif method == "chisq":
        counts = np.bincount(np.asarray(values, dtype=int), minlength=m + 1)[1:]
        result = chisquare_uniform(counts)
    elif method == "ks-bonferroni":
        pairs = np.asarray(values)
        upper = ks_one_sided(pairs[:, 0], "less")
        lower = ks_one_sided(pairs[:, 1], "greater")
        p = bonferroni_pair(upper.p_value, lower.p_value)
        return max(upper.statistic, lower.statistic), p, len(values)
    else:
        raise ValueError(method)
    return result.statistic, result.p_value, result.n


def _cmd_test(args, parser) -> int:
    hypothesis, m = args.hypothesis
    _check_compat(parser, args.method, hypothesis)
    with _open_input(args.input) as source:
        rows = [value for _, value in _parse_rows(source, hypothesis, m, args.strict)]
    n = len(rows)
    if n == 0 and args.method in BASELINE_METHODS:
        print("calmon: no data rows to test", file=sys.stderr)
        return 1
    out = _open_output(args.output)
    try:
        if args.method in BASELINE_METHODS:
            statistic, p_value, n = _run_baseline(args.method, rows, m)
            out.write(f"{args.method},{n},{_fmt(statistic)},{_fmt(p_value)}\n")
        else:
            strategy = _build_strategy(args.method, hypothesis, m, args.lag, args.warmup)
            process = EProcess(lag=args.lag)
            for value in rows:
                process.push(strategy.step(value))
            out.write(
                f"{args.method},{n},{_fmt(process.running_max)},{_fmt(process.anytime_p())}\n"
            )
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _parse_grid(text: str) -> tuple[tuple[float, ...], tuple[float, ...]]:
    def axis(piece: str) -> tuple[float, ...]:
        parts = piece.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"grid axis must be start:stop:count, got {piece!r}")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise argparse.ArgumentTypeError("grid count must be >= 1")
        return tuple(np.round(np.linspace(start, stop, count), 10))

    pieces = text.split(",")
    if len(pieces) == 1:
        a = axis(pieces[0])
        return a, a
    if len(pieces) == 2:
        return axis(pieces[0]), axis(pieces[1])
    raise argparse.ArgumentTypeError("grid takes one or two start:stop:count axes")


def write_power_csv(grid, out) -> None:
    out.write("epsilon,delta,test,n,alpha,reps,reject_rate\n")
    for eps, delta, test, n, alpha, reps, rate in grid.to_rows():
        out.write(
            f"{_fmt(eps)},{_fmt(delta)},{test},{n},{_fmt(alpha)},{reps},{_fmt(rate)}\n"
        )


def _cmd_simulate(args, parser) -> int:
    tests = [t.strip() for t in args.method.split(",") if t.strip()]
    unknown = [t for t in tests if t not in TEST_REGISTRY]
    if unknown:
        parser.error(f"unknown tests {unknown}; known: {sorted(TEST_REGISTRY)}")
    eps_values, delta_values = args.grid
    grid = run_power_grid(
        tests,
        eps_values=eps_values,
        delta_values=delta_values,
        n=args.n,
        alpha=args.alpha,
        reps=args.reps,
        lag=args.lag,
        seed=args.seed,
        jobs=args.jobs,
    )
    out = _open_output(args.output)
    try:
        write_power_csv(grid, out)
    finally:
        if out is not sys.stdout:
            out.close()
    if 0.0 in grid.eps_values and 0.0 in grid.delta_values:
        for test in grid.tests:
            print(
                f"calmon: null cell rate [{test}] = {_fmt(grid.rate(0.0, 0.0, test))}",
                file=sys.stderr,
            )
    flat = grid.rates.reshape(-1, len(grid.tests))
    for k, test in enumerate(grid.tests):
        idx = int(np.argmax(flat[:, k]))
        i, j = divmod(idx, len(grid.delta_values))
        print(
            f"calmon: max power [{test}] = {_fmt(flat[idx, k])} at "
            f"(epsilon={_fmt(grid.eps_values[i])}, delta={_fmt(grid.delta_values[j])})",
            file=sys.stderr,
        )
    return 0


def _cmd_generate(args, parser) -> int:
    if args.kind == "unfocused":
        values = unfocused_scenario(args.n, seed=args.seed)
    else:
        scenario = Scenario(
            bias=args.bias, dispersion=args.dispersion, kind=args.kind,
            n=args.n, seed=args.seed,
        )
        values = generate(scenario)
    out = _open_output(args.output)
    try:
        if args.kind == "quantile":
            out.write("value_upper,value_lower\n")
            for z_u, z_l in values:
                out.write(f"{_fmt(z_u)},{_fmt(z_l)}\n")
        else:
            out.write("value\n")
            for v in values:
                out.write(f"{v}\n" if args.kind == "ensemble" else f"{_fmt(v)}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _cmd_density(args, parser) -> int:
    with _open_input(args.input) as source:
        values = [v for _, v in _parse_rows(source, "cuf", None, args.strict)]
    z = np.asarray(values, dtype=float)
    if np.any(z < 0) or np.any(z > 1):
        parser.error("density values must lie in [0, 1]")
    interior = z[(z > 0) & (z < 1)]
    try:
        bandwidth = plugin_bandwidth(interior)
        table = density_table(interior, bandwidth)
    except BandwidthError as err:
        print(f"calmon: density estimation failed: {err}", file=sys.stderr)
        return 1
    out = _open_output(args.output)
    try:
        out.write("z,density\n")
        grid = np.linspace(0.0, 1.0, table.size)
        for zi, fi in zip(grid, table):
            out.write(f"{_fmt(zi)},{_fmt(fi)}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


# ----------------------------------------------------------------------
# argument wiring


def _add_io_arguments(sub, with_lag=True):
    sub.add_argument("--input", default=None, help="input file ('-' or omitted: stdin)")
    sub.add_argument("--output", default=None, help="output file ('-' or omitted: stdout)")
    sub.add_argument("--strict", action="store_true", help="abort on malformed rows")
    if with_lag:
        sub.add_argument("--lag", type=int, default=1, help="forecast lag h (default 1)")
        sub.add_argument("--alpha", type=float, default=0.05, help="test level")
        sub.add_argument("--warmup", type=int, default=None, help="override warmup length")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="calmon",
        description="Sequential forecast-calibration testing with e-values.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    monitor = subparsers.add_parser("monitor", help="stream an e-process over a series")
    monitor.add_argument("--method", required=True, choices=E_METHODS)
    monitor.add_argument("--hypothesis", required=True, type=_parse_hypothesis)
    _add_io_arguments(monitor)

    test = subparsers.add_parser("test", help="one-shot test of a value file")
    test.add_argument("--method", required=True, choices=E_METHODS + BASELINE_METHODS)
    test.add_argument("--hypothesis", required=True, type=_parse_hypothesis)
    _add_io_arguments(test)

    simulate = subparsers.add_parser("simulate", help="power grid simulation")
    simulate.add_argument(
        "--method",
        default="beta",
        help="comma-separated registry test names (e.g. beta,ks)",
    )
    simulate.add_argument("--grid", type=_parse_grid, default=_parse_grid("-0.5:0.5:11"))
    simulate.add_argument("--n", type=int, default=360)
    simulate.add_argument("--alpha", type=float, default=0.05)
    simulate.add_argument("--reps", type=int, default=500)
    simulate.add_argument("--lag", type=int, default=1)
    simulate.add_argument("--seed", type=int, default=DEFAULT_SEED)
    simulate.add_argument("--jobs", type=int, default=1)
    simulate.add_argument("--output", default=None)

    density = subparsers.add_parser("density", help="kernel density table of a value file")
    density.add_argument("--input", default=None)
    density.add_argument("--output", default=None)
    density.add_argument("--strict", action="store_true")

    gen = subparsers.add_parser(
        "generate", help="write a scenario's calibration values as a monitor input file"
    )
    gen.add_argument(
        "--kind", default="pit", choices=("pit", "ensemble", "quantile", "unfocused")
    )
    gen.add_argument("--bias", type=float, default=0.0)
    gen.add_argument("--dispersion", type=float, default=0.0)
    gen.add_argument("--n", type=int, default=360)
    gen.add_argument("--seed", type=int, default=DEFAULT_SEED)
    gen.add_argument("--output", default=None)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "monitor":
            return _cmd_monitor(args, parser)
        if args.command == "test":
            return _cmd_test(args, parser)
        if args.command == "simulate":
            return _cmd_simulate(args, parser)
        if args.command == "density":
            return _cmd_density(args, parser)
        if args.command == "generate":
            return _cmd_generate(args, parser)
    except RowError as err:
        print(f"calmon: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"calmon: {err}", file=sys.stderr)
        return 1
    parser.error(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
