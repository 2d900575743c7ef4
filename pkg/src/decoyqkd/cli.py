"""Command-line front end.

Subcommands: ``simulate``, ``analyze``, ``sweep``, ``compare-rates``.
Exit codes: 0 success, 2 usage or input error, 3 analysis abort (no yield
vector fits the counts, possibly an attack), 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Sequence, TextIO

from .analysis import AnalysisConfig, analyze_session
from .lp import LpNumericalError
from .photonics import Adversarial, Beamsplitter, ChannelModel
from .polytope import VacuousTruncationError, build_constraints
from .sim import RecordFormatError, SessionConfig, expected_session, pns_channel, read_record, run_session, write_record
from .sweep import ROW_FIELDS, SweepSpec, compare_rates, loglog_slope, mu_grid, run_sweep

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_ABORT = 3
EXIT_NUMERICAL = 4


class UsageError(Exception):
    pass


def _count(text: str) -> int:
    """Accept ``1e7`` style counts."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if value != int(value):
        raise argparse.ArgumentTypeError(f"not an integer count: {text!r}")
    return int(value)


def _grid(text: str) -> tuple[float, ...]:
    try:
        lo, hi, step = (float(p) for p in text.split(":"))
        return mu_grid(lo, hi, step)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"mu grid must be lo:hi:step with 0 < lo <= hi ({exc})")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}")


@contextmanager
def _output(path: str | None) -> Iterator[TextIO]:
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _load_custom_channel(path: str) -> Adversarial:
    """Whitespace-separated yields ``y0 .. yK``; the last one also covers ``n > K``."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read channel file: {exc}")
    values = [float(v) for ln in text.splitlines() if not ln.lstrip().startswith("#") for v in ln.split()]
    if not values:
        raise UsageError(f"no yields in {path}")
    return Adversarial(tuple(values), tail_yield=values[-1])


def _channel(args: argparse.Namespace) -> ChannelModel:
    spec = args.channel
    if spec == "beamsplitter":
        return Beamsplitter(args.eta, args.y0)
    if spec == "pns":
        return pns_channel(args.eta_eve, args.y0, args.k)
    if spec.startswith("custom:"):
        return _load_custom_channel(spec.split(":", 1)[1])
    raise UsageError(f"unknown channel {spec!r}")


def _session_size(args: argparse.Namespace) -> int:
    if args.n is not None and args.n_scaled is not None:
        raise UsageError("give --n or --n-scaled, not both")
    if args.n_scaled is not None:
        n = int(round(args.n_scaled / args.eta))
    elif args.n is not None:
        n = args.n
    else:
        raise UsageError("session size needed: --n or --n-scaled")
    if n < 1:
        raise UsageError("session size must be at least 1")
    return n


def _analysis_config(args: argparse.Namespace) -> AnalysisConfig:
    return AnalysisConfig(
        epsilon=args.epsilon,
        K=args.k,
        ci_mode=args.ci_mode,
        s_mode=args.s_mode,
        yk_upper=args.yk_upper,
    )


# --- subcommands --------------------------------------------------------------

def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = SessionConfig(
        n_cycles=_session_size(args),
        mu_base=args.mu,
        channel=_channel(args),
        epsilon=args.epsilon,
        intrinsic_ber=args.intrinsic_ber,
        seed=args.seed,
    )
    record = expected_session(cfg) if args.expected else run_session(cfg)
    with _output(args.out) as fh:
        write_record(record, fh)
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    try:
        if args.record == "-":
            record = read_record(sys.stdin)
        else:
            with open(args.record) as fh:
                record = read_record(fh)
    except OSError as exc:
        raise UsageError(f"cannot read record: {exc}")
    config = _analysis_config(args)
    if args.dump_polytope:
        cs = build_constraints(record.levels, config.K, config.epsilon, config.ci_mode)
        with open(args.dump_polytope, "w") as fh:
            cs.dump(fh)
    report = analyze_session(record, config)
    with _output(args.out) as fh:
        fh.write(report.to_json() + "\n" if args.json else report.to_text())
    return EXIT_ABORT if report.abort else EXIT_OK


def _write_config_comment(fh: TextIO, items: dict) -> None:
    fh.write("# " + " ".join(f"{k}={v}" for k, v in items.items()) + "\n")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def cmd_sweep(args: argparse.Namespace) -> int:
    if (args.n is None) == (args.n_scaled is None):
        raise UsageError("give exactly one of --n or --n-scaled")
    spec = SweepSpec(
        mu_grid=args.mu_grid,
        eta=args.eta,
        n_cycles=args.n,
        n_scaled=args.n_scaled,
        epsilon=args.epsilon,
        y0=args.y0,
        seeds=args.seeds,
        base_seed=args.seed,
        K=args.k,
        intrinsic_ber=args.intrinsic_ber,
        expected=args.expected,
        analysis=_analysis_config(args),
    )
    result = run_sweep(spec, jobs=args.jobs)
    with _output(args.out) as fh:
        _write_config_comment(
            fh,
            {
                "command": "sweep",
                "eta": repr(spec.eta),
                "N": spec.N,
                "epsilon": repr(spec.epsilon),
                "y0": repr(spec.y0),
                "k": spec.K,
                "seeds": spec.seeds,
                "seed": spec.base_seed,
                "expected": int(spec.expected),
                "ci_mode": args.ci_mode,
            },
        )
        writer = csv.writer(fh, lineterminator="\n")
        if args.summary:
            writer.writerow(["mu", "rate_lo_q25", "rate_lo_median", "rate_lo_q75"])
            for mu, q in zip(spec.mu_grid, result.quantiles()):
                writer.writerow([_fmt(mu), *(_fmt(float(v)) for v in q)])
        else:
            writer.writerow(ROW_FIELDS)
            for row in result.rows:
                writer.writerow([_fmt(v) for v in row.values()])
        fh.write(
            f"# argmax_mu_median={result.argmax_median()!r} "
            f"argmax_mu_grid_median={result.argmax_median(refine=False)!r} "
            f"best_rate_lo_median={result.best_rate_median()!r}\n"
        )
    return EXIT_OK


def cmd_compare_rates(args: argparse.Namespace) -> int:
    comps = compare_rates(
        args.eta_grid,
        args.n,
        args.mu_grid,
        epsilon=args.epsilon,
        y0=args.y0,
        seeds=args.seeds,
        base_seed=args.seed,
        expected=args.expected,
        jobs=args.jobs,
    )
    with _output(args.out) as fh:
        _write_config_comment(
            fh,
            {
                "command": "compare-rates",
                "N": args.n,
                "epsilon": repr(args.epsilon),
                "y0": repr(args.y0),
                "seeds": args.seeds,
                "seed": args.seed,
                "expected": int(args.expected),
            },
        )
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["eta", "conventional_rate", "mu_conventional", "decoy_rate", "mu_decoy", "f", "ratio"])
        for c in comps:
            ratio = c.decoy_rate / c.conventional_rate
            writer.writerow(
                [_fmt(float(v)) for v in (c.eta, c.conventional_rate, c.optimal_mu_conventional,
                                          c.decoy_rate, c.optimal_mu_decoy, c.f, ratio)]
            )
        if len(comps) >= 2 and all(c.decoy_rate > 0 for c in comps):
            etas = [c.eta for c in comps]
            fh.write(
                f"# slope_decoy={loglog_slope(etas, [c.decoy_rate for c in comps])!r} "
                f"slope_conventional={loglog_slope(etas, [c.conventional_rate for c in comps])!r}\n"
            )
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, default=1e-7, help="per-bound failure probability")
    p.add_argument("--k", type=int, default=11, help="number of constrained yields minus one")
    p.add_argument("--out", default=None, help="output file (default stdout)")


def _add_analysis(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ci-mode", choices=("paper", "tail"), default="paper",
                   help="single-term bound equation or Clopper-Pearson tails")
    p.add_argument("--s-mode", choices=("sifted", "all"), default="sifted")
    p.add_argument("--yk-upper", choices=("lp", "one"), default="lp")


def _add_session(p: argparse.ArgumentParser, size: bool = True) -> None:
    if size:
        p.add_argument("--n", type=_count, default=None, help="clock cycles")
        p.add_argument("--n-scaled", type=float, default=None, help="numerator x for N = x / eta")
    p.add_argument("--eta", type=float, default=0.1, help="channel transmission")
    p.add_argument("--y0", type=float, default=3e-6, help="dark plus background click probability")
    p.add_argument("--intrinsic-ber", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--expected", action="store_true", help="use noise-free expected counts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="decoyqkd", description="Finite-statistics decoy-state analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one four-laser session")
    _add_session(p)
    _add_common(p)
    p.add_argument("--mu", type=float, required=True, help="per-laser mean photon number")
    p.add_argument("--channel", default="beamsplitter", help="beamsplitter | pns | custom:FILE")
    p.add_argument("--eta-eve", type=float, default=0.0, help="single-photon yield under pns")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="bound the single-photon yield from a record")
    p.add_argument("record", help="session record file, or - for stdin")
    _add_common(p)
    _add_analysis(p)
    p.add_argument("--dump-polytope", default=None, metavar="FILE", help="write the halfspaces")
    p.add_argument("--json", action="store_true", help="one JSON object instead of key=value lines")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="guaranteed rate versus mean photon number")
    _add_session(p)
    _add_common(p)
    _add_analysis(p)
    p.add_argument("--mu-grid", type=_grid, default=mu_grid(0.05, 1.5, 0.05), help="lo:hi:step")
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--summary", action="store_true", help="per-mu quartiles over seeds")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare-rates", help="decoy versus conventional rate over eta")
    p.add_argument("--eta-grid", type=_floats, default=(1e-4, 1e-3, 1e-2, 1e-1))
    p.add_argument("--n", type=_count, default=10**9)
    p.add_argument("--y0", type=float, default=3e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--expected", action="store_true")
    _add_common(p)
    p.add_argument("--mu-grid", type=_grid, default=mu_grid(0.05, 1.5, 0.05))
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_compare_rates)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, RecordFormatError, VacuousTruncationError, ValueError) as exc:
        print(f"decoyqkd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LpNumericalError, FloatingPointError) as exc:
        print(f"decoyqkd: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
