"""Command-line entry point: ``cardguess <subcommand> [flags]``.

Single-run subcommands write rows ``n,m,method,value,stderr,reps,seed``;
``compare`` writes one :class:`ComparisonRow` per grid cell. ``--format json``
writes the same fields as newline-delimited JSON objects.

Exit codes: 0 success, 2 invalid configuration, 3 capacity exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from fractions import Fraction

from . import asymptotics, birthday, exact, montecarlo, surrogate
from .errors import CapacityError, CardGuessError, InvalidSpecError
from .game import DeckSpec
from .rng import RngStream
from .strategies import Strategy

log = logging.getLogger("cardguess")

SINGLE_FIELDS = ("n", "m", "method", "value", "stderr", "reps", "seed")
EXIT_OK, EXIT_INVALID, EXIT_CAPACITY = 0, 2, 3


@dataclass
class ComparisonRow:
    n: int
    m: int
    s_exact: float | None
    s_mc: float | None
    s_mc_stderr: float | None
    s_tilde: float | None
    dg: float
    ho: float
    main: float
    admissible: bool


COMPARE_FIELDS = tuple(f.name for f in fields(ComparisonRow))


def parse_range(text: str) -> list[int]:
    """``"5"`` -> ``[5]``; ``"2..4"`` -> ``[2, 3, 4]``."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or a..b range, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return list(range(lo, hi + 1))


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _json_value(value):
    if isinstance(value, Fraction):
        return str(value)
    if hasattr(value, "item"):  # numpy scalar
        return value.item()
    return value


def render(rows: list[dict], header: tuple[str, ...], fmt: str) -> str:
    buf = io.StringIO()
    if fmt == "csv":
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(_json_value(row.get(h))) for h in header])
    else:
        for row in rows:
            buf.write(json.dumps({h: _json_value(row.get(h)) for h in header}) + "\n")
    return buf.getvalue()


def _row(n, m, method, value, stderr=None, reps=None, seed=None) -> dict:
    return dict(n=n, m=m, method=method, value=value, stderr=stderr, reps=reps, seed=seed)


def _grid(args) -> list[tuple[int, int]]:
    return [(n, m) for n in args.n for m in args.m]


def _write_profile(path: str, header: tuple[str, ...], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for r in rows:
            writer.writerow([_cell(_json_value(v)) for v in r])


def _single_cell(args, what: str) -> tuple[int, int]:
    if len(args.n) != 1 or len(args.m) != 1:
        raise InvalidSpecError(f"{what} needs a single (n, m), not a range")
    return args.n[0], args.m[0]


def cmd_simulate(args) -> list[dict]:
    if args.reps < 2:
        raise InvalidSpecError("--reps must be >= 2")
    if args.tiebreak == "random" and args.strategy != "greedy":
        raise InvalidSpecError("--tiebreak applies to the greedy strategy only")
    strategy = Strategy(args.strategy, args.tiebreak)
    rows = []
    for n, m in _grid(args):
        res = montecarlo.estimate_score(DeckSpec(n, m), strategy, args.reps, args.seed, args.workers)
        rows.append(_row(n, m, f"mc-{res.strategy}", res.mean, res.stderr, res.reps, res.seed))
    return rows


def cmd_exact(args) -> list[dict]:
    rows = []
    for n, m in _grid(args):
        spec = DeckSpec(n, m)
        if args.method in ("dp", "both"):
            v = exact.exact_value_dp(spec, args.rational, args.state_cap)
            rows.append(_row(n, m, "dp", v.value))
        if args.method in ("linearity", "both"):
            _, v = exact.score_decomposition(spec, args.rational)
            rows.append(_row(n, m, "linearity", v.value))
    if args.profile:
        spec = DeckSpec(*_single_cell(args, "--profile"))
        profile = exact.max_profile(spec, args.rational)
        _write_profile(args.profile, ("t", "p", "emax", "emax_over_t"), profile.rows())
    return rows


def cmd_indep(args) -> list[dict]:
    rows = []
    for n, m in _grid(args):
        v = surrogate.s_tilde(DeckSpec(n, m), args.mode, args.grid_size, args.sum_cap)
        rows.append(_row(n, m, f"s_tilde-{v.mode}", float(v.value)))
        if v.refinement_error is not None:
            log.info("n=%d m=%d quadrature refinement error %.3g", n, m, v.refinement_error)
    if args.profile:
        spec = DeckSpec(*_single_cell(args, "--profile"))
        _write_profile(args.profile, ("t", "p", "emax_indep", "term"), surrogate.surrogate_profile(spec, args.sum_cap))
    return rows


def cmd_asympt(args) -> list[dict]:
    rows = []
    for n, m in _grid(args):
        main = asymptotics.main_estimate(n, m, args.c, args.epsilon)
        rows.append(_row(n, m, "dg", asymptotics.dg_estimate(n, m).value))
        rows.append(_row(n, m, "ho", asymptotics.ho_estimate(n, m).value))
        rows.append(_row(n, m, "main", main.value))
        rows.append(_row(n, m, "main-admissible", main.admissible))
    return rows


def cmd_markov(args) -> list[dict]:
    rows = []
    for n in args.n:
        stats = birthday.simulate_excursions(n, args.steps, RngStream(args.seed, 0))
        ratio = stats.excursions * stats.ET / stats.steps
        rows.append(_row(n, None, "ET", stats.ET))
        rows.append(_row(n, None, "ET2", stats.ET2))
        rows.append(_row(n, None, "excursions", stats.excursions, reps=stats.steps, seed=args.seed))
        rows.append(_row(n, None, "renewal-ratio", ratio, reps=stats.steps, seed=args.seed))
    return rows


def compare_cell(n: int, m: int, args) -> ComparisonRow:
    """One grid cell; methods over their caps come back as ``None``."""
    spec = DeckSpec(n, m)
    s_exact = s_mc = s_err = s_tilde = None
    try:
        s_exact = float(exact.exact_value_dp(spec, state_cap=args.state_cap).value)
    except CapacityError:
        pass
    if args.reps:
        res = montecarlo.estimate_score(spec, Strategy(), args.reps, args.seed, workers=1)
        s_mc, s_err = res.mean, res.stderr
    try:
        s_tilde = float(surrogate.s_tilde(spec, "exact-sum", sum_cap=args.sum_cap).value)
    except CapacityError:
        s_tilde = float(surrogate.s_tilde(spec, "quadrature", args.grid_size).value)
    if s_exact is not None and s_mc is not None and abs(s_mc - s_exact) > 4 * s_err:
        log.warning("n=%d m=%d: MC mean %.6g is %.1f stderr from exact %.6g", n, m, s_mc, abs(s_mc - s_exact) / s_err, s_exact)
    main = asymptotics.main_estimate(n, m, args.c, args.epsilon)
    return ComparisonRow(
        n=n,
        m=m,
        s_exact=s_exact,
        s_mc=s_mc,
        s_mc_stderr=s_err,
        s_tilde=s_tilde,
        dg=asymptotics.dg_estimate(n, m).value,
        ho=asymptotics.ho_estimate(n, m).value,
        main=main.value,
        admissible=main.admissible,
    )


def compare(args) -> list[ComparisonRow]:
    cells = _grid(args)
    if not cells:
        raise InvalidSpecError("empty grid")
    workers = args.workers or montecarlo.default_workers()
    if workers == 1:
        return [compare_cell(n, m, args) for n, m in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda c: compare_cell(*c, args), cells))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cardguess", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, needs_m=True):
        p.add_argument("--n", type=parse_range, required=True)
        if needs_m:
            p.add_argument("--m", type=parse_range, required=True)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--output", default=None, help="write here instead of stdout")

    def mc_flags(p, reps_default):
        p.add_argument("--reps", type=int, default=reps_default)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=None, help=f"default ${montecarlo.WORKERS_ENV} or CPU count")

    p = sub.add_parser("simulate", help="Monte Carlo estimate of the expected score")
    common(p)
    mc_flags(p, 10_000)
    p.add_argument("--strategy", choices=("fixed", "greedy", "uniform"), default="greedy")
    p.add_argument("--tiebreak", choices=("lowest", "random"), default="lowest")

    p = sub.add_parser("exact", help="exact expected score of optimal play")
    common(p)
    p.add_argument("--rational", action="store_true")
    p.add_argument("--method", choices=("dp", "linearity", "both"), default="dp")
    p.add_argument("--state-cap", type=int, default=exact.DEFAULT_STATE_CAP)
    p.add_argument("--profile", default=None, help="CSV path for t,p,emax,emax_over_t")

    p = sub.add_parser("indep", help="independent-binomial surrogate score")
    common(p)
    p.add_argument("--mode", choices=("exact-sum", "quadrature"), default="exact-sum")
    p.add_argument("--grid-size", type=int, default=512)
    p.add_argument("--sum-cap", type=int, default=surrogate.DEFAULT_SUM_CAP)
    p.add_argument("--profile", default=None, help="CSV path for t,p,emax_indep,term")

    p = sub.add_parser("asympt", help="asymptotic estimates and admissibility")
    common(p)
    p.add_argument("--c", type=float, default=asymptotics.DEFAULT_C)
    p.add_argument("--epsilon", type=float, default=asymptotics.DEFAULT_EPSILON)

    p = sub.add_parser("markov", help="birthday-chain return times and excursions")
    common(p, needs_m=False)
    p.add_argument("--steps", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("compare", help="all methods on an (n, m) grid")
    common(p)
    mc_flags(p, 10_000)
    p.add_argument("--state-cap", type=int, default=10**6)
    p.add_argument("--sum-cap", type=int, default=surrogate.DEFAULT_SUM_CAP)
    p.add_argument("--grid-size", type=int, default=512)
    p.add_argument("--c", type=float, default=asymptotics.DEFAULT_C)
    p.add_argument("--epsilon", type=float, default=asymptotics.DEFAULT_EPSILON)
    return parser


COMMANDS = {
    "simulate": cmd_simulate,
    "exact": cmd_exact,
    "indep": cmd_indep,
    "asympt": cmd_asympt,
    "markov": cmd_markov,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.subcommand == "compare":
            rows = [asdict(r) for r in compare(args)]
            text = render(rows, COMPARE_FIELDS, args.format)
        else:
            text = render(COMMANDS[args.subcommand](args), SINGLE_FIELDS, args.format)
    except CapacityError as exc:
        print(f"cardguess: capacity exceeded: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (CardGuessError, ValueError) as exc:
        print(f"cardguess: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
