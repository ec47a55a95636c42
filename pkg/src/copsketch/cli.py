"""Command-line front end.

Subcommands
-----------
``gen``        write a seeded correlated Gaussian stream as CSV
``ingest``     stream a CSV of pairs into a summary checkpoint file
``query``      evaluate the copula of a checkpoint at a point or grid
``benchmark``  grow a summary over a synthetic stream, logging size/error/time
``vine-demo``  three-dimensional vine comparison: summary path vs exact path
``dump``       human-readable listing of a checkpoint

Conventions: stdout carries data only, diagnostics go to stderr.  Exit code
1 flags a usage error, 2 an I/O or file-format error, and 3 a checkpoint
whose contents violate the summary invariants.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
import tracemalloc
from pathlib import Path
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .copula import CopulaSummary, SummaryFormatError, SummaryInvariantError
from .streamgen import gaussian_pair_stream, gaussian_tri_array
from .vine import DVineSketch, exact_vine

#: Above this stream length the exact reference is switched off (with a
#: warning) instead of materialising the stream.
DEFAULT_ORACLE_CAP = 500_000

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_INVARIANT = 3


class _UsageError(Exception):
    """Raised for argument problems detected after parsing."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage problems, not argparse's 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="copsketch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a seeded Gaussian stream as CSV")
    p.add_argument("--n", type=int, required=True, help="rows to generate")
    p.add_argument("--seed", type=int, default=0, help="stream seed")
    p.add_argument("--rho", type=float, default=None,
                   help="pair correlation (bivariate output)")
    p.add_argument("--rho12", type=float, default=None,
                   help="correlation of columns 1,2 (trivariate output)")
    p.add_argument("--rho23", type=float, default=None,
                   help="correlation of columns 2,3 (trivariate output)")
    p.add_argument("--rho13", type=float, default=None,
                   help="correlation of columns 1,3 (trivariate output)")
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser(
        "ingest",
        help="stream a CSV of x1,x2 rows into a summary checkpoint",
        description="Rows are consumed one at a time; the stream is never "
                    "materialised.  If the checkpoint file already exists "
                    "it is loaded first and ingestion continues from it.")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--in", dest="infile", required=True,
                   help="input CSV path, or - for stdin")
    p.add_argument("--checkpoint", required=True,
                   help="summary checkpoint path (read if present, rewritten)")
    p.add_argument("--compress-every-insert", action="store_true",
                   help="compress after every row instead of periodically")

    p = sub.add_parser("query", help="evaluate a checkpointed summary")
    p.add_argument("--summary", required=True, help="checkpoint path")
    p.add_argument("--u1", type=float, default=None)
    p.add_argument("--u2", type=float, default=None)
    p.add_argument("--grid", type=int, default=None, metavar="K",
                   help="print a CSV of values on the K x K grid "
                        "u = i/K, i = 1..K, instead of a single point")

    p = sub.add_parser(
        "benchmark",
        help="grow a summary over a synthetic stream and log its behaviour")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--with-oracle", action="store_true",
                   help="also track the exact copula at (0.7, 0.7)")
    p.add_argument("--stride", type=int, default=100,
                   help="rows between measurements (default 100)")
    p.add_argument("--oracle-cap", type=int, default=DEFAULT_ORACLE_CAP,
                   help="disable the exact reference above this n")
    p.add_argument("--out-prefix", required=True,
                   help="prefix P for P_size.csv, P_error.csv, P_time.csv")

    p = sub.add_parser(
        "vine-demo",
        help="trivariate D-vine: summary-backed vs exact evaluation",
        description="Generates a Gaussian stream with correlations "
                    "(0.5, 0.5, 0.0) over (x1,x2), (x2,x3), (x1,x3), builds "
                    "both vine variants, and writes their values on an "
                    "11 x 11 (u1, u3) grid plus a pseudo-observation error "
                    "table next to the output file.")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--n-query", type=int, default=1000)
    p.add_argument("--grid-m", type=int, default=100)
    p.add_argument("--u2", type=float, required=True, choices=[0.1, 0.9])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--oracle-cap", type=int, default=DEFAULT_ORACLE_CAP)
    p.add_argument("--out", required=True, help="grid CSV path")

    p = sub.add_parser("dump", help="print a checkpoint in readable form")
    p.add_argument("--summary", required=True, help="checkpoint path")

    return parser


# ----------------------------------------------------------------------
# helpers


def _load_checkpoint(path: str) -> CopulaSummary:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SummaryFormatError(f"cannot read checkpoint {path!r}: {exc}")
    return CopulaSummary.from_text(text)


def _write_rows(out, header: Sequence[str],
                rows: Iterable[Sequence[object]]) -> None:
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(
            repr(v) if isinstance(v, float) else str(v) for v in row
        ) + "\n")


def _csv_pairs(handle) -> Iterator[Tuple[float, float]]:
    """Yield (x1, x2) pairs from a CSV stream, tolerating one header row."""
    reader = csv.reader(handle)
    for lineno, row in enumerate(reader, start=1):
        if not row:
            continue
        if len(row) < 2:
            raise SummaryFormatError(
                f"line {lineno}: expected two columns, got {row!r}"
            )
        try:
            yield float(row[0]), float(row[1])
        except ValueError:
            if lineno == 1:  # header row
                continue
            raise SummaryFormatError(
                f"line {lineno}: unparseable row {row!r}"
            ) from None


# ----------------------------------------------------------------------
# subcommands


def _cmd_gen(args) -> int:
    if args.n < 1:
        raise _UsageError("--n must be positive")
    triple = [args.rho12, args.rho23, args.rho13]
    has_triple = any(v is not None for v in triple)
    if has_triple:
        if args.rho is not None:
            raise _UsageError("--rho conflicts with --rho12/--rho23/--rho13")
        if any(v is None for v in triple):
            raise _UsageError(
                "trivariate output needs all of --rho12 --rho23 --rho13"
            )
        try:
            arr = gaussian_tri_array(args.n, triple[0], triple[1], triple[2],
                                     args.seed)
        except ValueError as exc:
            raise _UsageError(str(exc))
        header = ("x1", "x2", "x3")
        rows: Iterable[Sequence[float]] = (tuple(map(float, r)) for r in arr)
    else:
        if args.rho is None:
            raise _UsageError("need either --rho or the trivariate triple")
        try:
            rows = gaussian_pair_stream(args.n, args.rho, args.seed)
        except ValueError as exc:
            raise _UsageError(str(exc))
        header = ("x1", "x2")
    with open(args.out, "w", newline="") as out:
        _write_rows(out, header, rows)
    return EXIT_OK


def _cmd_ingest(args) -> int:
    checkpoint = Path(args.checkpoint)
    if checkpoint.exists() and checkpoint.stat().st_size > 0:
        summary = CopulaSummary.from_text(
            checkpoint.read_text(),
            compress_every_insert=args.compress_every_insert,
        )
        if summary.epsilon != args.epsilon:
            raise _UsageError(
                f"--epsilon {args.epsilon!r} conflicts with checkpoint "
                f"epsilon {summary.epsilon!r}"
            )
        sys.stderr.write(
            f"resuming from checkpoint with n={summary.n}\n"
        )
    else:
        try:
            summary = CopulaSummary(
                args.epsilon,
                compress_every_insert=args.compress_every_insert,
            )
        except ValueError as exc:
            raise _UsageError(str(exc))
    rows = 0
    if args.infile == "-":
        for x1, x2 in _csv_pairs(sys.stdin):
            summary.insert(x1, x2)
            rows += 1
    else:
        with open(args.infile, newline="") as handle:
            for x1, x2 in _csv_pairs(handle):
                summary.insert(x1, x2)
                rows += 1
    checkpoint.write_text(summary.to_text())
    sys.stderr.write(
        f"ingested {rows} rows (stream total n={summary.n}); "
        f"{summary.total_tuples()} tuples in checkpoint\n"
    )
    return EXIT_OK


def _cmd_query(args) -> int:
    summary = _load_checkpoint(args.summary)
    if args.grid is not None:
        if args.grid < 1:
            raise _UsageError("--grid must be positive")
        ev = summary.freeze()
        k = args.grid
        sys.stdout.write("u1,u2,value\n")
        for i in range(1, k + 1):
            for j in range(1, k + 1):
                u1, u2 = i / k, j / k
                sys.stdout.write(f"{u1!r},{u2!r},{ev(u1, u2)!r}\n")
        return EXIT_OK
    if args.u1 is None or args.u2 is None:
        raise _UsageError("need --u1 and --u2 (or --grid K)")
    try:
        res = summary.copula(args.u1, args.u2)
    except ValueError as exc:
        raise _UsageError(str(exc))
    sys.stdout.write(f"value={res.value!r}\n")
    sys.stdout.write(f"lower_count={res.lower_count}\n")
    sys.stdout.write(f"covering_index={res.covering_index}\n")
    sys.stdout.write(f"error_bound={res.error_bound!r}\n")
    return EXIT_OK


def _cmd_benchmark(args) -> int:
    if args.n < 1 or args.stride < 1:
        raise _UsageError("--n and --stride must be positive")
    try:
        summary = CopulaSummary(args.epsilon)
        stream = gaussian_pair_stream(args.n, args.rho, args.seed)
    except ValueError as exc:
        raise _UsageError(str(exc))
    oracle_on = args.with_oracle
    if oracle_on and args.n > args.oracle_cap:
        sys.stderr.write(
            f"warning: n={args.n} exceeds the exact-reference cap "
            f"{args.oracle_cap}; oracle disabled\n"
        )
        oracle_on = False
    tracemalloc.start()
    x1buf = np.empty(args.n) if oracle_on else None
    x2buf = np.empty(args.n) if oracle_on else None
    size_rows: List[Tuple[int, int, int]] = []
    time_rows: List[Tuple[int, float]] = []
    error_rows: List[Tuple[int, float, float]] = []
    bound = 5.0 * summary.epsilon
    stride_start = time.perf_counter()
    for i, (x1, x2) in enumerate(stream, start=1):
        summary.insert(x1, x2)
        if oracle_on:
            x1buf[i - 1] = x1
            x2buf[i - 1] = x2
        if i % args.stride == 0 or i == args.n:
            elapsed = time.perf_counter() - stride_start
            report = summary.size_report()
            size_rows.append((i, report.total_tuples, report.estimated_bytes))
            time_rows.append((i, elapsed))
            if oracle_on:
                approx = summary.copula(0.7, 0.7).value
                exact = _exact_at(x1buf[:i], x2buf[:i], 0.7, 0.7)
                error_rows.append((i, abs(approx - exact), bound))
            stride_start = time.perf_counter()
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    prefix = args.out_prefix
    with open(f"{prefix}_size.csv", "w") as out:
        _write_rows(out, ("n", "tuples", "bytes"), size_rows)
    with open(f"{prefix}_time.csv", "w") as out:
        _write_rows(out, ("n", "seconds"), time_rows)
    if oracle_on:
        with open(f"{prefix}_error.csv", "w") as out:
            _write_rows(out, ("n", "abs_error", "bound"), error_rows)
    sys.stderr.write(
        f"benchmark done: n={args.n}, {summary.total_tuples()} tuples, "
        f"peak traced memory {peak / 1e6:.1f} MB\n"
    )
    return EXIT_OK


def _exact_at(x1: np.ndarray, x2: np.ndarray, u1: float, u2: float) -> float:
    from .gk import ceil_rank

    n = x1.shape[0]
    t1 = np.partition(x1, ceil_rank(u1, n) - 1)[ceil_rank(u1, n) - 1]
    t2 = np.partition(x2, ceil_rank(u2, n) - 1)[ceil_rank(u2, n) - 1]
    return int(np.count_nonzero((x1 <= t1) & (x2 <= t2))) / n


def _cmd_vine_demo(args) -> int:
    if args.n < 2:
        raise _UsageError("--n must be at least 2")
    if args.n_query < 2 or args.grid_m < 2:
        raise _UsageError("--n-query and --grid-m must be at least 2")
    try:
        data = gaussian_tri_array(args.n, 0.5, 0.5, 0.0, args.seed)
        sketch = DVineSketch(3, args.epsilon, n_query=args.n_query)
    except ValueError as exc:
        raise _UsageError(str(exc))
    for row in data:
        sketch.insert(row)
    model_s = sketch.model(grid_m=args.grid_m)
    with_exact = args.n <= args.oracle_cap
    if not with_exact:
        sys.stderr.write(
            f"warning: n={args.n} exceeds the exact-reference cap "
            f"{args.oracle_cap}; exact columns disabled\n"
        )
    model_e = (
        exact_vine(data, n_query=args.n_query, grid_m=args.grid_m)
        if with_exact else None
    )
    grid = np.linspace(0.05, 0.95, 11)
    out_path = Path(args.out)
    with open(out_path, "w") as out:
        header = ["u1", "u2", "u3", "summary_value"]
        if with_exact:
            header.append("exact_value")
        out.write(",".join(header) + "\n")
        for u1 in grid:
            for u3 in grid:
                point = (float(u1), args.u2, float(u3))
                row = [repr(point[0]), repr(point[1]), repr(point[2]),
                       repr(model_s.evaluate(point))]
                if with_exact:
                    row.append(repr(model_e.evaluate(point)))
                out.write(",".join(row) + "\n")
    if with_exact:
        s_12 = model_s.pseudo_observations(1)[0]
        s_32 = model_s.pseudo_observations(2)[1]
        e_12 = model_e.pseudo_observations(1)[0]
        e_32 = model_e.pseudo_observations(2)[1]
        pseudo_path = out_path.with_name(
            out_path.stem + "_pseudo_errors" + (out_path.suffix or ".csv")
        )
        with open(pseudo_path, "w") as out:
            _write_rows(
                out,
                ("row", "abs_err_u1_given_2", "abs_err_u3_given_2"),
                (
                    (k, float(abs(s_12[k] - e_12[k])),
                     float(abs(s_32[k] - e_32[k])))
                    for k in range(len(s_12))
                ),
            )
        sys.stderr.write(
            f"wrote {out_path} and {pseudo_path}\n"
        )
    else:
        sys.stderr.write(f"wrote {out_path} (summary path only)\n")
    return EXIT_OK


def _cmd_dump(args) -> int:
    summary = _load_checkpoint(args.summary)
    report = summary.size_report()
    sys.stdout.write(
        f"epsilon={summary.epsilon!r} n={summary.n} "
        f"outer_tuples={report.outer_tuples} "
        f"total_tuples={report.total_tuples} "
        f"estimated_bytes={report.estimated_bytes}\n"
    )
    sys.stdout.write("S1 tuples (index value g delta):\n")
    for i, (v, g, d) in enumerate(
        zip(summary.s1.values, summary.s1.gs, summary.s1.deltas), start=1
    ):
        sys.stdout.write(f"{i} {v!r} {g} {d}\n")
    sys.stdout.write("subsummary lengths:\n")
    sys.stdout.write(" ".join(str(x) for x in report.sub_lengths) + "\n")
    sys.stdout.write("length histogram (length count):\n")
    hist: dict = {}
    for length in report.sub_lengths:
        hist[length] = hist.get(length, 0) + 1
    for length in sorted(hist):
        sys.stdout.write(f"{length} {hist[length]}\n")
    return EXIT_OK


_COMMANDS = {
    "gen": _cmd_gen,
    "ingest": _cmd_ingest,
    "query": _cmd_query,
    "benchmark": _cmd_benchmark,
    "vine-demo": _cmd_vine_demo,
    "dump": _cmd_dump,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse --help exits 0; errors exit 1
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        sys.stderr.write(f"copsketch {args.command}: error: {exc}\n")
        return EXIT_USAGE
    except SummaryInvariantError as exc:
        sys.stderr.write(f"copsketch {args.command}: invariant violation: "
                         f"{exc}\n")
        return EXIT_INVARIANT
    except SummaryFormatError as exc:
        sys.stderr.write(f"copsketch {args.command}: {exc}\n")
        return EXIT_IO
    except OSError as exc:
        sys.stderr.write(f"copsketch {args.command}: {exc}\n")
        return EXIT_IO
    except BrokenPipeError:  # pragma: no cover - downstream closed the pipe
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
