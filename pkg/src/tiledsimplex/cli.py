"""Command-line front end: ``solve``, ``generate`` and ``bench``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .bench import BenchRow, csv_text, parse_modes, parse_suite, run_suite, write_csv
from .engine import Kernel
from .generator import GenSpec, SparsityClass, generate
from .model import ModelError
from .mps import MpsError, read_mps, write_mps
from .simplex import AntiCycle, SolverConfig, Status, solve

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CODES = {
    Status.OPTIMAL: EXIT_OK,
    Status.INFEASIBLE: 2,
    Status.UNBOUNDED: 3,
    Status.ITERATION_LIMIT: 4,
}


class _Parser(argparse.ArgumentParser):
    # usage errors share exit code 1 with I/O errors; 2 means "infeasible"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _budget(text: str) -> int | None:
    if text.lower() in ("unlimited", "inf", "none"):
        return None
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("budget must be a positive byte count")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="tiledsimplex", description="Dense revised simplex with a tiled memory model.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve one MPS file")
    s.add_argument("file", type=Path)
    s.add_argument("--budget", type=_budget, default=None, metavar="BYTES|unlimited")
    s.add_argument("--kernel", choices=[k.value for k in Kernel], default="cached")
    s.add_argument("--anticycle", choices=[a.value for a in AntiCycle], default="tabu")
    s.add_argument("--tol-opt", type=float, default=1e-7)
    s.add_argument("--tol-pivot", type=float, default=1e-9)
    s.add_argument("--max-iter", type=_positive_int, default=None)
    s.add_argument("--workers", type=_positive_int, default=1)
    s.add_argument("--csv", type=Path, default=None, metavar="OUT")
    s.set_defaults(func=cmd_solve)

    g = sub.add_parser("generate", help="write a random feasible instance as MPS")
    g.add_argument("--rows", type=_positive_int, required=True)
    g.add_argument("--cols", type=_positive_int, required=True)
    g.add_argument("--class", dest="cls", choices=[c.value for c in SparsityClass], default="D")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", type=Path, required=True)
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("bench", help="run a suite under one or more memory modes")
    src = b.add_mutually_exclusive_group(required=True)
    src.add_argument("--dir", type=Path, help="every *.mps file in this directory")
    src.add_argument("--suite", type=Path, help="file listing MPS paths or 'gen M N CLASS SEED' lines")
    b.add_argument("--modes", default="unlimited:cached",
                   help="comma list of BUDGET:KERNEL, BUDGET is bytes, 'unlimited' or '<P>p'")
    b.add_argument("--csv", type=Path, default=None, metavar="OUT", help="default: stdout")
    b.add_argument("--reference", action="store_true",
                   help="also time a single-worker naive-kernel run and report speedup")
    b.add_argument("--repeats", type=_positive_int, default=3)
    b.add_argument("--anticycle", choices=[a.value for a in AntiCycle], default="tabu")
    b.add_argument("--workers", type=_positive_int, default=1)
    b.set_defaults(func=cmd_bench)
    return ap


def cmd_solve(args) -> int:
    cfg = SolverConfig(
        opt_tol=args.tol_opt,
        pivot_tol=args.tol_pivot,
        max_iter=args.max_iter,
        anticycle=args.anticycle,
        memory_budget_bytes=args.budget,
        kernel=args.kernel,
        workers=args.workers,
    )
    lp = read_mps(args.file)
    rep = solve(lp, cfg)
    print(f"instance     {lp.name or args.file.stem}")
    print(f"status       {rep.status.value}")
    print(f"objective    {rep.objective:.10g}")
    print(f"iterations   {rep.iterations} (phase 1: {rep.iterations_phase1}, phase 2: {rep.iterations_phase2})")
    print(f"time         {rep.total_seconds:.6g} s, {rep.tpi_seconds:.6g} s/iteration")
    print(f"case         {rep.case_used.value}")
    mem = rep.memory
    print(f"device       {mem.device_reads} reads, {mem.device_writes} writes")
    print(f"transfers    {mem.h2d_bytes} B to device, {mem.d2h_bytes} B to host")
    if args.csv is not None:
        row = BenchRow(
            instance=args.file.stem,
            status=rep.status.value,
            objective=rep.objective if rep.status is not Status.INFEASIBLE else float("nan"),
            iterations_p1=rep.iterations_phase1,
            iterations_p2=rep.iterations_phase2,
            total_seconds=rep.total_seconds,
            tpi_seconds=rep.tpi_seconds,
            case=rep.case_used.value,
            device_reads=mem.device_reads,
            device_writes=mem.device_writes,
            h2d_bytes=mem.h2d_bytes,
            d2h_bytes=mem.d2h_bytes,
        )
        write_csv([row], args.csv)
    return EXIT_CODES[rep.status]


def cmd_generate(args) -> int:
    lp = generate(GenSpec(args.rows, args.cols, args.cls, args.seed))
    write_mps(lp, args.output)
    zeros = int(np.count_nonzero(lp.coeffs == 0))
    print(f"wrote {args.output}: {lp.num_rows}x{lp.num_cols}, {zeros} zero entries")
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.dir is not None:
        if not args.dir.is_dir():
            raise FileNotFoundError(f"not a directory: {args.dir}")
        instances = sorted(args.dir.glob("*.mps"))
    else:
        instances = parse_suite(args.suite)
    cfg = SolverConfig(anticycle=args.anticycle, workers=args.workers)
    rows = run_suite(instances, cfg, parse_modes(args.modes), reference=args.reference,
                     repeats=args.repeats, csv_path=args.csv)
    if args.csv is None:
        sys.stdout.write(csv_text(rows))
    else:
        print(f"wrote {len(rows)} rows to {args.csv}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, MpsError, ModelError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
