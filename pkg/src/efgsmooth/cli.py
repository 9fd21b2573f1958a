"""Benchmark harness: run one solver on one game and stream the trace to CSV.

Usage:

    efgsmooth --game kuhn --method cfr_plus --iterations 1000 --output out.csv
    efgsmooth --summarize out1.csv out2.csv

The CSV schema is ``iteration,epsilon,mu1,mu2,tau,phase,elapsed_ms``; the
mu/tau columns are empty for the regret-matching methods and phase is "warm"
for the warm-start portion of the centering methods.  ``--figure`` renders a
log-scale convergence plot next to the delimited output.  Exit codes: 0 ok,
2 invalid configuration or malformed CSV, 3 numerical abort (step size
underflow), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from dataclasses import dataclass
from typing import Optional, Sequence

from .cfr import cfr_plus_solve, cfr_solve
from .egt import TauUnderflowError, egt_solve_heuristic, solve_with_centering
from .games import GAME_NAMES, game_by_name, sequence_form
from .trace import TraceRecord

__all__ = ["RunConfig", "run", "summarize", "main"]

log = logging.getLogger("efgsmooth")

METHOD_NAMES = ("cfr", "cfr_plus", "egt", "egt_centering", "egt_centering_cfr_plus")
CSV_HEADER = ("iteration", "epsilon", "mu1", "mu2", "tau", "phase", "elapsed_ms")
THRESHOLDS = (1e-2, 1e-3, 1e-4)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


@dataclass
class RunConfig:
    game: str
    method: str
    iterations: int
    output_path: str
    warm_fraction: float = 0.10
    eval_stride: Optional[int] = None  # None: 10 for leduc13, else 1
    seed: int = 0  # reserved; every solver is deterministic
    figure_path: Optional[str] = None

    def resolved_stride(self) -> int:
        if self.eval_stride is not None:
            return self.eval_stride
        return 10 if self.game == "leduc13" else 1

    def validate(self) -> Optional[str]:
        if self.game not in GAME_NAMES:
            return f"unknown game {self.game!r} (choose from {', '.join(GAME_NAMES)})"
        if self.method not in METHOD_NAMES:
            return f"unknown method {self.method!r}"
        if self.iterations < 1:
            return f"iterations must be >= 1, got {self.iterations}"
        if not 0.0 < self.warm_fraction < 1.0:
            return f"warm-fraction must be in (0, 1), got {self.warm_fraction}"
        if self.eval_stride is not None and self.eval_stride < 1:
            return f"eval-stride must be >= 1, got {self.eval_stride}"
        return None


def _format(value) -> str:
    return "" if value is None else repr(float(value))


def run(config: RunConfig) -> int:
    """Execute one configured solve, streaming one CSV row per trace record."""
    problem_msg = config.validate()
    if problem_msg is not None:
        log.error("invalid configuration: %s", problem_msg)
        return EXIT_CONFIG

    t_build = time.monotonic()
    game = game_by_name(config.game)
    problem = sequence_form(game)
    log.info(
        "compiled %s in %.2fs: |S1|=%d |S2|=%d nnz=%d",
        config.game,
        time.monotonic() - t_build,
        problem.tx.n_sequences,
        problem.ty.n_sequences,
        problem.A.nnz,
    )

    stride = config.resolved_stride()
    try:
        out = open(config.output_path, "w", newline="")
    except OSError as exc:
        log.error("cannot open output path: %s", exc)
        return EXIT_IO

    records: list[TraceRecord] = []
    with out:
        writer = csv.writer(out)
        writer.writerow(CSV_HEADER)

        def emit(rec: TraceRecord) -> None:
            records.append(rec)
            writer.writerow(
                (
                    rec.iteration,
                    _format(rec.epsilon),
                    _format(rec.mu1),
                    _format(rec.mu2),
                    _format(rec.tau),
                    rec.phase,
                    _format(rec.elapsed_ms),
                )
            )
            out.flush()

        try:
            if config.method == "cfr":
                cfr_solve(problem, config.iterations, eval_stride=stride, callback=emit)
            elif config.method == "cfr_plus":
                cfr_plus_solve(
                    problem, config.iterations, eval_stride=stride, callback=emit
                )
            elif config.method == "egt":
                egt_solve_heuristic(
                    problem, config.iterations, eval_stride=stride, callback=emit
                )
            else:
                warm = "egt" if config.method == "egt_centering" else "cfr_plus"
                solve_with_centering(
                    problem,
                    config.iterations,
                    warmstart=warm,
                    warm_fraction=config.warm_fraction,
                    eval_stride=stride,
                    callback=emit,
                )
        except TauUnderflowError as exc:
            log.error("solver aborted: %s", exc)
            return EXIT_NUMERICAL
        except OSError as exc:
            log.error("I/O failure while writing trace: %s", exc)
            return EXIT_IO

    log.info(
        "%s on %s: final epsilon %.3e after %d iterations",
        config.method,
        config.game,
        records[-1].epsilon,
        config.iterations,
    )
    if config.figure_path is not None:
        from .plotting import save_convergence_figure

        its = [r.iteration for r in records]
        eps = [r.epsilon for r in records]
        try:
            save_convergence_figure(
                [(f"{config.method} on {config.game}", its, eps)],
                config.figure_path,
                title=config.game,
            )
        except OSError as exc:
            log.error("cannot write figure: %s", exc)
            return EXIT_IO
        log.info("figure written to %s", config.figure_path)
    return EXIT_OK


def _read_trace_csv(path: str) -> list[tuple[int, float]]:
    """(iteration, epsilon) rows of a CSV produced by ``run``.

    Raises ValueError with a line number on schema or parse problems.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}:1: empty file") from None
        try:
            it_col = header.index("iteration")
            eps_col = header.index("epsilon")
        except ValueError:
            raise ValueError(
                f"{path}:1: header lacks iteration/epsilon columns"
            ) from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append((int(row[it_col]), float(row[eps_col])))
            except (ValueError, IndexError):
                raise ValueError(f"{path}:{lineno}: malformed row") from None
    return rows


def summarize(paths: Sequence[str], figure_path: Optional[str] = None) -> int:
    """Print final epsilon and iterations-to-threshold for each trace CSV."""
    tables = []
    for path in paths:
        try:
            rows = _read_trace_csv(path)
        except OSError as exc:
            log.error("cannot read %s: %s", path, exc)
            return EXIT_IO
        except ValueError as exc:
            log.error("%s", exc)
            return EXIT_CONFIG
        tables.append((path, rows))

    headers = ["trace", "final epsilon"] + [f"iters to {t:g}" for t in THRESHOLDS]
    lines = [headers]
    for path, rows in tables:
        if rows:
            final = f"{rows[-1][1]:.3e}"
            hits = []
            for thr in THRESHOLDS:
                hit = next((str(it) for it, eps in rows if eps <= thr), "—")
                hits.append(hit)
        else:
            final, hits = "—", ["—"] * len(THRESHOLDS)
        lines.append([os.path.basename(path), final] + hits)
    widths = [max(len(row[i]) for row in lines) for i in range(len(headers))]
    for row in lines:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))
    print(
        "note: EGT variants cost roughly 2-3x a CFR iteration, so divide their "
        "iteration counts accordingly when comparing by time."
    )

    if figure_path is not None and tables:
        from .plotting import save_convergence_figure

        curves = []
        for path, rows in tables:
            if rows:
                its, eps = zip(*rows)
                curves.append((os.path.basename(path), its, eps))
        try:
            save_convergence_figure(curves, figure_path)
        except OSError as exc:
            log.error("cannot write figure: %s", exc)
            return EXIT_IO
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="efgsmooth",
        description="Benchmark equilibrium solvers on small poker games.",
    )
    parser.add_argument("--game", choices=GAME_NAMES)
    parser.add_argument("--method", choices=METHOD_NAMES)
    parser.add_argument("--iterations", type=int)
    parser.add_argument("--warm-fraction", type=float, default=0.10)
    parser.add_argument(
        "--eval-stride",
        type=int,
        default=None,
        help="evaluate exploitability every N iterations (default 1; 10 on leduc13)",
    )
    parser.add_argument("--seed", type=int, default=0, help="reserved; runs are deterministic")
    parser.add_argument("--output", help="trace CSV path")
    parser.add_argument("--figure", default=None, help="also render a convergence figure here")
    parser.add_argument(
        "--summarize",
        nargs="+",
        metavar="CSV",
        help="tabulate previously written traces instead of running a solver",
    )
    return parser


def _configure_logging() -> None:
    level_name = os.environ.get("EFG_SMOOTH_LOG", "info").lower()
    level = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}.get(
        level_name, logging.INFO
    )
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[Sequence[str]] = None) -> int:
    _configure_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.summarize is not None:
        return summarize(args.summarize, figure_path=args.figure)

    missing = [name for name in ("game", "method", "iterations", "output") if getattr(args, name) is None]
    if missing:
        parser.error(f"missing required arguments: {', '.join('--' + m for m in missing)}")
    config = RunConfig(
        game=args.game,
        method=args.method,
        iterations=args.iterations,
        output_path=args.output,
        warm_fraction=args.warm_fraction,
        eval_stride=args.eval_stride,
        seed=args.seed,
        figure_path=args.figure,
    )
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
