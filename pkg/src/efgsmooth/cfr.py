"""CFR and CFR+ on the sequence-form (matrix) representation of the game.

Both solvers keep one cumulative-regret vector per player over sequences and
work with three treeplex primitives:

    prod       behavioral ratios -> sequence-form strategy (top-down product)
    normalize  nonnegative regrets -> per-infoset distributions (regret matching)
    regret     ratios + counterfactual values -> instantaneous regrets, with
               each infoset's expected value folded into its parent sequence
               bottom-up

Counterfactual values are -A y for player 1 (who minimizes x^T A y) and
A^T x for player 2.  CFR updates both players from the same iterate and
averages iterates uniformly; CFR+ clips cumulative regrets at zero after
every update, alternates (player 2 sees the freshly updated x), and uses
linearly weighted averaging with weights 1, 2, ..., T.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .bspp import SaddlePointProblem, exploitability
from .trace import SolveTrace, TraceRecord
from .treeplex import Treeplex

__all__ = [
    "RegretState",
    "prod",
    "normalize",
    "regret",
    "cfr_solve",
    "cfr_plus_solve",
]


@dataclass
class RegretState:
    """One player's accumulators: regrets, current ratios, averaging sums."""

    regrets: np.ndarray  # cumulative regrets per sequence (payoff units)
    ratios: np.ndarray  # current per-infoset distributions
    strategy_sum: np.ndarray  # weighted sum of sequence-form iterates
    weight_sum: float

    @property
    def average(self) -> np.ndarray:
        return self.strategy_sum / self.weight_sum


def prod(t: Treeplex, z: np.ndarray) -> np.ndarray:
    """Sequence-form strategy from per-infoset ratios: x[I,a] = x[p(I)] * z[I,a]."""
    x = np.empty(t.n_sequences, dtype=np.float64)
    x[0] = 1.0
    for i in reversed(t.topo_order):  # top-down
        info = t.infosets[i]
        x[info.start : info.end] = x[info.parent_sequence] * z[info.start : info.end]
    return x


def normalize(t: Treeplex, r: np.ndarray) -> np.ndarray:
    """Per-infoset proportional distributions; uniform where all entries are zero."""
    r = np.asarray(r, dtype=np.float64)
    if np.min(r, initial=0.0) < 0.0:
        raise ValueError("normalize requires nonnegative entries")
    z = np.empty(t.n_sequences, dtype=np.float64)
    z[0] = 1.0
    for info in t.infosets:
        sl = slice(info.start, info.end)
        total = r[sl].sum()
        if total > 0.0:
            z[sl] = r[sl] / total
        else:
            z[sl] = 1.0 / (info.end - info.start)
    return z


def regret(t: Treeplex, z: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Instantaneous regrets from counterfactual action values.

    Works on a copy of ``u``: in bottom-up order each infoset's expected
    value under ``z`` is subtracted from its action values and added to the
    parent sequence's value.
    """
    u = np.array(u, dtype=np.float64, copy=True)
    r = np.zeros(t.n_sequences, dtype=np.float64)
    for i in t.topo_order:  # bottom-up
        info = t.infosets[i]
        sl = slice(info.start, info.end)
        ev = float(u[sl] @ z[sl])
        r[sl] = u[sl] - ev
        u[info.parent_sequence] += ev
    return r


def _run(
    problem: SaddlePointProblem,
    iterations: int,
    plus: bool,
    eval_stride: int,
    callback: Optional[Callable[[TraceRecord], None]],
    state_callback: Optional[Callable[[int, RegretState, RegretState], None]],
) -> tuple[np.ndarray, np.ndarray, SolveTrace]:
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    if eval_stride < 1:
        raise ValueError(f"eval_stride must be >= 1, got {eval_stride}")
    t1, t2, A = problem.tx, problem.ty, problem.A

    sx = RegretState(
        regrets=np.zeros(t1.n_sequences),
        ratios=normalize(t1, np.zeros(t1.n_sequences)),
        strategy_sum=np.zeros(t1.n_sequences),
        weight_sum=0.0,
    )
    sy = RegretState(
        regrets=np.zeros(t2.n_sequences),
        ratios=normalize(t2, np.zeros(t2.n_sequences)),
        strategy_sum=np.zeros(t2.n_sequences),
        weight_sum=0.0,
    )
    x = prod(t1, sx.ratios)
    y = prod(t2, sy.ratios)

    trace = SolveTrace()
    start = time.monotonic()
    for k in range(1, iterations + 1):
        if k > 1:
            if plus:
                sx.regrets = np.maximum(sx.regrets + regret(t1, sx.ratios, -A.matvec(y)), 0.0)
                sx.ratios = normalize(t1, sx.regrets)
                x = prod(t1, sx.ratios)
                # alternation: player 2 responds to the new x
                sy.regrets = np.maximum(sy.regrets + regret(t2, sy.ratios, A.rmatvec(x)), 0.0)
                sy.ratios = normalize(t2, sy.regrets)
                y = prod(t2, sy.ratios)
            else:
                sx.regrets += regret(t1, sx.ratios, -A.matvec(y))
                sy.regrets += regret(t2, sy.ratios, A.rmatvec(x))
                sx.ratios = normalize(t1, np.maximum(sx.regrets, 0.0))
                sy.ratios = normalize(t2, np.maximum(sy.regrets, 0.0))
                x = prod(t1, sx.ratios)
                y = prod(t2, sy.ratios)
        weight = float(k) if plus else 1.0
        sx.strategy_sum += weight * x
        sx.weight_sum += weight
        sy.strategy_sum += weight * y
        sy.weight_sum += weight
        if state_callback is not None:
            state_callback(k, sx, sy)
        if k % eval_stride == 0 or k == iterations:
            eps = exploitability(problem, sx.average, sy.average)
            rec = TraceRecord(
                iteration=k,
                epsilon=eps,
                elapsed_ms=(time.monotonic() - start) * 1e3,
            )
            trace.append(rec)
            if callback is not None:
                callback(rec)
    return sx.average, sy.average, trace


def cfr_solve(
    problem: SaddlePointProblem,
    iterations: int,
    *,
    eval_stride: int = 1,
    callback: Optional[Callable[[TraceRecord], None]] = None,
    state_callback: Optional[Callable[[int, RegretState, RegretState], None]] = None,
) -> tuple[np.ndarray, np.ndarray, SolveTrace]:
    """Simultaneous CFR with uniform strategy averaging."""
    return _run(problem, iterations, False, eval_stride, callback, state_callback)


def cfr_plus_solve(
    problem: SaddlePointProblem,
    iterations: int,
    *,
    eval_stride: int = 1,
    callback: Optional[Callable[[TraceRecord], None]] = None,
    state_callback: Optional[Callable[[int, RegretState, RegretState], None]] = None,
) -> tuple[np.ndarray, np.ndarray, SolveTrace]:
    """CFR+ with regret clipping, alternating updates, and linear averaging."""
    return _run(problem, iterations, True, eval_stride, callback, state_callback)
