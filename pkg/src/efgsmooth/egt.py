"""Excessive gap technique: initialization, shrinking steps, and drivers.

The solver maintains (x, y, mu1, mu2) with the excessive gap condition
f_mu2(x) <= phi_mu1(y), which certifies eps(x, y) <= mu1*D1 + mu2*D2.  One
shrinking step multiplies one smoothing parameter by (1 - tau); the step is
guaranteed to preserve the condition whenever tau^2/(1-tau) <= sigma1 sigma2
mu1 mu2 / ||A||^2.

Two drivers are provided.  The guaranteed driver alternates sides and always
uses the largest admissible tau, so the condition holds by construction and
eps decays at O(1/k).  The heuristic driver starts from a tiny mu grown by
20% until the condition holds, always shrinks the larger of mu1/mu2, and
keeps one global tau that is halved whenever a step fails the condition
check; it is far faster in practice.

``solve_with_centering`` runs a warm-start method (heuristic EGT or CFR+) on
a fraction of the budget, clamps its solution strictly inside the polytopes,
and finishes with heuristic EGT whose prox-functions are re-centered so that
their minima sit at the warm-start solution.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .bspp import (
    SaddlePointProblem,
    exploitability,
    matrix_norm,
    smoothed_f,
    smoothed_phi,
    with_centers,
)
from .trace import SolveTrace, TraceRecord
from .treeplex import Treeplex, TreeplexError, contains, uniform_point

__all__ = [
    "EgtState",
    "TauUnderflowError",
    "egt_init",
    "egc_gap",
    "egc_holds",
    "egt_shrink_mu1",
    "egt_shrink_mu2",
    "egt_solve_heuristic",
    "egt_solve_guaranteed",
    "make_interior",
    "solve_with_centering",
]

EGC_REL_TOL = 1e-9
TAU_MIN = 1e-12


class TauUnderflowError(RuntimeError):
    """The step size backoff fell below TAU_MIN: numerical stagnation."""


@dataclass(frozen=True)
class EgtState:
    x: np.ndarray
    y: np.ndarray
    mu1: float
    mu2: float
    tau: float
    iteration: int


def egt_init(problem: SaddlePointProblem, mu1: float, mu2: float) -> EgtState:
    """Initialization step; the output satisfies the excessive gap condition
    whenever mu1*mu2 >= ||A||^2 / (sigma1*sigma2) (not asserted here: the
    heuristic driver deliberately probes smaller mu values).
    """
    if mu1 <= 0.0 or mu2 <= 0.0:
        raise ValueError(f"smoothing parameters must be positive, got {mu1}, {mu2}")
    px, py, A = problem.prox_x, problem.prox_y, problem.A
    _, xbar = px.conjugate(np.zeros(problem.tx.n_sequences))
    _, y0 = py.conjugate(A.rmatvec(xbar) / mu2)
    _, x0 = px.conjugate(px.gradient_unchecked(xbar) - A.matvec(y0) / mu1)
    return EgtState(x=x0, y=y0, mu1=mu1, mu2=mu2, tau=0.5, iteration=0)


def egc_gap(problem: SaddlePointProblem, state: EgtState) -> float:
    """phi_mu1(y) - f_mu2(x); nonnegative iff the excessive gap condition holds."""
    return smoothed_phi(problem, state.y, state.mu1) - smoothed_f(
        problem, state.x, state.mu2
    )


def egc_holds(
    problem: SaddlePointProblem, state: EgtState, tol: float = EGC_REL_TOL
) -> bool:
    """Excessive gap condition with a relative slack of ``tol``."""
    f_val = smoothed_f(problem, state.x, state.mu2)
    phi_val = smoothed_phi(problem, state.y, state.mu1)
    return f_val <= phi_val + tol * (1.0 + abs(f_val))


def _check_tau(tau: float) -> None:
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must be in (0, 1), got {tau}")


def egt_shrink_mu1(problem: SaddlePointProblem, state: EgtState) -> EgtState:
    """One shrinking step on mu1: returns the new iterates with mu1*(1-tau)."""
    _check_tau(state.tau)
    tau, mu1, mu2 = state.tau, state.mu1, state.mu2
    px, py, A = problem.prox_x, problem.prox_y, problem.A
    _, xbar = px.conjugate(-A.matvec(state.y) / mu1)
    _, ybar = py.conjugate(A.rmatvec((1.0 - tau) * state.x + tau * xbar) / mu2)
    y_next = (1.0 - tau) * state.y + tau * ybar
    _, xhat = px.conjugate(
        px.gradient_unchecked(xbar) - (tau / ((1.0 - tau) * mu1)) * A.matvec(ybar)
    )
    x_next = (1.0 - tau) * state.x + tau * xhat
    return replace(
        state,
        x=x_next,
        y=y_next,
        mu1=(1.0 - tau) * mu1,
        iteration=state.iteration + 1,
    )


def egt_shrink_mu2(problem: SaddlePointProblem, state: EgtState) -> EgtState:
    """The mu2 mirror of ``egt_shrink_mu1`` (signs flipped for the max player)."""
    _check_tau(state.tau)
    tau, mu1, mu2 = state.tau, state.mu1, state.mu2
    px, py, A = problem.prox_x, problem.prox_y, problem.A
    _, ybar = py.conjugate(A.rmatvec(state.x) / mu2)
    _, xbar = px.conjugate(-A.matvec((1.0 - tau) * state.y + tau * ybar) / mu1)
    x_next = (1.0 - tau) * state.x + tau * xbar
    _, yhat = py.conjugate(
        py.gradient_unchecked(ybar) + (tau / ((1.0 - tau) * mu2)) * A.rmatvec(xbar)
    )
    y_next = (1.0 - tau) * state.y + tau * yhat
    return replace(
        state,
        x=x_next,
        y=y_next,
        mu2=(1.0 - tau) * mu2,
        iteration=state.iteration + 1,
    )


def _grown_init(
    problem: SaddlePointProblem, mu_init: float, growth: float
) -> EgtState:
    mu = mu_init
    for _ in range(10_000):
        state = egt_init(problem, mu, mu)
        if egc_holds(problem, state):
            return state
        mu *= growth
    raise RuntimeError("initialization never satisfied the excessive gap condition")


def egt_solve_heuristic(
    problem: SaddlePointProblem,
    iterations: int,
    *,
    callback: Optional[Callable[[TraceRecord], None]] = None,
    eval_stride: int = 1,
    state_callback: Optional[Callable[[EgtState], None]] = None,
    mu_init: float = 1e-6,
) -> tuple[np.ndarray, np.ndarray, SolveTrace]:
    """Heuristic EGT driver.

    Args:
        problem: the saddle-point problem to solve.
        iterations: number of accepted shrinking steps.
        callback: called with each appended trace record (used for streaming).
        eval_stride: evaluate exploitability every this many iterations (the
            final iteration is always recorded).
        state_callback: called with the accepted state every iteration.
        mu_init: starting value for the grown initialization.

    Returns:
        (x, y, trace) with the final iterates.

    Raises:
        TauUnderflowError: the global step size was halved below 1e-12.
    """
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    if eval_stride < 1:
        raise ValueError(f"eval_stride must be >= 1, got {eval_stride}")
    state = _grown_init(problem, mu_init, 1.2)
    state = replace(state, tau=0.5)
    trace = SolveTrace()
    start = time.monotonic()
    for k in range(1, iterations + 1):
        shrink = egt_shrink_mu1 if state.mu1 > state.mu2 else egt_shrink_mu2
        while True:
            candidate = shrink(problem, state)
            if egc_holds(problem, candidate):
                state = candidate  # the accepted tau is kept for the next step
                break
            new_tau = 0.5 * state.tau
            if new_tau < TAU_MIN:
                raise TauUnderflowError(
                    f"step size fell below {TAU_MIN:g} at iteration {k} "
                    f"(mu1={state.mu1:g}, mu2={state.mu2:g})"
                )
            state = replace(state, tau=new_tau)
        if state_callback is not None:
            state_callback(state)
        if k % eval_stride == 0 or k == iterations:
            eps = exploitability(problem, state.x, state.y)
            rec = TraceRecord(
                iteration=k,
                epsilon=eps,
                mu1=state.mu1,
                mu2=state.mu2,
                tau=state.tau,
                elapsed_ms=(time.monotonic() - start) * 1e3,
            )
            trace.append(rec)
            if callback is not None:
                callback(rec)
    return state.x, state.y, trace


def egt_solve_guaranteed(
    problem: SaddlePointProblem,
    iterations: int,
    *,
    callback: Optional[Callable[[TraceRecord], None]] = None,
    eval_stride: int = 1,
    state_callback: Optional[Callable[[EgtState], None]] = None,
) -> tuple[np.ndarray, np.ndarray, SolveTrace]:
    """Guarantee-preserving EGT driver.

    Starts from mu1 = mu2 = ||A|| / sqrt(sigma1 sigma2), alternates the side
    being shrunk, and at each step uses the largest tau allowed by the
    step-size requirement: with c = sigma1 sigma2 mu1 mu2 / ||A||^2 the bound
    tau^2/(1-tau) <= c is tight at tau = (-c + sqrt(c^2 + 4c)) / 2.  The
    excessive gap condition is asserted after every step.
    """
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    if eval_stride < 1:
        raise ValueError(f"eval_stride must be >= 1, got {eval_stride}")
    norm_a = matrix_norm(problem.A)
    sig = problem.prox_x.sigma * problem.prox_y.sigma
    mu0 = norm_a / math.sqrt(sig) if norm_a > 0.0 else 1.0
    state = egt_init(problem, mu0, mu0)
    if not egc_holds(problem, state):
        raise RuntimeError("excessive gap condition failed after initialization")
    trace = SolveTrace()
    start = time.monotonic()
    shrink_mu1 = True
    for k in range(1, iterations + 1):
        if norm_a > 0.0:
            c = sig * state.mu1 * state.mu2 / (norm_a * norm_a)
            tau = (-c + math.sqrt(c * c + 4.0 * c)) / 2.0
            tau = min(tau, 1.0 - 1e-9)
        else:
            tau = 0.5  # A = 0: any step keeps the condition
        state = replace(state, tau=tau)
        state = (egt_shrink_mu1 if shrink_mu1 else egt_shrink_mu2)(problem, state)
        shrink_mu1 = not shrink_mu1
        if not egc_holds(problem, state):
            raise RuntimeError(
                f"excessive gap condition lost at iteration {k} despite an "
                f"admissible step size"
            )
        if state_callback is not None:
            state_callback(state)
        if k % eval_stride == 0 or k == iterations:
            eps = exploitability(problem, state.x, state.y)
            rec = TraceRecord(
                iteration=k,
                epsilon=eps,
                mu1=state.mu1,
                mu2=state.mu2,
                tau=state.tau,
                elapsed_ms=(time.monotonic() - start) * 1e3,
            )
            trace.append(rec)
            if callback is not None:
                callback(rec)
    return state.x, state.y, trace


def make_interior(x: np.ndarray, t: Treeplex, delta: float = 1e-6) -> np.ndarray:
    """Clamp a feasible point strictly inside Q by mixing with the uniform point.

    delta = 0 is allowed only when x is already strictly positive.
    """
    x = np.asarray(x, dtype=np.float64)
    if not contains(t, x, tol=1e-8):
        raise TreeplexError("point to clamp is not in the treeplex")
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"delta must be in [0, 1), got {delta}")
    if delta == 0.0:
        if np.min(x) <= 0.0:
            raise ValueError("delta = 0 requires a strictly interior point")
        return x.copy()
    return (1.0 - delta) * x + delta * uniform_point(t)


def solve_with_centering(
    problem: SaddlePointProblem,
    iterations: int,
    warmstart: str = "cfr_plus",
    warm_fraction: float = 0.10,
    *,
    callback: Optional[Callable[[TraceRecord], None]] = None,
    eval_stride: int = 1,
    interior_delta: float = 1e-6,
) -> tuple[np.ndarray, np.ndarray, SolveTrace]:
    """Warm start, then heuristic EGT with prox-functions centered at the warm solution.

    Phase 1 runs ``warmstart`` ("egt" or "cfr_plus") for floor(warm_fraction *
    iterations) steps.  Its solution pair is clamped strictly inside the
    polytopes and becomes the center of both players' prox-functions for
    phase 2, which runs the heuristic EGT driver for the remaining budget.
    The combined trace numbers iterations globally and marks phase-1 records
    with phase="warm".
    """
    if not 0.0 < warm_fraction < 1.0:
        raise ValueError(f"warm_fraction must be in (0, 1), got {warm_fraction}")
    warm_n = int(warm_fraction * iterations)
    main_n = iterations - warm_n
    if warm_n < 1 or main_n < 1:
        raise ValueError(
            f"budget {iterations} with warm_fraction {warm_fraction} leaves an "
            f"empty phase ({warm_n} warm, {main_n} main)"
        )

    combined = SolveTrace()

    def relabel(rec: TraceRecord, phase: str, it_offset: int, ms_offset: float):
        out = replace(
            rec,
            phase=phase,
            iteration=rec.iteration + it_offset,
            elapsed_ms=rec.elapsed_ms + ms_offset,
        )
        combined.append(out)
        if callback is not None:
            callback(out)

    if warmstart == "egt":
        xw, yw, warm_trace = egt_solve_heuristic(
            problem,
            warm_n,
            eval_stride=eval_stride,
            callback=lambda rec: relabel(rec, "warm", 0, 0.0),
        )
    elif warmstart == "cfr_plus":
        from .cfr import cfr_plus_solve

        xw, yw, warm_trace = cfr_plus_solve(
            problem,
            warm_n,
            eval_stride=eval_stride,
            callback=lambda rec: relabel(rec, "warm", 0, 0.0),
        )
    else:
        raise ValueError(f"warmstart must be 'egt' or 'cfr_plus', got {warmstart!r}")

    warm_ms = warm_trace.final.elapsed_ms
    x_center = make_interior(xw, problem.tx, interior_delta)
    y_center = make_interior(yw, problem.ty, interior_delta)
    centered = with_centers(problem, x_center, y_center)

    x, y, _ = egt_solve_heuristic(
        centered,
        main_n,
        eval_stride=eval_stride,
        callback=lambda rec: relabel(rec, "main", warm_n, warm_ms),
    )
    return x, y, combined
