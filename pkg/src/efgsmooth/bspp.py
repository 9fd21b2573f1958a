"""Bilinear saddle-point problems min_x max_y x^T A y over two treeplexes.

Payoff sign convention (fixed here once for the whole package): A holds the
chance-weighted terminal losses of player 1, so player 1 minimizes x^T A y
and player 2 maximizes it.  The error of a strategy pair is

    eps(x, y) = max_y x^T A y  -  min_x x^T A y',

zero exactly at a Nash equilibrium.

``smoothed_f`` and ``smoothed_phi`` are the entropy-smoothed envelopes used
by the excessive gap solver.  Each prox is normalized to minimum zero before
smoothing (the base dilated-entropy prox is nonpositive on Q, so this just
subtracts mu times its range constant); with that normalization the excessive
gap condition f_mu2(x) <= phi_mu1(y) certifies eps <= mu1*D1 + mu2*D2.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .treeplex import ProxSetup, Treeplex, contains, maximize_linear

__all__ = [
    "SaddlePointProblem",
    "MembershipError",
    "matrix_norm",
    "best_response",
    "exploitability",
    "game_value",
    "smoothed_f",
    "smoothed_phi",
    "with_centers",
]


class MembershipError(ValueError):
    """A strategy vector is not in its treeplex within tolerance."""


@dataclass(frozen=True)
class SaddlePointProblem:
    tx: Treeplex
    ty: Treeplex
    A: "SparsePayoffMatrix"  # noqa: F821 - constructed by games.sequence_form
    prox_x: ProxSetup
    prox_y: ProxSetup

    def __post_init__(self):
        if self.A.shape != (self.tx.n_sequences, self.ty.n_sequences):
            raise ValueError(
                f"matrix shape {self.A.shape} does not match treeplex sizes "
                f"({self.tx.n_sequences}, {self.ty.n_sequences})"
            )


def matrix_norm(A) -> float:
    """Operator norm for L1-norm balls: the largest absolute entry."""
    return A.max_abs()


def _require_member(t: Treeplex, v: np.ndarray, tol: float, who: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if not contains(t, v, tol):
        raise MembershipError(f"{who} is not in its treeplex (tol {tol:g})")
    return v


def best_response(
    problem: SaddlePointProblem,
    player: int,
    opponent_strategy: np.ndarray,
    tol: float = 1e-8,
) -> tuple[float, np.ndarray]:
    """Exact pure best response of ``player`` against a fixed opponent.

    Returns ``(value, strategy)`` where value is max_y x^T A y for player 2
    and min_x x^T A y for player 1.  Ties go to the lowest action index.
    """
    if player == 1:
        y = _require_member(problem.ty, opponent_strategy, tol, "opponent strategy")
        neg_val, x = maximize_linear(problem.tx, -problem.A.matvec(y))
        return -neg_val, x
    if player == 2:
        x = _require_member(problem.tx, opponent_strategy, tol, "opponent strategy")
        return maximize_linear(problem.ty, problem.A.rmatvec(x))
    raise ValueError(f"player must be 1 or 2, got {player}")


def exploitability(
    problem: SaddlePointProblem, x: np.ndarray, y: np.ndarray, tol: float = 1e-8
) -> float:
    """eps(x, y) = best response value against x minus the one against y."""
    f_val, _ = best_response(problem, 2, x, tol)
    phi_val, _ = best_response(problem, 1, y, tol)
    eps = f_val - phi_val
    if eps < -1e-10:
        raise RuntimeError(f"negative exploitability {eps}: internal error")
    return max(eps, 0.0)


def game_value(problem: SaddlePointProblem, x: np.ndarray, y: np.ndarray) -> float:
    """x^T A y, the expected loss of player 1 under the pair (x, y)."""
    return float(np.asarray(x, dtype=np.float64) @ problem.A.matvec(y))


def smoothed_f(problem: SaddlePointProblem, x: np.ndarray, mu2: float) -> float:
    """f_mu2(x) = max_y { x^T A y - mu2 * p2(y) } with p2 the min-zero prox."""
    if mu2 <= 0.0:
        raise ValueError(f"mu2 must be positive, got {mu2}")
    x = _require_member(problem.tx, x, 1e-8, "x")
    val, _ = problem.prox_y.conjugate(problem.A.rmatvec(x) / mu2)
    return mu2 * (val - problem.prox_y.min_offset)


def smoothed_phi(problem: SaddlePointProblem, y: np.ndarray, mu1: float) -> float:
    """phi_mu1(y) = min_x { x^T A y + mu1 * p1(x) } with p1 the min-zero prox."""
    if mu1 <= 0.0:
        raise ValueError(f"mu1 must be positive, got {mu1}")
    y = _require_member(problem.ty, y, 1e-8, "y")
    val, _ = problem.prox_x.conjugate(-problem.A.matvec(y) / mu1)
    return -mu1 * (val - problem.prox_x.min_offset)


def with_centers(
    problem: SaddlePointProblem, x_center: np.ndarray, y_center: np.ndarray
) -> SaddlePointProblem:
    """The same problem with both prox-functions re-centered at interior points."""
    return replace(
        problem,
        prox_x=ProxSetup(problem.tx, problem.prox_x.weights, center=x_center),
        prox_y=ProxSetup(problem.ty, problem.prox_y.weights, center=y_center),
    )
