"""Independent reference computations used to pin expected test values.

Everything here deliberately avoids the library's own recursions: conjugates
come from a generic exponential-cone solver, expectations from a direct walk
of the game tree, and best responses from exhaustive enumeration of pure
strategies.
"""

from __future__ import annotations

import itertools

import numpy as np

from efgsmooth.games import Chance, Decision, GameTree, Terminal
from efgsmooth.treeplex import Treeplex


def random_treeplex_specs(rng: np.random.Generator, max_sequences: int = 8):
    """Random topologically ordered (parent, action_count) specs."""
    specs = []
    n_seq = 1
    while True:
        count = int(rng.integers(1, 4))
        if n_seq + count > max_sequences:
            break
        parent = int(rng.integers(0, n_seq))
        specs.append((parent, count))
        n_seq += count
        if rng.random() < 0.25 and specs:
            break
    if not specs:
        specs = [(0, 2)]
    return specs


def random_interior_ratios(t: Treeplex, rng: np.random.Generator) -> np.ndarray:
    """Strictly positive per-infoset distributions."""
    z = np.ones(t.n_sequences)
    for info in t.infosets:
        probs = rng.dirichlet(np.ones(info.end - info.start)) + 0.05
        z[info.start : info.end] = probs / probs.sum()
    return z


def cvxpy_conjugate(t: Treeplex, coefficients: np.ndarray, xi: np.ndarray):
    """max over Q of xi^T x - sum_j c_j x_j ln x_j, by exponential-cone solve."""
    import cvxpy as cp

    x = cp.Variable(t.n_sequences)
    constraints = [x[0] == 1, x >= 0]
    for info in t.infosets:
        constraints.append(
            x[info.parent_sequence] == cp.sum(x[info.start : info.end])
        )
    # entr(x) = -x ln x, so xi^T x - sum c x ln x = xi^T x + sum c entr(x)
    objective = cp.Maximize(xi @ x + cp.sum(cp.multiply(coefficients, cp.entr(x))))
    problem = cp.Problem(objective, constraints)
    problem.solve(solver=cp.CLARABEL)
    if problem.status not in ("optimal", "optimal_inaccurate"):
        raise RuntimeError(f"oracle solve failed: {problem.status}")
    return float(problem.value), np.asarray(x.value, dtype=np.float64)


def dilated_entropy_reference(t: Treeplex, w: np.ndarray, x: np.ndarray) -> float:
    """The per-infoset conditional-entropy form: sum_I w_I x_p(I) * KL-ish term.

    Only valid for strictly positive x; used to cross-check the coefficient
    form of the prox on interior points.
    """
    total = 0.0
    for info in t.infosets:
        xp = x[info.parent_sequence]
        ratios = x[info.start : info.end] / xp
        total += float(w[info.id]) * xp * float(np.sum(ratios * np.log(ratios)))
    return total


def first_order_term(t: Treeplex, w: np.ndarray, x: np.ndarray) -> float:
    """sum_I w_I x_p(I) ln |A(I)|; the term the base prox drops."""
    total = 0.0
    for info in t.infosets:
        total += float(w[info.id]) * x[info.parent_sequence] * np.log(info.end - info.start)
    return total


def enumerate_pure_vectors(t: Treeplex):
    """Every deterministic sequence-form strategy (top-down one-hot products)."""
    counts = [info.end - info.start for info in t.infosets]
    for choice in itertools.product(*(range(c) for c in counts)):
        x = np.zeros(t.n_sequences)
        x[0] = 1.0
        for i in reversed(t.topo_order):
            info = t.infosets[i]
            x[info.start + choice[info.id]] = x[info.parent_sequence]
        yield x


def behavioral_expectation(
    game: GameTree,
    probs: dict,
) -> float:
    """Expected loss of player 1 by direct tree walk.

    ``probs[(player, infoset_key)]`` is the action distribution at that
    infoset.  This never touches sequence indices or the payoff matrix.
    """
    total = 0.0
    stack = [(game.root, 1.0, 1.0, 1.0)]
    while stack:
        node, p1, p2, pc = stack.pop()
        if isinstance(node, Terminal):
            total += p1 * p2 * pc * node.payoff
        elif isinstance(node, Chance):
            for p, child in node.outcomes:
                stack.append((child, p1, p2, pc * p))
        else:
            dist = probs[(node.player, node.infoset)]
            for idx, (_, child) in enumerate(node.actions):
                if node.player == 1:
                    stack.append((child, p1 * dist[idx], p2, pc))
                else:
                    stack.append((child, p1, p2 * dist[idx], pc))
    return total


def terminal_profile(game: GameTree, index_map: dict):
    """(p1 sequence, p2 sequence, chance_reach * payoff) per terminal.

    ``index_map[(player, infoset_key)]`` is the first sequence index of that
    infoset's actions; used for the vectorized expectation on big games.
    """
    rows, cols, vals = [], [], []
    stack = [(game.root, 0, 0)]
    while stack:
        node, s1, s2 = stack.pop()
        if isinstance(node, Terminal):
            rows.append(s1)
            cols.append(s2)
            vals.append(node.chance_reach * node.payoff)
        elif isinstance(node, Chance):
            for _, child in node.outcomes:
                stack.append((child, s1, s2))
        else:
            base = index_map[(node.player, node.infoset)]
            for idx, (_, child) in enumerate(node.actions):
                if node.player == 1:
                    stack.append((child, base + idx, s2))
                else:
                    stack.append((child, s1, base + idx))
    return np.array(rows), np.array(cols), np.array(vals)
