"""Poker game trees (Kuhn, Leduc hold'em) and the sequence-form compiler.

Game trees mix three node kinds: chance nodes with outcome probabilities,
decision nodes owned by player 1 or 2 and tagged with a string infoset key,
and terminals carrying the payoff u(z) and the chance reach probability.
Payoffs are stored as player 1's loss in chips (u = -u1 = u2); the sign
convention is documented once in ``bspp`` and assumed everywhere.

``sequence_form`` checks perfect recall, numbers each player's infosets by
depth in their information tree (so the treeplex sweeps are cache-linear),
and compiles the tree into two treeplexes plus a sparse payoff matrix whose
(p1(z), p2(z)) entry aggregates chance_reach * payoff over all terminals that
share that sequence pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

import numpy as np
import scipy.sparse

from .bspp import SaddlePointProblem
from .treeplex import ProxSetup, build_treeplex

__all__ = [
    "GameError",
    "ImperfectRecallError",
    "Chance",
    "Decision",
    "Terminal",
    "GameTree",
    "SparsePayoffMatrix",
    "RecallResult",
    "build_kuhn",
    "build_leduc",
    "game_by_name",
    "GAME_NAMES",
    "iter_nodes",
    "validate_perfect_recall",
    "sequence_index_map",
    "sequence_form",
]


class GameError(ValueError):
    """Malformed game tree (bad probabilities, inconsistent infosets, ...)."""


class ImperfectRecallError(GameError):
    """The game violates perfect recall and cannot be compiled."""


class Chance:
    __slots__ = ("outcomes",)

    def __init__(self, outcomes):
        self.outcomes = outcomes  # tuple of (probability, child)


class Decision:
    __slots__ = ("player", "infoset", "actions")

    def __init__(self, player, infoset, actions):
        self.player = player  # 1 or 2
        self.infoset = infoset  # string key, unique per (player, infoset)
        self.actions = actions  # tuple of (label, child)


class Terminal:
    __slots__ = ("payoff", "chance_reach")

    def __init__(self, payoff, chance_reach):
        self.payoff = payoff  # player 1's loss in chips
        self.chance_reach = chance_reach  # product of chance probs on the root path


Node = Union[Chance, Decision, Terminal]


@dataclass(frozen=True)
class GameTree:
    name: str
    root: Node


def iter_nodes(root: Node) -> Iterator[Node]:
    """Every node of the tree, preorder."""
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Chance):
            stack.extend(child for _, child in reversed(node.outcomes))
        elif isinstance(node, Decision):
            stack.extend(child for _, child in reversed(node.actions))


# --------------------------------------------------------------------------
# Kuhn poker: three cards J < Q < K, one ante, one raise of one chip.


def build_kuhn() -> GameTree:
    deal_p = 1.0 / 6.0
    outcomes = []
    for c1 in range(3):
        for c2 in range(3):
            if c1 == c2:
                continue
            outcomes.append((deal_p, _kuhn_deal(c1, c2, deal_p)))
    return GameTree("kuhn", Chance(tuple(outcomes)))


def _kuhn_deal(c1: int, c2: int, pic: float) -> Decision:
    def showdown(pot: int) -> Terminal:
        # no ties: cards are distinct
        return Terminal(float(pot) if c2 > c1 else -float(pot), pic)

    facing_raise = Decision(
        2,
        f"P2:{c2}:r",
        (("fold", Terminal(-1.0, pic)), ("call", showdown(2))),
    )
    p1_facing_raise = Decision(
        1,
        f"P1:{c1}:kr",
        (("fold", Terminal(1.0, pic)), ("call", showdown(2))),
    )
    after_check = Decision(
        2,
        f"P2:{c2}:k",
        (("check", showdown(1)), ("raise", p1_facing_raise)),
    )
    return Decision(
        1,
        f"P1:{c1}:",
        (("check", after_check), ("raise", facing_raise)),
    )


# --------------------------------------------------------------------------
# Leduc hold'em: two copies of each rank, a private card each, one community
# card, betting rounds with raise sizes 2 then 4, at most raise + re-raise.

# per-round betting contexts: history -> (actor, legal action labels)
_CONTEXTS = {
    "": (1, ("check", "raise")),
    "k": (2, ("check", "raise")),
    "kr": (1, ("fold", "call", "raise")),
    "krr": (2, ("fold", "call")),
    "r": (2, ("fold", "call", "raise")),
    "rr": (1, ("fold", "call")),
}
_HIST_CHAR = {"check": "k", "raise": "r", "call": "c", "fold": "f"}


def build_leduc(ranks: int) -> GameTree:
    if ranks < 2:
        raise GameError(f"leduc needs at least 2 ranks, got {ranks}")
    deck = [r for r in range(ranks) for _ in range(2)]
    n = len(deck)
    deal_p = 1.0 / (n * (n - 1))
    outcomes = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            outcomes.append((deal_p, _leduc_round1(deck, i, j, deal_p)))
    return GameTree(f"leduc{ranks}", Chance(tuple(outcomes)))


def _leduc_round1(deck: list[int], i: int, j: int, pic: float) -> Decision:
    r1, r2 = deck[i], deck[j]
    remaining = [deck[k] for k in range(len(deck)) if k != i and k != j]
    comm_p = 1.0 / len(remaining)

    def key1(actor: int, hist: str) -> str:
        own = r1 if actor == 1 else r2
        return f"P{actor}:{own}:-:{hist}"

    def continue1(hist1: str, b1: int, b2: int) -> Chance:
        pic2 = pic * comm_p
        outs = []
        for comm in remaining:

            def key2(actor: int, hist: str, comm=comm) -> str:
                own = r1 if actor == 1 else r2
                return f"P{actor}:{own}:{comm}:{hist1}/{hist}"

            def showdown(hist2: str, nb1: int, nb2: int, comm=comm) -> Terminal:
                return Terminal(_showdown_loss(r1, r2, comm, nb1), pic2)

            outs.append(
                (comm_p, _betting("", b1, b2, 4, showdown, key2, pic2))
            )
        return Chance(tuple(outs))

    return _betting("", 1, 1, 2, continue1, key1, pic)


def _showdown_loss(r1: int, r2: int, comm: int, pot: int) -> float:
    # both players cannot pair the board: only one copy of its rank remains
    if r1 == comm:
        return -float(pot)
    if r2 == comm:
        return float(pot)
    if r1 > r2:
        return -float(pot)
    if r2 > r1:
        return float(pot)
    return 0.0


def _betting(hist, b1, b2, raise_size, on_continue, key_fn, pic):
    """One betting round; ``on_continue`` builds the subtree after the round ends."""
    actor, labels = _CONTEXTS[hist]
    actions = []
    for label in labels:
        nxt = hist + _HIST_CHAR[label]
        if label == "fold":
            loss = float(b1) if actor == 1 else -float(b2)
            child: Node = Terminal(loss, pic)
        elif label == "call":
            matched = max(b1, b2)
            child = on_continue(nxt, matched, matched)
        elif label == "check":
            if nxt == "kk":
                child = on_continue(nxt, b1, b2)
            else:
                child = _betting(nxt, b1, b2, raise_size, on_continue, key_fn, pic)
        else:  # raise
            target = max(b1, b2) + raise_size
            nb1, nb2 = (target, b2) if actor == 1 else (b1, target)
            child = _betting(nxt, nb1, nb2, raise_size, on_continue, key_fn, pic)
        actions.append((label, child))
    return Decision(actor, key_fn(actor, hist), tuple(actions))


GAME_NAMES = ("kuhn", "leduc3", "leduc13")


def game_by_name(name: str) -> GameTree:
    if name == "kuhn":
        return build_kuhn()
    if name.startswith("leduc"):
        try:
            ranks = int(name[len("leduc") :])
        except ValueError:
            raise GameError(f"unknown game {name!r}") from None
        return build_leduc(ranks)
    raise GameError(f"unknown game {name!r}")


# --------------------------------------------------------------------------
# Perfect recall and sequence-form compilation.


class _InfosetRecord:
    __slots__ = ("discovery", "n_actions", "own_history")

    def __init__(self, discovery, n_actions, own_history):
        self.discovery = discovery
        self.n_actions = n_actions
        self.own_history = own_history  # tuple of (infoset_key, action_index)


@dataclass
class RecallResult:
    ok: bool
    violation: Optional[str]
    infosets: dict = field(repr=False)  # player -> {key -> _InfosetRecord}


def validate_perfect_recall(game: GameTree) -> RecallResult:
    """Check that all nodes of an infoset share the owner's own-action history.

    On success the per-infoset records carry the parent function: the last
    (infoset, action) pair of the owner before reaching the infoset.
    """
    registry: dict[int, dict[str, _InfosetRecord]] = {1: {}, 2: {}}
    stack: list[tuple[Node, tuple, tuple]] = [(game.root, (), ())]
    while stack:
        node, own1, own2 = stack.pop()
        if isinstance(node, Terminal):
            continue
        if isinstance(node, Chance):
            for _, child in reversed(node.outcomes):
                stack.append((child, own1, own2))
            continue
        if node.player not in (1, 2):
            raise GameError(f"decision node with player {node.player}")
        own = own1 if node.player == 1 else own2
        table = registry[node.player]
        rec = table.get(node.infoset)
        if rec is None:
            table[node.infoset] = _InfosetRecord(len(table), len(node.actions), own)
        else:
            if rec.n_actions != len(node.actions):
                raise GameError(
                    f"infoset {node.infoset!r} has inconsistent action counts"
                )
            if rec.own_history != own:
                return RecallResult(
                    False,
                    f"player {node.player} infoset {node.infoset!r}: nodes disagree "
                    f"on the owner's past actions",
                    registry,
                )
        for idx in range(len(node.actions) - 1, -1, -1):
            child = node.actions[idx][1]
            entry = (node.infoset, idx)
            if node.player == 1:
                stack.append((child, own1 + (entry,), own2))
            else:
                stack.append((child, own1, own2 + (entry,)))
    return RecallResult(True, None, registry)


class SparsePayoffMatrix:
    """Chance-weighted payoffs aggregated by (player 1, player 2) sequence pair.

    Backed by a CSR copy for A @ y and a CSR copy of the transpose for
    A^T @ x, since the solvers need both products every iteration.  Exact
    zeros produced by aggregation are dropped.
    """

    __slots__ = ("shape", "rows", "cols", "values", "_csr", "_csr_t")

    def __init__(self, shape: tuple[int, int], rows, cols, values):
        self.shape = shape
        order = np.lexsort((cols, rows))  # row-major entry order
        self.rows = np.asarray(rows, dtype=np.int64)[order]
        self.cols = np.asarray(cols, dtype=np.int64)[order]
        self.values = np.asarray(values, dtype=np.float64)[order]
        self._csr = scipy.sparse.csr_matrix(
            (self.values, (self.rows, self.cols)), shape=shape
        )
        self._csr_t = self._csr.T.tocsr()

    @classmethod
    def from_entries(cls, shape: tuple[int, int], entries: dict) -> "SparsePayoffMatrix":
        items = [(r, c, v) for (r, c), v in entries.items() if v != 0.0]
        if items:
            rows, cols, values = zip(*items)
        else:
            rows, cols, values = (), (), ()
        return cls(shape, rows, cols, values)

    @property
    def nnz(self) -> int:
        return len(self.values)

    def matvec(self, y: np.ndarray) -> np.ndarray:
        return self._csr @ np.asarray(y, dtype=np.float64)

    def rmatvec(self, x: np.ndarray) -> np.ndarray:
        return self._csr_t @ np.asarray(x, dtype=np.float64)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.nnz else 0.0

    def todense(self) -> np.ndarray:
        return np.asarray(self._csr.todense())

    def __repr__(self) -> str:
        return f"SparsePayoffMatrix(shape={self.shape}, nnz={self.nnz})"


def _sequence_layout(recall: RecallResult):
    """Per player: treeplex specs plus the infoset-key -> first-sequence map.

    Infosets are numbered by (information-tree depth, discovery order), so a
    parent's sequences always precede its children's and the treeplex's
    bottom-up order is simply the reversed identity.
    """
    specs_by_player: dict[int, list[tuple[int, int]]] = {}
    seq_start: dict[int, dict[str, int]] = {1: {}, 2: {}}
    for player in (1, 2):
        table = recall.infosets[player]
        order = sorted(
            table.items(), key=lambda kv: (len(kv[1].own_history), kv[1].discovery)
        )
        specs = []
        next_seq = 1
        starts = seq_start[player]
        for key, rec in order:
            if rec.own_history:
                pk, pa = rec.own_history[-1]
                parent = starts[pk] + pa
            else:
                parent = 0
            starts[key] = next_seq
            specs.append((parent, rec.n_actions))
            next_seq += rec.n_actions
        specs_by_player[player] = specs
    return specs_by_player, seq_start


def sequence_index_map(game: GameTree) -> dict[tuple[int, str], int]:
    """First sequence index of every (player, infoset key) under compilation."""
    recall = validate_perfect_recall(game)
    if not recall.ok:
        raise ImperfectRecallError(recall.violation)
    _, seq_start = _sequence_layout(recall)
    return {
        (player, key): start
        for player in (1, 2)
        for key, start in seq_start[player].items()
    }


def sequence_form(game: GameTree) -> SaddlePointProblem:
    """Compile a perfect-recall game to two treeplexes and the payoff matrix.

    Terminals sharing a (player 1, player 2) sequence pair are aggregated by
    summation.
    """
    recall = validate_perfect_recall(game)
    if not recall.ok:
        raise ImperfectRecallError(recall.violation)

    specs_by_player, seq_start = _sequence_layout(recall)
    treeplexes = {p: build_treeplex(specs_by_player[p]) for p in (1, 2)}

    entries: dict[tuple[int, int], float] = {}
    start1, start2 = seq_start[1], seq_start[2]
    stack: list[tuple[Node, int, int, float]] = [(game.root, 0, 0, 1.0)]
    while stack:
        node, s1, s2, pic = stack.pop()
        if isinstance(node, Terminal):
            if abs(node.chance_reach - pic) > 1e-12 + 1e-9 * pic:
                raise GameError(
                    f"stored chance reach {node.chance_reach} differs from the "
                    f"recomputed path product {pic}"
                )
            key = (s1, s2)
            entries[key] = entries.get(key, 0.0) + pic * node.payoff
        elif isinstance(node, Chance):
            total = 0.0
            for p, child in node.outcomes:
                total += p
                stack.append((child, s1, s2, pic * p))
            if abs(total - 1.0) > 1e-12:
                raise GameError(f"chance outcome probabilities sum to {total}")
        else:
            base = start1[node.infoset] if node.player == 1 else start2[node.infoset]
            for idx, (_, child) in enumerate(node.actions):
                if node.player == 1:
                    stack.append((child, base + idx, s2, pic))
                else:
                    stack.append((child, s1, base + idx, pic))

    t1, t2 = treeplexes[1], treeplexes[2]
    A = SparsePayoffMatrix.from_entries((t1.n_sequences, t2.n_sequences), entries)
    return SaddlePointProblem(t1, t2, A, ProxSetup(t1), ProxSetup(t2))
