"""Sequence-form strategy polytopes and the dilated-entropy prox-function.

A treeplex is the feasible set Q of one player's sequence-form strategies:
vectors x indexed by the sequences {empty} + {(infoset, action)}, constrained
by x[0] = 1 and, for every infoset I, x[parent(I)] = sum of x over I's
actions.  The infosets themselves form a tree rooted at the empty sequence.

On top of the structure this module provides the weighted negative-entropy
prox-function

    d(x) = x_0 ln x_0 + sum_{(I,a)} c_{I,a} x_{I,a} ln x_{I,a},
    c_{I,a} = w_I - sum of w over child infosets hanging below (I,a),

with the integer weights w_I = 1 + max_a (sum of child weights under a).
d is (1/M_Q)-strongly convex in the L1 norm, where M_Q = max ||x||_1 over Q,
and its conjugate and conjugate gradient are computed in O(|sequences|) by a
bottom-up softmax sweep followed by a top-down product sweep.

``ProxSetup`` bundles a treeplex with either this base prox or its
Bregman-centered variant d(x) - d(x') - grad d(x')^T (x - x'), whose minimum
sits at the chosen interior point x'.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Optional, Sequence

import numpy as np

__all__ = [
    "TreeplexError",
    "Infoset",
    "Treeplex",
    "build_treeplex",
    "compute_weights",
    "max_l1_norm",
    "prox_coefficients",
    "uniform_point",
    "contains",
    "maximize_linear",
    "ProxSetup",
]


class TreeplexError(ValueError):
    """Raised for malformed treeplex specifications or infeasible inputs."""


class Infoset(NamedTuple):
    id: int
    parent_sequence: int
    start: int  # first sequence index of this infoset's actions
    end: int  # one past the last action sequence index


class Treeplex:
    """Immutable index structure of one player's sequence-form polytope.

    Sequence 0 is the empty sequence; each infoset owns the contiguous range
    ``start:end`` of sequence indices.  ``topo_order`` lists infoset ids
    bottom-up (every infoset after all of its child infosets); iterate it
    reversed for top-down sweeps.  When the input specs are already ordered
    parents-first, ``topo_order`` is simply the identity reversed, which keeps
    both sweeps cache-linear.
    """

    __slots__ = (
        "n_sequences",
        "infosets",
        "topo_order",
        "children_of_sequence",
        "root_infosets",
        "_depth",
    )

    def __init__(
        self,
        n_sequences: int,
        infosets: tuple[Infoset, ...],
        topo_order: tuple[int, ...],
        children_of_sequence: tuple[tuple[int, ...], ...],
        depth: tuple[int, ...],
    ):
        self.n_sequences = n_sequences
        self.infosets = infosets
        self.topo_order = topo_order
        self.children_of_sequence = children_of_sequence
        self.root_infosets = tuple(i.id for i in infosets if i.parent_sequence == 0)
        self._depth = depth

    @property
    def n_infosets(self) -> int:
        return len(self.infosets)

    def __repr__(self) -> str:
        return f"Treeplex(n_sequences={self.n_sequences}, n_infosets={self.n_infosets})"


def build_treeplex(infoset_specs: Sequence[tuple[int, int]]) -> Treeplex:
    """Build a treeplex from ``(parent_sequence, action_count)`` records.

    Sequence indices are assigned in input order: the empty sequence is 0 and
    infoset i's actions occupy the next ``action_count`` slots.  Parent
    references may point at any sequence slot as long as the implied infoset
    graph is a tree rooted at the empty sequence.
    """
    n_infosets = len(infoset_specs)
    starts = np.empty(n_infosets, dtype=np.int64)
    ends = np.empty(n_infosets, dtype=np.int64)
    next_seq = 1
    for i, (_, count) in enumerate(infoset_specs):
        if count < 1:
            raise TreeplexError(f"infoset {i}: action count must be >= 1, got {count}")
        starts[i] = next_seq
        next_seq += count
        ends[i] = next_seq
    n_sequences = next_seq

    # owner of each non-empty sequence slot
    owner = np.full(n_sequences, -1, dtype=np.int64)
    for i in range(n_infosets):
        owner[starts[i] : ends[i]] = i

    parent_infoset = np.empty(n_infosets, dtype=np.int64)
    for i, (parent, _) in enumerate(infoset_specs):
        if not 0 <= parent < n_sequences:
            raise TreeplexError(f"infoset {i}: parent sequence {parent} out of range")
        parent_infoset[i] = owner[parent]

    # depth by walking parent chains; an in-progress mark detects cycles
    depth = np.full(n_infosets, -1, dtype=np.int64)
    for i in range(n_infosets):
        if depth[i] >= 0:
            continue
        chain = []
        j = i
        while j >= 0 and depth[j] < 0:
            chain.append(j)
            depth[j] = -2  # in progress
            j = parent_infoset[j]
        if j >= 0 and depth[j] == -2:
            raise TreeplexError(f"cycle detected through infoset {j}")
        base = 0 if j < 0 else depth[j] + 1
        for j in reversed(chain):
            depth[j] = base
            base += 1

    infosets = tuple(
        Infoset(i, int(infoset_specs[i][0]), int(starts[i]), int(ends[i]))
        for i in range(n_infosets)
    )
    children: list[list[int]] = [[] for _ in range(n_sequences)]
    for i, (parent, _) in enumerate(infoset_specs):
        children[parent].append(i)
    topo_order = tuple(sorted(range(n_infosets), key=lambda i: (-depth[i], -i)))
    return Treeplex(
        n_sequences,
        infosets,
        topo_order,
        tuple(tuple(c) for c in children),
        tuple(int(d) for d in depth),
    )


def compute_weights(t: Treeplex) -> np.ndarray:
    """Integer weights w_I = 1 + max over actions of the child-weight sum."""
    w = np.ones(t.n_infosets, dtype=np.int64)
    children = t.children_of_sequence
    for i in t.topo_order:
        info = t.infosets[i]
        best = 0
        for seq in range(info.start, info.end):
            s = 0
            for child in children[seq]:
                s += w[child]
            if s > best:
                best = s
        w[i] = 1 + best
    return w


def max_l1_norm(t: Treeplex, w: np.ndarray) -> float:
    """M_Q = 1 + sum of w over root infosets = max ||x||_1 over Q."""
    return 1.0 + float(sum(int(w[i]) for i in t.root_infosets))


def prox_coefficients(t: Treeplex, w: np.ndarray) -> np.ndarray:
    """Per-sequence coefficients of the prox terms x ln x; all are >= 1."""
    c = np.ones(t.n_sequences, dtype=np.float64)
    children = t.children_of_sequence
    for info in t.infosets:
        wi = float(w[info.id])
        for seq in range(info.start, info.end):
            child_sum = 0.0
            for child in children[seq]:
                child_sum += w[child]
            c[seq] = wi - child_sum
    return c


def uniform_point(t: Treeplex) -> np.ndarray:
    """The uniform behavioral strategy in sequence form; strictly interior."""
    x = np.empty(t.n_sequences, dtype=np.float64)
    x[0] = 1.0
    for i in reversed(t.topo_order):  # top-down
        info = t.infosets[i]
        x[info.start : info.end] = x[info.parent_sequence] / (info.end - info.start)
    return x


def contains(t: Treeplex, x: np.ndarray, tol: float = 1e-9) -> bool:
    """Membership test: nonnegative, x[0] = 1, and flow conservation."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (t.n_sequences,):
        return False
    if np.min(x, initial=0.0) < -tol or abs(x[0] - 1.0) > tol:
        return False
    for info in t.infosets:
        if abs(x[info.parent_sequence] - x[info.start : info.end].sum()) > tol:
            return False
    return True


def maximize_linear(t: Treeplex, g: np.ndarray) -> tuple[float, np.ndarray]:
    """Maximize g^T x over the treeplex; returns (optimum, pure maximizer).

    One bottom-up pass picks the best action per infoset (ties to the lowest
    sequence index) and folds the value into the parent sequence; one
    top-down pass emits the corresponding 0/1 sequence-form strategy.
    """
    v = np.asarray(g, dtype=np.float64).copy()
    if v.shape != (t.n_sequences,):
        raise ValueError(f"objective has length {v.shape}, expected {t.n_sequences}")
    choice = np.empty(t.n_infosets, dtype=np.int64)
    for i in t.topo_order:
        info = t.infosets[i]
        j = int(np.argmax(v[info.start : info.end]))
        choice[i] = info.start + j
        v[info.parent_sequence] += v[info.start + j]
    x = np.zeros(t.n_sequences, dtype=np.float64)
    x[0] = 1.0
    for i in reversed(t.topo_order):
        info = t.infosets[i]
        x[choice[i]] = x[info.parent_sequence]
    return float(v[0]), x


def _xlogx(x: np.ndarray) -> np.ndarray:
    # x ln x with the 0 ln 0 := 0 convention
    out = np.zeros_like(x)
    mask = x > 0.0
    out[mask] = x[mask] * np.log(x[mask])
    return out


class ProxSetup:
    """A prox-function over a treeplex: base dilated entropy or its centered form.

    The base prox d is <= 0 on Q with maximum 0 at every pure strategy, so its
    range constant is D = d*(0) = -min d.  The centered prox is the Bregman
    divergence of d around ``center`` and is >= 0 with minimum 0 at the center;
    its range constant D = max over Q is computed exactly from the Fenchel
    identity plus one linear minimization over Q.

    ``min_offset`` is the shift that lifts the prox to min-zero (d*(0) for the
    base prox, 0 for a centered one); smoothed objectives in ``bspp`` subtract
    it so that the excessive gap condition and error bound hold as stated.
    """

    __slots__ = (
        "treeplex",
        "weights",
        "coefficients",
        "center",
        "center_gradient",
        "center_value",
        "sigma",
        "D",
        "min_offset",
        "_w_float",
    )

    def __init__(
        self,
        treeplex: Treeplex,
        weights: Optional[np.ndarray] = None,
        center: Optional[np.ndarray] = None,
    ):
        self.treeplex = treeplex
        self.weights = compute_weights(treeplex) if weights is None else weights
        self.coefficients = prox_coefficients(treeplex, self.weights)
        self._w_float = self.weights.astype(np.float64)
        self.sigma = 1.0 / max_l1_norm(treeplex, self.weights)

        if center is None:
            self.center = None
            self.center_gradient = None
            self.center_value = 0.0
            self.D, _ = self._base_conjugate(np.zeros(treeplex.n_sequences))
            self.min_offset = self.D
        else:
            center = np.asarray(center, dtype=np.float64).copy()
            if not contains(treeplex, center, tol=1e-9):
                raise TreeplexError("center is not in the treeplex (tol 1e-9)")
            if np.min(center) <= 0.0:
                raise TreeplexError("center must be strictly positive on all sequences")
            self.center = center
            self.center_gradient = self._base_gradient(center)
            self.center_value = self._base_value(center)
            # max of the Bregman divergence over Q sits at a vertex where d = 0:
            #   max = [g'^T x' - d(x')] - min_{x in Q} g'^T x
            affine = float(self.center_gradient @ center) - self.center_value
            neg_min, _ = maximize_linear(treeplex, -self.center_gradient)
            self.D = affine + neg_min
            self.min_offset = 0.0

    @property
    def is_centered(self) -> bool:
        return self.center is not None

    # base prox pieces ----------------------------------------------------

    def _base_value(self, x: np.ndarray) -> float:
        return float(self.coefficients @ _xlogx(x))

    def _base_gradient(self, x: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return self.coefficients * (1.0 + np.log(x))

    def _base_conjugate(self, xi: np.ndarray) -> tuple[float, np.ndarray]:
        # Bottom-up: per infoset, a max-shifted log-sum-exp at temperature w_I
        # folds the infoset's optimum into its parent sequence and records the
        # local softmax ratios.  Top-down: ratios multiply into realization form.
        t = self.treeplex
        acc = np.asarray(xi, dtype=np.float64).copy()
        z = np.empty(t.n_sequences, dtype=np.float64)
        z[0] = 1.0
        for i in t.topo_order:
            info = t.infosets[i]
            wi = self._w_float[i]
            s = acc[info.start : info.end] / wi
            m = s.max()
            if m == -np.inf:
                # the whole subtree carries zero mass; split ratios evenly
                z[info.start : info.end] = 1.0 / (info.end - info.start)
                acc[info.parent_sequence] = -np.inf
                continue
            e = np.exp(s - m)
            total = e.sum()
            acc[info.parent_sequence] += wi * (m + math.log(total))
            z[info.start : info.end] = e / total
        value = float(acc[0])
        for i in reversed(t.topo_order):
            info = t.infosets[i]
            z[info.start : info.end] *= z[info.parent_sequence]
        return value, z

    # public prox interface -----------------------------------------------

    def value(self, x: np.ndarray) -> float:
        """Prox value at x in Q; the centered form is the Bregman divergence."""
        x = np.asarray(x, dtype=np.float64)
        if not contains(self.treeplex, x, tol=1e-9):
            raise TreeplexError("point is not in the treeplex (tol 1e-9)")
        base = self._base_value(x)
        if self.center is None:
            return base
        return base - self.center_value - float(self.center_gradient @ (x - self.center))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        """Prox gradient at a strictly positive point of Q."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.treeplex.n_sequences,):
            raise ValueError("point has wrong length")
        if np.min(x) <= 1e-300:
            raise TreeplexError("gradient undefined: nonpositive or underflowed entry")
        g = self._base_gradient(x)
        if self.center is not None:
            g -= self.center_gradient
        return g

    def gradient_unchecked(self, x: np.ndarray) -> np.ndarray:
        """Gradient without the positivity guard; zero entries map to -inf.

        Solver steps compose this with ``conjugate``, where -inf logits are
        well defined (they carry zero softmax mass).
        """
        g = self._base_gradient(np.asarray(x, dtype=np.float64))
        if self.center is not None:
            g = g - self.center_gradient
        return g

    def conjugate(self, xi: np.ndarray) -> tuple[float, np.ndarray]:
        """Conjugate value and its gradient (the unique maximizer in ri Q).

        For a centered setup the base conjugate is evaluated at the shifted
        argument xi + grad d(center) and the value is corrected by the affine
        part of the centering, so the cost stays O(|sequences|).
        """
        xi = np.asarray(xi, dtype=np.float64)
        if xi.shape != (self.treeplex.n_sequences,):
            raise ValueError("argument has wrong length")
        if np.isnan(xi).any() or (xi == np.inf).any():
            raise ValueError("conjugate argument must not contain NaN or +inf")
        if self.center is None:
            return self._base_conjugate(xi)
        value, z = self._base_conjugate(xi + self.center_gradient)
        value += self.center_value - float(self.center_gradient @ self.center)
        return value, z
