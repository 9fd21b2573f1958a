"""Equilibrium solvers for two-player zero-sum extensive-form games.

The package compiles small poker games (Kuhn, Leduc hold'em) to their
sequence-form bilinear saddle-point representation and solves them with the
excessive gap technique over a weighted dilated-entropy prox-function, with
CFR and CFR+ as baselines, plus a prox-centering warm-start combination.
"""

from .bspp import (
    MembershipError,
    SaddlePointProblem,
    best_response,
    exploitability,
    game_value,
    matrix_norm,
    smoothed_f,
    smoothed_phi,
    with_centers,
)
from .cfr import RegretState, cfr_plus_solve, cfr_solve, normalize, prod, regret
from .egt import (
    EgtState,
    TauUnderflowError,
    egc_gap,
    egc_holds,
    egt_init,
    egt_shrink_mu1,
    egt_shrink_mu2,
    egt_solve_guaranteed,
    egt_solve_heuristic,
    make_interior,
    solve_with_centering,
)
from .games import (
    GAME_NAMES,
    Chance,
    Decision,
    GameError,
    GameTree,
    ImperfectRecallError,
    SparsePayoffMatrix,
    Terminal,
    build_kuhn,
    build_leduc,
    game_by_name,
    iter_nodes,
    sequence_form,
    validate_perfect_recall,
)
from .trace import SolveTrace, TraceRecord
from .treeplex import (
    Infoset,
    ProxSetup,
    Treeplex,
    TreeplexError,
    build_treeplex,
    compute_weights,
    contains,
    max_l1_norm,
    maximize_linear,
    prox_coefficients,
    uniform_point,
)

__version__ = "0.1.0"
