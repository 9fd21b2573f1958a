"""Treeplex structure, weights, and the dilated-entropy prox-function."""

import math

import numpy as np
import pytest

from efgsmooth import (
    ProxSetup,
    TreeplexError,
    build_treeplex,
    compute_weights,
    contains,
    max_l1_norm,
    maximize_linear,
    uniform_point,
)
from efgsmooth.treeplex import prox_coefficients

from oracles import (
    cvxpy_conjugate,
    dilated_entropy_reference,
    enumerate_pure_vectors,
    first_order_term,
    random_interior_ratios,
    random_treeplex_specs,
)


def simplex(n=2):
    return build_treeplex([(0, n)])


def interior_point(t, rng):
    z = random_interior_ratios(t, rng)
    x = np.empty(t.n_sequences)
    x[0] = 1.0
    for i in reversed(t.topo_order):
        info = t.infosets[i]
        x[info.start : info.end] = x[info.parent_sequence] * z[info.start : info.end]
    return x


# -- construction ------------------------------------------------------------


def test_single_infoset_is_a_simplex():
    t = simplex(2)
    assert t.n_sequences == 3
    assert t.n_infosets == 1
    assert t.infosets[0].parent_sequence == 0


def test_kuhn_player1_counts(kuhn):
    assert kuhn.tx.n_sequences == 13
    assert kuhn.tx.n_infosets == 6


def test_cycle_detected():
    # an infoset whose parent is its own first action sequence
    with pytest.raises(TreeplexError, match="cycle"):
        build_treeplex([(1, 2)])


def test_two_infoset_cycle_detected():
    with pytest.raises(TreeplexError, match="cycle"):
        build_treeplex([(3, 2), (1, 2)])


def test_parent_out_of_range():
    with pytest.raises(TreeplexError, match="out of range"):
        build_treeplex([(0, 2), (7, 2)])


def test_zero_action_count():
    with pytest.raises(TreeplexError, match="action count"):
        build_treeplex([(0, 0)])


def test_topo_order_children_first():
    rng = np.random.default_rng(3)
    for _ in range(50):
        t = build_treeplex(random_treeplex_specs(rng, max_sequences=12))
        seen = set()
        for i in t.topo_order:
            for seq in range(t.infosets[i].start, t.infosets[i].end):
                for child in t.children_of_sequence[seq]:
                    assert child in seen
            seen.add(i)


def test_topo_order_is_reversed_identity_for_depth_sorted_input(kuhn, leduc3):
    for t in (kuhn.tx, kuhn.ty, leduc3.tx, leduc3.ty):
        assert t.topo_order == tuple(range(t.n_infosets - 1, -1, -1))


def test_action_ranges_partition_sequences():
    rng = np.random.default_rng(4)
    for _ in range(20):
        t = build_treeplex(random_treeplex_specs(rng))
        covered = sorted(
            s for info in t.infosets for s in range(info.start, info.end)
        )
        assert covered == list(range(1, t.n_sequences))


# -- weights and norms -------------------------------------------------------


def test_weights_single_infoset():
    assert compute_weights(simplex(5)).tolist() == [1]


def test_weights_kuhn_player1(kuhn):
    w = compute_weights(kuhn.tx)
    by_depth = sorted(int(x) for x in w)
    assert by_depth == [1, 1, 1, 2, 2, 2]


def test_weights_chain_of_single_actions():
    t = build_treeplex([(0, 1), (1, 1), (2, 1)])
    assert compute_weights(t).tolist() == [3, 2, 1]


def test_weight_monotone_under_child_removal():
    # dropping a child infoset never increases any ancestor weight
    specs = [(0, 2), (1, 2), (3, 2), (2, 2)]
    t_full = build_treeplex(specs)
    w_full = compute_weights(t_full)
    t_cut = build_treeplex(specs[:-1])
    w_cut = compute_weights(t_cut)
    for i in range(t_cut.n_infosets):
        assert w_cut[i] <= w_full[i]


def test_max_l1_norm_simplex():
    t = simplex(2)
    assert max_l1_norm(t, compute_weights(t)) == 2.0


def test_max_l1_norm_kuhn_both_players(kuhn):
    for t in (kuhn.tx, kuhn.ty):
        w = compute_weights(t)
        m = max_l1_norm(t, w)
        assert m == 7.0
        brute = max(x.sum() for x in enumerate_pure_vectors(t))
        assert brute == pytest.approx(m, abs=1e-12)


def test_max_l1_norm_matches_pure_enumeration_on_random_treeplexes():
    rng = np.random.default_rng(5)
    for _ in range(25):
        t = build_treeplex(random_treeplex_specs(rng))
        w = compute_weights(t)
        brute = max(x.sum() for x in enumerate_pure_vectors(t))
        assert max_l1_norm(t, w) == pytest.approx(brute, abs=1e-12)


# -- membership and uniform point ---------------------------------------------


def test_uniform_point_simplex():
    np.testing.assert_allclose(uniform_point(simplex(3)), [1, 1 / 3, 1 / 3, 1 / 3])


def test_uniform_point_kuhn(kuhn):
    x = uniform_point(kuhn.tx)
    depth = kuhn.tx._depth
    for info in kuhn.tx.infosets:
        expected = 0.5 if depth[info.id] == 0 else 0.25
        np.testing.assert_allclose(x[info.start : info.end], expected)
    assert contains(kuhn.tx, x, tol=1e-12)


def test_contains_rejects_bad_root():
    t = simplex(2)
    assert not contains(t, np.array([0.5, 0.25, 0.25]))


def test_contains_rejects_flow_violation():
    t = simplex(2)
    assert not contains(t, np.array([1.0, 0.7, 0.2]))


def test_contains_accepts_convex_combinations():
    rng = np.random.default_rng(6)
    t = build_treeplex(random_treeplex_specs(rng))
    pure = list(enumerate_pure_vectors(t))
    lam = rng.random()
    mix = lam * pure[0] + (1 - lam) * pure[-1]
    assert contains(t, mix, tol=1e-12)


# -- prox value and gradient ---------------------------------------------------


def test_prox_zero_at_pure_strategies(kuhn):
    p = ProxSetup(kuhn.tx)
    for x in list(enumerate_pure_vectors(kuhn.tx))[:8]:
        assert p.value(x) == pytest.approx(0.0, abs=1e-15)


def test_prox_uniform_simplex():
    p = ProxSetup(simplex(2))
    assert p.value(np.array([1.0, 0.5, 0.5])) == pytest.approx(-math.log(2))


def test_prox_rejects_outside_points():
    p = ProxSetup(simplex(2))
    with pytest.raises(TreeplexError):
        p.value(np.array([1.0, 0.8, 0.1]))


def test_prox_matches_conditional_entropy_form(kuhn, leduc3):
    # the two printed forms of the prox agree on interior points
    rng = np.random.default_rng(7)
    for t in (kuhn.tx, leduc3.ty):
        p = ProxSetup(t)
        w = p.weights
        for _ in range(10):
            x = interior_point(t, rng)
            ref = dilated_entropy_reference(t, w, x)
            assert p.value(x) == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_first_order_variant_is_nonnegative_and_constant_gap_on_simplex():
    # adding the first-order term recovers a min-zero prox; on a lone simplex
    # the added term is the constant ln(n)
    rng = np.random.default_rng(8)
    t = simplex(3)
    p = ProxSetup(t)
    for _ in range(10):
        x = interior_point(t, rng)
        value = p.value(x)
        lifted = value + first_order_term(t, p.weights, x)
        assert lifted == pytest.approx(value + math.log(3))
        assert lifted >= -1e-12
    for t_specs in ([(0, 2), (1, 3)], [(0, 3), (2, 2), (3, 2)]):
        t = build_treeplex(t_specs)
        p = ProxSetup(t)
        for _ in range(10):
            x = interior_point(t, rng)
            assert p.value(x) + first_order_term(t, p.weights, x) >= -1e-12


def test_gradient_simplex_uniform():
    p = ProxSetup(simplex(2))
    g = p.gradient(np.array([1.0, 0.5, 0.5]))
    np.testing.assert_allclose(g, [1.0, 1 - math.log(2), 1 - math.log(2)])


def test_gradient_rejects_boundary():
    p = ProxSetup(simplex(2))
    with pytest.raises(TreeplexError):
        p.gradient(np.array([1.0, 1.0, 0.0]))


def test_gradient_matches_directional_finite_differences(kuhn):
    rng = np.random.default_rng(9)
    t = kuhn.tx
    p = ProxSetup(t)
    h = 1e-6
    for _ in range(20):
        x = interior_point(t, rng)
        v = interior_point(t, rng) - interior_point(t, rng)  # feasible direction
        g = p.gradient(x)
        fd = (p.value(x + h * v) - p.value(x - h * v)) / (2 * h)
        assert float(g @ v) == pytest.approx(fd, rel=1e-5, abs=1e-8)


# -- conjugate -----------------------------------------------------------------


def test_conjugate_simplex_at_zero():
    for n in (2, 3, 5):
        p = ProxSetup(simplex(n))
        value, z = p.conjugate(np.zeros(n + 1))
        assert value == pytest.approx(math.log(n))
        np.testing.assert_allclose(z[1:], 1.0 / n)


def test_conjugate_kuhn_at_zero(kuhn):
    p = ProxSetup(kuhn.tx)
    value, z = p.conjugate(np.zeros(13))
    assert value == pytest.approx(6 * math.log(1 + math.sqrt(2)), abs=1e-12)
    assert contains(kuhn.tx, z, tol=1e-12)
    assert z.min() > 0


def test_conjugate_matches_cvxpy_oracle():
    rng = np.random.default_rng(10)
    for _ in range(12):
        t = build_treeplex(random_treeplex_specs(rng))
        p = ProxSetup(t)
        xi = rng.normal(scale=2.0, size=t.n_sequences)
        value, z = p.conjugate(xi)
        ref_value, ref_z = cvxpy_conjugate(t, p.coefficients, xi)
        assert value == pytest.approx(ref_value, abs=2e-7)
        np.testing.assert_allclose(z, ref_z, atol=2e-6)


def test_conjugate_fenchel_consistency(kuhn, leduc3):
    rng = np.random.default_rng(11)
    for t in (kuhn.tx, leduc3.tx):
        p = ProxSetup(t)
        for _ in range(10):
            xi = rng.normal(scale=3.0, size=t.n_sequences)
            value, z = p.conjugate(xi)
            assert contains(t, z, tol=1e-9)
            assert z.min() > 0
            direct = float(xi @ z) - p.value(z)
            assert value == pytest.approx(direct, rel=1e-9, abs=1e-9)


def test_conjugate_danskin_directional_derivative(kuhn):
    rng = np.random.default_rng(12)
    p = ProxSetup(kuhn.tx)
    h = 1e-6
    for _ in range(15):
        xi = rng.normal(scale=2.0, size=13)
        v = rng.normal(size=13)
        _, z = p.conjugate(xi)
        up, _ = p.conjugate(xi + h * v)
        dn, _ = p.conjugate(xi - h * v)
        assert (up - dn) / (2 * h) == pytest.approx(float(v @ z), rel=1e-5, abs=1e-7)


def test_conjugate_handles_huge_arguments():
    p = ProxSetup(simplex(3))
    xi = np.array([0.0, 4e5, -4e5, 1e5])
    value, z = p.conjugate(xi)
    assert np.isfinite(value)
    assert contains(p.treeplex, z, tol=1e-12)


def test_conjugate_rejects_nan():
    p = ProxSetup(simplex(2))
    with pytest.raises(ValueError):
        p.conjugate(np.array([0.0, np.nan, 0.0]))


def test_strong_convexity_certificate(kuhn, leduc3):
    # diagonal Hessian: sum_j c_j xi_j^2 / x_j >= ||xi||_1^2 / M_Q
    rng = np.random.default_rng(13)
    for t in (kuhn.tx, kuhn.ty, leduc3.tx, leduc3.ty):
        w = compute_weights(t)
        c = prox_coefficients(t, w)
        m = max_l1_norm(t, w)
        for _ in range(100):
            x = interior_point(t, rng)
            xi = rng.normal(size=t.n_sequences)
            quad = float(np.sum(c * xi * xi / x))
            bound = float(np.sum(np.abs(xi))) ** 2 / m
            assert quad >= bound * (1 - 1e-9)


def test_diameter_bound(kuhn, leduc3):
    for t in (kuhn.tx, kuhn.ty, leduc3.tx, leduc3.ty):
        p = ProxSetup(t)
        assert p.D <= max_l1_norm(t, p.weights) * math.log(t.n_sequences)


# -- centered prox --------------------------------------------------------------


def test_center_must_be_interior(kuhn):
    x = next(iter(enumerate_pure_vectors(kuhn.tx)))
    with pytest.raises(TreeplexError):
        ProxSetup(kuhn.tx, center=x)


def test_centered_value_zero_at_center(kuhn):
    rng = np.random.default_rng(14)
    x0 = interior_point(kuhn.tx, rng)
    p = ProxSetup(kuhn.tx, center=x0)
    assert p.value(x0) == pytest.approx(0.0, abs=1e-12)


def test_centered_value_is_nonnegative(kuhn):
    rng = np.random.default_rng(15)
    x0 = interior_point(kuhn.tx, rng)
    p = ProxSetup(kuhn.tx, center=x0)
    for _ in range(20):
        x = interior_point(kuhn.tx, rng)
        assert p.value(x) >= -1e-12


def test_centered_gradient_zero_at_center(kuhn):
    rng = np.random.default_rng(16)
    x0 = interior_point(kuhn.tx, rng)
    p = ProxSetup(kuhn.tx, center=x0)
    np.testing.assert_allclose(p.gradient(x0), 0.0, atol=1e-12)


def test_centered_conjugate_shift_identity(kuhn):
    rng = np.random.default_rng(17)
    t = kuhn.tx
    base = ProxSetup(t)
    x0 = interior_point(t, rng)
    cent = ProxSetup(t, center=x0)
    for _ in range(10):
        xi = rng.normal(scale=2.0, size=t.n_sequences)
        _, z_cent = cent.conjugate(xi)
        _, z_shift = base.conjugate(xi + cent.center_gradient)
        np.testing.assert_allclose(z_cent, z_shift, rtol=0, atol=1e-12)


def test_centered_conjugate_at_zero_returns_center(kuhn):
    rng = np.random.default_rng(18)
    x0 = interior_point(kuhn.tx, rng)
    p = ProxSetup(kuhn.tx, center=x0)
    value, z = p.conjugate(np.zeros(13))
    np.testing.assert_allclose(z, x0, atol=1e-9)
    assert value == pytest.approx(0.0, abs=1e-9)


def test_centered_fenchel_consistency(kuhn):
    rng = np.random.default_rng(19)
    t = kuhn.tx
    x0 = interior_point(t, rng)
    p = ProxSetup(t, center=x0)
    for _ in range(10):
        xi = rng.normal(scale=2.0, size=t.n_sequences)
        value, z = p.conjugate(xi)
        assert value == pytest.approx(float(xi @ z) - p.value(z), rel=1e-9, abs=1e-9)


def test_centered_diameter_is_max_over_pure_points(kuhn):
    rng = np.random.default_rng(20)
    x0 = interior_point(kuhn.tx, rng)
    p = ProxSetup(kuhn.tx, center=x0)
    brute = max(p.value(x) for x in enumerate_pure_vectors(kuhn.tx))
    assert p.D == pytest.approx(brute, rel=1e-12)


# -- linear optimization ---------------------------------------------------------


def test_maximize_linear_matches_pure_enumeration():
    rng = np.random.default_rng(21)
    for _ in range(25):
        t = build_treeplex(random_treeplex_specs(rng))
        g = rng.normal(size=t.n_sequences)
        value, x = maximize_linear(t, g)
        brute = max(float(g @ v) for v in enumerate_pure_vectors(t))
        assert value == pytest.approx(brute, abs=1e-12)
        assert contains(t, x, tol=1e-12)
        assert float(g @ x) == pytest.approx(value, abs=1e-12)
