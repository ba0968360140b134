import itertools

import numpy as np
import pytest

from smr.dual import (DualPoint, NotDecomposableError, SMROracle, agreement_from_min_marginals,
                      agreement_sets, build_lagrangian, decompose_per_label, evaluate_dual,
                      node_min_marginal_gaps)
from smr.energy import EnergyModel, PairwiseTerm, PatternPotential
from smr.oracles import brute_force_min
from smr.pbf import NotSubmodularError, minimize_submodular

from _models import brute_pbf, grid, pattern_model


def lagrangian_direct(model, lam, y, z):
    """Lagrangian of an associative/pattern model written out term by term."""
    n, L = model.shape
    y = y.reshape(n, L)
    val = float(np.sum(model.unary * y)) + float(lam @ (y.sum(axis=1) - 1.0))
    for t in model.pairwise:
        tab = t.table()
        val += sum(tab[p, q] * y[t.i, p] * y[t.j, q] for p in range(L) for q in range(L))
    k = 0
    for pot in model.patterns:
        for d, v in pot.entries:
            s = sum(y[i, l] for i, l in zip(pot.nodes, d))
            val += -v * ((len(pot.nodes) - 1) * z[k] - s * z[k])
            k += 1
    return val


def test_single_node_lagrangian():
    model = EnergyModel(1, 2, [[0.0, 1.0]])
    f = build_lagrangian(model, DualPoint.zeros(model))
    assert f.num_vars == 2 and f.constant == 0.0
    assert f.unary.tolist() == [0.0, 1.0] and f.pairwise_terms == []


def test_pattern_lagrangian_terms():
    model = EnergyModel(2, 2, np.zeros((2, 2)),
                        patterns=[PatternPotential((0, 1), [((0, 0), -2.0)])])
    f = build_lagrangian(model, DualPoint.zeros(model))
    z = 4
    # -value * (z - y00 z - y10 z) = 2 z - 2 y00 z - 2 y10 z
    assert f.unary[z] == 2.0
    assert sorted(f.pairwise_terms) == [(0, z, -2.0), (2, z, -2.0)]


def test_pattern_lagrangian_sign():
    model = EnergyModel(2, 2, np.zeros((2, 2)),
                        patterns=[PatternPotential((0, 1), [((0, 0), -2.0)])])
    f = build_lagrangian(model, DualPoint.zeros(model))
    for y00, y10, z in itertools.product((0, 1), repeat=3):
        y = np.zeros(5)
        y[0], y[2], y[4] = y00, y10, z
        assert f.evaluate(y) == 2.0 * (z - y00 * z - y10 * z)
    # with every indicator on, the switch collects the pattern value
    assert f.evaluate(np.array([1, 0, 1, 0, 1.0])) == -2.0


@pytest.mark.parametrize("seed", range(5))
def test_lagrangian_matches_direct_arithmetic(seed):
    model = pattern_model(seed)
    rng = np.random.default_rng(seed)
    lam = rng.normal(size=model.num_nodes)
    f = build_lagrangian(model, DualPoint(lam, np.zeros(0), np.zeros(0)))
    ny = model.num_nodes * model.num_labels
    for _ in range(200):
        v = rng.integers(0, 2, f.num_vars).astype(float)
        assert f.evaluate(v) == pytest.approx(lagrangian_direct(model, lam, v[:ny], v[ny:]), abs=1e-12)


def test_single_node_dual_at_zero():
    model = EnergyModel(1, 2, [[0.0, 1.0]])
    ev = evaluate_dual(model, DualPoint.zeros(model))
    assert ev.value == 0.0
    assert ev.minimizer_y.tolist() == [[0, 0]]
    assert ev.subgrad_lambda.tolist() == [-1.0]


def test_huge_negative_multipliers_turn_everything_on():
    model = grid(0)
    dp = DualPoint(np.full(9, -1e4), np.zeros(0), np.zeros(0))
    ev = evaluate_dual(model, dp)
    assert np.all(ev.minimizer_y == 1)
    assert np.all(ev.subgrad_lambda == model.num_labels - 1)


def test_dual_is_lower_bound():
    model = grid(2)
    _, emin = brute_force_min(model)
    rng = np.random.default_rng(2)
    oracle = SMROracle(model)
    for _ in range(50):
        dp = DualPoint(rng.normal(scale=2.0, size=9), np.zeros(0), np.zeros(0))
        assert oracle.evaluate(dp).value <= emin + 1e-9


def test_oracle_value_matches_fresh_min_cut():
    model = pattern_model(4)
    rng = np.random.default_rng(4)
    oracle = SMROracle(model)
    for _ in range(20):
        dp = DualPoint(rng.normal(size=6), np.zeros(0), np.zeros(0))
        want = minimize_submodular(build_lagrangian(model, dp)).min_value
        assert oracle.evaluate(dp).value == pytest.approx(want, abs=1e-9)


def test_signed_model_needs_subtraction_or_nsmr():
    model = grid(1, signed=True)
    with pytest.raises(NotSubmodularError):
        evaluate_dual(model, DualPoint.zeros(model))
    # the oracle applies the subtraction trick itself
    _, emin = brute_force_min(model)
    assert SMROracle(model).evaluate(DualPoint.zeros(model)).value <= emin


def test_decompose_zero_pairwise():
    rng = np.random.default_rng(0)
    model = EnergyModel(5, 3, rng.normal(size=(5, 3)))
    lam = rng.normal(size=5)
    parts = decompose_per_label(model, lam)
    for p, f in enumerate(parts):
        assert f.pairwise_terms == []
        want = np.minimum(0.0, model.unary[:, p] + lam).sum()
        assert minimize_submodular(f).min_value == pytest.approx(want)


def test_decompose_matches_joint_dual():
    model = grid(3, 4, 4)
    lam = np.random.default_rng(3).normal(size=16)
    parts = decompose_per_label(model, lam)
    total = sum(minimize_submodular(f).min_value for f in parts) - lam.sum()
    joint = evaluate_dual(model, DualPoint(lam, np.zeros(0), np.zeros(0))).value
    assert total == pytest.approx(joint, abs=1e-12)


def test_decompose_ten_labels():
    parts = decompose_per_label(grid(0, 2, 3, 10), np.zeros(6))
    assert len(parts) == 10 and all(f.num_vars == 6 for f in parts)


def test_decompose_rejects_dense():
    with pytest.raises(NotDecomposableError):
        decompose_per_label(grid(0, signed=True), np.zeros(9))


def test_gaps_unary_only():
    rng = np.random.default_rng(1)
    model = EnergyModel(3, 4, rng.normal(size=(3, 4)))
    lam = rng.normal(size=3)
    gaps = node_min_marginal_gaps(model, lam, 1)
    np.testing.assert_allclose(gaps.delta, -(model.unary[1] + lam[1]), atol=1e-12)


def test_gaps_follow_label_permutation():
    rng = np.random.default_rng(2)
    model = grid(5, 2, 2, 4)
    perm = rng.permutation(4)
    permuted = EnergyModel(4, 4, model.unary[:, perm],
                           [PairwiseTerm.associative(t.i, t.j, np.asarray(t.values)[perm])
                            for t in model.pairwise])
    lam = rng.normal(size=4)
    a = node_min_marginal_gaps(model, lam, 0).delta
    b = node_min_marginal_gaps(permuted, lam, 0).delta
    np.testing.assert_allclose(b, a[perm], atol=1e-12)


def test_gaps_match_constrained_enumeration():
    model = grid(6, 2, 3, 3)
    lam = np.random.default_rng(6).normal(size=6)
    parts = decompose_per_label(model, lam)
    for j in range(6):
        gaps = node_min_marginal_gaps(model, lam, j)
        for p, f in enumerate(parts):
            want = brute_pbf(f, (j, 0))[0] - brute_pbf(f, (j, 1))[0]
            assert gaps.delta[p] == pytest.approx(want, abs=1e-9)
        assert gaps.d1 >= gaps.d2


def test_agreement_strict_unique_minimizer():
    model = EnergyModel(2, 2, [[0.0, 1.0], [2.0, 0.0]])
    rep = agreement_sets(model, DualPoint(np.array([-0.5, -1.0]), np.zeros(0), np.zeros(0)))
    assert rep.strong_agreement and rep.weak_agreement
    assert rep.Z(0, 0) == frozenset({1}) and rep.Z(0, 1) == frozenset({0})


def test_agreement_symmetric_labels():
    model = EnergyModel(1, 2, [[0.0, 0.0]])
    rep = agreement_sets(model, DualPoint.zeros(model))
    assert rep.Z(0, 0) == frozenset({0, 1}) and rep.Z(0, 1) == frozenset({0, 1})
    assert not rep.strong_agreement and rep.weak_agreement


def test_weak_agreement_rule():
    # node 0: label 0 forced on, label 1 only 0 -> fine; node 1: label 0 forced on
    # while label 1 is forced on too -> violates the weak condition
    mm0 = np.array([[1.0, 0.0], [1.0, 1.0]])
    mm1 = np.array([[0.0, 1.0], [0.0, 0.0]])
    rep = agreement_from_min_marginals(mm0, mm1, 1e-9)
    assert not rep.weak_agreement
    rep = agreement_from_min_marginals(mm0[:1], mm1[:1], 1e-9)
    assert rep.weak_agreement and rep.strong_agreement
