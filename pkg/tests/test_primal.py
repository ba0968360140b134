import numpy as np
import pytest

from smr.dual import DualPoint, SMROracle
from smr.energy import EnergyModel, InvalidModelError, evaluate_energy
from smr.optimizers import default_config, run
from smr.oracles import brute_force_min, build_relaxation, solve_lp
from smr.primal import COMPONENT_RANDOM, GapBound, Optimal, certify, decode, icm, local_costs

from _models import constrained_grid, grid


def test_decode_consistent_minimizer():
    model = grid(0)
    y = np.eye(3, dtype=int)[np.arange(9) % 3]
    dec = decode(model, y)
    assert dec.labeling.tolist() == (np.arange(9) % 3).tolist()
    assert len(dec.conflicts) == 0
    assert dec.energy == evaluate_energy(model, dec.labeling)


def test_decode_first_label_on_conflict():
    model = grid(0)
    y = np.eye(3, dtype=int)[np.zeros(9, dtype=int)]
    y[4] = [1, 1, 0]
    dec = decode(model, y)
    assert dec.labeling[4] == 0 and dec.conflicts.tolist() == [4]


def test_decode_empty_node_takes_unary_argmin():
    model = grid(1)
    y = np.eye(3, dtype=int)[np.zeros(9, dtype=int)]
    y[2] = 0
    dec = decode(model, y)
    assert dec.labeling[2] == np.argmin(model.unary[2])
    assert 2 in dec.conflicts


def test_component_rule_is_seeded():
    model = grid(2, 4, 4)
    rng = np.random.default_rng(0)
    y = rng.integers(0, 2, (16, 3))
    a = decode(model, y, COMPONENT_RANDOM, seed=5).labeling
    b = decode(model, y, COMPONENT_RANDOM, seed=5).labeling
    assert a.tolist() == b.tolist()


def test_component_rule_shares_label_within_component():
    model = grid(2, 1, 4)
    y = np.array([[1, 1, 0], [1, 0, 1], [0, 1, 0], [1, 1, 1]])
    x = decode(model, y, COMPONENT_RANDOM, seed=3).labeling
    # nodes 0-1 form one conflicted chain, node 3 another
    assert x[0] == x[1] and x[2] == 1


def test_icm_fixed_point():
    model = grid(3)
    x = icm(model, np.zeros(9, dtype=int), sweeps=50)
    assert icm(model, x, sweeps=5).tolist() == x.tolist()


def test_icm_single_node():
    model = EnergyModel(1, 4, [[0.3, -1.0, 2.0, -1.0]])
    assert icm(model, [0], sweeps=1).tolist() == [1]


@pytest.mark.parametrize("seed", range(5))
def test_icm_reaches_local_minimum(seed):
    model = grid(seed, signed=bool(seed % 2))
    rng = np.random.default_rng(seed)
    x0 = rng.integers(0, 3, 9)
    x = icm(model, x0, sweeps=100)
    e = evaluate_energy(model, x)
    assert e <= evaluate_energy(model, x0)
    for j in range(9):
        for p in range(3):
            z = x.copy()
            z[j] = p
            assert evaluate_energy(model, z) >= e - 1e-12


def test_local_costs_match_energy_differences():
    model = grid(4, signed=True)
    x = np.arange(9) % 3
    costs = local_costs(model, x, 4)
    base = evaluate_energy(model, x) - costs[x[4]]
    for p in range(3):
        z = x.copy()
        z[4] = p
        assert evaluate_energy(model, z) == pytest.approx(base + costs[p])


def test_certify_zero_subgradient():
    model = grid(1)
    point, trace = run(model, default_config("bundle"))
    ev = SMROracle(model).evaluate(point)
    assert ev.strong_certificate and not np.any(ev.subgradient)
    x = decode(model, ev).labeling
    assert isinstance(certify(model, point, ev, x), Optimal)


def test_certify_gap_bound_dominates_true_gap():
    model = constrained_grid(1)
    xs, emin = brute_force_min(model)
    point, _ = run(model, default_config("bundle", max_iter=20))
    ev = SMROracle(model).evaluate(point)
    x = xs.copy()
    # a feasible but suboptimal labeling: swap two nodes' labels
    i, j = np.flatnonzero(x != x[0])[0], 0
    x[i], x[j] = x[j], x[i]
    res = certify(model, point, ev, x)
    assert isinstance(res, GapBound)
    assert res.gap >= evaluate_energy(model, x) - emin - 1e-12


def test_certify_at_dual_max_reports_integrality_gap():
    # a constrained instance whose relaxation is not tight
    model = next(m for m in (constrained_grid(s) for s in range(20))
                 if brute_force_min(m)[1] - solve_lp(build_relaxation(m, "pairwise-cor1"))[0] > 1e-3)
    xs, emin = brute_force_min(model)
    lp, _ = solve_lp(build_relaxation(model, "pairwise-cor1"))
    point, _ = run(model, default_config("bundle", max_iter=3000))
    ev = SMROracle(model).evaluate(point)
    res = certify(model, point, ev, xs)
    assert isinstance(res, GapBound)
    assert res.gap == pytest.approx(emin - lp, abs=1e-4)


def test_certify_rejects_infeasible_labeling():
    model = constrained_grid(0)
    ev = SMROracle(model).evaluate(DualPoint.zeros(model))
    bad = np.full(9, -1)
    with pytest.raises(InvalidModelError):
        certify(model, DualPoint.zeros(model), ev, bad)
    size = model.linear_eq[0].rhs
    p = model.linear_eq[0].terms[0][1]
    x = np.full(9, (p + 1) % 3)
    x[: int(size) + 1] = p
    with pytest.raises(InvalidModelError):
        certify(model, DualPoint.zeros(model), ev, x)
