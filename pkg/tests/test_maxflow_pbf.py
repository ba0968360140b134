import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from smr.maxflow import FlowGraph
from smr.oracles import pbf_relaxation, simplex_solve
from smr.pbf import (FlowHandle, NotSubmodularError, QPBOHandle, QuadraticPBF, UNLABELED,
                     build_handle, minimize_submodular, min_marginals, pairwise_lp_values, qpbo,
                     resolve, update_unary)

from _models import brute_pbf, random_pbf


def scipy_maxflow(n, edges, tweights):
    """Reference value from scipy on integer capacities (source n, sink n+1)."""
    cap = np.zeros((n + 2, n + 2), dtype=np.int64)
    for u, v, c, rc in edges:
        cap[u, v] += c
        cap[v, u] += rc
    for v, (cs, ct) in enumerate(tweights):
        cap[n, v] += cs
        cap[v, n + 1] += ct
    return maximum_flow(csr_matrix(cap), n, n + 1).flow_value


@pytest.mark.parametrize("seed", range(30))
def test_maxflow_matches_scipy(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 25))
    edges = []
    for _ in range(int(rng.integers(n, 4 * n))):
        u, v = rng.choice(n, 2, replace=False)
        edges.append((int(u), int(v), int(rng.integers(0, 10)), int(rng.integers(0, 10))))
    tw = [(int(rng.integers(0, 10)), int(rng.integers(0, 10))) for _ in range(n)]
    g = FlowGraph(n)
    for u, v, c, rc in edges:
        g.add_edge(u, v, c, rc)
    for v, (cs, ct) in enumerate(tw):
        g.add_tweights(v, cs, ct)
    assert g.maxflow() == pytest.approx(scipy_maxflow(n, edges, tw))


def test_maxflow_reuse_after_terminal_change():
    rng = np.random.default_rng(7)
    n = 15
    edges = [(int(u), int(v), int(rng.integers(1, 8)), int(rng.integers(0, 8)))
             for u, v in (rng.choice(n, 2, replace=False) for _ in range(40))]
    tw = [[int(rng.integers(0, 10)), int(rng.integers(0, 10))] for _ in range(n)]
    g = FlowGraph(n)
    for u, v, c, rc in edges:
        g.add_edge(u, v, c, rc)
    for v, (cs, ct) in enumerate(tw):
        g.add_tweights(v, cs, ct)
    g.maxflow()
    for _ in range(20):
        v = int(rng.integers(n))
        extra = int(rng.integers(0, 6))
        if rng.random() < 0.5:
            g.add_tweights(v, extra, 0)
            tw[v][0] += extra
        else:
            g.add_tweights(v, 0, extra)
            tw[v][1] += extra
        assert g.maxflow() == pytest.approx(scipy_maxflow(n, edges, tw))


def test_minimize_small_example():
    f = QuadraticPBF(2, 0.0, [1.0, 1.0], [0], [1], [-3.0])
    sol = minimize_submodular(f)
    assert sol.min_value == -1.0
    assert sol.assignment.tolist() == [1, 1]


def test_minimize_zero_function():
    sol = minimize_submodular(QuadraticPBF(3))
    assert sol.min_value == 0.0 and sol.assignment.tolist() == [0, 0, 0]


def test_non_submodular_rejected():
    with pytest.raises(NotSubmodularError):
        minimize_submodular(QuadraticPBF(2, 0.0, [0, 0], [0], [1], [1.0]))


def test_duplicate_and_reversed_pairs_are_merged():
    f = QuadraticPBF(3, 0.0, [0, 0, 0], [0, 1, 2], [1, 0, 2], [-1.0, -2.0, 4.0])
    assert f.pairwise_terms == [(0, 1, -3.0)]
    assert f.unary[2] == 4.0


@pytest.mark.parametrize("seed", range(20))
def test_minimize_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    f = random_pbf(rng, int(rng.integers(1, 14)))
    best, argmins = brute_pbf(f)
    sol = minimize_submodular(f)
    assert sol.min_value == pytest.approx(best, abs=1e-9)
    assert f.evaluate(sol.assignment) == pytest.approx(best, abs=1e-9)
    # the minimal cut is the smallest minimizer
    assert sol.assignment.tolist() == argmins.min(axis=0).tolist()


def test_handle_without_update_matches_fresh():
    f = random_pbf(np.random.default_rng(1), 10)
    h = build_handle(f)
    assert resolve(h).min_value == pytest.approx(minimize_submodular(f).min_value)


def test_large_penalty_switches_variable_off():
    f = QuadraticPBF(3, 0.0, [-2.0, -1.0, 0.5], [0, 1], [1, 2], [-1.0, -1.0])
    h = build_handle(f)
    assert resolve(h).assignment[1] == 1
    update_unary(h, 1, 1e6)
    assert resolve(h).assignment[1] == 0


def test_dynamic_updates_match_fresh_builds():
    rng = np.random.default_rng(11)
    f = random_pbf(rng, 12)
    h = FlowHandle(f)
    g = f.copy()
    for _ in range(100):
        v = int(rng.integers(12))
        delta = float(rng.normal(scale=2.0))
        h.update_unary(v, delta)
        g.unary[v] += delta
        got = h.resolve()
        want = minimize_submodular(g)
        assert got.min_value == pytest.approx(want.min_value, abs=1e-9)
        assert got.assignment.tolist() == want.assignment.tolist()


def test_min_marginals_single_variable():
    h = build_handle(QuadraticPBF(1, 0.0, [2.0]))
    assert min_marginals(h, 0) == (0.0, 2.0)


@pytest.mark.parametrize("seed", range(10))
def test_min_marginals_match_enumeration(seed):
    rng = np.random.default_rng(100 + seed)
    f = random_pbf(rng, 12)
    h = build_handle(f)
    fmin = minimize_submodular(f).min_value
    for v in range(12):
        mm0, mm1 = h.min_marginals(v)
        assert mm0 == pytest.approx(brute_pbf(f, (v, 0))[0], abs=1e-9)
        assert mm1 == pytest.approx(brute_pbf(f, (v, 1))[0], abs=1e-9)
        assert min(mm0, mm1) == pytest.approx(fmin, abs=1e-9)
    # the handle still answers the unforced problem afterwards
    assert h.resolve().min_value == pytest.approx(fmin, abs=1e-9)


def test_qpbo_submodular_example():
    bound, labels = qpbo(QuadraticPBF(2, 0.0, [1.0, 1.0], [0], [1], [-3.0]))
    assert bound == -1.0 and labels.labels.tolist() == [1, 1]


def test_qpbo_zero_function():
    bound, labels = qpbo(QuadraticPBF(4))
    assert bound == 0.0 and labels.labels.tolist() == [0, 0, 0, 0]


def test_qpbo_frustrated_cycle_is_unlabeled():
    # y0 != y1 != y2 != y0 cannot all hold: the roof dual leaves everything open
    f = QuadraticPBF(3, 0.0, [-1.0, -1.0, -1.0], [0, 1, 0], [1, 2, 2], [2.0, 2.0, 2.0])
    bound, labels = qpbo(f)
    assert np.all(labels.labels == UNLABELED)
    np.testing.assert_array_equal(labels.half_integral(), [0.5, 0.5, 0.5])
    assert bound == pytest.approx(simplex_solve(pbf_relaxation(f))[0])
    assert bound <= brute_pbf(f)[0]


@pytest.mark.parametrize("seed", range(20))
def test_qpbo_bound_and_persistency(seed):
    rng = np.random.default_rng(200 + seed)
    f = random_pbf(rng, 10, submodular=False)
    bound, labels = qpbo(f)
    lp, _ = simplex_solve(pbf_relaxation(f))
    assert bound == pytest.approx(lp, abs=1e-7)
    best, argmins = brute_pbf(f)
    assert bound <= best + 1e-9
    mask = labels.labeled
    assert np.any(np.all(argmins[:, mask] == labels.labels[mask], axis=1))


def test_pairwise_lp_rule():
    f = QuadraticPBF(3, 0.0, [0, 0, 0], [0, 1], [1, 2], [-1.0, 1.0])
    half = np.array([0.5, 1.0, 0.5])
    np.testing.assert_allclose(pairwise_lp_values(half, f), [0.5, 0.5])


def test_qpbo_handle_updates_match_fresh():
    rng = np.random.default_rng(9)
    f = random_pbf(rng, 8, submodular=False)
    h = QPBOHandle(f)
    g = f.copy()
    for _ in range(30):
        v = int(rng.integers(8))
        d = float(rng.normal())
        h.update_unary(v, d)
        g.unary[v] += d
        bound, labels = h.solve()
        want, want_labels = qpbo(g)
        assert bound == pytest.approx(want, abs=1e-9)
