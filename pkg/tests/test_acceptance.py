"""End-to-end acceptance checks.  Each test is one criterion; ``conftest``
prints a pass/fail line per criterion at the end of the run."""
import time

import numpy as np
import pytest

from smr.bench import GenSpec, generate
from smr.cli import solve
from smr.dual import DualPoint, SMROracle
from smr.optimizers import default_config, run, run_coordinate_ascent, run_subgradient
from smr.oracles import brute_force_min, build_relaxation, simplex_solve, solve_lp
from smr.pbf import build_handle, minimize_submodular, qpbo
from smr.oracles import pbf_relaxation
from smr.primal import decode

from _models import all_assignments, constrained_grid, grid, pattern_model, random_pbf


def dual_max(model, method="bundle", **kw):
    _, trace = run(model, default_config(method, **kw))
    return trace.rows[-1].best_dual


def test_criterion_01_local_polytope_tightness():
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(50):
        model = grid(seed, 4, 4, 3)
        lp, _ = simplex_solve(build_relaxation(model, "standard-local"))
        _, trace = run_subgradient(model, default_config("subgradient", max_iter=10_000))
        worst = max(worst, abs(trace.rows[-1].best_dual - lp))
    elapsed = time.perf_counter() - t0
    print(f"criterion 1: max |D - LP| = {worst:.3g}, {elapsed:.1f}s")
    assert worst <= 1e-4
    assert elapsed < 60


def test_criterion_02_pattern_relaxation():
    worst = 0.0
    for seed in range(20):
        model = pattern_model(seed)
        lp, _ = simplex_solve(build_relaxation(model, "smr-pattern"))
        worst = max(worst, abs(dual_max(model, max_iter=2000) - lp))
    print(f"criterion 2: max |D - LP| = {worst:.3g}")
    assert worst <= 1e-4


def test_criterion_03_permuted_pn_potts():
    worst_lp = worst_dual = 0.0
    for seed in range(20):
        model = pattern_model(100 + seed, permuted=True)
        a, _ = simplex_solve(build_relaxation(model, "smr-pattern"))
        b, _ = simplex_solve(build_relaxation(model, "with-marginalization"))
        d = dual_max(model, max_iter=2000)
        worst_lp = max(worst_lp, abs(a - b))
        worst_dual = max(worst_dual, abs(d - a), abs(d - b))
    print(f"criterion 3: max |LP - LP_marg| = {worst_lp:.3g}, max |D - LP| = {worst_dual:.3g}")
    assert worst_lp <= 1e-7
    assert worst_dual <= 1e-4


def test_criterion_04_global_constraints():
    worst = 0.0
    for seed in range(10):
        model = constrained_grid(seed)
        lp, _ = simplex_solve(build_relaxation(model, "pairwise-cor1"))
        worst = max(worst, abs(dual_max(model, max_iter=3000) - lp))
    print(f"criterion 4: max |D - LP| = {worst:.3g}")
    assert worst <= 1e-4


def test_criterion_05_nonsubmodular_relaxation():
    t0 = time.perf_counter()
    worst, gaps_nsmr, gaps_sub = 0.0, [], []
    for seed in range(50):
        model = generate(GenSpec(10, 10, 5, signed=True, seed=seed))
        nsmr, _ = solve(model, default_config("nsmr", nsmr_driver="bundle", max_iter=1000))
        sub, _ = solve(model, default_config("bundle", max_iter=1000))
        if seed < 20:
            lp, _ = solve_lp(build_relaxation(model, "nsmr"))
            worst = max(worst, abs(nsmr["final_dual"] - lp))
        primal = min(nsmr["best_primal"], sub["best_primal"])
        gaps_nsmr.append(max(primal - nsmr["final_dual"], 0.0))
        gaps_sub.append(max(primal - sub["final_dual"], 0.0))
    elapsed = time.perf_counter() - t0
    med_n, med_s = np.median(gaps_nsmr), np.median(gaps_sub)
    print(f"criterion 5: max |D - LP| = {worst:.3g}, median gap nsmr = {med_n:.3g}, "
          f"subtraction = {med_s:.3g}, {elapsed:.1f}s")
    assert worst <= 1e-4
    assert med_s >= 10 * med_n
    assert elapsed < 600


def test_criterion_06_coordinate_ascent():
    for seed in range(30):
        model = grid(seed, 3 + seed % 3, 4, 3 + seed % 2)
        _, trace, report = run_coordinate_ascent(model)
        tol = 1e-9 * model.scale
        assert all(u.after >= u.before - tol for u in trace.updates)
        assert all(u.ok for u in trace.updates)
        assert report.weak_agreement


def test_criterion_07_certificate_soundness():
    cases = [(grid(s), m) for s in range(8) for m in ("subgradient", "bundle", "agg-bundle",
                                                      "quasi", "coord", "nsmr")]
    cases += [(pattern_model(s), m) for s in range(5) for m in ("bundle", "quasi")]
    cases += [(constrained_grid(s), "bundle") for s in range(5)]
    cases += [(grid(s, signed=True), "nsmr") for s in range(5)]
    certified = 0
    for model, method in cases:
        point, _ = run(model, default_config(method, max_iter=2000))
        ev = SMROracle(model, "nsmr" if method == "nsmr" else "smr").evaluate(point)
        if not ev.strong_certificate:
            continue
        certified += 1
        _, emin = brute_force_min(model)
        assert decode(model, ev).energy == emin
    print(f"criterion 7: {certified} certified runs of {len(cases)}")
    assert certified > 0


def _enumerate(f):
    Y = all_assignments(f.num_vars)
    return Y, f.evaluate_many(Y)


def test_criterion_08_inner_oracles():
    rng = np.random.default_rng(8)
    for _ in range(500):
        n = int(rng.integers(1, 15))
        f = random_pbf(rng, n, integer=True)
        Y, vals = _enumerate(f)
        assert minimize_submodular(f).min_value == vals.min()
        h = build_handle(f)
        for v in range(n):
            assert h.min_marginals(v) == (vals[Y[:, v] == 0].min(), vals[Y[:, v] == 1].min())
        g = f.copy()
        for _ in range(3):
            v, d = int(rng.integers(n)), float(rng.integers(-4, 5))
            h.update_unary(v, d)
            g.unary[v] += d
            assert h.resolve().min_value == g.evaluate_many(Y).min()
    for _ in range(200):
        f = random_pbf(rng, int(rng.integers(1, 13)), submodular=False)
        Y, vals = _enumerate(f)
        bound, labels = qpbo(f)
        lp, _ = simplex_solve(pbf_relaxation(f))
        assert bound == pytest.approx(lp, abs=1e-7)
        assert bound <= vals.min() + 1e-9
        best = Y[vals <= vals.min() + 1e-9]
        mask = labels.labeled
        assert np.any(np.all(best[:, mask] == labels.labels[mask], axis=1))


def test_criterion_09_driver_agreement():
    instances = []
    seed = 0
    while len(instances) < 20:
        model = grid(seed, 3, 3, 3)
        lp, _ = simplex_solve(build_relaxation(model, "standard-local"))
        if abs(brute_force_min(model)[1] - lp) <= 1e-7:
            instances.append(model)
        seed += 1
    worst = 0.0
    for model in instances:
        values = [dual_max(model, m, max_iter=3000)
                  for m in ("subgradient", "bundle", "agg-bundle", "quasi", "coord")]
        worst = max(worst, max(values) - min(values))
    print(f"criterion 9: max spread across drivers = {worst:.3g}")
    assert worst <= 1e-4


def test_criterion_10_supergradient():
    rng = np.random.default_rng(10)
    models = [(grid(s), "smr") for s in range(3)] + [(pattern_model(s, robust=True), "smr")
                                                     for s in range(3)]
    models += [(constrained_grid(s), "smr") for s in range(2)]
    models += [(grid(s, signed=True), "smr") for s in range(2)]
    models += [(grid(s, signed=True), "nsmr") for s in range(2)]
    oracles = [(m, SMROracle(m, mode)) for m, mode in models]
    worst = -np.inf
    for k in range(1000):
        model, oracle = oracles[k % len(oracles)]
        n, m_eq, m_in = model.num_nodes, len(model.linear_eq), len(model.linear_ineq)

        def draw():
            vec = rng.normal(scale=2.0, size=n + m_eq + m_in)
            vec[n + m_eq:] = np.abs(vec[n + m_eq:])
            return vec

        a, b = draw(), draw()
        ea = oracle.evaluate(DualPoint.from_vector(model, a))
        eb = oracle.evaluate(DualPoint.from_vector(model, b))
        excess = eb.value - ea.value - ea.subgradient @ (b - a)
        worst = max(worst, excess)
        assert excess <= 1e-9
    print(f"criterion 10: max excess = {worst:.3g}")
