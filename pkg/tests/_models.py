"""Random model builders shared by the test modules."""
import itertools

import numpy as np

from smr.bench import GenSpec, generate
from smr.energy import (EnergyModel, LinearConstraint, PairwiseTerm, PatternPotential,
                        robust_pn_potts)
from smr.pbf import QuadraticPBF


def grid(seed, rows=3, cols=3, labels=3, signed=False, constraints=False):
    return generate(GenSpec(rows, cols, labels, signed=signed,
                            class_size_constraints=constraints, seed=seed))


def pattern_model(seed, nodes=6, labels=3, n_patterns=3, permuted=False, robust=False):
    """Pairwise chain plus random 3-node patterns with non-positive values."""
    rng = np.random.default_rng(seed)
    unary = rng.normal(size=(nodes, labels))
    pairwise = [PairwiseTerm.potts(i, i + 1, abs(rng.normal(0, 0.5)), labels)
                for i in range(nodes - 1)]
    patterns = []
    cliques = list(itertools.combinations(range(nodes), 3))
    for k in rng.choice(len(cliques), n_patterns, replace=False):
        clique = cliques[k]
        if permuted:
            perms = [rng.permutation(labels) for _ in clique]
            entries = [(tuple(int(p[k]) for p in perms), -abs(rng.normal())) for k in range(labels)]
        else:
            table = {}
            for _ in range(int(rng.integers(1, 5))):
                table[tuple(int(v) for v in rng.integers(0, labels, 3))] = -abs(rng.normal())
            entries = sorted(table.items())
        patterns.append(PatternPotential(clique, entries))
    robust_pots = []
    if robust:
        clique = tuple(sorted(int(v) for v in rng.choice(nodes, 4, replace=False)))
        robust_pots.append(robust_pn_potts(clique, labels, float(abs(rng.normal()) + 0.1), 2.0))
    return EnergyModel(nodes, labels, unary, pairwise, patterns=patterns,
                       robust_patterns=robust_pots)


def constrained_grid(seed, rows=3, cols=3, labels=3):
    """Associative grid with one strict class-size equality."""
    model = grid(seed, rows, cols, labels)
    rng = np.random.default_rng(10_000 + seed)
    n = model.num_nodes
    p = int(rng.integers(labels))
    size = int(rng.integers(1, n - 1))
    row = LinearConstraint([(i, p, 1.0) for i in range(n)], size)
    return model.with_(linear_eq=(row,))


def random_pbf(rng, n, submodular=True, density=2.0, integer=False):
    m = int(rng.integers(0, int(density * n) + 1))
    u = rng.integers(0, n, m)
    v = rng.integers(0, n, m)
    if integer:
        a = rng.integers(-5, 6, n).astype(float)
        b = rng.integers(-5, 6, m).astype(float)
        c = float(rng.integers(-3, 4))
    else:
        a, b, c = rng.normal(size=n), rng.normal(size=m), float(rng.normal())
    if submodular:
        b = -np.abs(b)
    return QuadraticPBF(n, c, a, u, v, b)


def all_assignments(n):
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=float).reshape(-1, n)


def brute_pbf(f, fixed=None):
    """Minimum over assignments, optionally with ``fixed = (var, value)``."""
    Y = all_assignments(f.num_vars)
    if fixed is not None:
        Y = Y[Y[:, fixed[0]] == fixed[1]]
    vals = f.evaluate_many(Y)
    return float(vals.min()), Y[vals == vals.min()]
