"""Exhaustive and tree-structured exact minimization (test oracles)."""
from __future__ import annotations

from collections import deque

import numpy as np

from ..energy import EnergyModel, InvalidModelError, evaluate_energy

MAX_LABELINGS = 2 ** 22
_CHUNK = 1 << 16


class BudgetExceededError(ValueError):
    """The instance is too large for exhaustive enumeration."""


def labelings(num_nodes: int, num_labels: int, start: int, stop: int) -> np.ndarray:
    """Rows ``start..stop-1`` of the lexicographic enumeration (node 0 most significant)."""
    idx = np.arange(start, stop, dtype=np.int64)
    X = np.empty((len(idx), num_nodes), dtype=np.intp)
    for k in range(num_nodes - 1, -1, -1):
        X[:, k] = idx % num_labels
        idx //= num_labels
    return X


def evaluate_many(model: EnergyModel, X: np.ndarray) -> np.ndarray:
    """Energies of many labelings at once, by direct table lookup."""
    X = np.asarray(X, dtype=np.intp)
    n = model.num_nodes
    out = model.unary[np.arange(n), X].sum(axis=1)
    for t in model.pairwise:
        out = out + t.table()[X[:, t.i], X[:, t.j]]
    for pot in model.patterns:
        xc = X[:, list(pot.nodes)]
        for d, v in pot.entries:
            out = out + v * np.all(xc == np.array(d), axis=1)
    for pot in model.robust_patterns:
        xc = X[:, list(pot.nodes)]
        for e in pot.entries:
            dev = e.value + (xc != np.array(e.labels)) @ np.array(e.weights)
            out = out + np.minimum(0.0, dev)
    return out


def feasible_mask(model: EnergyModel, X: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    ok = np.ones(len(X), dtype=bool)
    for cons, eq in [(c, True) for c in model.linear_eq] + [(c, False) for c in model.linear_ineq]:
        lhs = np.zeros(len(X))
        for node, label, coef in cons.terms:
            lhs += coef * (X[:, node] == label)
        r = lhs - cons.rhs
        ok &= (np.abs(r) <= tol) if eq else (r <= tol)
    return ok


def brute_force_min(model: EnergyModel, max_labelings: int = MAX_LABELINGS):
    """Exact minimum over all labelings meeting the hard constraints.

    Ties (within ``1e-12 * scale``) go to the lexicographically smallest
    labeling.  Returns ``(labeling, energy)``.
    """
    n, L = model.shape
    total = L ** n
    if total > max_labelings:
        raise BudgetExceededError(f"{total} labelings exceed the budget of {max_labelings}")
    tol = 1e-12 * model.scale
    best_val, best_x = np.inf, None
    for start in range(0, total, _CHUNK):
        X = labelings(n, L, start, min(total, start + _CHUNK))
        vals = evaluate_many(model, X)
        if model.has_constraints:
            vals = np.where(feasible_mask(model, X), vals, np.inf)
        k = int(np.argmin(vals))
        if vals[k] < best_val - tol:
            # earliest labeling within tolerance of the chunk minimum
            k = int(np.flatnonzero(vals <= vals[k] + tol)[0])
            best_val, best_x = vals[k], X[k].copy()
    if best_x is None:
        raise InvalidModelError("no labeling satisfies the global constraints")
    return best_x, evaluate_energy(model, best_x)


def tree_dp_min(model: EnergyModel):
    """Exact minimum of a pairwise model whose edges form a forest.

    Min-sum messages are passed from the leaves to the root of each tree
    (the smallest node of its component); backtracking breaks ties toward the
    smaller label.  Returns ``(labeling, energy)``.
    """
    if not model.is_pairwise:
        raise InvalidModelError("tree dynamic programming supports pairwise models only")
    if model.has_constraints:
        raise InvalidModelError("tree dynamic programming ignores global constraints")
    n, L = model.shape
    adj = [[] for _ in range(n)]
    for t in model.pairwise:
        table = t.table()
        adj[t.i].append((t.j, table))
        adj[t.j].append((t.i, table.T))
    _check_forest(model)
    parent = [-1] * n
    parent_table = [None] * n
    seen = [False] * n
    order = []
    for root in range(n):
        if seen[root]:
            continue
        seen[root] = True
        queue = deque([root])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w, table in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    parent[w] = v
                    # rows: label of the parent, columns: label of the child
                    parent_table[w] = table
                    queue.append(w)
    belief = np.array(model.unary, dtype=float)
    choice = [None] * n
    for v in reversed(order):
        p = parent[v]
        if p < 0:
            continue
        cand = parent_table[v] + belief[v][None, :]
        choice[v] = np.argmin(cand, axis=1)
        belief[p] += cand.min(axis=1)
    x = np.zeros(n, dtype=np.intp)
    for v in order:
        p = parent[v]
        if p < 0:
            x[v] = int(np.argmin(belief[v]))
        else:
            x[v] = int(choice[v][x[p]])
    return x, evaluate_energy(model, x)


def _check_forest(model: EnergyModel) -> None:
    root = list(range(model.num_nodes))

    def find(a):
        while root[a] != a:
            root[a] = root[root[a]]
            a = root[a]
        return a

    for t in model.pairwise:
        a, b = find(t.i), find(t.j)
        if a == b:
            raise InvalidModelError("edge graph contains a cycle")
        root[a] = b
