"""Primal labelings from Lagrangian minimizers: decoding, ICM and certificates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .energy import (
    EnergyModel,
    InvalidModelError,
    check_labeling,
    evaluate_energy,
    is_feasible,
)

__all__ = ["DecodedPrimal", "Optimal", "GapBound", "decode", "icm", "certify", "unary_argmin"]

FIRST_LABEL = "first-label"
COMPONENT_RANDOM = "component-random"


@dataclass
class DecodedPrimal:
    labeling: np.ndarray
    conflicts: np.ndarray
    energy: float


@dataclass(frozen=True)
class Optimal:
    gap: float = 0.0


@dataclass(frozen=True)
class GapBound:
    gap: float


def unary_argmin(model: EnergyModel) -> np.ndarray:
    return np.argmin(model.unary, axis=1).astype(np.intp)


def decode(model: EnergyModel, ev, rule: str = FIRST_LABEL, seed=None) -> DecodedPrimal:
    """Turn the indicator minimizer of ``ev`` into a labeling.

    Nodes with exactly one active label keep it.  Under ``"first-label"`` a
    node with several active labels takes the smallest one and a node with
    none takes its unary argmin.  Under ``"component-random"`` every
    connected group of conflicted nodes gets one label drawn (with ``seed``)
    from the labels active anywhere in the group; a group with no active label
    falls back to the unary argmin.
    """
    y = np.asarray(ev.minimizer_y if hasattr(ev, "minimizer_y") else ev)
    y = y.reshape(model.num_nodes, model.num_labels) > 0
    counts = y.sum(axis=1)
    conflicts = np.flatnonzero(counts != 1)
    x = np.where(counts > 0, np.argmax(y, axis=1), unary_argmin(model)).astype(np.intp)
    if rule == COMPONENT_RANDOM and len(conflicts):
        rng = np.random.default_rng(seed)
        bad = counts != 1
        i, j = _edges(model)
        keep = bad[i] & bad[j]
        n = model.num_nodes
        adj = coo_matrix((np.ones(keep.sum()), (i[keep], j[keep])), shape=(n, n))
        ncomp, comp = connected_components(adj, directed=False)
        for c in np.unique(comp[conflicts]):
            members = np.flatnonzero((comp == c) & bad)
            labels = np.flatnonzero(y[members].any(axis=0))
            if len(labels):
                x[members] = labels[rng.integers(len(labels))]
    elif rule not in (FIRST_LABEL, COMPONENT_RANDOM):
        raise ValueError(f"unknown decode rule {rule!r}")
    return DecodedPrimal(x, conflicts, evaluate_energy(model, x))


def _edges(model: EnergyModel):
    i = [t.i for t in model.pairwise]
    j = [t.j for t in model.pairwise]
    for pot in list(model.patterns) + list(model.robust_patterns):
        for a, b in zip(pot.nodes[:-1], pot.nodes[1:]):
            i.append(a)
            j.append(b)
    return np.array(i, dtype=np.intp), np.array(j, dtype=np.intp)


class _Neighbourhood:
    """Per-node incidence lists for local conditional energies."""

    def __init__(self, model: EnergyModel):
        n = model.num_nodes
        self.pair = [[] for _ in range(n)]
        for t in model.pairwise:
            table = t.table()
            self.pair[t.i].append((t.j, table))
            self.pair[t.j].append((t.i, table.T))
        self.high = [[] for _ in range(n)]
        for pot in list(model.patterns) + list(model.robust_patterns):
            for pos, v in enumerate(pot.nodes):
                self.high[v].append((pot, pos))


_neigh_cache = {}


def _neighbourhood(model: EnergyModel) -> _Neighbourhood:
    key = id(model)
    hit = _neigh_cache.get(key)
    if hit is None or hit[0] is not model:
        if len(_neigh_cache) > 64:
            _neigh_cache.clear()
        hit = (model, _Neighbourhood(model))
        _neigh_cache[key] = hit
    return hit[1]


def local_costs(model: EnergyModel, x: np.ndarray, j: int, nb: _Neighbourhood = None) -> np.ndarray:
    """Energy of ``x`` with node ``j`` set to each label, up to a constant."""
    nb = nb or _neighbourhood(model)
    cost = np.array(model.unary[j], dtype=float)
    for k, table in nb.pair[j]:
        cost += table[:, x[k]]
    for pot, pos in nb.high[j]:
        xc = [int(x[v]) for v in pot.nodes]
        for p in range(model.num_labels):
            xc[pos] = p
            cost[p] += pot.value(tuple(xc))
    return cost


def icm(model: EnergyModel, x, sweeps: int = 5) -> np.ndarray:
    """Iterated conditional modes: ascending node order, ties to the smaller label."""
    x = check_labeling(model, x).copy()
    nb = _neighbourhood(model)
    for _ in range(sweeps):
        changed = False
        for j in range(model.num_nodes):
            cost = local_costs(model, x, j, nb)
            best = int(np.argmin(cost))
            if cost[best] < cost[x[j]]:
                x[j] = best
                changed = True
        if not changed:
            break
    return x


def certify(model: EnergyModel, dp, ev, x, tol: float = None):
    """``Optimal()`` if ``E(x)`` meets the dual value, else ``GapBound(E(x) - D)``.

    Labelings violating the model's hard constraints are rejected.
    """
    x = check_labeling(model, x)
    if model.has_constraints and not is_feasible(model, x):
        raise InvalidModelError("labeling violates the global constraints")
    gap = evaluate_energy(model, x) - ev.value
    if tol is None:
        tol = 1e-9 * model.scale
    if gap <= tol:
        return Optimal(max(gap, 0.0))
    return GapBound(gap)
