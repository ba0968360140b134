"""Linear-programming relaxations of multilabel energies.

Variable order: the unary block ``y_ip`` (row-major, index ``i * L + p``)
first, then pairwise and high-order blocks in model order.  Variables are
non-negative; upper bounds already implied by the rows are left infinite.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix

from ..energy import EnergyModel, InvalidModelError

KINDS = ("standard-local", "pairwise-cor1", "nsmr", "smr-pattern", "with-marginalization",
         "with-global")

EQ, LE, GE = "=", "<=", ">="


@dataclass
class LinearProgram:
    """``min c.x + constant`` subject to ``A x (sense) b`` and ``lb <= x <= ub``."""

    c: np.ndarray
    A: object
    senses: np.ndarray
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    constant: float = 0.0
    blocks: dict = field(default_factory=dict)

    @property
    def num_vars(self) -> int:
        return len(self.c)

    @property
    def num_rows(self) -> int:
        return len(self.b)

    def count(self, sense: str) -> int:
        return int(np.sum(self.senses == sense))

    def dense(self) -> np.ndarray:
        return np.asarray(self.A.todense()) if hasattr(self.A, "todense") else np.asarray(self.A)


class _Builder:
    def __init__(self):
        self.c = []
        self.ub = []
        self.rows, self.cols, self.vals = [], [], []
        self.senses, self.rhs = [], []
        self.blocks = {}

    def add_vars(self, costs, name, ub=np.inf) -> np.ndarray:
        start = len(self.c)
        costs = np.asarray(costs, dtype=float).ravel()
        self.c.extend(costs.tolist())
        self.ub.extend([ub] * len(costs))
        idx = np.arange(start, start + len(costs))
        self.blocks.setdefault(name, []).append((start, start + len(costs)))
        return idx

    def add_row(self, cols, vals, sense, rhs) -> None:
        r = len(self.rhs)
        self.rows.extend([r] * len(cols))
        self.cols.extend(int(c) for c in cols)
        self.vals.extend(float(v) for v in vals)
        self.senses.append(sense)
        self.rhs.append(float(rhs))

    def build(self) -> LinearProgram:
        n = len(self.c)
        A = coo_matrix((self.vals, (self.rows, self.cols)), shape=(len(self.rhs), n)).tocsr()
        return LinearProgram(np.array(self.c), A, np.array(self.senses, dtype=object),
                             np.array(self.rhs), np.zeros(n), np.array(self.ub, dtype=float),
                             0.0, self.blocks)


def _unary_block(model, bld):
    n, L = model.shape
    y = bld.add_vars(model.unary, "unary").reshape(n, L)
    for i in range(n):
        bld.add_row(y[i], np.ones(L), EQ, 1.0)
    return y


def _pair_local(model, bld, y):
    """Full pairwise marginals with marginalization rows."""
    L = model.num_labels
    for t in model.pairwise:
        v = bld.add_vars(t.table(), "pairwise").reshape(L, L)
        for p in range(L):
            bld.add_row(list(v[p, :]) + [y[t.i, p]], [1.0] * L + [-1.0], EQ, 0.0)
        for q in range(L):
            bld.add_row(list(v[:, q]) + [y[t.j, q]], [1.0] * L + [-1.0], EQ, 0.0)


def _pair_sparse(model, bld, y, lower: bool):
    """One variable per non-zero table entry with ``y_ijpq <= y_ip, y_jq``
    (plus ``y_ijpq >= y_ip + y_jq - 1`` when ``lower``)."""
    for t in model.pairwise:
        table = t.table()
        if not lower and np.any(table > 0):
            raise InvalidModelError(
                "this relaxation needs non-positive pairwise tables; subtract the maximum first")
        pq = np.argwhere(table != 0)
        v = bld.add_vars(table[pq[:, 0], pq[:, 1]], "pairwise")
        for k, (p, q) in enumerate(pq):
            bld.add_row([v[k], y[t.i, p]], [1.0, -1.0], LE, 0.0)
            bld.add_row([v[k], y[t.j, q]], [1.0, -1.0], LE, 0.0)
            if lower:
                bld.add_row([v[k], y[t.i, p], y[t.j, q]], [1.0, -1.0, -1.0], GE, -1.0)


def _patterns_sparse(model, bld, y):
    for pot in model.patterns:
        for d, val in pot.entries:
            if val > 0:
                raise InvalidModelError("pattern values must be <= 0; shift the patterns first")
            v = bld.add_vars([val], "pattern")[0]
            for node, lab in zip(pot.nodes, d):
                bld.add_row([v, y[node, lab]], [1.0, -1.0], LE, 0.0)


def _robust_block(model, bld, y):
    """Switching form ``z (value + sum w) - sum_l w_l u_l`` with ``u_l <= z, y``."""
    for pot in model.robust_patterns:
        for e in pot.entries:
            z = bld.add_vars([e.value + sum(e.weights)], "robust", ub=1.0)[0]
            u = bld.add_vars([-w for w in e.weights], "robust")
            for k, (node, lab) in enumerate(zip(pot.nodes, e.labels)):
                bld.add_row([u[k], z], [1.0, -1.0], LE, 0.0)
                bld.add_row([u[k], y[node, lab]], [1.0, -1.0], LE, 0.0)


def _patterns_joint(model, bld, y):
    """Joint variables over every labeling of each clique, marginalized onto ``y``."""
    L = model.num_labels
    for pot in model.patterns:
        k = len(pot.nodes)
        values = dict(pot.entries)
        joint = list(itertools.product(range(L), repeat=k))
        v = bld.add_vars([values.get(d, 0.0) for d in joint], "joint")
        arr = np.array(joint)
        for pos, node in enumerate(pot.nodes):
            for p0 in range(L):
                cols = v[arr[:, pos] == p0]
                bld.add_row(list(cols) + [y[node, p0]], [1.0] * len(cols) + [-1.0], EQ, 0.0)


def _global_rows(model, bld, y):
    for cons, sense in [(c, EQ) for c in model.linear_eq] + [(c, LE) for c in model.linear_ineq]:
        cols = [y[node, lab] for node, lab, _ in cons.terms]
        vals = [coef for _, _, coef in cons.terms]
        bld.add_row(cols, vals, sense, cons.rhs)


def build_relaxation(model: EnergyModel, kind: str) -> LinearProgram:
    """LP relaxation of ``model`` of the given kind.

    ``standard-local``
        local polytope of a pairwise model (consistency and marginalization).
    ``pairwise-cor1``
        pairwise model with non-positive tables; ``y_ijpq <= y_ip, y_jq``.
    ``nsmr``
        pairwise model of any sign; adds ``y_ijpq >= y_ip + y_jq - 1``.
    ``smr-pattern``
        sparse pattern entries ``y_Cd <= y_l,d_l`` (values must be <= 0),
        robust entries in switching form, pairwise terms as in ``pairwise-cor1``.
    ``with-marginalization``
        joint clique variables marginalized onto every node, pairwise terms
        as in ``standard-local``.
    ``with-global``
        ``smr-pattern`` plus the model's global linear constraints.

    Global constraints are added for every kind when the model has them.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown relaxation kind {kind!r}")
    pairwise_only = kind in ("standard-local", "pairwise-cor1", "nsmr")
    if pairwise_only and not model.is_pairwise:
        raise InvalidModelError(f"relaxation {kind!r} supports pairwise models only")
    if kind == "with-marginalization" and model.robust_patterns:
        raise InvalidModelError("joint marginalization is not defined for robust potentials")
    if kind == "with-global" and not model.has_constraints:
        raise InvalidModelError("model has no global constraints")
    bld = _Builder()
    y = _unary_block(model, bld)
    if kind in ("standard-local", "with-marginalization"):
        _pair_local(model, bld, y)
    else:
        _pair_sparse(model, bld, y, lower=(kind == "nsmr"))
    if kind in ("smr-pattern", "with-global"):
        _patterns_sparse(model, bld, y)
        _robust_block(model, bld, y)
    elif kind == "with-marginalization":
        _patterns_joint(model, bld, y)
    if model.has_constraints:
        _global_rows(model, bld, y)
    return bld.build()


def pbf_relaxation(f) -> LinearProgram:
    """Standard LP relaxation of a quadratic pseudo-Boolean function.

    Variables ``x_v`` in ``[0, 1]`` followed by one ``x_uv`` per pair:
    ``x_uv <= x_u, x_v`` for negative coefficients and
    ``x_uv >= x_u + x_v - 1`` for positive ones.  Its optimum is the
    roof-dual bound.
    """
    bld = _Builder()
    x = bld.add_vars(f.unary, "unary", ub=1.0)
    pair = bld.add_vars(f.pair_b, "pairwise")
    for k, (u, v, b) in enumerate(zip(f.pair_u, f.pair_v, f.pair_b)):
        if b < 0:
            bld.add_row([pair[k], x[u]], [1.0, -1.0], LE, 0.0)
            bld.add_row([pair[k], x[v]], [1.0, -1.0], LE, 0.0)
        else:
            bld.add_row([pair[k], x[u], x[v]], [1.0, -1.0, -1.0], GE, -1.0)
    lp = bld.build()
    lp.constant = float(f.constant)
    return lp
