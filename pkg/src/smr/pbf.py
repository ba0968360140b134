"""Quadratic pseudo-Boolean functions and their minimization by graph cuts.

``f(y) = constant + sum_v a_v y_v + sum_{u<v} b_uv y_u y_v`` over binary ``y``.
Submodular functions (all ``b_uv <= 0``) are minimized exactly by max-flow;
arbitrary functions get the roof-dual bound and a persistent partial labeling
from the doubled-graph (QPBO) construction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .maxflow import FlowGraph

__all__ = [
    "NotSubmodularError",
    "QuadraticPBF",
    "CutSolution",
    "PartialLabeling",
    "FlowHandle",
    "minimize_submodular",
    "build_handle",
    "update_unary",
    "resolve",
    "min_marginals",
    "qpbo",
    "QPBOHandle",
]

UNLABELED = -1


class NotSubmodularError(ValueError):
    """A pairwise coefficient is positive where a submodular function is required."""


class QuadraticPBF:
    """Quadratic pseudo-Boolean function with canonical pairwise terms.

    Pair lists are normalized to ``u < v`` with one (summed) coefficient per
    unordered pair; diagonal terms ``y_v y_v`` are folded into the unary part.
    """

    def __init__(self, num_vars, constant=0.0, unary=None, pair_u=(), pair_v=(), pair_b=()):
        self.num_vars = int(num_vars)
        self.constant = float(constant)
        if unary is None:
            unary = np.zeros(self.num_vars)
        self.unary = np.array(unary, dtype=float).reshape(self.num_vars)
        u = np.asarray(pair_u, dtype=np.intp).ravel()
        v = np.asarray(pair_v, dtype=np.intp).ravel()
        b = np.asarray(pair_b, dtype=float).ravel()
        if not (len(u) == len(v) == len(b)):
            raise ValueError("pair arrays must have equal length")
        if len(u) and (min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= self.num_vars):
            raise ValueError("pair index out of range")
        diag = u == v
        if diag.any():
            np.add.at(self.unary, u[diag], b[diag])
            u, v, b = u[~diag], v[~diag], b[~diag]
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        if len(lo):
            key = lo * self.num_vars + hi
            uniq, inv = np.unique(key, return_inverse=True)
            bsum = np.bincount(inv, weights=b, minlength=len(uniq))
            lo, hi = uniq // self.num_vars, uniq % self.num_vars
            keep = bsum != 0.0
            lo, hi, b = lo[keep], hi[keep], bsum[keep]
        self.pair_u = lo.astype(np.intp)
        self.pair_v = hi.astype(np.intp)
        self.pair_b = np.asarray(b, dtype=float)
        if not (np.all(np.isfinite(self.unary)) and np.all(np.isfinite(self.pair_b))
                and np.isfinite(self.constant)):
            raise ValueError("coefficients must be finite")

    @property
    def pairwise_terms(self):
        return list(zip(self.pair_u.tolist(), self.pair_v.tolist(), self.pair_b.tolist()))

    @property
    def is_submodular(self) -> bool:
        return bool(np.all(self.pair_b <= 0.0))

    def copy(self) -> "QuadraticPBF":
        g = QuadraticPBF.__new__(QuadraticPBF)
        g.num_vars = self.num_vars
        g.constant = self.constant
        g.unary = self.unary.copy()
        g.pair_u, g.pair_v, g.pair_b = self.pair_u, self.pair_v, self.pair_b
        return g

    def evaluate(self, y) -> float:
        y = np.asarray(y, dtype=float)
        val = self.constant + float(self.unary @ y)
        if len(self.pair_b):
            val += float(np.sum(self.pair_b * y[self.pair_u] * y[self.pair_v]))
        return val

    def evaluate_many(self, Y) -> np.ndarray:
        """Values for each row of a 2-D array of assignments."""
        Y = np.asarray(Y, dtype=float)
        val = self.constant + Y @ self.unary
        if len(self.pair_b):
            val = val + (Y[:, self.pair_u] * Y[:, self.pair_v]) @ self.pair_b
        return val

    def abs_sum(self) -> float:
        return float(np.abs(self.unary).sum() + np.abs(self.pair_b).sum())

    def __repr__(self):
        return (f"QuadraticPBF(num_vars={self.num_vars}, constant={self.constant}, "
                f"pairs={len(self.pair_b)})")


@dataclass
class CutSolution:
    min_value: float
    assignment: np.ndarray
    canonical: bool = True


@dataclass
class PartialLabeling:
    """Per-variable labels: 0, 1 or ``UNLABELED`` (-1)."""

    labels: np.ndarray

    @property
    def labeled(self) -> np.ndarray:
        return self.labels != UNLABELED

    def half_integral(self) -> np.ndarray:
        """LP values: labeled variables keep their label, unlabeled become 0.5."""
        out = self.labels.astype(float)
        out[~self.labeled] = 0.5
        return out


def _eps_for(f: QuadraticPBF) -> float:
    top = 0.0
    if f.num_vars:
        top = float(np.max(np.abs(f.unary), initial=0.0))
    if len(f.pair_b):
        top = max(top, float(np.max(np.abs(f.pair_b))))
    return 1e-12 * max(1.0, top)


class FlowHandle:
    """Reusable flow network for a submodular function.

    Only unary coefficients may change after construction.  Each change
    adjusts the terminal residual of a single node, and the next solve
    resumes from the previous flow and search trees.
    """

    def __init__(self, f: QuadraticPBF):
        if not f.is_submodular:
            raise NotSubmodularError(
                "positive pairwise coefficient; the function is not submodular")
        self.f = f.copy()
        n = f.num_vars
        self.graph = FlowGraph(n, eps=_eps_for(f))
        folded = self.f.unary.copy()
        # b*y_u*y_v = b*y_u + (-b)*y_u*(1-y_v): arc u->v of capacity -b
        for u, v, b in zip(f.pair_u.tolist(), f.pair_v.tolist(), f.pair_b.tolist()):
            self.graph.add_edge(u, v, -b)
            folded[u] += b
        tr = self.graph.tr
        for v in range(n):
            tr[v] = -float(folded[v])
            self.graph.mark(v)
        self._pair_abs = np.ones(n)
        if len(f.pair_b):
            np.add.at(self._pair_abs, f.pair_u, np.abs(f.pair_b))
            np.add.at(self._pair_abs, f.pair_v, np.abs(f.pair_b))
        self._solution = None
        self._forced = {}

    @property
    def num_vars(self) -> int:
        return self.f.num_vars

    def update_unary(self, v: int, delta: float) -> None:
        if not 0 <= v < self.f.num_vars:
            raise IndexError(f"variable {v} out of range")
        delta = float(delta)
        if delta == 0.0:
            return
        self.f.unary[v] += delta
        self.graph.shift_terminal(v, -delta)
        self._solution = None

    def update_unaries(self, deltas) -> None:
        deltas = np.asarray(deltas, dtype=float)
        for v in np.flatnonzero(deltas).tolist():
            self.update_unary(v, deltas[v])

    def set_unaries(self, values) -> None:
        self.update_unaries(np.asarray(values, dtype=float) - self.f.unary)

    def set_constant(self, c: float) -> None:
        self.f.constant = float(c)
        if self._solution is not None:
            self._solution = None

    def _force(self, v: int, value: int) -> None:
        # a local bound on how much y_v can change f, so a penalty of this
        # size pins y_v without swamping the flow arithmetic
        k = float(self._pair_abs[v] + abs(self.f.unary[v]))
        shift = k if value == 1 else -k
        self.graph.shift_terminal(v, shift)
        self._forced[v] = shift

    def _unforce(self) -> None:
        for v, shift in self._forced.items():
            self.graph.shift_terminal(v, -shift)
        self._forced.clear()

    def _cut(self) -> np.ndarray:
        self.graph.maxflow(reuse_trees=True)
        return np.fromiter(self.graph.source_set(), dtype=np.int8, count=self.f.num_vars)

    def resolve(self) -> CutSolution:
        if self._solution is None:
            if self._forced:
                self._unforce()
            y = self._cut()
            self._solution = CutSolution(self.f.evaluate(y), y, True)
        return self._solution

    def min_marginals(self, v: int):
        """``(MM_0, MM_1)``: minima of the function with ``y_v`` fixed."""
        sol = self.resolve()
        cur = int(sol.assignment[v])
        self._force(v, 1 - cur)
        y = self._cut()
        other = self.f.evaluate(y)
        self._unforce()
        # the network is back to the unforced function but the trees now
        # encode the forced cut; the cached solution is still the minimizer
        return (sol.min_value, other) if cur == 0 else (other, sol.min_value)

    def all_min_marginals(self, variables=None):
        if variables is None:
            variables = range(self.f.num_vars)
        variables = list(variables)
        mm = np.empty((len(variables), 2))
        for k, v in enumerate(variables):
            mm[k] = self.min_marginals(v)
        return mm


def minimize_submodular(f: QuadraticPBF) -> CutSolution:
    """Exact minimum of a submodular function; ties resolved to the minimal cut."""
    return FlowHandle(f).resolve()


def build_handle(f: QuadraticPBF) -> FlowHandle:
    return FlowHandle(f)


def update_unary(h: FlowHandle, v: int, delta: float) -> None:
    h.update_unary(v, delta)


def resolve(h: FlowHandle) -> CutSolution:
    return h.resolve()


def min_marginals(h: FlowHandle, v: int):
    return h.min_marginals(v)


# ---------------------------------------------------------------------------
# roof duality


def doubled_function(f: QuadraticPBF) -> QuadraticPBF:
    """Submodular function over ``(y, y')`` with ``y'`` standing for ``1 - y``.

    Its minimum is the roof-dual lower bound of ``f``; the variables of ``y'``
    occupy indices ``n..2n-1``.
    """
    n = f.num_vars
    a = f.unary
    unary = np.concatenate([a / 2.0, -a / 2.0])
    const = f.constant + float(a.sum()) / 2.0
    us, vs, bs = [], [], []
    neg = f.pair_b <= 0.0
    u, v, b = f.pair_u[neg], f.pair_v[neg], f.pair_b[neg]
    # (b/2) y_u y_v + (b/2) (1 - y'_u)(1 - y'_v)
    us += [u, u + n]
    vs += [v, v + n]
    bs += [b / 2.0, b / 2.0]
    np.add.at(unary, u + n, -b / 2.0)
    np.add.at(unary, v + n, -b / 2.0)
    const += float(b.sum()) / 2.0
    u, v, b = f.pair_u[~neg], f.pair_v[~neg], f.pair_b[~neg]
    # (b/2) y_u (1 - y'_v) + (b/2) (1 - y'_u) y_v
    np.add.at(unary, u, b / 2.0)
    np.add.at(unary, v, b / 2.0)
    us += [u, u + n]
    vs += [v + n, v]
    bs += [-b / 2.0, -b / 2.0]
    return QuadraticPBF(2 * n, const, unary, np.concatenate(us), np.concatenate(vs),
                        np.concatenate(bs))


def _labels_from_doubled(y: np.ndarray, n: int) -> np.ndarray:
    y1, y2 = y[:n], y[n:]
    labels = np.full(n, UNLABELED, dtype=np.int8)
    labels[(y1 == 1) & (y2 == 0)] = 1
    labels[(y1 == 0) & (y2 == 1)] = 0
    return labels


def qpbo(f: QuadraticPBF):
    """Roof-dual lower bound and a persistent partial labeling.

    Returns ``(lower_bound, PartialLabeling)``.  A submodular ``f`` is solved
    exactly and every variable is labeled.
    """
    if f.is_submodular:
        sol = minimize_submodular(f)
        return sol.min_value, PartialLabeling(sol.assignment.astype(np.int8))
    g = doubled_function(f)
    sol = minimize_submodular(g)
    return sol.min_value, PartialLabeling(_labels_from_doubled(sol.assignment, f.num_vars))


def pairwise_lp_values(half: np.ndarray, f: QuadraticPBF) -> np.ndarray:
    """Pairwise LP values for each term of ``f`` from half-integral unaries."""
    yu, yv = half[f.pair_u], half[f.pair_v]
    return np.where(f.pair_b <= 0.0, np.minimum(yu, yv), np.maximum(0.0, yu + yv - 1.0))


class QPBOHandle:
    """Roof-dual oracle over a fixed pairwise structure with changing unaries."""

    def __init__(self, f: QuadraticPBF):
        self.n = f.num_vars
        self.f = f.copy()
        self.exact = f.is_submodular
        self._handle = FlowHandle(f if self.exact else doubled_function(f))

    def update_unary(self, v: int, delta: float) -> None:
        delta = float(delta)
        if delta == 0.0:
            return
        self.f.unary[v] += delta
        if self.exact:
            self._handle.update_unary(v, delta)
        else:
            self._handle.update_unary(v, delta / 2.0)
            self._handle.update_unary(v + self.n, -delta / 2.0)
            self._handle.f.constant += delta / 2.0
            self._handle._solution = None

    def update_unaries(self, deltas) -> None:
        deltas = np.asarray(deltas, dtype=float)
        for v in np.flatnonzero(deltas).tolist():
            self.update_unary(v, deltas[v])

    def set_constant(self, c: float) -> None:
        diff = float(c) - self.f.constant
        self.f.constant = float(c)
        self._handle.set_constant(self._handle.f.constant + diff)

    def solve(self):
        sol = self._handle.resolve()
        if self.exact:
            return sol.min_value, PartialLabeling(sol.assignment.astype(np.int8))
        return sol.min_value, PartialLabeling(_labels_from_doubled(sol.assignment, self.n))
