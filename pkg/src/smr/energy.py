"""Multilabel MRF energies: unary, pairwise, sparse pattern and robust pattern
potentials plus global linear constraints on the label indicators.

The value of every potential is computed through a single indicator-based
routine (:func:`indicator_energy`) so that the energy of a labeling and the
Lagrangian evaluated at a consistent minimizer go through identical
floating-point arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from types import SimpleNamespace
from typing import Sequence

import numpy as np

__all__ = [
    "InvalidModelError",
    "PairwiseTerm",
    "PatternPotential",
    "RobustEntry",
    "RobustPatternPotential",
    "LinearConstraint",
    "EnergyModel",
    "robust_pn_potts",
    "evaluate_energy",
    "constraint_violation",
    "shift_patterns",
    "subtract_pairwise_max",
    "validate",
    "one_hot",
]

ASSOCIATIVE = "assoc"
DENSE = "dense"


class InvalidModelError(ValueError):
    """Raised when a model or labeling does not satisfy the model invariants."""


@dataclass(frozen=True)
class PairwiseTerm:
    """Pairwise potential between nodes ``i`` and ``j``.

    ``kind`` is ``"assoc"`` (``values`` holds the per-label rewards, the
    potential is ``-values[p]`` when both nodes take label ``p`` and 0
    otherwise) or ``"dense"`` (``values`` is the full label-by-label table,
    rows indexed by the label of ``i``).
    """

    i: int
    j: int
    kind: str
    values: np.ndarray

    @classmethod
    def associative(cls, i: int, j: int, rewards) -> "PairwiseTerm":
        return cls(int(i), int(j), ASSOCIATIVE, _frozen(rewards))

    @classmethod
    def potts(cls, i: int, j: int, weight: float, num_labels: int) -> "PairwiseTerm":
        return cls.associative(i, j, np.full(num_labels, float(weight)))

    @classmethod
    def dense(cls, i: int, j: int, table) -> "PairwiseTerm":
        return cls(int(i), int(j), DENSE, _frozen(table))

    @property
    def is_associative(self) -> bool:
        return self.kind == ASSOCIATIVE

    def table(self) -> np.ndarray:
        if self.kind == DENSE:
            return np.asarray(self.values)
        return -np.diag(self.values)

    def value(self, xi: int, xj: int) -> float:
        if self.kind == DENSE:
            return float(self.values[xi, xj])
        return -float(self.values[xi]) if xi == xj else 0.0


@dataclass(frozen=True)
class PatternPotential:
    """Sparse pattern-based potential: ``value`` if the nodes take ``labels``.

    ``entries`` is a sequence of ``(labels, value)`` pairs; labelings not
    listed cost zero.
    """

    nodes: tuple
    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(int(n) for n in self.nodes))
        object.__setattr__(
            self,
            "entries",
            tuple((tuple(int(l) for l in d), float(v)) for d, v in self.entries),
        )

    def value(self, x_c) -> float:
        x_c = tuple(int(l) for l in x_c)
        for d, v in self.entries:
            if d == x_c:
                return v
        return 0.0


@dataclass(frozen=True)
class RobustEntry:
    labels: tuple
    value: float
    weights: tuple

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(int(l) for l in self.labels))
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))


@dataclass(frozen=True)
class RobustPatternPotential:
    """Robust pattern potential.

    Each entry contributes ``min(0, value + sum_l weights[l] * [x_l != labels[l]])``.
    """

    nodes: tuple
    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(int(n) for n in self.nodes))
        entries = tuple(
            e if isinstance(e, RobustEntry) else RobustEntry(*e) for e in self.entries
        )
        object.__setattr__(self, "entries", entries)

    def value(self, x_c) -> float:
        total = 0.0
        for e in self.entries:
            dev = e.value + sum(
                w for w, xl, dl in zip(e.weights, x_c, e.labels) if xl != dl
            )
            total += min(0.0, dev)
        return total


def robust_pn_potts(nodes, num_labels: int, gamma: float, q: float) -> RobustPatternPotential:
    """Robust P^n-Potts block as a robust pattern potential (reward ``gamma``,
    truncation after ``q`` deviating nodes)."""
    nodes = tuple(nodes)
    w = gamma / q
    entries = [
        RobustEntry((p,) * len(nodes), -gamma, (w,) * len(nodes)) for p in range(num_labels)
    ]
    return RobustPatternPotential(nodes, tuple(entries))


@dataclass(frozen=True)
class LinearConstraint:
    """``sum coef * y[node, label]`` compared against ``rhs``.

    ``terms`` holds ``(node, label, coef)`` triples.
    """

    terms: tuple
    rhs: float

    def __post_init__(self):
        object.__setattr__(
            self, "terms", tuple((int(n), int(l), float(c)) for n, l, c in self.terms)
        )
        object.__setattr__(self, "rhs", float(self.rhs))


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class EnergyModel:
    num_nodes: int
    num_labels: int
    unary: np.ndarray
    pairwise: tuple = ()
    patterns: tuple = ()
    robust_patterns: tuple = ()
    linear_eq: tuple = ()
    linear_ineq: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "num_nodes", int(self.num_nodes))
        object.__setattr__(self, "num_labels", int(self.num_labels))
        object.__setattr__(self, "unary", _frozen(self.unary))
        for name in ("pairwise", "patterns", "robust_patterns", "linear_eq", "linear_ineq"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.unary.shape != (self.num_nodes, self.num_labels):
            raise InvalidModelError(
                f"unary table has shape {self.unary.shape}, "
                f"expected {(self.num_nodes, self.num_labels)}"
            )

    @property
    def shape(self):
        return self.num_nodes, self.num_labels

    @property
    def has_constraints(self) -> bool:
        return bool(self.linear_eq or self.linear_ineq)

    @property
    def is_associative(self) -> bool:
        return all(t.is_associative for t in self.pairwise)

    @property
    def is_pairwise(self) -> bool:
        return not self.patterns and not self.robust_patterns

    def with_(self, **changes) -> "EnergyModel":
        return replace(self, **changes)

    @cached_property
    def arrays(self) -> SimpleNamespace:
        """Flat numpy views of all potentials, built once per model."""
        L = self.num_labels
        assoc = [t for t in self.pairwise if t.kind == ASSOCIATIVE]
        dense = [t for t in self.pairwise if t.kind == DENSE]
        a = SimpleNamespace()
        a.assoc_i = np.array([t.i for t in assoc], dtype=np.intp)
        a.assoc_j = np.array([t.j for t in assoc], dtype=np.intp)
        a.assoc_c = np.array([t.values for t in assoc], dtype=float).reshape(len(assoc), L)
        a.dense_i = np.array([t.i for t in dense], dtype=np.intp)
        a.dense_j = np.array([t.j for t in dense], dtype=np.intp)
        a.dense_t = np.array([t.values for t in dense], dtype=float).reshape(len(dense), L, L)

        vals, sizes, m_ent, m_node, m_lab = [], [], [], [], []
        for pot in self.patterns:
            for d, v in pot.entries:
                q = len(vals)
                vals.append(v)
                sizes.append(len(pot.nodes))
                m_ent.extend([q] * len(pot.nodes))
                m_node.extend(pot.nodes)
                m_lab.extend(d)
        a.pat_value = np.array(vals, dtype=float)
        a.pat_size = np.array(sizes, dtype=float)
        a.pat_ent = np.array(m_ent, dtype=np.intp)
        a.pat_node = np.array(m_node, dtype=np.intp)
        a.pat_label = np.array(m_lab, dtype=np.intp)

        vals, r_ent, r_node, r_lab, r_w = [], [], [], [], []
        for pot in self.robust_patterns:
            for e in pot.entries:
                r = len(vals)
                vals.append(e.value)
                r_ent.extend([r] * len(pot.nodes))
                r_node.extend(pot.nodes)
                r_lab.extend(e.labels)
                r_w.extend(e.weights)
        a.rob_value = np.array(vals, dtype=float)
        a.rob_ent = np.array(r_ent, dtype=np.intp)
        a.rob_node = np.array(r_node, dtype=np.intp)
        a.rob_label = np.array(r_lab, dtype=np.intp)
        a.rob_weight = np.array(r_w, dtype=float)

        a.eq = _constraint_arrays(self.linear_eq, self.num_nodes, L)
        a.ineq = _constraint_arrays(self.linear_ineq, self.num_nodes, L)
        for v in vars(a).values():
            if isinstance(v, np.ndarray):
                v.setflags(write=False)
        return a

    @cached_property
    def scale(self) -> float:
        """Magnitude used for relative tolerances."""
        a = self.arrays
        parts = [np.abs(self.unary).sum(), np.abs(a.assoc_c).sum(), np.abs(a.dense_t).sum(),
                 np.abs(a.pat_value).sum(), np.abs(a.rob_value).sum()]
        return 1.0 + float(sum(parts))


def _constraint_arrays(constraints, n, L) -> SimpleNamespace:
    rows, nodes, labels, coefs = [], [], [], []
    for m, c in enumerate(constraints):
        for node, label, coef in c.terms:
            rows.append(m)
            nodes.append(node)
            labels.append(label)
            coefs.append(coef)
    ns = SimpleNamespace(
        row=np.array(rows, dtype=np.intp),
        node=np.array(nodes, dtype=np.intp),
        label=np.array(labels, dtype=np.intp),
        coef=np.array(coefs, dtype=float),
        rhs=np.array([c.rhs for c in constraints], dtype=float),
        count=len(constraints),
    )
    return ns


def constraint_lhs(cons: SimpleNamespace, y: np.ndarray) -> np.ndarray:
    """``sum coef * y`` per constraint row for an indicator table ``y``."""
    if cons.count == 0:
        return np.zeros(0)
    contrib = cons.coef * y[cons.node, cons.label]
    return np.bincount(cons.row, weights=contrib, minlength=cons.count)


# ---------------------------------------------------------------------------
# evaluation


def one_hot(model: EnergyModel, x) -> np.ndarray:
    x = check_labeling(model, x)
    y = np.zeros((model.num_nodes, model.num_labels))
    y[np.arange(model.num_nodes), x] = 1.0
    return y


def check_labeling(model: EnergyModel, x) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (model.num_nodes,):
        raise InvalidModelError(
            f"labeling has shape {x.shape}, expected ({model.num_nodes},)"
        )
    if not np.issubdtype(x.dtype, np.integer):
        if not np.all(np.equal(np.mod(x, 1), 0)):
            raise InvalidModelError("labeling must contain integer labels")
        x = x.astype(np.intp)
    if x.size and (x.min() < 0 or x.max() >= model.num_labels):
        raise InvalidModelError("label out of range")
    return x.astype(np.intp, copy=False)


def optimal_switches(model: EnergyModel, y: np.ndarray):
    """Switching variables minimizing the reduced pattern terms for fixed ``y``."""
    a = model.arrays
    z_pat = np.zeros(len(a.pat_value))
    if len(a.pat_value):
        s = np.bincount(a.pat_ent, weights=y[a.pat_node, a.pat_label], minlength=len(a.pat_value))
        z_pat = ((s == a.pat_size) & (a.pat_value < 0)).astype(float)
    z_rob = np.zeros(len(a.rob_value))
    if len(a.rob_value):
        z_rob = (_robust_deviation(a, y) < 0).astype(float)
    return z_pat, z_rob


def _robust_deviation(a, y):
    miss = a.rob_weight * (1.0 - y[a.rob_node, a.rob_label])
    return a.rob_value + np.bincount(a.rob_ent, weights=miss, minlength=len(a.rob_value))


def indicator_energy(model: EnergyModel, y: np.ndarray, z_pat=None, z_rob=None) -> float:
    """Energy of binary indicators ``y`` (nodes x labels) with pattern switches.

    For pattern entries this is the reduced pairwise form
    ``-value * ((|C|-1) z - sum_l y z)`` and for robust entries
    ``z * (value + sum_l w_l (1 - y))``; with optimal switches and one-hot
    ``y`` it equals the multilabel energy.
    """
    a = model.arrays
    if z_pat is None or z_rob is None:
        zp, zr = optimal_switches(model, y)
        z_pat = zp if z_pat is None else z_pat
        z_rob = zr if z_rob is None else z_rob
    total = float(np.sum(model.unary * y))
    if len(a.assoc_i):
        total += float(-np.sum(a.assoc_c * y[a.assoc_i] * y[a.assoc_j]))
    if len(a.dense_i):
        total += float(np.einsum("epq,ep,eq->", a.dense_t, y[a.dense_i], y[a.dense_j]))
    if len(a.pat_value):
        s = np.bincount(a.pat_ent, weights=y[a.pat_node, a.pat_label], minlength=len(a.pat_value))
        total += float(np.sum(-a.pat_value * ((a.pat_size - 1.0) * z_pat - s * z_pat)))
    if len(a.rob_value):
        total += float(np.sum(z_rob * _robust_deviation(a, y)))
    return total


def evaluate_energy(model: EnergyModel, x) -> float:
    """Energy of labeling ``x``; global constraints are not included."""
    y = one_hot(model, x)
    a = model.arrays
    # switches equal the match indicators here, whatever the sign of the value
    z_pat = np.zeros(len(a.pat_value))
    if len(a.pat_value):
        s = np.bincount(a.pat_ent, weights=y[a.pat_node, a.pat_label], minlength=len(a.pat_value))
        z_pat = (s == a.pat_size).astype(float)
    return indicator_energy(model, y, z_pat, None)


def constraint_violation(model: EnergyModel, x):
    """Return ``(eq_residuals, ineq_excess)`` of labeling ``x``."""
    y = one_hot(model, x)
    a = model.arrays
    eq = constraint_lhs(a.eq, y) - a.eq.rhs
    ineq = np.maximum(0.0, constraint_lhs(a.ineq, y) - a.ineq.rhs)
    return eq, ineq


def is_feasible(model: EnergyModel, x, tol: float = 1e-9) -> bool:
    eq, ineq = constraint_violation(model, x)
    return bool(np.all(np.abs(eq) <= tol) and np.all(ineq <= tol))


# ---------------------------------------------------------------------------
# transformations


def shift_patterns(model: EnergyModel):
    """Subtract the largest positive value from every pattern potential.

    Returns ``(shifted_model, offset)`` with
    ``E(model, x) == E(shifted, x) + offset`` for every labeling.
    """
    offset = 0.0
    shifted = []
    for pot in model.patterns:
        top = max((v for _, v in pot.entries), default=0.0)
        if top > 0:
            shifted.append(_shift_one(pot, top, model.num_labels))
            offset += top
        else:
            shifted.append(pot)
    if offset == 0.0:
        return model, 0.0
    return model.with_(patterns=tuple(shifted)), offset


def _shift_one(pot: PatternPotential, top: float, num_labels: int) -> PatternPotential:
    # Labelings outside the entry list cost 0, i.e. -top after the shift; they
    # must be listed explicitly unless every labeling is already an entry.
    listed = {d: v - top for d, v in pot.entries}
    full = num_labels ** len(pot.nodes)
    if len(listed) < full:
        for d in np.ndindex(*(num_labels,) * len(pot.nodes)):
            if d not in listed:
                listed[d] = -top
    entries = tuple((d, v) for d, v in sorted(listed.items()) if v != 0.0)
    return PatternPotential(pot.nodes, entries)


def subtract_pairwise_max(model: EnergyModel):
    """Make every dense pairwise table non-positive by subtracting its maximum.

    Returns ``(model', offset)``; the minimizers are unchanged and
    ``E(model, x) == E(model', x) + offset``.
    """
    offset = 0.0
    terms = []
    for t in model.pairwise:
        if t.kind == DENSE:
            top = float(np.max(t.values))
            if top > 0:
                terms.append(PairwiseTerm.dense(t.i, t.j, t.values - top))
                offset += top
                continue
        terms.append(t)
    return model.with_(pairwise=tuple(terms)), offset


# ---------------------------------------------------------------------------
# validation


def validate(model: EnergyModel) -> list:
    """List of human-readable invariant violations (empty if well formed)."""
    errors = []
    n, L = model.num_nodes, model.num_labels
    if n < 1:
        errors.append("num_nodes must be >= 1")
    if L < 2:
        errors.append("num_labels must be >= 2")
    if not np.all(np.isfinite(model.unary)):
        errors.append("unary table has non-finite entries")

    def node_ok(v):
        return 0 <= v < n

    def label_ok(v):
        return 0 <= v < L

    seen = set()
    for k, t in enumerate(model.pairwise):
        if not (node_ok(t.i) and node_ok(t.j)):
            errors.append(f"pairwise[{k}]: node index out of range")
        if t.i == t.j:
            errors.append(f"pairwise[{k}]: self loop on node {t.i}")
        key = (min(t.i, t.j), max(t.i, t.j))
        if key in seen:
            errors.append(f"pairwise[{k}]: duplicate edge {key}")
        seen.add(key)
        if t.kind == ASSOCIATIVE:
            if t.values.shape != (L,):
                errors.append(f"pairwise[{k}]: associative rewards must have length {L}")
            elif np.any(t.values < 0):
                errors.append(f"pairwise[{k}]: negative associative reward")
        elif t.kind == DENSE:
            if t.values.shape != (L, L):
                errors.append(f"pairwise[{k}]: dense table must be {L}x{L}")
        else:
            errors.append(f"pairwise[{k}]: unknown kind {t.kind!r}")
        if not np.all(np.isfinite(t.values)):
            errors.append(f"pairwise[{k}]: non-finite values")

    pattern_sets = set()
    for k, pot in enumerate(model.patterns):
        errors.extend(_check_clique(f"patterns[{k}]", pot.nodes, node_ok))
        if tuple(pot.nodes) in pattern_sets:
            errors.append(f"patterns[{k}]: another pattern potential uses the same nodes")
        pattern_sets.add(tuple(pot.nodes))
        labelings = [d for d, _ in pot.entries]
        if len(set(labelings)) != len(labelings):
            errors.append(f"patterns[{k}]: duplicate labelings")
        for d, v in pot.entries:
            if len(d) != len(pot.nodes) or not all(label_ok(l) for l in d):
                errors.append(f"patterns[{k}]: bad labeling {d}")
            if not np.isfinite(v):
                errors.append(f"patterns[{k}]: non-finite value")

    robust_sets = set()
    for k, pot in enumerate(model.robust_patterns):
        errors.extend(_check_clique(f"robust_patterns[{k}]", pot.nodes, node_ok))
        if tuple(pot.nodes) in robust_sets:
            errors.append(f"robust_patterns[{k}]: another robust potential uses the same nodes")
        robust_sets.add(tuple(pot.nodes))
        for e in pot.entries:
            if len(e.labels) != len(pot.nodes) or not all(label_ok(l) for l in e.labels):
                errors.append(f"robust_patterns[{k}]: bad labeling {e.labels}")
            if len(e.weights) != len(pot.nodes):
                errors.append(f"robust_patterns[{k}]: need one weight per node")
            if e.value > 0:
                errors.append(f"robust_patterns[{k}]: positive value {e.value}")
            if any(w < 0 for w in e.weights):
                errors.append(f"robust_patterns[{k}]: negative deviation weight")

    for kind, group in (("linear_eq", model.linear_eq), ("linear_ineq", model.linear_ineq)):
        for k, c in enumerate(group):
            for node, label, coef in c.terms:
                if not (node_ok(node) and label_ok(label)):
                    errors.append(f"{kind}[{k}]: term ({node}, {label}) out of range")
                if not np.isfinite(coef):
                    errors.append(f"{kind}[{k}]: non-finite coefficient")
    return errors


def _check_clique(where, nodes, node_ok):
    errors = []
    if len(nodes) < 2:
        errors.append(f"{where}: clique of size {len(nodes)} (store it as a unary term)")
    if list(nodes) != sorted(set(nodes)):
        errors.append(f"{where}: nodes must be distinct and sorted")
    if not all(node_ok(v) for v in nodes):
        errors.append(f"{where}: node index out of range")
    return errors


def require_valid(model: EnergyModel) -> None:
    errors = validate(model)
    if errors:
        raise InvalidModelError("; ".join(errors))
