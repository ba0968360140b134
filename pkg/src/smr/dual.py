"""Lagrangian dual of the one-label-per-node constraints.

Relaxing ``sum_p y_ip = 1`` (and any global linear constraints) leaves a
quadratic pseudo-Boolean function of the indicators ``y_ip`` and of one
switching variable per pattern entry.  For the supported potentials that
function is submodular, so the dual value and a supergradient come from a
single min-cut.

Variable layout of the Lagrangian: ``y_ip`` at index ``i * L + p``, then one
``z`` per pattern entry (in model order), then one ``z`` per robust entry.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from types import SimpleNamespace

import numpy as np

from .energy import (
    EnergyModel,
    constraint_lhs,
    indicator_energy,
    optimal_switches,
    shift_patterns,
    subtract_pairwise_max,
)
from .pbf import FlowHandle, NotSubmodularError, QPBOHandle, QuadraticPBF

__all__ = [
    "DualPoint",
    "DualEvaluation",
    "AgreementReport",
    "NodeGaps",
    "NotDecomposableError",
    "SMROracle",
    "prepare_model",
    "build_lagrangian",
    "evaluate_dual",
    "decompose_per_label",
    "node_min_marginal_gaps",
    "agreement_sets",
]


class NotDecomposableError(ValueError):
    """The Lagrangian does not split into independent per-label subproblems."""


@dataclass
class DualPoint:
    """Multipliers: ``lam`` per node, ``xi`` per equality, ``pi >= 0`` per inequality."""

    lam: np.ndarray
    xi: np.ndarray = field(default_factory=lambda: np.zeros(0))
    pi: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=float).ravel()
        self.xi = np.asarray(self.xi, dtype=float).ravel()
        self.pi = np.asarray(self.pi, dtype=float).ravel()

    @classmethod
    def zeros(cls, model: EnergyModel) -> "DualPoint":
        return cls(np.zeros(model.num_nodes), np.zeros(len(model.linear_eq)),
                   np.zeros(len(model.linear_ineq)))

    @classmethod
    def from_vector(cls, model: EnergyModel, vec) -> "DualPoint":
        vec = np.asarray(vec, dtype=float)
        n, m = model.num_nodes, len(model.linear_eq)
        return cls(vec[:n].copy(), vec[n:n + m].copy(), vec[n + m:].copy())

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.lam, self.xi, self.pi])

    def projected(self) -> "DualPoint":
        return DualPoint(self.lam.copy(), self.xi.copy(), np.maximum(self.pi, 0.0))

    def copy(self) -> "DualPoint":
        return DualPoint(self.lam.copy(), self.xi.copy(), self.pi.copy())


@dataclass
class DualEvaluation:
    value: float
    subgrad_lambda: np.ndarray
    subgrad_xi: np.ndarray
    subgrad_pi: np.ndarray
    minimizer_y: np.ndarray
    minimizer_z: np.ndarray
    minimizer_z_robust: np.ndarray
    strong_certificate: bool
    # unary LP values in {0, 0.5, 1}; equals minimizer_y for exact oracles
    y_relaxed: np.ndarray = None

    @property
    def subgradient(self) -> np.ndarray:
        return np.concatenate([self.subgrad_lambda, self.subgrad_xi, self.subgrad_pi])


@dataclass
class AgreementReport:
    """Attainable values of each indicator over all Lagrangian minimizers.

    ``has_one[i, p]`` is True iff ``1`` is in ``Z_ip``; likewise ``has_zero``.
    """

    has_zero: np.ndarray
    has_one: np.ndarray
    strong_agreement: bool
    weak_agreement: bool
    mm0: np.ndarray = None
    mm1: np.ndarray = None

    def Z(self, i: int, p: int) -> frozenset:
        s = set()
        if self.has_zero[i, p]:
            s.add(0)
        if self.has_one[i, p]:
            s.add(1)
        return frozenset(s)


@dataclass
class NodeGaps:
    delta: np.ndarray
    d1: float
    d2: float
    p1: int
    p2: int


# ---------------------------------------------------------------------------
# construction


def prepare_model(model: EnergyModel, pairwise: bool = True):
    """Shift positive pattern values (and, if requested, positive dense
    entries) so the Lagrangian is submodular.  Returns ``(model', offset)``."""
    prepared, offset = shift_patterns(model)
    if pairwise:
        prepared, off2 = subtract_pairwise_max(prepared)
        offset += off2
    return prepared, offset


def _check_submodular(model: EnergyModel, allow_dense: bool) -> None:
    a = model.arrays
    if not allow_dense and len(a.dense_t) and np.max(a.dense_t) > 0:
        raise NotSubmodularError(
            "dense pairwise table has positive entries; apply subtract_pairwise_max "
            "or use the non-submodular (QPBO) oracle")
    if len(a.pat_value) and np.max(a.pat_value) > 0:
        raise NotSubmodularError("pattern value is positive; apply shift_patterns first")
    if len(a.rob_value) and (np.max(a.rob_value) > 0 or np.min(a.rob_weight, initial=0.0) < 0):
        raise NotSubmodularError("robust entries need values <= 0 and weights >= 0")


def _layout(model: EnergyModel) -> SimpleNamespace:
    a = model.arrays
    n, L = model.shape
    ny = n * L
    npat, nrob = len(a.pat_value), len(a.rob_value)
    return SimpleNamespace(n=n, L=L, ny=ny, npat=npat, nrob=nrob,
                           pat0=ny, rob0=ny + npat, total=ny + npat + nrob)


def _y_unary(model: EnergyModel, dp: DualPoint) -> np.ndarray:
    a = model.arrays
    u = model.unary + dp.lam[:, None]
    if a.eq.count:
        u = u.copy()
        np.add.at(u, (a.eq.node, a.eq.label), dp.xi[a.eq.row] * a.eq.coef)
    if a.ineq.count:
        u = u.copy()
        np.add.at(u, (a.ineq.node, a.ineq.label), dp.pi[a.ineq.row] * a.ineq.coef)
    return np.asarray(u, dtype=float)


def _lagrangian_constant(model: EnergyModel, dp: DualPoint) -> float:
    a = model.arrays
    return -(float(dp.lam.sum()) + float(dp.xi @ a.eq.rhs) + float(dp.pi @ a.ineq.rhs))


def _check_point(model: EnergyModel, dp: DualPoint) -> None:
    if dp.lam.shape != (model.num_nodes,):
        raise ValueError(f"lambda has shape {dp.lam.shape}, expected ({model.num_nodes},)")
    if dp.xi.shape != (len(model.linear_eq),) or dp.pi.shape != (len(model.linear_ineq),):
        raise ValueError("multiplier count does not match the model's constraints")


def build_lagrangian(model: EnergyModel, dp: DualPoint, allow_nonsubmodular: bool = False
                     ) -> QuadraticPBF:
    """The Lagrangian as a quadratic pseudo-Boolean function of ``(y, z)``."""
    _check_submodular(model, allow_nonsubmodular)
    _check_point(model, dp)
    a = model.arrays
    lay = _layout(model)
    L = lay.L
    unary = np.zeros(lay.total)
    unary[:lay.ny] = _y_unary(model, dp).ravel()
    us, vs, bs = [], [], []
    if len(a.assoc_i):
        p = np.arange(L)
        us.append((a.assoc_i[:, None] * L + p).ravel())
        vs.append((a.assoc_j[:, None] * L + p).ravel())
        bs.append(-a.assoc_c.ravel())
    if len(a.dense_i):
        p = np.arange(L)
        shape = (len(a.dense_i), L, L)
        us.append(np.broadcast_to(a.dense_i[:, None, None] * L + p[None, :, None], shape).ravel())
        vs.append(np.broadcast_to(a.dense_j[:, None, None] * L + p[None, None, :], shape).ravel())
        bs.append(a.dense_t.ravel())
    if lay.npat:
        unary[lay.pat0:lay.rob0] = -a.pat_value * (a.pat_size - 1.0)
        us.append(a.pat_node * L + a.pat_label)
        vs.append(lay.pat0 + a.pat_ent)
        bs.append(a.pat_value[a.pat_ent])
    if lay.nrob:
        wsum = np.bincount(a.rob_ent, weights=a.rob_weight, minlength=lay.nrob)
        unary[lay.rob0:] = a.rob_value + wsum
        us.append(a.rob_node * L + a.rob_label)
        vs.append(lay.rob0 + a.rob_ent)
        bs.append(-a.rob_weight)
    cat = (lambda xs, dt: np.concatenate(xs).astype(dt) if xs else np.zeros(0, dtype=dt))
    return QuadraticPBF(lay.total, _lagrangian_constant(model, dp), unary,
                        cat(us, np.intp), cat(vs, np.intp), cat(bs, float))


# ---------------------------------------------------------------------------
# oracle


class SMROracle:
    """Dual oracle with a persistent flow network.

    The model is made submodular first (positive pattern values and, unless
    ``mode="nsmr"``, positive dense entries are shifted away); the resulting
    constant is added back so values bound the original energy.  In
    ``"nsmr"`` mode dense tables keep their signs and the inner problem is
    bounded by roof duality.
    """

    def __init__(self, model: EnergyModel, mode: str = "smr"):
        if mode not in ("smr", "nsmr"):
            raise ValueError(f"unknown oracle mode {mode!r}")
        if mode == "nsmr" and not model.is_pairwise:
            raise NotSubmodularError("the QPBO oracle supports pairwise models only")
        self.model = model
        self.mode = mode
        self.prepared, self.offset = prepare_model(model, pairwise=(mode == "smr"))
        _check_submodular(self.prepared, allow_dense=(mode == "nsmr"))
        self.layout = _layout(self.prepared)
        zero = DualPoint.zeros(model)
        self.pbf = build_lagrangian(self.prepared, zero, allow_nonsubmodular=(mode == "nsmr"))
        self.exact = self.pbf.is_submodular
        if self.exact:
            self.handle = FlowHandle(self.pbf)
        else:
            self.handle = QPBOHandle(self.pbf)
        self._unary = self.pbf.unary[:self.layout.ny].copy()
        self._point = zero
        self.calls = 0

    # -- state -----------------------------------------------------------

    def _move_to(self, dp: DualPoint) -> None:
        _check_point(self.model, dp)
        new = _y_unary(self.prepared, dp).ravel()
        diff = new - self._unary
        if np.any(diff):
            self.handle.update_unaries(np.concatenate([diff, np.zeros(self.layout.total - self.layout.ny)]))
            self._unary = new
        const = _lagrangian_constant(self.prepared, dp)
        self.handle.set_constant(const)
        self._point = dp.copy()

    def _assignment(self):
        if self.exact:
            sol = self.handle.resolve()
            return sol.assignment.astype(float), sol.min_value
        bound, labels = self.handle.solve()
        return labels.half_integral(), bound

    # -- public ----------------------------------------------------------

    def evaluate(self, dp: DualPoint) -> DualEvaluation:
        self._move_to(dp)
        self.calls += 1
        lay = self.layout
        vals, bound = self._assignment()
        y = vals[:lay.ny].reshape(lay.n, lay.L)
        a = self.prepared.arrays
        g = y.sum(axis=1) - 1.0
        r_eq = constraint_lhs(a.eq, y) - a.eq.rhs
        r_in = constraint_lhs(a.ineq, y) - a.ineq.rhs
        integral = bool(np.all((y == 0.0) | (y == 1.0)))
        if self.exact:
            z_pat, z_rob = optimal_switches(self.prepared, y)
            value = indicator_energy(self.prepared, y, z_pat, z_rob)
            value += float(dp.lam @ g) + float(dp.xi @ r_eq) + float(dp.pi @ r_in)
        else:
            z_pat, z_rob = np.zeros(0), np.zeros(0)
            value = bound
        if self.offset:
            value += self.offset
        certificate = (integral and not np.any(g) and not np.any(r_eq)
                       and bool(np.all(r_in <= 0.0)) and not np.any(dp.pi * r_in))
        return DualEvaluation(
            value=float(value),
            subgrad_lambda=g,
            subgrad_xi=r_eq,
            subgrad_pi=r_in,
            minimizer_y=(y > 0.5).astype(np.int8) if integral else (y >= 0.5).astype(np.int8),
            minimizer_z=z_pat.astype(np.int8),
            minimizer_z_robust=z_rob.astype(np.int8),
            strong_certificate=certificate,
            y_relaxed=y,
        )

    def min_marginals(self, dp: DualPoint, nodes=None):
        """Arrays ``(MM0, MM1)`` of shape ``(len(nodes), L)`` for the indicators."""
        if not self.exact:
            raise NotSubmodularError("min-marginals need the exact (submodular) oracle")
        self._move_to(dp)
        lay = self.layout
        nodes = range(lay.n) if nodes is None else nodes
        nodes = list(nodes)
        mm0 = np.empty((len(nodes), lay.L))
        mm1 = np.empty((len(nodes), lay.L))
        for k, i in enumerate(nodes):
            for p in range(lay.L):
                mm0[k, p], mm1[k, p] = self.handle.min_marginals(i * lay.L + p)
        if self.offset:
            mm0 += self.offset
            mm1 += self.offset
        return mm0, mm1

    def node_gaps(self, dp: DualPoint, j: int) -> NodeGaps:
        mm0, mm1 = self.min_marginals(dp, [j])
        return _gaps(mm0[0] - mm1[0])


def _gaps(delta: np.ndarray) -> NodeGaps:
    order = sorted(range(len(delta)), key=lambda p: (-delta[p], p))
    p1, p2 = order[0], order[1]
    return NodeGaps(delta, float(delta[p1]), float(delta[p2]), p1, p2)


def evaluate_dual(model: EnergyModel, dp: DualPoint) -> DualEvaluation:
    """Dual value, supergradient and canonical Lagrangian minimizer at ``dp``.

    The model must already satisfy the submodularity preconditions.
    """
    _check_submodular(model, allow_dense=False)
    return SMROracle(model).evaluate(dp)


# ---------------------------------------------------------------------------
# per-label structure


def _var_labels(model: EnergyModel) -> np.ndarray:
    """Label owning each Lagrangian variable; raises if some variable spans labels."""
    if not model.is_associative:
        raise NotDecomposableError("dense pairwise terms couple different labels")
    a = model.arrays
    lay = _layout(model)
    owner = np.empty(lay.total, dtype=np.intp)
    owner[:lay.ny] = np.tile(np.arange(lay.L), lay.n)
    for ent, lab, count, start in ((a.pat_ent, a.pat_label, lay.npat, lay.pat0),
                                   (a.rob_ent, a.rob_label, lay.nrob, lay.rob0)):
        if not count:
            continue
        lo = np.full(count, lay.L)
        hi = np.full(count, -1)
        np.minimum.at(lo, ent, lab)
        np.maximum.at(hi, ent, lab)
        if np.any(lo != hi):
            raise NotDecomposableError("a pattern entry uses more than one label")
        owner[start:start + count] = lo
    return owner


def decompose_per_label(model: EnergyModel, dp) -> list:
    """Split the Lagrangian into ``L`` independent functions ``Phi_p``.

    ``dp`` is a :class:`DualPoint` or a plain lambda vector.  Each ``Phi_p``
    has zero constant; the dual value is
    ``sum_p min Phi_p - sum lambda - xi.c - pi.d``.  Variables of ``Phi_p``
    are the indicators ``y_0p .. y_(n-1)p`` followed by the switching
    variables of the entries labelled ``p``.
    """
    if not isinstance(dp, DualPoint):
        dp = DualPoint(dp, np.zeros(len(model.linear_eq)), np.zeros(len(model.linear_ineq)))
    owner = _var_labels(model)
    f = build_lagrangian(model, dp)
    parts = []
    for p in range(model.num_labels):
        idx = np.flatnonzero(owner == p)
        local = np.full(f.num_vars, -1, dtype=np.intp)
        local[idx] = np.arange(len(idx))
        keep = owner[f.pair_u] == p
        parts.append(QuadraticPBF(len(idx), 0.0, f.unary[idx], local[f.pair_u[keep]],
                                  local[f.pair_v[keep]], f.pair_b[keep]))
    return parts


def node_min_marginal_gaps(model: EnergyModel, lam, j: int) -> NodeGaps:
    """Min-marginal differences ``delta_p = MM_0 - MM_1`` of ``y_jp`` for all labels.

    ``d1 >= d2`` are the two largest values (ties toward the smaller label).
    """
    _var_labels(model)
    dp = lam if isinstance(lam, DualPoint) else DualPoint(
        lam, np.zeros(len(model.linear_eq)), np.zeros(len(model.linear_ineq)))
    return SMROracle(model).node_gaps(dp, j)


# ---------------------------------------------------------------------------
# agreement


def agreement_from_min_marginals(mm0: np.ndarray, mm1: np.ndarray, tol: float) -> AgreementReport:
    has_one = mm1 <= mm0 + tol
    has_zero = mm0 <= mm1 + tol
    only_one = has_one & ~has_zero
    only_zero = has_zero & ~has_one
    strong = bool(np.all(only_one.sum(axis=1) == 1) and np.all(only_one | only_zero))
    weak = bool(np.all(has_one.any(axis=1)))
    if weak:
        L = mm0.shape[1]
        for i in np.flatnonzero(only_one.any(axis=1)):
            for p in np.flatnonzero(only_one[i]):
                others = np.arange(L) != p
                if not np.all(has_zero[i, others]):
                    weak = False
                    break
            if not weak:
                break
    return AgreementReport(has_zero, has_one, strong, weak, mm0, mm1)


def agreement_sets(model: EnergyModel, dp: DualPoint, tol: float = None,
                   oracle: SMROracle = None) -> AgreementReport:
    """Classify every indicator by the values it takes over Lagrangian minimizers.

    Tolerance defaults to ``1e-9 * (1 + |D|)``.
    """
    if oracle is None:
        oracle = SMROracle(model)
    value = oracle.evaluate(dp).value
    if tol is None:
        tol = 1e-9 * (1.0 + abs(value))
    mm0, mm1 = oracle.min_marginals(dp)
    return agreement_from_min_marginals(mm0, mm1, tol)
