"""Configuration, traces and the bookkeeping shared by all dual ascent drivers."""
from __future__ import annotations

import csv
import math
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..dual import DualPoint, SMROracle
from ..energy import EnergyModel, evaluate_energy, is_feasible
from ..primal import decode, icm, unary_argmin

METHODS = ("subgradient", "bundle", "agg-bundle", "quasi", "coord", "nsmr")

TRACE_COLUMNS = ("iter", "time_ms", "oracle_calls", "dual", "best_dual", "primal",
                 "best_primal", "step", "subgrad_norm")


@dataclass
class OptimizerConfig:
    method: str = "subgradient"
    gamma: float = 0.7
    w_min: float = 1e-10
    w_max: float = 100.0
    m_L: float = 0.2
    m_r: float = 0.001
    bundle_size: int = 100
    memory: int = 10
    max_iter: int = 1000
    time_budget: float = math.inf
    dual_tol: float = 1e-6
    patience: int = 20
    # iterations without a new best dual before the subgradient scale is halved
    stall: int = 10
    gap_tol: float = 1e-9
    icm_sweeps: int = 5
    nsmr_driver: str = "subgradient"
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not 0 < self.w_min <= self.w_max:
            raise ValueError("need 0 < w_min <= w_max")
        if not 0 < self.m_L < 1:
            raise ValueError("m_L must lie in (0, 1)")
        if self.bundle_size < 2:
            raise ValueError("bundle_size must be at least 2")
        if self.memory < 0:
            raise ValueError("memory must be non-negative")

    def with_(self, **changes) -> "OptimizerConfig":
        return replace(self, **changes)


_DEFAULTS = {
    "subgradient": dict(gamma=0.7),
    "bundle": dict(gamma=0.1, m_L=0.2, w_max=100.0),
    "agg-bundle": dict(gamma=0.02, m_r=0.001, w_max=500.0),
    "quasi": dict(gamma=0.7, memory=10),
    "coord": dict(),
    "nsmr": dict(gamma=0.7),
}


def default_config(method: str = "subgradient", **overrides) -> OptimizerConfig:
    """Tuned defaults per method; keyword arguments override them."""
    params = dict(_DEFAULTS[method])
    params.update(overrides)
    return OptimizerConfig(method=method, **params)


@dataclass
class TraceRow:
    iter: int
    time_ms: float
    oracle_calls: int
    dual: float
    best_dual: float
    primal: float
    best_primal: float
    step: float
    subgrad_norm: float


@dataclass
class Trace:
    rows: list = field(default_factory=list)
    stop_reason: str = ""
    # coordinate ascent: one record per accepted multiplier update
    updates: list = field(default_factory=list)

    def append(self, row: TraceRow) -> None:
        self.rows.append(row)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def __len__(self):
        return len(self.rows)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_COLUMNS)
            for r in self.rows:
                d = asdict(r)
                w.writerow([d[c] if isinstance(d[c], int) else repr(float(d[c]))
                            for c in TRACE_COLUMNS])


class DualRun:
    """Oracle access plus best-point, primal and stopping bookkeeping.

    Dual points are handled as flat vectors ``[lam, xi, pi]``; ``pi`` is
    projected onto the non-negative orthant before every evaluation.
    """

    def __init__(self, model: EnergyModel, cfg: OptimizerConfig, mode: str = "smr"):
        self.model = model
        self.cfg = cfg
        self.oracle = SMROracle(model, mode)
        self.trace = Trace()
        self.n = model.num_nodes
        self.n_eq = len(model.linear_eq)
        self.dim = self.n + self.n_eq + len(model.linear_ineq)
        self.t0 = time.perf_counter()
        self.best_dual = -math.inf
        self.best_vec = np.zeros(self.dim)
        self.best_eval = None
        x0 = unary_argmin(model)
        e0 = evaluate_energy(model, x0)
        self.a0 = e0
        self.best_primal = math.inf
        self.best_labeling = None
        self.last_primal = math.nan
        self._offer_primal(x0, e0)
        self.gamma = cfg.gamma
        self._since_best = 0
        self.certified = False

    # -- points ----------------------------------------------------------

    def project(self, vec: np.ndarray) -> np.ndarray:
        vec = np.array(vec, dtype=float)
        tail = vec[self.n + self.n_eq:]
        np.maximum(tail, 0.0, out=tail)
        return vec

    def point(self, vec) -> DualPoint:
        return DualPoint.from_vector(self.model, vec)

    # -- primal ------------------------------------------------------------

    def _offer_primal(self, x, energy) -> None:
        self.last_primal = energy
        if self.model.has_constraints and not is_feasible(self.model, x):
            return
        if energy < self.best_primal:
            self.best_primal = energy
            self.best_labeling = np.array(x)

    @property
    def target(self) -> float:
        """Estimate ``A`` of the optimum used by the adaptive step rules."""
        a = self.best_primal if math.isfinite(self.best_primal) else self.a0
        if math.isfinite(self.best_dual):
            floor = self.best_dual + 1e-2 * (1.0 + abs(self.best_dual))
            if not a > self.best_dual:
                a = floor
        return a

    # -- evaluation --------------------------------------------------------

    def evaluate(self, vec):
        """Dual value and supergradient at ``vec`` (already projected)."""
        ev = self.oracle.evaluate(self.point(vec))
        if self.cfg.icm_sweeps >= 0:
            dec = decode(self.model, ev)
            x = icm(self.model, dec.labeling, self.cfg.icm_sweeps) if self.cfg.icm_sweeps else dec.labeling
            self._offer_primal(x, evaluate_energy(self.model, x))
        if ev.value > self.best_dual:
            improved = ev.value - self.best_dual
            self.best_dual = ev.value
            self.best_vec = np.array(vec, dtype=float)
            self.best_eval = ev
            if improved > 1e-12 * (1.0 + abs(ev.value)):
                self._since_best = 0
        else:
            self._since_best += 1
        if ev.strong_certificate and not self.certified:
            # the certified point is returned even if it ties the best value
            self.certified = True
            self.best_dual = max(self.best_dual, ev.value)
            self.best_vec = np.array(vec, dtype=float)
            self.best_eval = ev
        return ev.value, ev.subgradient, ev

    def stalled(self) -> bool:
        if self._since_best >= self.cfg.stall:
            self._since_best = 0
            return True
        return False

    def log(self, it: int, value: float, step: float, gnorm: float) -> None:
        self.trace.append(TraceRow(
            iter=it,
            time_ms=1000.0 * (time.perf_counter() - self.t0),
            oracle_calls=self.oracle.calls,
            dual=float(value),
            best_dual=float(self.best_dual),
            primal=float(self.last_primal),
            best_primal=float(self.best_primal),
            step=float(step),
            subgrad_norm=float(gnorm),
        ))

    def stop_reason(self, it: int):
        cfg = self.cfg
        if self.certified:
            return "certificate"
        if math.isfinite(self.best_primal) and \
                self.best_primal - self.best_dual <= cfg.gap_tol * self.model.scale:
            return "zero-gap"
        if it + 1 >= cfg.max_iter:
            return "max-iter"
        if time.perf_counter() - self.t0 >= cfg.time_budget:
            return "time-budget"
        rows = self.trace.rows
        k = cfg.patience
        if k and len(rows) > k:
            old, new = rows[-k - 1].best_dual, rows[-1].best_dual
            if math.isfinite(old) and new - old < cfg.dual_tol * (1.0 + abs(new)):
                return "plateau"
        return None

    def result(self, reason: str):
        self.trace.stop_reason = reason
        return self.point(self.best_vec), self.trace
