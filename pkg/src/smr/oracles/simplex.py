"""Dense two-phase tableau simplex, plus a sparse fallback for larger LPs."""
from __future__ import annotations

import numpy as np

from .lp import EQ, GE, LE, LinearProgram

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-9
# consecutive degenerate pivots before switching from Dantzig to Bland pricing
DEGENERATE_STREAK = 50
# tableau entries above which solve_lp(method="auto") hands over to HiGHS
DENSE_LIMIT = 4_000_000


class LPInfeasible(ValueError):
    """The constraints admit no solution."""


class LPUnbounded(ValueError):
    """The objective is unbounded below."""


class _Tableau:
    def __init__(self, T: np.ndarray, basis: np.ndarray):
        self.T = T
        self.basis = basis

    def pivot(self, r: int, c: int) -> None:
        T = self.T
        T[r] /= T[r, c]
        col = T[:, c].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.basis[r] = c

    def run(self, allowed: np.ndarray, max_pivots: int) -> None:
        """Minimize the objective in the last row over columns in ``allowed``."""
        T = self.T
        streak = 0
        for _ in range(max_pivots):
            red = T[-1, :-1]
            cand = np.flatnonzero(allowed & (red < -PIVOT_TOL))
            if len(cand) == 0:
                return
            bland = streak >= DEGENERATE_STREAK
            c = int(cand[0]) if bland else int(cand[np.argmin(red[cand])])
            colv = T[:-1, c]
            pos = np.flatnonzero(colv > PIVOT_TOL)
            if len(pos) == 0:
                raise LPUnbounded("objective is unbounded below")
            ratios = T[pos, -1] / colv[pos]
            best = ratios.min()
            ties = pos[ratios <= best + PIVOT_TOL * (1.0 + abs(best))]
            # Bland: leave with the smallest basic variable index among ties
            r = int(ties[np.argmin(self.basis[ties])]) if bland else int(ties[0])
            streak = streak + 1 if best <= PIVOT_TOL else 0
            self.pivot(r, c)
        raise RuntimeError("simplex pivot limit reached")


def _standard_rows(lp: LinearProgram):
    """Dense rows with finite upper bounds appended as ``x_k <= ub_k``."""
    A = lp.dense().astype(float)
    b = np.array(lp.b, dtype=float)
    senses = list(lp.senses)
    if np.any(lp.lb != 0):
        raise ValueError("simplex_solve expects zero lower bounds")
    bounded = np.flatnonzero(np.isfinite(lp.ub))
    if len(bounded):
        extra = np.zeros((len(bounded), lp.num_vars))
        extra[np.arange(len(bounded)), bounded] = 1.0
        A = np.vstack([A, extra])
        b = np.concatenate([b, lp.ub[bounded]])
        senses += [LE] * len(bounded)
    return A, b, senses


def simplex_solve(lp: LinearProgram, max_pivots: int = 100_000):
    """Optimal ``(value, x)`` of ``lp`` by the two-phase dense tableau method.

    Equality and ``>=`` rows receive artificial variables that phase one
    drives to zero; artificials left basic at zero are pivoted out or their
    (redundant) rows dropped.  Pricing is Dantzig's rule, switching to Bland's
    rule after a run of degenerate pivots so the method cannot cycle.
    """
    A, b, senses = _standard_rows(lp)
    m, n = A.shape
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0
    senses = [({LE: GE, GE: LE}.get(s, s) if f else s) for s, f in zip(senses, flip)]
    n_slack = sum(s in (LE, GE) for s in senses)
    n_art = sum(s in (EQ, GE) for s in senses)
    width = n + n_slack + n_art
    T = np.zeros((m + 1, width + 1))
    T[:m, :n] = A
    T[:m, -1] = b
    basis = np.empty(m, dtype=np.intp)
    k_s, k_a = n, n + n_slack
    for r, s in enumerate(senses):
        if s in (LE, GE):
            T[r, k_s] = 1.0 if s == LE else -1.0
            if s == LE:
                basis[r] = k_s
            k_s += 1
        if s in (EQ, GE):
            T[r, k_a] = 1.0
            basis[r] = k_a
            k_a += 1
    art = np.zeros(width, dtype=bool)
    art[n + n_slack:] = True
    tab = _Tableau(T, basis)

    # phase one: minimize the sum of artificials
    if n_art:
        rows = np.flatnonzero(art[basis])
        T[-1, :] = 0.0
        T[-1, :-1][art] = 1.0
        T[-1] -= T[rows].sum(axis=0)
        tab.run(np.ones(width, dtype=bool), max_pivots)
        if -T[-1, -1] > FEAS_TOL * (1.0 + np.abs(b).max(initial=0.0)):
            raise LPInfeasible("constraints are infeasible")
        keep = np.ones(m + 1, dtype=bool)
        for r in range(m):
            if not art[tab.basis[r]]:
                continue
            nz = np.flatnonzero(~art & (np.abs(T[r, :-1]) > PIVOT_TOL))
            if len(nz):
                tab.pivot(r, int(nz[0]))
            else:
                keep[r] = False
        tab.T = T = T[keep]
        tab.basis = tab.basis[keep[:-1]]

    # phase two: the true objective over non-artificial columns
    cost = np.zeros(width)
    cost[:n] = lp.c
    T[-1, :] = 0.0
    T[-1, :-1] = cost
    T[-1] -= cost[tab.basis] @ T[:-1]
    tab.run(~art, max_pivots)

    x = np.zeros(width)
    x[tab.basis] = T[:-1, -1]
    x = np.maximum(x[:n], 0.0)
    return float(lp.c @ x + lp.constant), x


def highs_solve(lp: LinearProgram):
    """Solve ``lp`` with scipy's HiGHS backend; returns ``(value, x)``."""
    from scipy.optimize import linprog

    A = lp.A.tocsr() if hasattr(lp.A, "tocsr") else np.asarray(lp.A)
    le, ge, eq = lp.senses == LE, lp.senses == GE, lp.senses == EQ
    A_ub = None
    b_ub = None
    if le.any() or ge.any():
        from scipy.sparse import vstack
        A_ub = vstack([A[np.flatnonzero(le)], -A[np.flatnonzero(ge)]])
        b_ub = np.concatenate([lp.b[le], -lp.b[ge]])
    A_eq = A[np.flatnonzero(eq)] if eq.any() else None
    b_eq = lp.b[eq] if eq.any() else None
    bounds = np.column_stack([lp.lb, np.where(np.isfinite(lp.ub), lp.ub, np.nan)])
    bounds = [(lo, None if np.isnan(hi) else hi) for lo, hi in bounds]
    res = linprog(lp.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs", options=dict(primal_feasibility_tolerance=1e-10,
                                               dual_feasibility_tolerance=1e-10))
    if res.status == 2:
        raise LPInfeasible(res.message)
    if res.status == 3:
        raise LPUnbounded(res.message)
    if res.status != 0:
        raise RuntimeError(res.message)
    return float(res.fun + lp.constant), np.asarray(res.x)


def solve_lp(lp: LinearProgram, method: str = "auto"):
    """``(value, x)`` by the dense simplex, HiGHS, or whichever suits the size."""
    if method == "auto":
        size = (lp.num_rows + int(np.isfinite(lp.ub).sum()) + 1) * (2 * lp.num_vars + lp.num_rows)
        method = "simplex" if size <= DENSE_LIMIT else "highs"
    if method == "simplex":
        return simplex_solve(lp)
    if method == "highs":
        return highs_solve(lp)
    raise ValueError(f"unknown LP method {method!r}")
