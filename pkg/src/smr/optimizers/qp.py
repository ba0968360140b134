"""Small convex QP over the probability simplex (bundle subproblem)."""
from __future__ import annotations

import numpy as np


def simplex_qp(Q: np.ndarray, e: np.ndarray, max_iter: int = 500, tol: float = 1e-12):
    """Minimize ``0.5 a'Qa + e'a`` subject to ``sum(a) = 1, a >= 0``.

    Primal active-set method.  ``Q`` must be symmetric positive semidefinite;
    a tiny ridge keeps the equality-constrained subproblems non-singular.
    """
    Q = np.asarray(Q, dtype=float)
    e = np.asarray(e, dtype=float)
    k = len(e)
    if k == 1:
        return np.ones(1)
    ridge = 1e-12 * max(1.0, float(np.trace(Q)) / k)
    Qr = Q + ridge * np.eye(k)
    scale = max(1.0, float(np.abs(Qr).max()), float(np.abs(e).max()))
    a = np.zeros(k)
    a[int(np.argmin(0.5 * np.diag(Qr) + e))] = 1.0
    free = a > 0
    for _ in range(max_iter):
        F = np.flatnonzero(free)
        m = len(F)
        kkt = np.zeros((m + 1, m + 1))
        kkt[:m, :m] = Qr[np.ix_(F, F)]
        kkt[:m, m] = -1.0
        kkt[m, :m] = 1.0
        rhs = np.concatenate([-e[F], [1.0]])
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
        cand = np.zeros(k)
        cand[F] = sol[:m]
        if np.all(cand[F] >= -tol):
            a = np.maximum(cand, 0.0)
            a /= a.sum()
            grad = Qr @ a + e
            mu = sol[m]
            mult = grad - mu
            mult[free] = 0.0
            j = int(np.argmin(mult))
            if mult[j] >= -tol * scale:
                return a
            free[j] = True
            continue
        # step towards the candidate until a weight hits zero
        d = cand - a
        block = F[d[F] < 0]
        ratios = a[block] / -d[block]
        t = float(np.min(ratios))
        a = a + t * d
        hit = block[ratios <= t + 1e-15]
        a[hit] = 0.0
        a = np.maximum(a, 0.0)
        a /= a.sum()
        free[hit] = False
        if not free.any():
            free[int(np.argmax(a))] = True
    return a
