"""LP relaxation backends.

``simplex`` is a dense two-phase tableau method (Dantzig pricing, switching
to Bland's rule after a run of degenerate pivots). Relaxations above
``DENSE_CELL_LIMIT`` tableau cells go to HiGHS through scipy.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

DENSE_CELL_LIMIT = 250_000
IPM_MIN_COLUMNS = 5_000  # dual simplex stalls on the large degenerate relaxations
FEAS_TOL = 1e-7


@dataclass
class LpResult:
    status: str  # "optimal", "infeasible", "unbounded", "iteration_limit"
    x: np.ndarray | None
    fun: float
    backend: str
    iterations: int = 0


def _dense(a) -> np.ndarray:
    return a.toarray() if sp.issparse(a) else np.asarray(a, dtype=float)


def _pivot(t: np.ndarray, r: int, k: int) -> None:
    t[r] /= t[r, k]
    col = t[:, k].copy()
    col[r] = 0.0
    t -= np.outer(col, t[r])


def _iterate(t, basis, ncols, tol, max_iter, it0=0):
    """Primal simplex on tableau ``t`` (last row = reduced costs, last col = rhs)."""
    m = t.shape[0] - 1
    degenerate = 0
    bland = False
    it = it0
    while it < max_iter:
        z = t[-1, :ncols]
        if bland:
            cand = np.flatnonzero(z < -tol)
            if cand.size == 0:
                return "optimal", it
            k = int(cand[0])
        else:
            k = int(np.argmin(z))
            if z[k] >= -tol:
                return "optimal", it
        col = t[:m, k]
        pos = col > tol
        if not pos.any():
            return "unbounded", it
        ratios = np.full(m, np.inf)
        ratios[pos] = t[:m, -1][pos] / col[pos]
        rmin = ratios.min()
        ties = np.flatnonzero(ratios <= rmin + tol)
        r = int(ties[np.argmin(basis[ties])])
        degenerate = degenerate + 1 if rmin <= tol else 0
        if degenerate > 50:
            bland = True
        _pivot(t, r, k)
        basis[r] = k
        it += 1
    return "iteration_limit", it


def simplex(c, A_ub, b_ub, A_eq, b_eq, lb, ub, tol: float = FEAS_TOL, max_iter: int = 50_000) -> LpResult:
    """min c.x  s.t.  A_ub x <= b_ub, A_eq x = b_eq, lb <= x <= ub (lb finite)."""
    c = np.asarray(c, dtype=float)
    n = len(c)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    A_ub, A_eq = _dense(A_ub).reshape(-1, n), _dense(A_eq).reshape(-1, n)
    b_ub, b_eq = np.asarray(b_ub, dtype=float), np.asarray(b_eq, dtype=float)
    if np.any(ub < lb - tol):
        return LpResult("infeasible", None, np.inf, "simplex")

    free = ub - lb > tol
    x_fixed = lb.copy()
    b_ub = b_ub - A_ub @ x_fixed
    b_eq = b_eq - A_eq @ x_fixed
    A_ub, A_eq, cf = A_ub[:, free], A_eq[:, free], c[free]
    span = (ub - lb)[free]
    nf = int(free.sum())
    const = float(c @ x_fixed)

    # rows with no free columns are checked directly
    def trivial_ok(A, b, eq):
        empty = ~np.any(np.abs(A) > 0, axis=1)
        bad = np.abs(b[empty]) > tol if eq else b[empty] < -tol
        return not bad.any(), ~empty

    ok1, keep_ub = trivial_ok(A_ub, b_ub, False)
    ok2, keep_eq = trivial_ok(A_eq, b_eq, True)
    if not (ok1 and ok2):
        return LpResult("infeasible", None, np.inf, "simplex")
    A_ub, b_ub, A_eq, b_eq = A_ub[keep_ub], b_ub[keep_ub], A_eq[keep_eq], b_eq[keep_eq]

    fin = np.isfinite(span)
    bound_rows = np.eye(nf)[fin]
    A_le = np.vstack([A_ub, bound_rows])
    b_le = np.concatenate([b_ub, span[fin]])
    m_le, m_eq = A_le.shape[0], A_eq.shape[0]
    m = m_le + m_eq
    if nf == 0:
        return LpResult("optimal", x_fixed, const, "simplex")

    A = np.zeros((m, nf + m_le))
    A[:m_le, :nf] = A_le
    A[:m_le, nf:] = np.eye(m_le)
    A[m_le:, :nf] = A_eq
    b = np.concatenate([b_le, b_eq])
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1

    basis = np.full(m, -1)
    needs_art = []
    for r in range(m):
        if r < m_le and not neg[r]:
            basis[r] = nf + r
        else:
            needs_art.append(r)
    n_real = nf + m_le
    n_art = len(needs_art)
    t = np.zeros((m + 1, n_real + n_art + 1))
    t[:m, :n_real] = A
    t[:m, -1] = b
    for j, r in enumerate(needs_art):
        t[r, n_real + j] = 1.0
        basis[r] = n_real + j

    iters = 0
    if n_art:
        t[-1, n_real:n_real + n_art] = 1.0
        for r in needs_art:
            t[-1] -= t[r]
        status, iters = _iterate(t, basis, n_real + n_art, tol, max_iter)
        if status == "iteration_limit":
            return LpResult(status, None, np.inf, "simplex", iters)
        if -t[-1, -1] > tol * max(1.0, np.abs(b).max()):
            return LpResult("infeasible", None, np.inf, "simplex", iters)
        # drive zero-level artificials out of the basis, dropping redundant rows
        drop = []
        for r in range(m):
            if basis[r] >= n_real:
                nz = np.flatnonzero(np.abs(t[r, :n_real]) > tol)
                if nz.size:
                    _pivot(t, r, int(nz[0]))
                    basis[r] = int(nz[0])
                else:
                    drop.append(r)
        if drop:
            keep = [r for r in range(m) if r not in drop]
            t = np.vstack([t[keep], t[-1:]])
            basis = basis[keep]
        t = np.hstack([t[:, :n_real], t[:, -1:]])

    t[-1, :] = 0.0
    t[-1, :nf] = cf
    for r, k in enumerate(basis):
        if t[-1, k] != 0.0:
            t[-1] -= t[-1, k] * t[r]
    status, iters = _iterate(t, basis, n_real, tol, max_iter, iters)
    if status != "optimal":
        return LpResult(status, None, -np.inf if status == "unbounded" else np.inf, "simplex", iters)
    y = np.zeros(n_real)
    y[basis] = t[:-1, -1]
    x = x_fixed.copy()
    x[free] += y[:nf]
    return LpResult("optimal", x, float(c @ x), "simplex", iters)


def highs(c, A_ub, b_ub, A_eq, b_eq, lb, ub, time_limit: float | None = None) -> LpResult:
    options = {} if time_limit is None else {"time_limit": max(time_limit, 0.01)}
    res = linprog(
        c,
        A_ub=A_ub if A_ub.shape[0] else None, b_ub=b_ub if A_ub.shape[0] else None,
        A_eq=A_eq if A_eq.shape[0] else None, b_eq=b_eq if A_eq.shape[0] else None,
        bounds=np.column_stack([lb, ub]), method="highs-ipm" if len(c) >= IPM_MIN_COLUMNS else "highs",
        options=options,
    )
    if res.status == 0:
        return LpResult("optimal", res.x, float(res.fun), "highs", int(res.nit))
    status = {2: "infeasible", 3: "unbounded"}.get(res.status, "iteration_limit")
    return LpResult(status, None, np.inf if status == "infeasible" else -np.inf, "highs")


def solve_lp(c, A_ub, b_ub, A_eq, b_eq, lb, ub, backend: str = "auto",
             time_limit: float | None = None) -> LpResult:
    """``time_limit`` applies to the HiGHS backend only (the dense simplex
    is reserved for small tableaus)."""
    n = len(c)
    if backend == "auto":
        cells = (A_ub.shape[0] + A_eq.shape[0] + n) * (n + A_ub.shape[0])
        backend = "simplex" if cells <= DENSE_CELL_LIMIT else "highs"
    if backend == "simplex":
        return simplex(c, A_ub, b_ub, A_eq, b_eq, lb, ub)
    if backend == "highs":
        return highs(c, A_ub, b_ub, A_eq, b_eq, lb, ub, time_limit)
    raise ValueError(f"unknown LP backend {backend!r}")
