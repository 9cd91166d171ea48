"""Dense two-phase simplex with Bland's rule."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

TOL = 1e-11


@dataclass
class LPProblem:
    """minimize c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lo <= x <= hi (None = unbounded)."""

    c: np.ndarray
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    bounds: Sequence[tuple[float | None, float | None]] | None = None
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.size
        self.A_ub = np.zeros((0, n)) if self.A_ub is None else np.asarray(self.A_ub, dtype=float).reshape(-1, n)
        self.b_ub = np.zeros(0) if self.b_ub is None else np.asarray(self.b_ub, dtype=float).reshape(-1)
        self.A_eq = np.zeros((0, n)) if self.A_eq is None else np.asarray(self.A_eq, dtype=float).reshape(-1, n)
        self.b_eq = np.zeros(0) if self.b_eq is None else np.asarray(self.b_eq, dtype=float).reshape(-1)
        if self.bounds is None:
            self.bounds = [(0.0, None)] * n
        if len(self.bounds) != n:
            raise ValueError("one bound pair per variable required")

    @property
    def n_vars(self) -> int:
        return self.c.size

    def residuals(self, x: np.ndarray) -> float:
        """Largest constraint violation at x."""
        r = [0.0]
        if len(self.b_ub):
            r.append(float(np.max(self.A_ub @ x - self.b_ub)))
        if len(self.b_eq):
            r.append(float(np.max(np.abs(self.A_eq @ x - self.b_eq))))
        for xi, (lo, hi) in zip(x, self.bounds):
            if lo is not None:
                r.append(lo - xi)
            if hi is not None:
                r.append(xi - hi)
        return max(r)


@dataclass
class LPSolution:
    status: str  # 'optimal' | 'infeasible' | 'unbounded'
    x: np.ndarray | None
    fun: float | None
    residual: float = float("nan")
    duality_gap: float = float("nan")
    dual_infeasibility: float = float("nan")
    iterations: int = 0


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    others = np.arange(T.shape[0]) != row
    T[others] -= np.outer(T[others, col], T[row])


def _run(T: np.ndarray, basis: list[int], allowed: np.ndarray, max_iter: int) -> tuple[str, int]:
    """Minimize the objective stored in the last row of T (reduced costs; rhs in last column)."""
    it = 0
    m = T.shape[0] - 1
    while it < max_iter:
        red = T[-1, :-1]
        cand = np.flatnonzero((red < -TOL) & allowed)
        if cand.size == 0:
            return "optimal", it
        col = int(cand[0])  # Bland: lowest index enters
        column = T[:m, col]
        pos = column > TOL
        if not pos.any():
            return "unbounded", it
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / column[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + TOL * max(1.0, abs(best)))
        row = int(min(ties, key=lambda r: basis[r]))  # Bland: lowest basic index leaves
        _pivot(T, row, col)
        basis[row] = col
        it += 1
    raise RuntimeError("simplex iteration limit reached")


def _standard_form(lp: LPProblem):
    """Return (A, b, c, offset, recover) for min c.y s.t. A y = b, y >= 0."""
    n = lp.n_vars
    cols = []  # per original var: list of (std column, coefficient)
    shift = np.zeros(n)
    extra_ub = []
    k = 0
    for j, (lo, hi) in enumerate(lp.bounds):
        if lo is not None:
            shift[j] = lo
            cols.append([(k, 1.0)])
            if hi is not None:
                extra_ub.append((k, hi - lo))
            k += 1
        elif hi is not None:
            shift[j] = hi
            cols.append([(k, -1.0)])
            k += 1
        else:
            cols.append([(k, 1.0), (k + 1, -1.0)])
            k += 2
    M = np.zeros((n, k))
    for j, lst in enumerate(cols):
        for kk, coef in lst:
            M[j, kk] = coef
    # x = shift + M y
    A_ub = lp.A_ub @ M
    b_ub = lp.b_ub - lp.A_ub @ shift
    if extra_ub:
        rows = np.zeros((len(extra_ub), k))
        for i, (kk, v) in enumerate(extra_ub):
            rows[i, kk] = 1.0
        A_ub = np.vstack([A_ub, rows])
        b_ub = np.concatenate([b_ub, [v for _, v in extra_ub]])
    A_eq = lp.A_eq @ M
    b_eq = lp.b_eq - lp.A_eq @ shift
    n_slack = A_ub.shape[0]
    A = np.vstack([
        np.hstack([A_ub, np.eye(n_slack)]),
        np.hstack([A_eq, np.zeros((A_eq.shape[0], n_slack))]),
    ])
    b = np.concatenate([b_ub, b_eq])
    c = np.concatenate([lp.c @ M, np.zeros(n_slack)])
    offset = float(lp.c @ shift)

    def recover(y):
        return shift + M @ y[:k]

    return A, b, c, offset, recover


def simplex_solve(lp: LPProblem, max_iter: int = 10000) -> LPSolution:
    A, b, c, offset, recover = _standard_form(lp)
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1
    m, n = A.shape
    # phase 1: artificial basis
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = list(range(n, n + m))
    allowed = np.ones(n + m, dtype=bool)
    _, it1 = _run(T, basis, allowed, max_iter)
    if -T[-1, -1] > 1e-9 * max(1.0, np.abs(b).max(initial=0.0)):
        return LPSolution("infeasible", None, None, iterations=it1)
    # drive remaining artificials out of the basis; drop redundant rows
    keep = []
    for r in range(m):
        if basis[r] >= n:
            nz = np.flatnonzero(np.abs(T[r, :n]) > 1e-9)
            if nz.size:
                _pivot(T, r, int(nz[0]))
                basis[r] = int(nz[0])
                keep.append(r)
        else:
            keep.append(r)
    T = np.vstack([T[keep][:, list(range(n)) + [n + m]], np.zeros((1, n + 1))])
    basis = [basis[r] for r in keep]
    # phase 2 objective row: reduced costs c - c_B B^-1 A
    T[-1, :n] = c
    T[-1, -1] = 0.0
    for r, j in enumerate(basis):
        T[-1] -= c[j] * T[r]
    status, it2 = _run(T, basis, np.ones(n, dtype=bool), max_iter)
    if status != "optimal":
        return LPSolution(status, None, None, iterations=it1 + it2)
    y = np.zeros(n)
    y[basis] = T[:-1, -1]
    x = recover(y)
    fun = float(lp.c @ x)
    # dual certificate for the standard form: B^T u = c_B, reduced costs c - A^T u >= 0
    Ab = A[keep]
    bb = b[keep]
    u = np.linalg.lstsq(Ab[:, basis].T, c[basis], rcond=None)[0]
    dual_inf = float(max(0.0, -(c - Ab.T @ u).min()))
    gap = abs(float(c @ y) - float(bb @ u))
    return LPSolution("optimal", x, fun, lp.residuals(x), gap, dual_inf, it1 + it2)
