"""
Dense two-phase primal simplex for  max c.x  s.t.  A x = b, x >= 0.

Pivoting uses Dantzig's rule until a run of degenerate pivots suggests
cycling, then switches to Bland's rule for the rest of the solve. Ratio
ties always go to the lowest basic variable index.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from config_helper import LP_TRACE
from errors import ConvergenceError, DimensionMismatchError
from numerics import Tolerance

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-9
DEGENERATE_STREAK = 50


class LPStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class StandardLP:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    names: list = field(default=None)

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.c = np.asarray(self.c, dtype=float).ravel()
        m, n = self.A.shape
        if self.b.shape != (m,):
            raise DimensionMismatchError(f"b has {self.b.size} entries for {m} rows")
        if self.c.shape != (n,):
            raise DimensionMismatchError(f"c has {self.c.size} entries for {n} columns")
        if self.names is None:
            self.names = [f"x{j}" for j in range(n)]
        if len(self.names) != n:
            raise DimensionMismatchError(f"{len(self.names)} names for {n} columns")
        if m > n:
            raise DimensionMismatchError(f"more rows ({m}) than columns ({n})")
        zero_rows = np.flatnonzero(~self.A.any(axis=1))
        if zero_rows.size:
            raise DimensionMismatchError(f"rows {zero_rows.tolist()} of A are all zero")


@dataclass
class LPSolution:
    x: np.ndarray
    objective: float
    status: LPStatus
    iterations: int = 0
    residual: float = 0.0

    def value(self, lp: StandardLP, name):
        return float(self.x[lp.names.index(name)])


class _Tableau:
    """Constraint rows [B^-1 A | B^-1 b] plus a reduced cost row.

    The last row holds r_j = c_B B^-1 A_j - c_j and, in its last entry,
    the current objective value. Optimal when every r_j >= -tol.
    """

    def __init__(self, A, b, basis, trace=None):
        m, n = A.shape
        self.T = np.zeros((m + 1, n + 1))
        self.T[:m, :n] = A
        self.T[:m, n] = b
        self.basis = list(basis)
        self.trace = trace
        self.iterations = 0

    @property
    def m(self):
        return self.T.shape[0] - 1

    def set_objective(self, c):
        n = self.T.shape[1] - 1
        cb = c[self.basis]
        self.T[-1, :n] = cb @ self.T[:-1, :n] - c
        self.T[-1, n] = cb @ self.T[:-1, n]

    def pivot(self, row, col):
        self.T[row] /= self.T[row, col]
        column = self.T[:, col].copy()
        column[row] = 0.0
        self.T -= np.outer(column, self.T[row])
        self.basis[row] = col
        self.iterations += 1

    def dump(self, phase, enter, leave):
        if self.trace is None:
            return
        self.trace.write(f"iter {self.iterations} phase {phase} enter {enter} leave {leave}\n")
        self.trace.write(f"basis {' '.join(str(j) for j in self.basis)}\n")
        for row in self.T:
            self.trace.write(" ".join(f"{v:.6g}" for v in row) + "\n")
        self.trace.write("\n")


def _entering(reduced, allowed, tol, bland):
    candidates = np.flatnonzero((reduced[:allowed] < -tol))
    if candidates.size == 0:
        return None
    if bland:
        return int(candidates[0])
    # most negative reduced cost, lowest index on ties
    return int(candidates[np.argmin(reduced[candidates])])


def _leaving(tab: _Tableau, col, tol):
    column = tab.T[:-1, col]
    rhs = tab.T[:-1, -1]
    rows = np.flatnonzero(column > PIVOT_TOL)
    if rows.size == 0:
        return None
    ratios = rhs[rows] / column[rows]
    best = ratios.min()
    tied = rows[ratios <= best + tol * (1.0 + abs(best))]
    # Bland: lowest basic variable index among tied rows
    return int(min(tied, key=lambda r: tab.basis[r]))


def _iterate(tab: _Tableau, allowed, tol: Tolerance, phase):
    """Pivot until optimal. Returns False if the problem is unbounded."""
    bland = False
    degenerate_run = 0
    while True:
        if tab.iterations >= tol.max_iters:
            raise ConvergenceError(f"simplex exceeded {tol.max_iters} pivots")
        col = _entering(tab.T[-1, :-1], allowed, tol.abs, bland)
        if col is None:
            return True
        row = _leaving(tab, col, tol.abs)
        if row is None:
            return False

        step = tab.T[row, -1] / tab.T[row, col]
        degenerate_run = degenerate_run + 1 if step <= tol.abs else 0
        if not bland and degenerate_run > DEGENERATE_STREAK:
            log.debug(f"{degenerate_run} degenerate pivots in phase {phase}; switching to Bland's rule")
            bland = True

        tab.dump(phase, col, tab.basis[row])
        tab.pivot(row, col)


def _drive_out_artificials(tab: _Tableau, n):
    """Pivot basic artificials (columns >= n) out on their largest entry; drop rows with none."""
    m = tab.m
    redundant = []
    for row in range(m):
        if tab.basis[row] < n:
            continue
        entries = np.abs(tab.T[row, :n])
        col = int(np.argmax(entries))
        if entries[col] > PIVOT_TOL:
            tab.pivot(row, col)
        else:
            redundant.append(row)
    if redundant:
        log.debug(f"dropping {len(redundant)} redundant constraint rows")
        keep = [r for r in range(m) if r not in redundant]
        tab.T = tab.T[keep + [m]]
        tab.basis = [tab.basis[r] for r in keep]
    return redundant


def solve_lp(lp: StandardLP, tol: Tolerance | None = None, trace_path=None) -> LPSolution:
    """Two-phase primal simplex. Deterministic for identical input."""
    m, n = lp.A.shape
    tol = tol or Tolerance(rel=1e-9, abs=1e-9, max_iters=max(5000, 50 * (m + n)))
    trace_path = trace_path or LP_TRACE
    trace = open(trace_path, "a") if trace_path else None
    try:
        return _solve(lp, tol, trace)
    finally:
        if trace:
            trace.close()


def _solve(lp: StandardLP, tol: Tolerance, trace) -> LPSolution:
    m, n = lp.A.shape
    A = lp.A.copy()
    b = lp.b.copy()
    negative = b < 0
    A[negative] *= -1.0
    b[negative] *= -1.0

    # phase 1: maximize -sum(artificials)
    tab = _Tableau(np.hstack([A, np.eye(m)]), b, basis=range(n, n + m), trace=trace)
    tab.set_objective(np.concatenate([np.zeros(n), -np.ones(m)]))
    _iterate(tab, n + m, tol, phase=1)

    scale = 1.0 + np.abs(b).max(initial=0.0)
    if tab.T[-1, -1] < -1e-7 * scale:
        log.debug(f"phase 1 ended with infeasibility {-tab.T[-1, -1]:.3g}")
        return LPSolution(x=np.zeros(n), objective=0.0, status=LPStatus.INFEASIBLE,
                          iterations=tab.iterations)

    _drive_out_artificials(tab, n)

    # phase 2 on the original columns
    tab.T = np.hstack([tab.T[:, :n], tab.T[:, -1:]])
    tab.set_objective(lp.c)
    if not _iterate(tab, n, tol, phase=2):
        return LPSolution(x=np.zeros(n), objective=np.inf, status=LPStatus.UNBOUNDED,
                          iterations=tab.iterations)

    x = np.zeros(n)
    for row, var in enumerate(tab.basis):
        x[var] = tab.T[row, -1]
    x[np.abs(x) < 1e-15] = 0.0

    residual = float(np.abs(lp.A @ x - lp.b).max(initial=0.0))
    if residual > 1e-7 * (1.0 + np.abs(lp.b).max(initial=0.0)):
        log.warning(f"LP solution residual {residual:.3g} exceeds the feasibility tolerance")

    return LPSolution(x=x, objective=float(lp.c @ x), status=LPStatus.OPTIMAL,
                      iterations=tab.iterations, residual=residual)
