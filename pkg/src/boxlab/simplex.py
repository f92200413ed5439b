"""Exact rational simplex for small standard-form LPs.

Solves ``min c.x  s.t.  A x = b, x >= 0`` without any floating point.  The
tableau is kept fraction-free: every row is scaled to integers once, and
pivots use the Bareiss update ``(T*p - col*row) / D`` so that all entries stay
integers equal to ``D`` times the true tableau, ``D`` being the determinant of
the current basis.  The tableau lives in a FLINT integer matrix so that each
update is one pass in C.  Pricing is Dantzig's largest-coefficient rule; after
a run of degenerate pivots the solver switches to Bland's smallest-index rule
until the objective moves again, which rules out cycling.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Sequence

import flint
import numpy as np


class LPStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LPResult:
    status: LPStatus
    x: list[Fraction] = field(default_factory=list)
    objective: Fraction | None = None
    basis: list[int] = field(default_factory=list)
    pivots: int = 0


class _Tableau:
    """(m + 1) x (n_cols + 1) integer tableau; last row is the objective, last column the rhs."""

    def __init__(self, rows: list[list[int]], basis: list[int], n_cols: int):
        self.T = flint.fmpz_mat(rows)
        self.basis = basis
        self.n_cols = n_cols
        self.D = flint.fmpz(1)
        self.pivots = 0

    @property
    def m(self) -> int:
        return self.T.nrows() - 1

    def row(self, r: int) -> list:
        T = self.T
        return [T[r, j] for j in range(T.ncols())]

    def pivot(self, r: int, e: int) -> None:
        T = self.T
        p = T[r, e]
        width = T.ncols()
        keep = [T[r, j] for j in range(width)]
        # col[r] = p zeroes the pivot row of the numerator; it is restored below
        col = flint.fmpz_mat([[T[i, e]] for i in range(T.nrows())])
        T = (T * p - col * flint.fmpz_mat([keep])) / self.D
        for j in range(width):
            T[r, j] = keep[j]
        if p < 0:
            # keep the common scale positive so sign tests read true signs
            T = T * -1
            p = -p
        self.T = T
        self.D = p
        self.basis[r] = e
        self.pivots += 1

    def entering(self, candidates: Sequence[int], bland: bool) -> int | None:
        T, last = self.T, self.T.nrows() - 1
        if bland:
            for j in candidates:
                if T[last, j] < 0:
                    return j
            return None
        best, best_val = None, 0
        for j in candidates:
            v = T[last, j]
            if v < best_val:
                best, best_val = j, v
        return best

    def leaving(self, e: int) -> int | None:
        T = self.T
        rhs = self.n_cols
        best = None
        best_a = best_b = None
        for r in range(self.m):
            a = T[r, e]
            if a > 0:
                b = T[r, rhs]
                if best is None:
                    best, best_a, best_b = r, a, b
                    continue
                lhs = b * best_a
                cur = best_b * a
                if lhs < cur or (lhs == cur and self.basis[r] < self.basis[best]):
                    best, best_a, best_b = r, a, b
        return best

    def run(self, candidates: Sequence[int], degenerate_limit: int) -> LPStatus:
        streak = 0
        while True:
            bland = streak >= degenerate_limit
            e = self.entering(candidates, bland)
            if e is None:
                return LPStatus.OPTIMAL
            r = self.leaving(e)
            if r is None:
                return LPStatus.UNBOUNDED
            streak = streak + 1 if self.T[r, self.n_cols] == 0 else 0
            self.pivot(r, e)

    def rebuild(self, keep_rows: Sequence[int], keep_cols: Sequence[int]) -> None:
        data = self.T.tolist()
        self.T = flint.fmpz_mat([[data[i][j] for j in keep_cols] for i in keep_rows])


def solve(A, b, c, degenerate_limit: int = 20, bland: bool = False) -> LPResult:
    """Minimize ``c.x`` subject to ``A x = b``, ``x >= 0`` exactly.

    ``bland=True`` uses Bland's rule throughout.  Columns that are unit
    vectors ``e_r`` (after making ``b >= 0``) seed the starting basis; rows
    without one get an artificial variable and a phase-one solve.
    """
    A = [[Fraction(v) for v in row] for row in A]
    b = [Fraction(v) for v in b]
    c = [Fraction(v) for v in c]
    m = len(A)
    n = len(c)
    if any(len(row) != n for row in A) or len(b) != m:
        raise ValueError("inconsistent LP dimensions")
    if bland:
        degenerate_limit = 0

    for r in range(m):
        if b[r] < 0:
            A[r] = [-v for v in A[r]]
            b[r] = -b[r]

    # unit columns usable as an initial basis
    unit_for_row: dict[int, int] = {}
    for j in range(n):
        nz = [r for r in range(m) if A[r][j] != 0]
        if len(nz) == 1 and A[nz[0]][j] == 1 and nz[0] not in unit_for_row:
            unit_for_row[nz[0]] = j
    missing = [r for r in range(m) if r not in unit_for_row]
    n_art = len(missing)
    n_total = n + n_art

    # Rows are scaled by the denominators of their coefficients only and the
    # rhs column by one global factor.  Folding rhs denominators into the row
    # scales would multiply basis determinants by them and blow up the
    # Bareiss integers whenever b carries large denominators.
    col_scale = [Fraction(1)] * n  # true x_j = tableau value / (col_scale[j] * rhs_scale)
    row_scale = [lcm(*(v.denominator for v in A[r])) for r in range(m)]
    rhs_scale = lcm(*((b[r] * row_scale[r]).denominator for r in range(m))) if m else 1
    rows = [[0] * (n_total + 1) for _ in range(m + 1)]
    for r in range(m):
        k = row_scale[r]
        for j in range(n):
            rows[r][j] = int(A[r][j] * k)
        rows[r][n_total] = int(b[r] * k * rhs_scale)
        if r in unit_for_row:
            j = unit_for_row[r]
            col_scale[j] = A[r][j] * k
            rows[r][j] = 1
    for idx, r in enumerate(missing):
        rows[r][n + idx] = 1
    basis = [unit_for_row[r] if r in unit_for_row else n + missing.index(r) for r in range(m)]
    cost = [c[j] / col_scale[j] for j in range(n)]

    if n_art:
        # phase one: minimize the sum of artificials
        obj = [0] * (n_total + 1)
        for idx in range(n_art):
            obj[n + idx] = 1
        for r in missing:
            obj = [o - v for o, v in zip(obj, rows[r])]
        rows[m] = obj
    tab = _Tableau(rows, basis, n_total)

    if n_art:
        tab.run(range(n_total), degenerate_limit)
        if tab.T[m, n_total] != 0:
            return LPResult(LPStatus.INFEASIBLE, pivots=tab.pivots)
        # drive remaining artificials out of the basis; drop redundant rows
        dropped = set()
        for r in range(m):
            if tab.basis[r] >= n:
                j = next((j for j in range(n) if tab.T[r, j] != 0), None)
                if j is None:
                    dropped.add(r)
                    continue
                # rhs is zero, so any nonzero entry (either sign) is a valid pivot
                tab.pivot(r, j)
        keep_rows = [r for r in range(m + 1) if r not in dropped]
        tab.basis = [tab.basis[r] for r in range(m) if r not in dropped]
        tab.rebuild(keep_rows, list(range(n)) + [n_total])
        tab.n_cols = n
        n_total = n

    # phase two objective row: D*c - sum_r c_B(r) * T[r]
    obj_scale = lcm(*(v.denominator for v in cost)) if cost else 1
    icost = [int(v * obj_scale) for v in cost]
    obj = [0] * (n_total + 1)
    for j in range(n_total):
        obj[j] = icost[j] * tab.D
    for r in range(tab.m):
        cb = icost[tab.basis[r]]
        if cb:
            obj = [o - cb * v for o, v in zip(obj, tab.row(r))]
    last = tab.m
    for j, v in enumerate(obj):
        tab.T[last, j] = v
    status = tab.run(range(n_total), degenerate_limit)
    if status is LPStatus.UNBOUNDED:
        return LPResult(LPStatus.UNBOUNDED, pivots=tab.pivots)

    x = [Fraction(0)] * n
    D = int(tab.D)
    for r, j in enumerate(tab.basis):
        x[j] = Fraction(int(tab.T[r, n_total]), D * rhs_scale) / col_scale[j]
    objective = sum((ci * xi for ci, xi in zip(c, x)), Fraction(0))
    return LPResult(LPStatus.OPTIMAL, x, objective, list(tab.basis), tab.pivots)


def rank(rows: Sequence[Sequence]) -> int:
    """Exact rank of a rational matrix."""
    rows = [[Fraction(v) for v in row] for row in rows]
    if not rows or not rows[0]:
        return 0
    return flint.fmpq_mat([[flint.fmpq(v.numerator, v.denominator) for v in row] for row in rows]).rank()


def _fmpq_matrix(rows) -> "flint.fmpq_mat":
    r = len(rows)
    c = len(rows[0]) if r else 0
    return flint.fmpq_mat(r, c, [flint.fmpq(v.numerator, v.denominator) for row in rows for v in row])


def _as_fraction(q) -> Fraction:
    return Fraction(int(q.p), int(q.q))


def _float_basis(A, b, c):
    """Basis suggested by HiGHS: columns positive in its optimum first, then
    columns with the smallest reduced cost, keeping the set independent."""
    from scipy.optimize import linprog

    Af = np.array([[float(v) for v in row] for row in A])
    res = linprog([float(v) for v in c], A_eq=Af, b_eq=[float(v) for v in b],
                  bounds=(0, None), method="highs-ds")
    if res.status != 0:
        return None
    m, n = Af.shape
    reduced = np.asarray(c, dtype=float) - Af.T @ np.asarray(res.eqlin.marginals)
    order = sorted(range(n), key=lambda j: (res.x[j] <= 1e-9, abs(reduced[j]) if res.x[j] <= 1e-9 else -res.x[j]))
    Q = np.zeros((m, 0))
    chosen = []
    for j in order:
        v = Af[:, j]
        norm = np.linalg.norm(v)
        if norm == 0:
            continue
        w = v - Q @ (Q.T @ v)
        w = w - Q @ (Q.T @ w)
        if np.linalg.norm(w) > 1e-8 * norm:
            Q = np.column_stack([Q, w / np.linalg.norm(w)])
            chosen.append(j)
            if len(chosen) == m:
                return chosen
    return None


def solve_guided(A, b, c, degenerate_limit: int = 20) -> LPResult:
    """Same contract as :func:`solve`, with a floating-point head start.

    HiGHS proposes an optimal basis; it is accepted only after exact rational
    checks of primal feasibility and of every reduced cost.  A feasible but
    suboptimal guess warm-starts the exact simplex; anything else falls back
    to :func:`solve`.  The answer is exact either way.
    """
    A = [[Fraction(v) for v in row] for row in A]
    b = [Fraction(v) for v in b]
    c = [Fraction(v) for v in c]
    m, n = len(A), len(c)
    if any(len(row) != n for row in A) or len(b) != m:
        raise ValueError("inconsistent LP dimensions")
    for r in range(m):
        if b[r] < 0:
            A[r] = [-v for v in A[r]]
            b[r] = -b[r]
    basis = _float_basis(A, b, c) if m and n >= m else None
    if basis is None:
        return solve(A, b, c, degenerate_limit)

    B = _fmpq_matrix([[A[r][j] for j in basis] for r in range(m)])
    try:
        xB = B.solve(_fmpq_matrix([[v] for v in b]))
    except ZeroDivisionError:
        return solve(A, b, c, degenerate_limit)
    xB = [_as_fraction(xB[i, 0]) for i in range(m)]
    if any(v < 0 for v in xB):
        return solve(A, b, c, degenerate_limit)

    y = B.transpose().solve(_fmpq_matrix([[c[j]] for j in basis]))
    y = [_as_fraction(y[i, 0]) for i in range(m)]
    in_basis = set(basis)
    optimal = True
    for j in range(n):
        if j in in_basis:
            continue
        d = c[j] - sum((y[r] * A[r][j] for r in range(m) if A[r][j]), Fraction(0))
        if d < 0:
            optimal = False
            break
    if optimal:
        x = [Fraction(0)] * n
        for j, v in zip(basis, xB):
            x[j] = v
        objective = sum((ci * xi for ci, xi in zip(c, x)), Fraction(0))
        return LPResult(LPStatus.OPTIMAL, x, objective, list(basis), 0)
    return _warm_start(A, b, c, basis, degenerate_limit)


def _warm_start(A, b, c, basis, degenerate_limit) -> LPResult:
    """Phase two of the fraction-free simplex from a feasible basis."""
    m, n = len(A), len(c)
    row_scale = [lcm(*(v.denominator for v in A[r])) for r in range(m)]
    rhs_scale = lcm(*((b[r] * row_scale[r]).denominator for r in range(m)))
    Aint = [[int(A[r][j] * row_scale[r]) for j in range(n)] + [int(b[r] * row_scale[r] * rhs_scale)]
            for r in range(m)]
    Bint = flint.fmpz_mat([[Aint[r][j] for j in basis] for r in range(m)])
    D = abs(Bint.det())
    # D times B^-1 [A | b] is integral (adjugate), which is the Bareiss invariant
    T = Bint.solve(flint.fmpz_mat(Aint)) * D
    rows = [[int(T[r, j].p) for j in range(n + 1)] for r in range(m)]
    obj_scale = lcm(*(v.denominator for v in c))
    icost = [int(v * obj_scale) for v in c]
    obj = [icost[j] * int(D) for j in range(n)] + [0]
    for r in range(m):
        cb = icost[basis[r]]
        if cb:
            obj = [o - cb * v for o, v in zip(obj, rows[r])]
    tab = _Tableau(rows + [obj], list(basis), n)
    tab.D = flint.fmpz(D)
    if tab.run(range(n), degenerate_limit) is LPStatus.UNBOUNDED:
        return LPResult(LPStatus.UNBOUNDED, pivots=tab.pivots)
    x = [Fraction(0)] * n
    Dv = int(tab.D)
    for r, j in enumerate(tab.basis):
        x[j] = Fraction(int(tab.T[r, n]), Dv * rhs_scale)
    objective = sum((ci * xi for ci, xi in zip(c, x)), Fraction(0))
    return LPResult(LPStatus.OPTIMAL, x, objective, list(tab.basis), tab.pivots)
