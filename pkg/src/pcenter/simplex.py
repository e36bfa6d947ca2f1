"""A small dense-tableau simplex solver, written from scratch.

Only the shapes this package needs: packing programs
``max c.x  s.t.  A x <= b, x >= 0`` with b >= 0 (so the slack basis is
feasible and no phase-1 is needed), and fractional set covering solved
through its packing dual, reading the covering weights off the dual
values in the final tableau.

The covering duals this package generates are massively degenerate, and
the textbook pivot rules disintegrate on them: Dantzig pricing walks
into degenerate cycles (observed stuck vertices thousands of pivots
deep), Bland's rule and lexicographic ratio tests lose their
termination guarantees to floating-point tie noise, and randomised
tie-breaking wanders without converging.  Steepest-edge pricing --
picking the entering column by reduced cost per unit of column norm --
turns the same programs into a few dozen clean pivots, so that is the
rule used here, with ratio-test ties broken toward the largest pivot
element to keep the tableau well conditioned.  Two safety nets cover
the pathological tail: a near-optimal stall exit (sound for this
package, which only ever consumes the value as a lower bound and tests
it against thresholds far slacker than the exit tolerance), and a hard
iteration cap.
"""
from __future__ import annotations

import numpy as np

REDUCED_COST_TOL = 1e-9
PIVOT_TOL = 1e-9
STALL_COST_TOL = 1e-6


class SimplexError(RuntimeError):
    """Unbounded program or iteration-cap blowout."""


def solve_packing(
    A: np.ndarray, b: np.ndarray, c: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Maximise c.x subject to A x <= b, x >= 0, with b >= 0.

    Returns (optimal value, primal solution x, dual values y) where y has
    one entry per constraint row.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    m, n = A.shape
    if (b < 0).any():
        raise SimplexError("negative right-hand side; slack basis infeasible")

    # Tableau: m constraint rows then the objective row; columns are the n
    # structural variables, m slacks, and the right-hand side.
    T = np.zeros((m + 1, n + m + 1), dtype=np.float64)
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -c
    basis = np.arange(n, n + m)

    max_iters = 5000 + 60 * (n + m)
    stall_window = 4 * (n + m)
    best_value = -np.inf
    stalled = 0
    for _ in range(max_iters):
        reduced = T[m, : n + m]
        candidates = np.flatnonzero(reduced < -REDUCED_COST_TOL)
        if candidates.size == 0:
            break
        # Degenerate churn detector.  Once the objective has been flat for
        # a long stretch and every remaining violation is within the stall
        # tolerance, the tableau is optimal up to noise; the value it
        # reports can only understate the true maximum, which downstream
        # bound checks already tolerate.
        value = float(T[m, -1])
        if value > best_value + REDUCED_COST_TOL:
            best_value = value
            stalled = 0
        else:
            stalled += 1
            if stalled >= stall_window and reduced[candidates].min() > -STALL_COST_TOL:
                break
        # Entering: steepest edge, i.e. most negative reduced cost per
        # unit of tableau-column norm (lowest index among exact ties).
        norms = np.sqrt(np.einsum("ij,ij->j", T[:m, candidates], T[:m, candidates]))
        j = int(candidates[np.argmin(reduced[candidates] / np.maximum(norms, 1e-30))])
        # Leaving: minimum ratio, ties resolved toward the largest pivot
        # element.  Clamping the right-hand side keeps degenerate rows at
        # an exact zero ratio, so rounding noise cannot push the basis
        # infeasible.
        col = T[:m, j]
        rows = np.flatnonzero(col > PIVOT_TOL)
        if rows.size == 0:
            raise SimplexError("program is unbounded")
        ratios = np.maximum(T[rows, -1], 0.0) / col[rows]
        best = ratios.min()
        tied = rows[np.flatnonzero(ratios <= best + PIVOT_TOL)]
        r = int(tied[np.argmax(col[tied])])
        # Pivot on (r, j).
        T[r] /= T[r, j]
        pivot_col = T[:, j].copy()
        pivot_col[r] = 0.0
        T -= pivot_col[:, None] * T[r]
        basis[r] = j
    else:
        raise SimplexError("iteration cap exceeded")

    x = np.zeros(n, dtype=np.float64)
    structural = basis < n
    x[basis[structural]] = T[:m, -1][structural]
    value = float(T[m, -1])
    duals = T[m, n : n + m].copy()
    return value, x, duals


def covering_lp(cover: np.ndarray) -> tuple[float, np.ndarray]:
    """Fractional minimum set cover for a boolean rows-by-columns matrix.

    Minimise the total column weight such that every row's covering
    columns carry weight at least 1.  Solved via the packing dual (one
    variable per row, one constraint per column), whose slack basis is
    immediately feasible; the covering weights are the dual values.
    Every row must be coverable by at least one column.
    """
    cover = np.asarray(cover, dtype=bool)
    n_rows, n_cols = cover.shape
    if n_rows == 0:
        return 0.0, np.zeros(n_cols, dtype=np.float64)
    if n_cols == 0 or not cover.any(axis=1).all():
        raise ValueError("some row has no covering column")
    value, _, duals = solve_packing(
        cover.T.astype(np.float64), np.ones(n_cols), np.ones(n_rows)
    )
    weights = np.clip(duals, 0.0, 1.0)
    return value, weights
