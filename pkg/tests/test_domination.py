"""Site domination: wholesale computation and both incremental updates."""
from __future__ import annotations

import itertools

import numpy as np
import pytest

from pcenter.domination import (
    DominationState,
    compute_dominations,
    dominates,
    update_after_bounds_improved,
    update_after_clients_added,
)
from pcenter.instance import Instance
from pcenter.rounding import RoundedRows, RoundingContext


def naive_dominators(values: np.ndarray) -> np.ndarray:
    """Lowest-index dominator per column, straight from the definition."""
    m = values.shape[1]
    out = np.full(m, -1, dtype=np.int64)
    for j1 in range(m):
        for j2 in range(m):
            if j2 != j1 and dominates(values, j2, j1):
                out[j1] = j2
                break
    return out


def _random_values(rng, n_rows=None, n_cols=None, high=None):
    n_rows = int(rng.integers(0, 7)) if n_rows is None else n_rows
    n_cols = int(rng.integers(1, 25)) if n_cols is None else n_cols
    high = int(rng.choice([2, 4, 12, 60])) if high is None else high
    return rng.integers(0, high, size=(n_rows, n_cols)).astype(np.int64)


# ---------------------------------------------------------------------------
# The definition
# ---------------------------------------------------------------------------


def test_dominates_definition():
    values = np.array([[3, 5, 3, 3], [2, 2, 2, 2]])
    assert dominates(values, 0, 1)  # strictly closer on the first row
    assert not dominates(values, 1, 0)
    # identical columns: the higher index dominates the lower one
    assert dominates(values, 3, 0)
    assert not dominates(values, 0, 3)
    assert dominates(values, 3, 2) and dominates(values, 2, 0)


def test_dominates_is_antisymmetric():
    rng = np.random.default_rng(41)
    values = _random_values(rng, n_rows=3, n_cols=12, high=3)
    for j1, j2 in itertools.permutations(range(12), 2):
        assert not (dominates(values, j1, j2) and dominates(values, j2, j1))


# ---------------------------------------------------------------------------
# Wholesale computation
# ---------------------------------------------------------------------------


def test_compute_dominations_matches_naive():
    rng = np.random.default_rng(42)
    for _ in range(60):
        values = _random_values(rng)
        state = compute_dominations(values)
        assert np.array_equal(state.dominated_by, naive_dominators(values))


def test_equal_column_groups_keep_their_top_index():
    values = np.array([[1, 1, 2, 1]])
    state = compute_dominations(values)
    # columns 0, 1 and 3 are identical; only index 3 survives, and column 2
    # (farther on the single row) is dominated by any of them, lowest first
    assert state.non_dominated.tolist() == [3]
    assert state.dominated_by.tolist() == [1, 3, 0, -1]


def test_zero_rows_leaves_single_survivor():
    values = np.empty((0, 5), dtype=np.int64)
    state = compute_dominations(values)
    assert state.non_dominated.tolist() == [4]
    assert np.array_equal(state.dominated_by, naive_dominators(values))


def test_state_properties():
    state = DominationState(dominated_by=np.array([-1, 0, -1], dtype=np.int64))
    assert state.num_sites == 3
    assert state.non_dominated.tolist() == [0, 2]


# ---------------------------------------------------------------------------
# Incremental updates
# ---------------------------------------------------------------------------


def test_bounds_update_is_a_guarded_recompute():
    rng = np.random.default_rng(43)
    values = _random_values(rng, n_rows=4, n_cols=18, high=30)
    state = compute_dominations(values)
    clipped = np.clip(values, 8, 20)
    # changed=False promises nothing moved, so the state passes through
    assert update_after_bounds_improved(state, clipped, changed=False) is state
    refreshed = update_after_bounds_improved(state, clipped, changed=True)
    assert np.array_equal(refreshed.dominated_by, naive_dominators(clipped))


def test_clients_added_update_matches_scratch():
    rng = np.random.default_rng(44)
    for trial in range(80):
        n_cols = int(rng.integers(2, 22))
        high = int(rng.choice([2, 3, 8, 40]))
        values = _random_values(rng, n_rows=int(rng.integers(0, 4)), n_cols=n_cols, high=high)
        state = compute_dominations(values)
        for _ in range(int(rng.integers(1, 4))):
            extra = _random_values(rng, n_rows=int(rng.integers(1, 4)), n_cols=n_cols, high=high)
            grown = np.vstack([values, extra])
            state = update_after_clients_added(state, grown, n_old_reps=values.shape[0])
            assert np.array_equal(state.dominated_by, naive_dominators(grown)), trial
            values = grown


def test_clients_added_update_guards():
    values = np.zeros((3, 4), dtype=np.int64)
    state = compute_dominations(values)
    assert update_after_clients_added(state, values, n_old_reps=3) is state
    with pytest.raises(ValueError):
        update_after_clients_added(state, values[:2], n_old_reps=3)
    with pytest.raises(ValueError):
        update_after_clients_added(state, np.zeros((4, 5), dtype=np.int64), n_old_reps=3)


def test_update_sequences_over_live_rounded_rows():
    """Interleaved band-tightening and row growth against from-scratch states."""
    rng = np.random.default_rng(45)
    for _ in range(20):
        n = int(rng.integers(10, 26))
        m = int(rng.integers(3, 16))
        clients = rng.integers(0, 101, size=(n, 2)).astype(float)
        sites = rng.integers(0, 101, size=(m, 2)).astype(float)
        inst = Instance("seq", clients=clients, sites=sites, p=1)
        lower, upper = 0, 160
        rows = RoundedRows(inst, [0, 1], RoundingContext(1, lower, upper))
        state = compute_dominations(rows)
        free = list(range(2, n))
        rng.shuffle(free)
        while free or upper - lower > 10:
            if rng.random() < 0.5 and free:
                fresh = sorted(free.pop() for _ in range(min(len(free), int(rng.integers(1, 3)))))
                n_old = rows.num_reps
                rows.extend(fresh)
                state = update_after_clients_added(state, rows, n_old)
            else:
                lower = min(lower + int(rng.integers(0, 20)), upper)
                upper = max(upper - int(rng.integers(0, 20)), lower)
                changed = rows.reclip(lower, upper)
                state = update_after_bounds_improved(state, rows, changed)
            assert np.array_equal(
                state.dominated_by, compute_dominations(rows).dominated_by
            )


# ---------------------------------------------------------------------------
# Why domination is safe
# ---------------------------------------------------------------------------


def _restricted_optimum(values: np.ndarray, cols: list[int], p: int) -> int:
    best = None
    for combo in itertools.combinations(cols, min(p, len(cols))):
        r = int(values[:, combo].min(axis=1).max())
        best = r if best is None or r < best else best
    return best


def test_dropping_dominated_sites_preserves_the_optimum():
    rng = np.random.default_rng(46)
    for _ in range(40):
        values = _random_values(rng, n_rows=int(rng.integers(1, 6)), n_cols=12, high=9)
        survivors = compute_dominations(values).non_dominated.tolist()
        for p in (1, 2, 3):
            assert _restricted_optimum(values, survivors, p) == _restricted_optimum(
                values, list(range(12)), p
            )
