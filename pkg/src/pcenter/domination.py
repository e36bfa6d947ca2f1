"""Site domination: discarding sites that can never improve a cover.

Relative to the current representatives, site j1 is dominated by site j2
when j2 is at least as close as j1 to every representative and either
strictly closer to one of them or, with identical distance rows, has the
higher index (the index rule makes domination antisymmetric, so exactly
one member of an equal-row group survives: its highest-index member).
Dominated sites can be dropped from every covering subproblem without
changing its optimum, because any cover swaps a dominated column for its
dominator at no loss.

The state records, per site, the lowest-index dominating site (or -1).
Two events invalidate it: the clipping band tightened (rows re-clipped),
or representatives were added (rows extended).  Tightening can both merge
previously distinct rows and create brand-new dominations, so it triggers
a guarded full recomputation (cheap, since fewer distinct rows remain).
Row extension can only break dominations or flip ties inside groups of
previously identical rows, so it is handled incrementally: re-verify each
stored witness on the new rows, re-run the tie rule inside old equal-row
groups, and rescan from scratch only for sites whose witness broke.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Above this witness-failure count, an incremental update falls back to the
# wholesale recomputation (same result, better constant factor).
_RESCAN_FALLBACK_FRACTION = 0.125


@dataclass
class DominationState:
    """Per-site domination verdicts: ``dominated_by[j]`` is the witness or -1."""

    dominated_by: np.ndarray

    @property
    def non_dominated(self) -> np.ndarray:
        """Sorted indices of surviving sites."""
        return np.flatnonzero(self.dominated_by < 0)

    @property
    def num_sites(self) -> int:
        return len(self.dominated_by)


def _values_of(rows) -> np.ndarray:
    values = rows.values if hasattr(rows, "values") else np.asarray(rows)
    return np.asarray(values, dtype=np.int64)


def dominates(rows, j2: int, j1: int) -> bool:
    """True when site j2 dominates site j1 for the given distance rows."""
    values = _values_of(rows)
    col1, col2 = values[:, j1], values[:, j2]
    if not (col1 >= col2).all():
        return False
    return bool((col1 > col2).any()) or j1 < j2


def _group_columns(values: np.ndarray) -> list[np.ndarray]:
    """Partition column indices into groups of identical columns."""
    n_cols = values.shape[1]
    if values.shape[0] == 0:
        return [np.arange(n_cols, dtype=np.int64)]
    order = np.lexsort(values)
    sorted_cols = values[:, order]
    breaks = np.flatnonzero((sorted_cols[:, 1:] != sorted_cols[:, :-1]).any(axis=0)) + 1
    starts = np.concatenate(([0], breaks))
    ends = np.concatenate((breaks, [n_cols]))
    return [np.sort(order[a:b]) for a, b in zip(starts, ends)]


def _pack_thermometer(values: np.ndarray) -> np.ndarray:
    """Encode columns so that pointwise <= becomes a bitmask subset test.

    Each row's values are ranked and unary-coded (bit t set iff rank > t),
    so column x is pointwise <= column y exactly when x's bits are a
    subset of y's.  Clipped rounded rows hold only a handful of distinct
    values, which keeps the code a few machine words wide.
    """
    n_rows, n_cols = values.shape
    pieces = []
    for r in range(n_rows):
        distinct, ranks = np.unique(values[r], return_inverse=True)
        if len(distinct) > 1:
            pieces.append(ranks[:, None] > np.arange(len(distinct) - 1)[None, :])
    if not pieces:
        return np.zeros((n_cols, 0), dtype=np.uint64)
    bits = np.concatenate(pieces, axis=1)
    pad = (-bits.shape[1]) % 64
    if pad:
        bits = np.concatenate([bits, np.zeros((n_cols, pad), dtype=bool)], axis=1)
    return np.packbits(bits, axis=1).view(np.uint64)


def _min_dominators(
    values: np.ndarray,
    site_ids: np.ndarray | None = None,
    partition: np.ndarray | None = None,
) -> np.ndarray:
    """Lowest-index dominator per column (-1 when none), computed wholesale.

    Identical columns are collapsed into groups first, so the pairwise
    comparison runs over distinct columns only.  ``site_ids`` (strictly
    ascending) names the columns when the matrix is a sub-system; returned
    witnesses are expressed in that id space.  When ``partition`` labels
    the columns, domination is confined to columns sharing a label.
    """
    n_cols = values.shape[1]
    ids = np.arange(n_cols, dtype=np.int64) if site_ids is None else np.asarray(site_ids)
    key = values if partition is None else np.vstack((partition[None, :], values))
    groups = _group_columns(key)
    n_groups = len(groups)
    group_rep = np.array([g[0] for g in groups], dtype=np.int64)
    min_member_id = ids[group_rep]  # groups are ascending, ids ascending
    packed = _pack_thermometer(values[:, group_rep])
    words = packed.shape[1]
    part_rep = None if partition is None else partition[group_rep]

    INF = np.iinfo(np.int64).max
    best_external = np.full(n_groups, INF, dtype=np.int64)
    chunk = max(1, int(4_000_000 // max(n_groups, 1)))
    for a in range(0, n_groups, chunk):
        b = min(n_groups, a + chunk)
        leq = np.ones((b - a, n_groups), dtype=bool)
        for w in range(words):
            word = packed[:, w]
            leq &= (word[a:b, None] & word[None, :]) == word[a:b, None]
        if part_rep is not None:
            leq &= part_rep[a:b, None] == part_rep[None, :]
        leq[np.arange(b - a), np.arange(a, b)] = False  # no self-domination
        contrib = np.where(leq, min_member_id[a:b, None], INF).min(axis=0)
        best_external = np.minimum(best_external, contrib)

    out = np.full(n_cols, -1, dtype=np.int64)
    for gi, g in enumerate(groups):
        ext = best_external[gi]
        if len(g) > 1:
            # Within an equal-row group, each member is dominated by the
            # next-higher-index member (and transitively all above it).
            nxt = ids[g[1:]]
            out[g[:-1]] = np.minimum(nxt, ext) if ext < INF else nxt
        out[g[-1]] = ext if ext < INF else -1
    return out


def compute_dominations(rows) -> DominationState:
    """Full domination state from scratch for the given distance rows."""
    return DominationState(dominated_by=_min_dominators(_values_of(rows)))


def update_after_bounds_improved(state: DominationState, rows, changed: bool = True) -> DominationState:
    """Refresh the state after the clipping band tightened.

    ``changed`` says whether re-clipping actually moved any entry; if not,
    the state is returned untouched.  Otherwise the verdicts are rebuilt
    wholesale: tightening merges rows and can even create new dominations
    between previously incomparable sites, so stored witnesses cannot be
    trusted, and stale witnesses would poison the incremental
    representative-growth update, which relies on witnesses being minimal.
    The rebuild is cheap precisely because clipping shrank the number of
    distinct rows.
    """
    if not changed:
        return state
    return compute_dominations(rows)


def update_after_clients_added(state: DominationState, rows, n_old_reps: int) -> DominationState:
    """Refresh the state after rows for new representatives were appended.

    Extending rows can only break an existing domination (the new
    coordinates must also compare favourably) or settle ties inside groups
    of previously identical rows, where the index rule may flip.  So:
    every old equal-row group is re-resolved on the new rows; surviving
    witnesses are kept (minimality is preserved: any brand-new dominator
    lives in the site's old equal-row group); sites whose witness broke
    are rescanned exactly.  The result equals a from-scratch computation.
    """
    values = _values_of(rows)
    n_total = values.shape[0]
    if n_total < n_old_reps:
        raise ValueError("rows shrank; expected appended representatives")
    if n_total == n_old_reps:
        return state
    m = values.shape[1]
    old = values[:n_old_reps]
    new = values[n_old_reps:]
    old_dom = state.dominated_by
    if len(old_dom) != m:
        raise ValueError("state does not match the number of sites")

    groups = _group_columns(old)
    class_id = np.empty(m, dtype=np.int64)
    for gi, g in enumerate(groups):
        class_id[g] = gi

    # Re-run the tie rule inside each old equal-row group; only the new
    # rows matter there because the old rows coincide.  One wholesale pass
    # partitioned by class resolves every group at once.
    if len(groups) < m:
        in_class = _min_dominators(new, partition=class_id)
    else:
        in_class = np.full(m, -1, dtype=np.int64)

    new_dom = np.full(m, -1, dtype=np.int64)
    was_free = old_dom < 0
    new_dom[was_free] = in_class[was_free]

    dominated = np.flatnonzero(~was_free)
    rescan: np.ndarray
    if dominated.size:
        witnesses = old_dom[dominated]
        tie_witness = class_id[witnesses] == class_id[dominated]
        survives = (new[:, witnesses] <= new[:, dominated]).all(axis=0)
        verified = ~tie_witness & survives
        keep = dominated[verified]
        merged = np.where(
            in_class[keep] >= 0,
            np.minimum(old_dom[keep], in_class[keep]),
            old_dom[keep],
        )
        new_dom[keep] = merged
        rescan = dominated[~verified]
    else:
        rescan = dominated

    if rescan.size > _RESCAN_FALLBACK_FRACTION * m:
        return compute_dominations(rows)
    idx = np.arange(m, dtype=np.int64)
    for j in rescan:
        col = values[:, j : j + 1]
        leq = (values <= col).all(axis=0)
        strict = (values < col).any(axis=0)
        mask = leq & (strict | (idx > j))
        mask[j] = False
        hits = np.flatnonzero(mask)
        new_dom[j] = hits[0] if hits.size else -1
    return DominationState(dominated_by=new_dom)
