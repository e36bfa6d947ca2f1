"""Set-cover feasibility probes and the binary search over candidate radii.

A coverage system is the rounded-distance submatrix between the current
representatives (rows) and the admissible sites (columns).  A radius
guess ``t`` turns it into a boolean set-cover question: can every row be
covered within ``t`` by at most p columns?  Answering that exactly for
increasing thresholds, by bisection over the distinct rounded distances,
yields the smallest feasible rounded radius.

The exact solver is a small branch-and-bound: greedy incumbent, LP lower
bounds from :mod:`pcenter.simplex`, branching on the most fractional
column.  It never looks for the minimum cover size, only for the
``<= p`` / ``> p`` verdict, and prunes aggressively with integer-rounded
LP bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .rounding import RoundedRows
from .simplex import covering_lp, solve_packing

LP_TOL = 1e-6
PRICING_TOL = 1e-9
WIDE_LP_COLUMNS = 192


class Status(Enum):
    COVER_FOUND = "cover_found"
    PROVED_EXCEEDS_P = "proved_exceeds_p"


class SearchMode(Enum):
    INTEGER = "integer"
    RELAXED = "relaxed"


@dataclass
class CoverResult:
    """Outcome of one set-cover question at a fixed threshold.

    ``chosen_sites`` (site ids) is set for integer covers;
    ``fractional_value``/``fractional_weights`` (aligned with the system's
    columns) are set for LP relaxations.
    """

    status: Status
    chosen_sites: tuple[int, ...] | None = None
    fractional_value: float | None = None
    fractional_weights: np.ndarray | None = None


@dataclass
class SearchOutcome:
    """Result of a binary search over the distinct rounded distances."""

    index: int
    threshold: int
    chosen_sites: tuple[int, ...] | None
    fractional_weights: np.ndarray | None
    probes: int


class CoverageSystem:
    """Rounded distances from representatives (rows) to usable sites (columns)."""

    def __init__(self, rep_ids: list[int], site_ids: np.ndarray, matrix: np.ndarray):
        if matrix.shape != (len(rep_ids), len(site_ids)):
            raise ValueError("matrix shape does not match row/column ids")
        if matrix.shape[0] == 0 or matrix.shape[1] == 0:
            raise ValueError("coverage system needs at least one row and column")
        self.rep_ids = list(rep_ids)
        self.site_ids = np.asarray(site_ids, dtype=np.int64)
        self.matrix = matrix
        self.distinct = np.unique(matrix)
        self._row_min_max = int(matrix.min(axis=1).max())
        # Active-column cache (site ids) reused to seed the covering LP
        # across probes at nearby thresholds, and transplantable between
        # systems over the same instance.
        self.lp_warm: np.ndarray | None = None

    @classmethod
    def from_rows(cls, rows: RoundedRows, site_subset: np.ndarray) -> "CoverageSystem":
        site_subset = np.asarray(site_subset, dtype=np.int64)
        return cls(list(rows.rep_ids), site_subset, rows.values[:, site_subset])

    def coverable(self, threshold: int) -> bool:
        """True when every row has at least one column within the threshold."""
        return self._row_min_max <= threshold

    def cover_at(self, threshold: int) -> np.ndarray:
        return self.matrix <= threshold


def _pack_rows(mat: np.ndarray) -> np.ndarray:
    """Pack each boolean row into a run of uint64 words for bitwise tests."""
    bits = np.packbits(mat, axis=1)
    pad = (-bits.shape[1]) % 8
    if pad:
        bits = np.pad(bits, ((0, 0), (0, pad)))
    return np.ascontiguousarray(bits).view(np.uint64)


def _antichain_keep(packed: np.ndarray, counts: np.ndarray, keep_minimal: bool) -> np.ndarray:
    """Boolean mask of the minimal (or maximal) sets among distinct bit masks.

    A set can only be swallowed by one with strictly fewer (more) bits, so
    scanning popcount groups in size order and testing each group against
    the survivors so far settles every mask in one pass.  Masks must be
    pairwise distinct.
    """
    n, words = packed.shape
    order = np.argsort(counts if keep_minimal else -counts, kind="stable")
    keep = np.zeros(n, dtype=bool)
    kept: list[int] = []
    i = 0
    while i < n:
        j = i
        while j < n and counts[order[j]] == counts[order[i]]:
            j += 1
        group = order[i:j]
        if kept:
            against = packed[np.asarray(kept)]
            chunk = max(1, 2_000_000 // max(1, len(kept) * words))
            dominated = np.zeros(len(group), dtype=bool)
            for a in range(0, len(group), chunk):
                block = packed[group[a : a + chunk], None, :]
                if keep_minimal:
                    hits = (against[None, :, :] & block) == against[None, :, :]
                else:
                    hits = (block & against[None, :, :]) == block
                dominated[a : a + chunk] = hits.all(axis=2).any(axis=1)
            group = group[~dominated]
        keep[group] = True
        kept.extend(group.tolist())
        i = j
    return keep


def _reduce(cover: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Standard set-cover reductions on a boolean cover matrix.

    A row whose covering set contains another row's covering set is
    implied by it and can go.  Among identical columns only the first
    (lowest site id, since columns are id-ordered) is kept, and a column
    whose covered-row set sits inside another's is useless to any cover
    (swap it for the superset) and also goes.  Returns (kept row indices,
    kept column indices), both ascending.
    """
    _, first = np.unique(cover, axis=0, return_index=True)
    ridx = np.sort(first)
    distinct_rows = cover[ridx]
    keep = _antichain_keep(
        _pack_rows(distinct_rows), distinct_rows.sum(axis=1), keep_minimal=True
    )
    kept_rows = ridx[keep]

    sub = cover[kept_rows]
    _, first = np.unique(sub.T, axis=0, return_index=True)
    cidx = np.sort(first)
    distinct_cols = np.ascontiguousarray(sub[:, cidx].T)
    keep = _antichain_keep(
        _pack_rows(distinct_cols), distinct_cols.sum(axis=1), keep_minimal=False
    )
    return kept_rows.astype(np.int64), cidx[keep].astype(np.int64)


def _warm_for(system: CoverageSystem, cols: np.ndarray) -> np.ndarray | None:
    """Translate a system's cached warm site ids into reduced positions."""
    if system.lp_warm is None:
        return None
    return np.flatnonzero(np.isin(system.site_ids[cols], system.lp_warm))


def _disjoint_rows_bound(cover: np.ndarray) -> int:
    """Rows that pairwise share no column, grown greedily, fewest-columns first.

    Each such row needs one full unit of weight on its own columns, so the
    count lower-bounds every fractional cover.
    """
    packed = _pack_rows(cover)
    accumulated = np.zeros(packed.shape[1], dtype=np.uint64)
    count = 0
    for i in np.argsort(cover.sum(axis=1), kind="stable"):
        if not (packed[i] & accumulated).any():
            accumulated |= packed[i]
            count += 1
    return count


def _covering_lp_any(
    cover: np.ndarray, warm: np.ndarray | None = None
) -> tuple[float, np.ndarray, np.ndarray]:
    """Exact covering LP; returns (value, weights, active column ids).

    Narrow systems go straight to the simplex.  Wide ones are solved by
    column generation: solve the restriction to a small active set
    (greedy cover plus any warm columns from an earlier, similar system),
    then price the left-out columns against the restriction's row prices.
    Once no priced column is violated, the prices are feasible for the
    full packing dual, which pins the restricted optimum as the exact
    optimum of the full system.  Rows duplicated within the restriction
    carry zero price and drop out of both the solve and the pricing.
    """
    n_rows, n_cols = cover.shape
    if n_cols <= WIDE_LP_COLUMNS:
        value, weights = covering_lp(cover)
        return value, weights, np.arange(n_cols, dtype=np.int64)

    active = np.array(_greedy_cover(cover), dtype=np.int64)
    if warm is not None and warm.size:
        active = np.union1d(active, warm)
    dense = cover.astype(np.float64)
    while True:
        sub = cover[:, active]
        # Inside the restriction, rows implied by subset rows are slack
        # (and carry zero price), so only the minimal distinct rows enter
        # the simplex or the pricing sum.
        _, first = np.unique(sub, axis=0, return_index=True)
        ridx = np.sort(first)
        distinct = sub[ridx]
        keep = _antichain_keep(
            _pack_rows(distinct), distinct.sum(axis=1), keep_minimal=True
        )
        rows = ridx[keep]
        value, prices, duals = solve_packing(
            sub[rows].T.astype(np.float64), np.ones(len(active)), np.ones(len(rows))
        )
        slack = 1.0 - prices @ dense[rows]
        slack[active] = 0.0
        violated = np.flatnonzero(slack < -PRICING_TOL)
        if violated.size == 0:
            weights = np.zeros(n_cols, dtype=np.float64)
            weights[active] = np.clip(duals, 0.0, 1.0)
            return value, weights, active
        worst = violated[np.argsort(slack[violated], kind="stable")][:128]
        active = np.union1d(active, worst)


def solve_set_cover_lp(system: CoverageSystem, threshold: int) -> CoverResult:
    """Fractional minimum cover value (and weights) at one threshold.

    Every row must be coverable within the threshold.  Weights are
    reported per system column; duplicates dropped in preprocessing get
    weight zero.
    """
    if not system.coverable(threshold):
        raise ValueError(f"threshold {threshold} leaves some row uncoverable")
    cover = system.cover_at(threshold)
    rows, cols = _reduce(cover)
    value, w, active = _covering_lp_any(cover[np.ix_(rows, cols)], _warm_for(system, cols))
    system.lp_warm = system.site_ids[cols[active]]
    weights = np.zeros(cover.shape[1], dtype=np.float64)
    weights[cols] = w
    return CoverResult(
        status=Status.COVER_FOUND, fractional_value=value, fractional_weights=weights
    )


def _relaxed_probe(system: CoverageSystem, threshold: int, p: int) -> CoverResult:
    """Fractional ``<= p`` verdict, dodging the LP when cheap bounds decide.

    A greedy cover of at most p columns already proves the fractional
    value fits (and doubles as perfectly usable integral weights); a set
    of pairwise column-disjoint rows larger than p proves it cannot.
    Only the thresholds where those bounds straddle p pay for a simplex
    run, which on the bisection path is the rare case.
    """
    cover = system.cover_at(threshold)
    rows, cols = _reduce(cover)
    sub = cover[np.ix_(rows, cols)]
    greedy = _greedy_cover(sub)
    if len(greedy) <= p:
        weights = np.zeros(cover.shape[1], dtype=np.float64)
        weights[cols[greedy]] = 1.0
        return CoverResult(
            status=Status.COVER_FOUND,
            fractional_value=float(len(greedy)),
            fractional_weights=weights,
        )
    if _disjoint_rows_bound(sub) > p:
        return CoverResult(status=Status.PROVED_EXCEEDS_P)
    value, w, active = _covering_lp_any(sub, _warm_for(system, cols))
    system.lp_warm = system.site_ids[cols[active]]
    if value > p + LP_TOL:
        return CoverResult(status=Status.PROVED_EXCEEDS_P, fractional_value=value)
    weights = np.zeros(cover.shape[1], dtype=np.float64)
    weights[cols] = w
    return CoverResult(
        status=Status.COVER_FOUND, fractional_value=value, fractional_weights=weights
    )


def _greedy_cover(cover: np.ndarray) -> list[int]:
    """Greedy cover on a boolean matrix; lowest column index breaks ties."""
    uncovered = np.ones(cover.shape[0], dtype=bool)
    chosen: list[int] = []
    while uncovered.any():
        gains = cover[uncovered].sum(axis=0)
        j = int(gains.argmax())
        if gains[j] == 0:
            raise ValueError("uncoverable row in greedy cover")
        chosen.append(j)
        uncovered &= ~cover[:, j]
    return chosen


def solve_set_cover_exact(system: CoverageSystem, threshold: int, p: int) -> CoverResult:
    """Exact ``<= p`` / ``> p`` verdict for the cover question at a threshold.

    COVER_FOUND carries a witness of at most p site ids (not necessarily
    minimum); PROVED_EXCEEDS_P is certified either by the root LP bound
    or by exhausting the branch-and-bound tree.
    """
    if not system.coverable(threshold):
        raise ValueError(f"threshold {threshold} leaves some row uncoverable")
    full_cover = system.cover_at(threshold)
    rows, cols = _reduce(full_cover)
    cover = full_cover[np.ix_(rows, cols)]
    n_rows, n_cols = cover.shape

    def found(chosen_reduced: list[int]) -> CoverResult:
        site_ids = tuple(int(system.site_ids[cols[j]]) for j in chosen_reduced)
        return CoverResult(status=Status.COVER_FOUND, chosen_sites=tuple(sorted(site_ids)))

    if n_rows == 0:
        return CoverResult(status=Status.COVER_FOUND, chosen_sites=())

    greedy = _greedy_cover(cover)
    if len(greedy) <= p:
        return found(greedy)
    if _disjoint_rows_bound(cover) > p:
        # Pairwise column-disjoint rows each demand their own column.
        return CoverResult(status=Status.PROVED_EXCEEDS_P)

    # Branch and bound.  A node fixes some columns in (included) and some
    # out (available mask); DFS, include-branch first.
    root_value, root_w, root_active = _covering_lp_any(cover, _warm_for(system, cols))
    system.lp_warm = system.site_ids[cols[root_active]]
    if math.ceil(root_value - LP_TOL) > p:
        # The root LP bound alone certifies that every cover exceeds p.
        return CoverResult(status=Status.PROVED_EXCEEDS_P)

    stack: list[tuple[list[int], np.ndarray, np.ndarray, float, np.ndarray]] = [
        ([], np.ones(n_cols, dtype=bool), np.zeros(n_rows, dtype=bool), root_value, root_w)
    ]
    while stack:
        included, available, covered, lp_value, lp_w = stack.pop()
        if len(included) + math.ceil(lp_value - LP_TOL) > p:
            continue
        open_rows = ~covered
        if not open_rows.any():
            if len(included) <= p:
                return found(included)
            continue
        frac = (lp_w > LP_TOL) & (lp_w < 1.0 - LP_TOL)
        if not frac.any():
            # Integral LP: it is this node's optimal integer cover.
            chosen = included + [int(j) for j in np.flatnonzero(lp_w > 0.5)]
            if len(chosen) <= p:
                return found(chosen)
            continue
        j_local = int(np.argmin(np.abs(lp_w[frac] - 0.5)))
        j = int(np.flatnonzero(frac)[j_local])

        def child(inc: list[int], avail: np.ndarray, cov: np.ndarray):
            rows_open = ~cov
            if not rows_open.any():
                if len(inc) <= p:
                    return ("leaf", found(inc))
                return None
            sub = cover[np.ix_(rows_open, avail)]
            if sub.shape[1] == 0 or not sub.any(axis=1).all():
                return None  # some row became uncoverable
            value, w, _ = _covering_lp_any(sub)
            if len(inc) + math.ceil(value - LP_TOL) > p:
                return None
            full_w = np.zeros(n_cols, dtype=np.float64)
            full_w[np.flatnonzero(avail)] = w
            return ("node", (inc, avail, cov, value, full_w))

        # Exclude branch pushed first so the include branch is explored first.
        avail_ex = available.copy()
        avail_ex[j] = False
        ex = child(list(included), avail_ex, covered)
        inc_avail = available.copy()
        inc_avail[j] = False
        inc = child(included + [j], inc_avail, covered | cover[:, j])
        for item in (ex, inc):
            if item is None:
                continue
            kind, payload = item
            if kind == "leaf":
                return payload
            stack.append(payload)
    return CoverResult(status=Status.PROVED_EXCEEDS_P)


def binary_search_radius(
    system: CoverageSystem,
    p: int,
    mode: SearchMode,
    probe_lowest_first: bool = True,
) -> SearchOutcome:
    """Smallest distinct rounded distance at which the cover question passes.

    INTEGER mode demands an exact cover of at most p columns and returns a
    witness padded to exactly min(p, #columns) sites with the lowest-index
    unused columns (extra sites never hurt the radius).  RELAXED mode
    demands fractional cover value <= p and returns certifying weights at
    the answer: LP-optimal ones, or an integral greedy cover when that
    already fits within p.

    Bisection keeps the invariant "everything below lo is infeasible,
    hi is feasible"; the top threshold is always feasible because every
    entry of the matrix is within it.  With ``probe_lowest_first`` the
    first probe goes to the smallest distance instead of the midpoint,
    which certifies a stagnant lower bound with a single probe.
    """
    dist = system.distinct
    K = len(dist)
    probes = 0
    cache: dict[int, CoverResult] = {}

    def feasible(k: int) -> bool:
        nonlocal probes
        t = int(dist[k])
        if not system.coverable(t):
            return False
        probes += 1
        if mode is SearchMode.INTEGER:
            res = solve_set_cover_exact(system, t, p)
        else:
            res = _relaxed_probe(system, t, p)
        cache[k] = res
        return res.status is Status.COVER_FOUND

    lo, hi = 0, K - 1
    first = True
    while lo < hi:
        k = lo if (first and probe_lowest_first) else (lo + hi) // 2
        first = False
        if feasible(k):
            hi = k
        else:
            lo = k + 1
    answer = lo
    if answer not in cache:
        ok = feasible(answer)
        if not ok:
            raise AssertionError("top threshold must be feasible")
    res = cache[answer]

    if mode is SearchMode.RELAXED:
        return SearchOutcome(
            index=answer,
            threshold=int(dist[answer]),
            chosen_sites=None,
            fractional_weights=res.fractional_weights,
            probes=probes,
        )
    chosen = list(res.chosen_sites)
    want = min(p, len(system.site_ids))
    if len(chosen) < want:
        used = set(chosen)
        for sid in system.site_ids:
            if int(sid) not in used:
                chosen.append(int(sid))
                used.add(int(sid))
            if len(chosen) == want:
                break
    return SearchOutcome(
        index=answer,
        threshold=int(dist[answer]),
        chosen_sites=tuple(sorted(chosen)),
        fractional_weights=None,
        probes=probes,
    )
