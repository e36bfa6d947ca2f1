"""Randomised alternatives around an incumbent solution.

Between exact probes, the solver diversifies: perturb the incumbent, then
hill-climb on how many clients of a random target set C are covered within
the current lower bound, under the hard constraint that every
representative stays covered within that bound.  Each strict improvement
in target coverage is emitted as an alternative solution; fully covering C
enlarges it.  The alternatives feed the representative-growth step with
uncovered clients seen from several directions, not just from the
incumbent's.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import Instance, client_row
from .rounding import RoundedRows, round_distances

_CLIMB_CAP = 200  # circuit breaker; best-improvement climbs converge long before


@dataclass
class SearchParams:
    """Knobs for the alternative-solution search."""

    sample_size: int = 50
    perturb_sites: int | None = None  # default: max(1, p // 10)
    stall_limit: int = 5
    max_alternatives: int = 10

    def perturb_count(self, p: int) -> int:
        if self.perturb_sites is not None:
            return max(1, self.perturb_sites)
        return max(1, p // 10)


def round_fractional(weights: np.ndarray, p: int) -> tuple[int, ...]:
    """Open the p highest-weight sites (lowest index wins ties)."""
    weights = np.asarray(weights, dtype=np.float64)
    n = len(weights)
    if n == 0:
        raise ValueError("no weights to round")
    order = np.lexsort((np.arange(n), -weights))
    return tuple(sorted(int(j) for j in order[: min(p, n)]))


class _SwapSearch:
    """Bookkeeping for feasibility-preserving site swaps.

    Feasibility means every representative keeps an open site within the
    bound; coverage counts over the target clients are maintained
    incrementally as swaps are applied.
    """

    def __init__(self, covers_reps: np.ndarray, covers_targets: np.ndarray, sites: list[int]):
        self.covers_reps = covers_reps  # (num_reps, M) bool
        self.covers_targets = covers_targets  # (num_targets, M) bool
        self.sites = list(sites)
        self.rep_count = covers_reps[:, self.sites].sum(axis=1)
        self.target_count = covers_targets[:, self.sites].sum(axis=1)

    @property
    def coverage(self) -> int:
        return int((self.target_count >= 1).sum())

    def covers_all_targets(self) -> bool:
        return bool((self.target_count >= 1).all())

    def feasible_replacements(self, site: int) -> np.ndarray:
        """Sites that may replace ``site`` without exposing a representative."""
        lost = self.rep_count - self.covers_reps[:, site]
        needy = lost == 0
        mask = (
            self.covers_reps[needy].all(axis=0)
            if needy.any()
            else np.ones(self.covers_reps.shape[1], dtype=bool)
        )
        mask = mask.copy()
        mask[self.sites] = False
        return mask

    def swap(self, out_site: int, in_site: int) -> None:
        self.sites.remove(out_site)
        self.sites.append(in_site)
        self.rep_count += self.covers_reps[:, in_site].astype(np.int64)
        self.rep_count -= self.covers_reps[:, out_site].astype(np.int64)
        self.target_count += self.covers_targets[:, in_site].astype(np.int64)
        self.target_count -= self.covers_targets[:, out_site].astype(np.int64)

    def grow_targets(self, extra_covers: np.ndarray) -> None:
        self.covers_targets = np.vstack([self.covers_targets, extra_covers])
        extra_count = extra_covers[:, self.sites].sum(axis=1)
        self.target_count = np.concatenate([self.target_count, extra_count])

    def best_swap(self) -> tuple[int, int, int] | None:
        """Best admissible (out, in, new coverage) strictly above the current one."""
        best: tuple[int, int, int] | None = None
        current = self.coverage
        for a in list(self.sites):
            feasible = self.feasible_replacements(a)
            if not feasible.any():
                continue
            still = (self.target_count - self.covers_targets[:, a]) >= 1
            base = int(still.sum())
            gains = base + (~still).astype(np.int64) @ self.covers_targets
            gains = np.where(feasible, gains, -1)
            b = int(gains.argmax())
            cnt = int(gains[b])
            if cnt > current and (best is None or cnt > best[2]):
                best = (a, b, cnt)
        return best

    def climb(self) -> None:
        for _ in range(_CLIMB_CAP):
            move = self.best_swap()
            if move is None:
                return
            self.swap(move[0], move[1])


def generate_alternatives(
    inst: Instance,
    incumbent_sites: tuple[int, ...],
    bound: int,
    rows: RoundedRows,
    params: SearchParams,
    rng: np.random.Generator,
) -> list[tuple[int, ...]]:
    """Alternative solutions around the incumbent, best-coverage-first.

    The incumbent must cover every representative within ``bound`` under
    the rounded metric of ``rows``.  Returns at most
    ``params.max_alternatives`` site tuples; each emitted solution also
    covers all representatives within the bound.  Deterministic for a
    given generator state.
    """
    covers_reps = rows.values <= bound
    sites = list(incumbent_sites)
    if not covers_reps[:, sites].any(axis=1).all():
        raise ValueError("incumbent leaves a representative uncovered within the bound")

    pool = np.setdiff1d(np.arange(inst.n), np.asarray(rows.rep_ids, dtype=np.int64))
    if pool.size == 0:
        return []
    target_cap = 4 * params.sample_size

    def rounded_cover_rows(clients: np.ndarray) -> np.ndarray:
        raw = np.vstack([client_row(inst, int(c)) for c in clients])
        return round_distances(raw, rows.ctx) <= bound

    take = min(params.sample_size, pool.size)
    targets = np.sort(rng.choice(pool, size=take, replace=False))
    state = _SwapSearch(covers_reps, rounded_cover_rows(targets), sites)

    p = len(sites)
    alternatives: list[tuple[int, ...]] = []
    best_count = -1
    stalls = 0
    while stalls < params.stall_limit and len(alternatives) < params.max_alternatives:
        for _ in range(params.perturb_count(p)):
            out_site = int(rng.choice(state.sites))
            feasible = state.feasible_replacements(out_site)
            options = np.flatnonzero(feasible)
            if options.size == 0:
                continue
            state.swap(out_site, int(rng.choice(options)))
        state.climb()
        count = state.coverage
        if count > best_count:
            best_count = count
            alternatives.append(tuple(sorted(state.sites)))
            stalls = 0
            if state.covers_all_targets() and len(targets) < target_cap:
                remaining = np.setdiff1d(pool, targets)
                extra = min(len(targets), target_cap - len(targets), remaining.size)
                if extra > 0:
                    fresh = np.sort(rng.choice(remaining, size=extra, replace=False))
                    state.grow_targets(rounded_cover_rows(fresh))
                    targets = np.concatenate([targets, fresh])
        else:
            stalls += 1
    return alternatives
