"""The solver: coarse-to-fine distance rounding around exact covering probes.

One outer iteration fixes a precision (a power of ten), solves the
p-center problem exactly under the rounded, clipped metric, and uses the
result to tighten both bounds; the precision then drops tenfold.  Each
fixed-precision solve works on a small representative subset of clients,
alternating LP-relaxed and exact set-cover binary searches, growing the
representatives with quadrant-guided picks from whatever the tentative
solutions leave uncovered, and pruning dominated sites throughout.  The
optimum is certified when the bounds meet.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .clustering import Clustering, kmeans, quadrant_additions
from .covering import CoverageSystem, SearchMode, binary_search_radius
from .domination import (
    DominationState,
    compute_dominations,
    update_after_bounds_improved,
    update_after_clients_added,
)
from .instance import Instance, Solution, allocation_distances, client_row, radius
from .localsearch import SearchParams, generate_alternatives, round_fractional
from .rounding import RoundedRows, RoundingContext, initial_exponent, round_distances

DEFAULT_TIME_LIMIT = 10800.0
DEFAULT_DOMINATION_CUTOFF = 230_000

STATUS_OPTIMAL = "optimal"
STATUS_TIMEOUT = "timeout"


@dataclass
class SolverParams:
    """Feature flags and knobs for :func:`solve_by_rounding`."""

    k: int | None = None  # number of clusters; default min(p + 2, N)
    seed: int = 0
    time_limit: float | None = DEFAULT_TIME_LIMIT
    use_dominations: bool = True
    domination_cutoff: int = DEFAULT_DOMINATION_CUTOFF
    use_local_search: bool = True
    use_rounding: bool = True
    search: SearchParams = field(default_factory=SearchParams)


@dataclass
class IterationStats:
    """One outer iteration: bounds after it, precision, growth and effort."""

    exponent: int
    lower: int
    upper: int
    reps_count: int
    probes: int
    seconds: float


@dataclass
class SolveStats:
    iterations: list[IterationStats] = field(default_factory=list)
    cover_probes: int = 0
    peak_reps: int = 0
    wall_seconds: float = 0.0


@dataclass
class SolveState:
    """Mutable bounds, representatives and incumbent shared across iterations."""

    reps: list[int]
    lower: int
    upper: int
    incumbent: Solution


@dataclass
class SolveResult:
    solution: Solution
    radius: int
    lower: int
    upper: int
    status: str
    stats: SolveStats


class _Deadline:
    def __init__(self, limit: float | None):
        self._limit = limit
        self._start = time.perf_counter()

    def expired(self) -> bool:
        return self._limit is not None and time.perf_counter() - self._start > self._limit

    def elapsed(self) -> float:
        return time.perf_counter() - self._start


def nearest_site(inst: Instance, client: int) -> int:
    """Lowest-index site closest to the given client."""
    return int(np.argmin(client_row(inst, client)))


def initial_solution(inst: Instance, reps: list[int], p: int) -> Solution:
    """Farthest-first seed solution: spread min(p, #reps) sites over the reps.

    Starting from the first representative, repeatedly take the
    representative farthest from those already chosen, then open the site
    nearest to each chosen representative (the representative itself when
    clients and sites coincide).
    """
    if not reps:
        raise ValueError("no representatives to seed from")
    pts = inst.clients[np.asarray(reps, dtype=np.int64)]
    want = min(p, len(reps))
    chosen = [0]
    d = np.floor(np.hypot(pts[:, 0] - pts[0, 0], pts[:, 1] - pts[0, 1]) + 0.5)
    d[0] = -1.0
    while len(chosen) < want:
        nxt = int(d.argmax())
        chosen.append(nxt)
        step = np.floor(np.hypot(pts[:, 0] - pts[nxt, 0], pts[:, 1] - pts[nxt, 1]) + 0.5)
        d = np.minimum(d, step)
        d[nxt] = -1.0
    coincident = inst.sites_coincide_with_clients()
    sites = tuple(
        reps[c] if coincident else nearest_site(inst, reps[c]) for c in chosen
    )
    sol = Solution(open_sites=sites)
    sol.true_radius = radius(inst, sol)
    return sol


def _rounded_radius(inst: Instance, sites: tuple[int, ...], rows: RoundedRows) -> int:
    """Radius of a solution over all clients under the rows' rounded metric."""
    alloc = allocation_distances(inst, sites)
    return int(round_distances(alloc, rows.ctx).max())


def _uncovered_clients(
    inst: Instance, sites: tuple[int, ...], lower: int, step: int, rep_mask: np.ndarray
) -> np.ndarray:
    """Non-representative clients whose rounded allocation exceeds the bound."""
    alloc = allocation_distances(inst, sites)
    over = (alloc // step) * step > lower
    return np.flatnonzero(over & ~rep_mask)


def solve_rounded(
    inst: Instance,
    state: SolveState,
    clustering: Clustering,
    exponent: int,
    params: SolverParams,
    rng: np.random.Generator,
    deadline: _Deadline,
    stats: SolveStats,
) -> tuple[Solution, int, bool]:
    """Solve the p-center problem exactly under the current rounded metric.

    Representatives in ``state`` grow in place.  Returns the optimal
    solution of the rounded problem, its rounded radius over all clients,
    and a timeout flag (when set, the radius is only the best lower bound
    proven so far).
    """
    p = inst.p
    assert p is not None
    ctx = RoundingContext(exponent, state.lower, state.upper)
    rows = RoundedRows(inst, state.reps, ctx)
    use_dom = params.use_dominations and inst.m <= params.domination_cutoff
    dom_state: DominationState | None = compute_dominations(rows) if use_dom else None

    rep_mask = np.zeros(inst.n, dtype=bool)
    rep_mask[state.reps] = True

    best = Solution(open_sites=state.incumbent.open_sites)
    ub_local = _rounded_radius(inst, best.open_sites, rows)
    best.rounded_radius = ub_local
    lb_local = state.lower
    added_clients = True
    warm_sites: np.ndarray | None = None

    while lb_local < ub_local:
        if deadline.expired():
            return best, lb_local, True
        cols = dom_state.non_dominated if dom_state is not None else np.arange(inst.m)
        system = CoverageSystem.from_rows(rows, cols)
        system.lp_warm = warm_sites
        if added_clients:
            outcome = binary_search_radius(system, p, SearchMode.RELAXED)
            picked = round_fractional(outcome.fractional_weights, p)
            y_hat = tuple(sorted(int(system.site_ids[c]) for c in picked))
        else:
            outcome = binary_search_radius(system, p, SearchMode.INTEGER)
            y_hat = outcome.chosen_sites
        stats.cover_probes += outcome.probes
        warm_sites = system.lp_warm
        if outcome.threshold < lb_local:
            raise AssertionError("lower bound regressed")
        lb_local = outcome.threshold

        rounded_r = _rounded_radius(inst, y_hat, rows)
        if rounded_r < ub_local:
            best = Solution(open_sites=y_hat, rounded_radius=rounded_r)
            ub_local = rounded_r
        if lb_local >= ub_local:
            break

        solutions = [y_hat]
        if params.use_local_search:
            covers_reps = int(rows.values[:, list(y_hat)].min(axis=1).max()) <= lb_local
            if covers_reps:
                solutions += [
                    alt
                    for alt in generate_alternatives(
                        inst, y_hat, lb_local, rows, params.search, rng
                    )
                ]
        added: set[int] = set()
        for sol_sites in solutions:
            unc = _uncovered_clients(inst, sol_sites, lb_local, rows.ctx.step, rep_mask)
            added.update(int(c) for c in quadrant_additions(clustering, unc))
        added_clients = bool(added)

        changed = rows.reclip(lb_local, ub_local)
        if dom_state is not None:
            dom_state = update_after_bounds_improved(dom_state, rows, changed)
        if added_clients:
            fresh = sorted(added)
            n_old = rows.num_reps
            rows.extend(fresh)
            state.reps.extend(fresh)
            rep_mask[fresh] = True
            if dom_state is not None:
                dom_state = update_after_clients_added(dom_state, rows, n_old)
    return best, lb_local, False


def solve_by_rounding(inst: Instance, params: SolverParams | None = None) -> SolveResult:
    """Solve a p-center instance to proven optimality (or until the time limit).

    Returns the best solution with matching lower/upper bounds and status
    "optimal" when the bounds meet, or status "timeout" with the tightest
    bounds proven otherwise.
    """
    if inst.p is None:
        raise ValueError("instance has no p set")
    params = params or SolverParams()
    deadline = _Deadline(params.time_limit)
    stats = SolveStats()
    rng = np.random.default_rng([params.seed, 1])

    k = params.k if params.k is not None else min(inst.p + 2, inst.n)
    clustering = kmeans(inst, k, seed=params.seed)
    reps = sorted(int(r) for r in clustering.medoids)
    seed_solution = initial_solution(inst, reps, inst.p)

    state = SolveState(
        reps=reps, lower=0, upper=int(seed_solution.true_radius), incumbent=seed_solution
    )
    stats.peak_reps = len(reps)
    status = STATUS_OPTIMAL
    if state.upper > 0:
        exponent = initial_exponent(state.upper) if params.use_rounding else 0
        while state.lower < state.upper:
            if deadline.expired():
                status = STATUS_TIMEOUT
                break
            iter_start = deadline.elapsed()
            probes_before = stats.cover_probes
            sol, lower_alpha, timed_out = solve_rounded(
                inst, state, clustering, exponent, params, rng, deadline, stats
            )
            stats.peak_reps = max(stats.peak_reps, len(state.reps))
            state.lower = max(state.lower, lower_alpha)
            true_r = radius(inst, sol)
            if true_r < state.upper:
                state.incumbent = Solution(
                    open_sites=sol.open_sites,
                    true_radius=true_r,
                    rounded_radius=sol.rounded_radius,
                )
                state.upper = true_r
            stats.iterations.append(
                IterationStats(
                    exponent=exponent,
                    lower=state.lower,
                    upper=state.upper,
                    reps_count=len(state.reps),
                    probes=stats.cover_probes - probes_before,
                    seconds=deadline.elapsed() - iter_start,
                )
            )
            if timed_out:
                status = STATUS_TIMEOUT
                break
            exponent = max(0, exponent - 1)

    if state.incumbent.true_radius is None:
        state.incumbent.true_radius = radius(inst, state.incumbent)
    stats.wall_seconds = deadline.elapsed()
    return SolveResult(
        solution=state.incumbent,
        radius=int(state.incumbent.true_radius),
        lower=state.lower,
        upper=state.upper,
        status=status,
        stats=stats,
    )
