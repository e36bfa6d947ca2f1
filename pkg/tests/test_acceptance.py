"""End-to-end acceptance checks.

Every test prints one ``[criterion N] ...: PASS`` (or FAIL) line — run with
``pytest -s`` to see them live; the test names carry the same numbering so
plain ``pytest -v`` output also shows one verdict per criterion.

Criteria 1 and 7 exercise published TSPLib coordinate files, which are not
shipped with this repository.  Point ``PCENTER_TSPLIB_DIR`` at a directory
containing them (``nu3496.tsp`` etc., default ``data/tsplib/``) to enable
those tests; without the files they skip and say so.
"""
from __future__ import annotations

import itertools
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

from conftest import random_instance
from pcenter.covering import CoverageSystem, Status, solve_set_cover_exact, solve_set_cover_lp
from pcenter.domination import (
    compute_dominations,
    update_after_bounds_improved,
    update_after_clients_added,
)
from pcenter.engine import SolverParams, solve_by_rounding
from pcenter.instance import Instance, brute_force_optimum, load_instance
from pcenter.rounding import RoundedRows, RoundingContext, round_distance

TSPLIB_DIR = Path(os.environ.get("PCENTER_TSPLIB_DIR", "data/tsplib"))
SWEEP_SIZE = 200
ABLATIONS = {
    "no-dominations": {"use_dominations": False},
    "no-local-search": {"use_local_search": False},
    "no-rounding": {"use_rounding": False},
}


@contextmanager
def report(number: int, label: str):
    try:
        yield
    except Exception:
        print(f"\n[criterion {number}] {label}: FAIL")
        raise
    print(f"\n[criterion {number}] {label}: PASS")


def skip_missing_tsplib(number: int, label: str, stems: list[str]) -> None:
    reason = (
        f"TSPLib files {', '.join(s + '.tsp' for s in stems)} not found under "
        f"{TSPLIB_DIR}/ (set PCENTER_TSPLIB_DIR to enable)"
    )
    print(f"\n[criterion {number}] {label}: SKIP ({reason})")
    pytest.skip(reason)


def _tsplib_file(stem: str) -> Path | None:
    path = TSPLIB_DIR / f"{stem}.tsp"
    return path if path.exists() else None


# ---------------------------------------------------------------------------
# Shared solve sweeps
# ---------------------------------------------------------------------------


@dataclass
class SweepRun:
    inst: Instance
    brute_radius: int
    results: dict  # flag label -> SolveResult
    oracle_seconds: float  # brute force + default solve only


@pytest.fixture(scope="module")
def sweep() -> list[SweepRun]:
    rng = np.random.default_rng(20260814)
    runs = []
    for i in range(SWEEP_SIZE):
        inst = random_instance(rng, n_min=5, n_max=40, p_max=4, name=f"sweep{i:03d}")
        start = time.perf_counter()
        brute_radius, _ = brute_force_optimum(inst)
        results = {"default": solve_by_rounding(inst, SolverParams(seed=i))}
        oracle_seconds = time.perf_counter() - start
        for label, overrides in ABLATIONS.items():
            results[label] = solve_by_rounding(inst, SolverParams(seed=i, **overrides))
        runs.append(SweepRun(inst, brute_radius, results, oracle_seconds))
    return runs


@pytest.fixture(scope="module")
def nu3496_run():
    """nu3496 at p=5 with default settings, solved once and shared."""
    path = _tsplib_file("nu3496")
    if path is None:
        return None
    inst = load_instance(str(path), p=5)
    start = time.perf_counter()
    result = solve_by_rounding(inst, SolverParams(time_limit=1800.0))
    return inst, result, time.perf_counter() - start


# ---------------------------------------------------------------------------
# Criterion 1 — reference-instance regression
# ---------------------------------------------------------------------------


def test_criterion_1_nu3496_radius_and_bound_trajectory(nu3496_run):
    label = "nu3496 p=5 optimal at radius 1123 with LB trajectory 1000/1100/1120/1123"
    if nu3496_run is None:
        skip_missing_tsplib(1, label, ["nu3496"])
    inst, result, seconds = nu3496_run
    with report(1, label):
        assert inst.n == 3496
        assert result.status == "optimal"
        assert result.radius == 1123
        lbs = [it.lower for it in result.stats.iterations]
        assert lbs == [1000, 1100, 1120, 1123]
        assert seconds < 60.0, f"took {seconds:.1f}s"
    for it in result.stats.iterations:
        print(
            f"  nu3496 10^{it.exponent}: lb={it.lower} ub={it.upper} "
            f"reps={it.reps_count} ({it.seconds:.1f}s)"
        )


# ---------------------------------------------------------------------------
# Criterion 2 — oracle equivalence on random instances
# ---------------------------------------------------------------------------


def test_criterion_2_solver_equals_brute_force_on_random_instances(sweep):
    label = f"{SWEEP_SIZE} random instances match the exhaustive optimum"
    with report(2, label):
        assert len(sweep) >= 200
        for run in sweep:
            result = run.results["default"]
            assert result.status == "optimal", run.inst.name
            assert result.radius == run.brute_radius, run.inst.name
            assert result.lower == result.upper == run.brute_radius, run.inst.name
        total = sum(run.oracle_seconds for run in sweep)
        assert total < 120.0, f"took {total:.1f}s"


# ---------------------------------------------------------------------------
# Criterion 3 — sandwich guarantee per outer iteration
# ---------------------------------------------------------------------------


def test_criterion_3_bounds_within_one_step_after_every_iteration(sweep, nu3496_run):
    label = "UB - LB <= 10^alpha at the end of every outer iteration"
    with report(3, label):
        iterations = 0
        results = [r for run in sweep for r in run.results.values()]
        if nu3496_run is not None:
            results.append(nu3496_run[1])
        for result in results:
            for it in result.stats.iterations:
                assert it.upper - it.lower <= 10**it.exponent, vars(it)
                iterations += 1
        assert iterations > 0


# ---------------------------------------------------------------------------
# Criterion 4 — domination soundness
# ---------------------------------------------------------------------------


def _subset_optimum(values: np.ndarray, cols: np.ndarray, p: int) -> int:
    """Best achievable max-row-distance opening <= p of the given columns."""
    take = min(p, len(cols))
    combos = np.array(list(itertools.combinations(cols.tolist(), take)), dtype=np.int64)
    return int(values[:, combos].min(axis=2).max(axis=0).min())


def test_criterion_4_domination_preserves_optima_and_updates_match_scratch():
    label = "120 reduced systems: dominated sites never change the optimum; updates = scratch"
    rng = np.random.default_rng(4)
    with report(4, label):
        for _ in range(120):
            n_reps = int(rng.integers(1, 11))
            n_sites = int(rng.integers(2, 16))
            high = int(rng.choice([3, 6, 20, 80]))
            values = rng.integers(0, high, size=(n_reps, n_sites)).astype(np.int64)
            state = compute_dominations(values)
            survivors = state.non_dominated
            assert survivors.size >= 1
            for p in (1, 2, 3):
                assert _subset_optimum(values, survivors, p) == _subset_optimum(
                    values, np.arange(n_sites), p
                )
            # randomized update sequence: growth and band-tightening mixed,
            # each step compared against a from-scratch recomputation
            for _ in range(int(rng.integers(2, 5))):
                if rng.random() < 0.5 and values.shape[0] < 10:
                    extra = rng.integers(0, high, size=(1, n_sites)).astype(np.int64)
                    grown = np.vstack([values, extra])
                    state = update_after_clients_added(state, grown, values.shape[0])
                    values = grown
                else:
                    lo = int(rng.integers(0, max(high // 2, 1)))
                    hi = int(rng.integers(lo, high + 1))
                    clipped = np.clip(values, lo, hi + 1)
                    changed = not np.array_equal(clipped, values)
                    state = update_after_bounds_improved(state, clipped, changed)
                    values = clipped
                assert np.array_equal(
                    state.dominated_by, compute_dominations(values).dominated_by
                )


# ---------------------------------------------------------------------------
# Criterion 5 — set-cover probes are exact
# ---------------------------------------------------------------------------


def _min_cover_size(cover: np.ndarray, cap: int) -> int | None:
    for k in range(1, min(cap, cover.shape[1]) + 1):
        combos = np.array(list(itertools.combinations(range(cover.shape[1]), k)))
        if cover[:, combos].any(axis=2).all(axis=0).any():
            return k
    return None


def _greedy_size(cover: np.ndarray) -> int:
    uncovered = np.ones(cover.shape[0], dtype=bool)
    size = 0
    while uncovered.any():
        j = int(cover[uncovered].sum(axis=0).argmax())
        uncovered &= ~cover[:, j]
        size += 1
    return size


def test_criterion_5_exact_verdicts_and_lp_lower_bounds():
    label = "500 boolean systems: verdicts match enumeration, LP below integer covers"
    rng = np.random.default_rng(5)
    with report(5, label):
        for trial in range(500):
            n_rows = int(rng.integers(1, 13))
            n_cols = int(rng.integers(1, 19))
            matrix = rng.integers(0, 8, size=(n_rows, n_cols)).astype(np.int64)
            system = CoverageSystem(list(range(n_rows)), np.arange(n_cols), matrix)
            floor = int(matrix.min(axis=1).max())
            coverable = system.distinct[system.distinct >= floor]
            threshold = int(rng.choice(coverable))
            p = int(rng.integers(1, 5))
            cover = system.cover_at(threshold)

            verdict = solve_set_cover_exact(system, threshold, p)
            expected = _min_cover_size(cover, cap=p) is not None
            assert (verdict.status is Status.COVER_FOUND) == expected, trial
            if verdict.status is Status.COVER_FOUND:
                chosen = list(verdict.chosen_sites)
                assert len(chosen) <= p
                assert cover[:, chosen].any(axis=1).all(), trial

            lp = solve_set_cover_lp(system, threshold)
            greedy = _greedy_size(cover)
            best_integer = _min_cover_size(cover, cap=min(greedy - 1, 6)) or greedy
            assert lp.fractional_value <= best_integer + 1e-6, trial
            assert (cover @ lp.fractional_weights >= 1.0 - 1e-6).all(), trial


# ---------------------------------------------------------------------------
# Criterion 6 — ablations change speed, never the optimum
# ---------------------------------------------------------------------------


def test_criterion_6_feature_ablations_keep_the_optimum(sweep):
    label = "no-dominations / no-local-search / no-rounding all reproduce the optimum"
    with report(6, label):
        for run in sweep:
            for flag in ABLATIONS:
                result = run.results[flag]
                assert result.status == "optimal", (run.inst.name, flag)
                assert result.radius == run.brute_radius, (run.inst.name, flag)
    path = _tsplib_file("nu3496")
    if path is None:
        print("  (nu3496 ablations skipped: file not available)")
        return
    inst = load_instance(str(path), p=5)
    for flag, overrides in ABLATIONS.items():
        result = solve_by_rounding(inst, SolverParams(time_limit=1800.0, **overrides))
        assert result.status == "optimal", flag
        assert result.radius == 1123, flag
        print(f"  nu3496 {flag}: radius 1123 in {result.stats.wall_seconds:.1f}s")


# ---------------------------------------------------------------------------
# Criterion 7 — desk-scale coordinate-file sweep
# ---------------------------------------------------------------------------


def test_criterion_7_tsplib_sweep_solves_to_optimality(nu3496_run):
    stems = ["rw1621", "u1817", "rl1889", "pr2392", "nu3496"]
    label = "TSPLib N<=10000 instances solve to OPTIMAL at p in {2,3,5,10}"
    available = [s for s in stems if _tsplib_file(s) is not None]
    if not available:
        skip_missing_tsplib(7, label, stems)
    with report(7, label):
        for stem in available:
            for p in (2, 3, 5, 10):
                if stem == "nu3496" and p == 5 and nu3496_run is not None:
                    result = nu3496_run[1]  # reuse the criterion-1 solve
                else:
                    inst = load_instance(str(_tsplib_file(stem)), p=p)
                    assert inst.n <= 10000
                    result = solve_by_rounding(inst, SolverParams(time_limit=1800.0))
                assert result.status == "optimal", (stem, p)
                assert result.stats.wall_seconds <= 1800.0, (stem, p)
                print(
                    f"  {stem} p={p}: radius={result.radius} "
                    f"({result.stats.wall_seconds:.1f}s)"
                )


# ---------------------------------------------------------------------------
# Criterion 8 — the rounding law
# ---------------------------------------------------------------------------


def test_criterion_8_rounding_law_reference_sweep():
    label = "10^4 rounding cases match the direct formula; monotone; few distinct values"
    rng = np.random.default_rng(8)
    with report(8, label):
        for _ in range(10_000):
            exponent = int(rng.integers(0, 6))
            lower = int(rng.integers(0, 2000))
            upper = lower + int(rng.integers(0, 5000))
            d = int(rng.integers(0, 20_000))
            got = round_distance(d, RoundingContext(exponent, lower, upper))
            step = 10**exponent
            assert got == min(max(lower, step * (d // step)), upper + 1)

        for _ in range(200):
            exponent = int(rng.integers(0, 5))
            lower = int(rng.integers(0, 500))
            upper = lower + int(rng.integers(0, 3000))
            ctx = RoundingContext(exponent, lower, upper)
            ds = np.sort(rng.integers(0, 6000, size=80))
            rounded = [round_distance(int(d), ctx) for d in ds]
            assert rounded == sorted(rounded), "monotonicity"
            step = ctx.step
            allowed = {lower, upper + 1} | {
                k * step
                for k in range(lower // step, upper // step + 2)
                if lower <= k * step <= upper + 1
            }
            assert set(rounded) <= allowed, "values must sit on the clipped grid"
            assert len(set(rounded)) <= (upper - lower) // step + 3
