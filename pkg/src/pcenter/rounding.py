"""Distance rounding: coarse metrics that lower-bound the true metric.

A rounding context fixes a precision exponent ``e`` and a clipping band
[lower, upper + 1].  A distance d maps to

    min(max(lower, 10**e * floor(d / 10**e)), upper + 1)

Rounding down can only shrink a distance, so radii measured under the
rounded metric never exceed true radii (when the band is [0, inf)); the
clipping band keeps the number of distinct values small once real bounds
are known.  Cached row matrices of rounded distances support in-place
re-clipping when bounds tighten and row extension when the client subset
grows.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import Instance, client_row


@dataclass(frozen=True)
class RoundingContext:
    """Precision exponent plus the current clipping band [lower, upper + 1]."""

    exponent: int
    lower: int = 0
    upper: int | None = None  # None means "no ceiling"

    def __post_init__(self) -> None:
        if self.exponent < 0:
            raise ValueError("exponent must be >= 0")
        if self.lower < 0:
            raise ValueError("lower bound must be >= 0")
        if self.upper is not None and self.lower > self.upper + 1:
            raise ValueError("clipping band is empty: lower > upper + 1")

    @property
    def step(self) -> int:
        return 10**self.exponent

    def tightened(self, lower: int, upper: int) -> "RoundingContext":
        """A copy with a narrower band; bounds may only tighten."""
        if lower < self.lower:
            raise ValueError("lower bound may not decrease")
        if self.upper is not None and upper > self.upper:
            raise ValueError("upper bound may not increase")
        return RoundingContext(self.exponent, lower, upper)


def round_distance(d: int, ctx: RoundingContext) -> int:
    """Round a single distance down to the context's precision and clip it."""
    if d < 0:
        raise ValueError("distances are non-negative")
    v = (int(d) // ctx.step) * ctx.step
    if v < ctx.lower:
        v = ctx.lower
    if ctx.upper is not None and v > ctx.upper + 1:
        v = ctx.upper + 1
    return v


def round_distances(values: np.ndarray, ctx: RoundingContext) -> np.ndarray:
    """Vectorised :func:`round_distance` over an int64 array."""
    v = (values // ctx.step) * ctx.step
    hi = None if ctx.upper is None else ctx.upper + 1
    return np.clip(v, ctx.lower, hi)


def initial_exponent(upper_bound: int) -> int:
    """Starting precision: one less than the digit count of the upper bound.

    The first coarse pass then distinguishes at most ~10 distinct values
    between 0 and the upper bound.
    """
    if upper_bound < 1:
        raise ValueError("initial exponent needs a positive upper bound")
    return len(str(int(upper_bound))) - 1


class RoundedRows:
    """Rounded distances from a growing client subset to every site.

    Holds a (num_reps, M) int64 matrix under a single rounding context.
    The matrix is the only per-representative cache the solver keeps; a
    full N x M matrix is never built.
    """

    def __init__(self, inst: Instance, reps: list[int], ctx: RoundingContext):
        self._inst = inst
        self.rep_ids: list[int] = list(int(r) for r in reps)
        self.ctx = ctx
        if self.rep_ids:
            raw = np.vstack([client_row(inst, r) for r in self.rep_ids])
            self.values = round_distances(raw, ctx)
        else:
            self.values = np.empty((0, inst.m), dtype=np.int64)

    @property
    def num_reps(self) -> int:
        return len(self.rep_ids)

    @property
    def num_sites(self) -> int:
        return self._inst.m

    def reclip(self, lower: int, upper: int) -> bool:
        """Tighten the clipping band in place; returns True if anything moved.

        Because bounds only tighten, clipping the already-clipped values
        again equals rounding the raw distances under the new band.
        """
        new_ctx = self.ctx.tightened(lower, upper)
        clipped = np.clip(self.values, new_ctx.lower, new_ctx.upper + 1)
        changed = not np.array_equal(clipped, self.values)
        self.values = clipped
        self.ctx = new_ctx
        return changed

    def extend(self, new_reps: list[int]) -> None:
        """Append rows for newly added representatives under the current band."""
        fresh = [int(r) for r in new_reps]
        if not fresh:
            return
        if set(fresh) & set(self.rep_ids):
            raise ValueError("representative added twice")
        raw = np.vstack([client_row(self._inst, r) for r in fresh])
        self.values = np.vstack([self.values, round_distances(raw, self.ctx)])
        self.rep_ids.extend(fresh)
