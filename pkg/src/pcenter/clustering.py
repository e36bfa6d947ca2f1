"""Client clustering and quadrant-guided selection of new representatives.

Clients are grouped once per solve with k-means (k-means++ seeding, Lloyd
iterations); each cluster is represented by its medoid, the member closest
to the centroid.  Each client also gets a quadrant label relative to its
cluster medoid, so that when a tentative solution leaves clients uncovered
we can pull in at most one new representative per (cluster, quadrant) cell:
the uncovered client farthest from its medoid.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .instance import Instance, _rounded_norm

LLOYD_MAX_ITERATIONS = 100


class Quadrant(IntEnum):
    """Quadrant of a point relative to its cluster medoid.

    Boundary convention: dx >= 0 and dy >= 0 is NE, dx < 0 and dy >= 0 is
    NW, dx < 0 and dy < 0 is SW, dx >= 0 and dy < 0 is SE — axes belong to
    the eastern half.
    """

    NE = 0
    NW = 1
    SW = 2
    SE = 3


def quadrant_of(point: np.ndarray, medoid_point: np.ndarray) -> Quadrant:
    dx = point[0] - medoid_point[0]
    dy = point[1] - medoid_point[1]
    if dx >= 0:
        return Quadrant.NE if dy >= 0 else Quadrant.SE
    return Quadrant.NW if dy >= 0 else Quadrant.SW


@dataclass
class Clustering:
    """A k-way partition of the clients with per-client growth metadata.

    assignment[i] is the cluster of client i; medoids[c] is the client
    index representing cluster c; quadrants[i] is client i's quadrant
    relative to its own medoid; medoid_distance[i] is the rounded integer
    distance from client i to its medoid.
    """

    k: int
    assignment: np.ndarray
    medoids: np.ndarray
    centroids: np.ndarray
    quadrants: np.ndarray
    medoid_distance: np.ndarray


def _kmeanspp_seeds(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: spread the initial centroids by D^2 sampling."""
    n = points.shape[0]
    seeds = np.empty(k, dtype=np.int64)
    seeds[0] = rng.integers(n)
    d2 = ((points - points[seeds[0]]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # All remaining mass sits on already-chosen points (duplicates);
            # fall back to uniform choice.
            seeds[c] = rng.integers(n)
        else:
            seeds[c] = rng.choice(n, p=d2 / total)
        d2 = np.minimum(d2, ((points - points[seeds[c]]) ** 2).sum(axis=1))
    return seeds


def kmeans(inst: Instance, k: int, seed: int = 0) -> Clustering:
    """Cluster the clients into k non-empty groups, deterministically per seed.

    Empty clusters arising during Lloyd iterations are reseeded at the
    client currently farthest from its centroid.
    """
    points = inst.clients
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    rng = np.random.default_rng(seed)
    centroids = points[_kmeanspp_seeds(points, k, rng)].astype(np.float64).copy()

    assignment = np.zeros(n, dtype=np.int64)
    for _ in range(LLOYD_MAX_ITERATIONS):
        # Squared distances to each centroid: (n, k).
        d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_assignment = d2.argmin(axis=1)
        own = d2[np.arange(n), new_assignment]
        for c in range(k):
            members = new_assignment == c
            if members.any():
                centroids[c] = points[members].mean(axis=0)
            else:
                # Reseed the empty cluster at the worst-served client.
                far = int(own.argmax())
                centroids[c] = points[far]
                new_assignment[far] = c
                own[far] = 0.0
        if np.array_equal(new_assignment, assignment):
            assignment = new_assignment
            break
        assignment = new_assignment

    # A repair above can itself empty a small cluster; settle any leftovers
    # by stealing the worst-served client from a cluster that can spare one.
    counts = np.bincount(assignment, minlength=k)
    while (counts == 0).any():
        empty = int(np.flatnonzero(counts == 0)[0])
        d2 = ((points - centroids[assignment]) ** 2).sum(axis=1)
        donors = counts[assignment] > 1
        far = int(np.flatnonzero(donors)[d2[donors].argmax()])
        counts[assignment[far]] -= 1
        assignment[far] = empty
        counts[empty] = 1
        centroids[empty] = points[far]

    # Medoid = member closest to the centroid, lowest index on ties.
    medoids = np.empty(k, dtype=np.int64)
    for c in range(k):
        members = np.flatnonzero(assignment == c)
        d2c = ((points[members] - centroids[c]) ** 2).sum(axis=1)
        medoids[c] = members[int(d2c.argmin())]

    med_pts = points[medoids[assignment]]
    dx = points[:, 0] - med_pts[:, 0]
    dy = points[:, 1] - med_pts[:, 1]
    quadrants = np.where(
        dx >= 0,
        np.where(dy >= 0, int(Quadrant.NE), int(Quadrant.SE)),
        np.where(dy >= 0, int(Quadrant.NW), int(Quadrant.SW)),
    ).astype(np.int64)
    medoid_distance = _rounded_norm(dx, dy)

    return Clustering(
        k=k,
        assignment=assignment,
        medoids=medoids,
        centroids=centroids,
        quadrants=quadrants,
        medoid_distance=medoid_distance,
    )


def quadrant_additions(clustering: Clustering, uncovered: np.ndarray) -> np.ndarray:
    """Pick at most one new representative per (cluster, quadrant) cell.

    From the given uncovered clients, each populated cell contributes the
    member farthest from its cluster medoid (lowest index on ties).
    Returns a sorted array of client indices; empty input gives empty
    output.
    """
    uncovered = np.asarray(uncovered, dtype=np.int64)
    if uncovered.size == 0:
        return uncovered
    cell = clustering.assignment[uncovered] * 4 + clustering.quadrants[uncovered]
    dist = clustering.medoid_distance[uncovered]
    # Sort by (cell, -distance, client index): the first row of each cell
    # is the farthest member, lowest index among equals.
    order = np.lexsort((uncovered, -dist, cell))
    cell_sorted = cell[order]
    first = np.unique(cell_sorted, return_index=True)[1]
    return np.sort(uncovered[order][first])
