"""Shared randomized generators for the test suite."""
from __future__ import annotations

import numpy as np

from pcenter.instance import Instance, client_row


def random_instance(
    rng: np.random.Generator,
    n_min: int = 5,
    n_max: int = 40,
    p_max: int = 4,
    coord_max: int = 100,
    name: str = "rand",
) -> Instance:
    """Small planar instance with integer coordinates in [0, coord_max]^2.

    Half the time the candidate sites are the clients themselves
    (coordinate-file style), otherwise an independently drawn point set of
    the same size; either way N == M and p is drawn from [1, p_max].
    """
    n = int(rng.integers(n_min, n_max + 1))
    clients = rng.integers(0, coord_max + 1, size=(n, 2)).astype(np.float64)
    if rng.random() < 0.5:
        sites = clients.copy()
    else:
        sites = rng.integers(0, coord_max + 1, size=(n, 2)).astype(np.float64)
    p = int(rng.integers(1, min(p_max, n) + 1))
    return Instance(name=name, clients=clients, sites=sites, p=p)


def distance_matrix(inst: Instance) -> np.ndarray:
    """Full client-by-site integer distance matrix (tests only)."""
    return np.vstack([client_row(inst, i) for i in range(inst.n)])


def random_cover(
    rng: np.random.Generator, n_rows: int, n_cols: int, density: float = 0.4
) -> np.ndarray:
    """Random boolean cover matrix where every row is coverable."""
    cover = rng.random((n_rows, n_cols)) < density
    for i in np.flatnonzero(~cover.any(axis=1)):
        cover[i, rng.integers(n_cols)] = True
    return cover
