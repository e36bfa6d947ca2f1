"""Problem instances and the integer distance kernel.

An instance is a set of client points and a set of candidate site points in
the plane.  All distances are Euclidean, rounded half-up to the nearest
integer, and no full client-by-site distance matrix is ever materialised:
callers ask for single distances or for one row at a time.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, replace

import numpy as np

# Hard cap on the number of candidate subsets the exhaustive solver will touch.
BRUTE_FORCE_SUBSET_LIMIT = 10**7


class InstanceError(ValueError):
    """Raised for malformed instance files or invalid instance data."""


@dataclass(frozen=True)
class Instance:
    """A p-center instance: clients to cover, sites to open, a budget p.

    Coordinates are stored as (n, 2) float arrays.  ``p`` may be None while
    an instance read from a coordinate file waits for the caller to choose
    the budget; every solver entry point requires it to be set.
    """

    name: str
    clients: np.ndarray
    sites: np.ndarray
    p: int | None = None

    def __post_init__(self) -> None:
        clients = np.asarray(self.clients, dtype=np.float64)
        sites = np.asarray(self.sites, dtype=np.float64)
        if clients.ndim != 2 or clients.shape[1] != 2 or clients.shape[0] == 0:
            raise InstanceError("clients must be a non-empty (N, 2) array")
        if sites.ndim != 2 or sites.shape[1] != 2 or sites.shape[0] == 0:
            raise InstanceError("sites must be a non-empty (M, 2) array")
        object.__setattr__(self, "clients", clients)
        object.__setattr__(self, "sites", sites)
        if self.p is not None and not 1 <= self.p <= sites.shape[0]:
            raise InstanceError(
                f"p={self.p} outside the valid range [1, {sites.shape[0]}]"
            )

    @property
    def n(self) -> int:
        return self.clients.shape[0]

    @property
    def m(self) -> int:
        return self.sites.shape[0]

    def with_p(self, p: int) -> "Instance":
        return replace(self, p=p)

    def sites_coincide_with_clients(self) -> bool:
        """True when clients and sites are the same point list (TSPLib style)."""
        return self.n == self.m and np.array_equal(self.clients, self.sites)


@dataclass
class Solution:
    """A set of open sites with optionally cached radius values.

    ``true_radius`` is the exact covering radius over all clients;
    ``rounded_radius`` is the radius under whatever rounded metric the
    producer of the solution was working with.
    """

    open_sites: tuple[int, ...]
    true_radius: int | None = None
    rounded_radius: int | None = None

    def __post_init__(self) -> None:
        self.open_sites = tuple(sorted(set(int(j) for j in self.open_sites)))
        if not self.open_sites:
            raise InstanceError("a solution must open at least one site")


def _rounded_norm(dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """Euclidean length rounded half-up to an integer (TSPLib EUC_2D rule)."""
    return np.floor(np.hypot(dx, dy) + 0.5).astype(np.int64)


def distance(inst: Instance, i: int, j: int) -> int:
    """Rounded integer distance between client ``i`` and site ``j``."""
    ci = inst.clients[i]
    sj = inst.sites[j]
    return int(math.floor(math.hypot(ci[0] - sj[0], ci[1] - sj[1]) + 0.5))


def client_row(inst: Instance, i: int) -> np.ndarray:
    """Distances from client ``i`` to every site, as an int64 row."""
    ci = inst.clients[i]
    return _rounded_norm(inst.sites[:, 0] - ci[0], inst.sites[:, 1] - ci[1])


def site_column(inst: Instance, j: int) -> np.ndarray:
    """Distances from every client to site ``j``, as an int64 column."""
    sj = inst.sites[j]
    return _rounded_norm(inst.clients[:, 0] - sj[0], inst.clients[:, 1] - sj[1])


def allocation_distances(
    inst: Instance, open_sites: tuple[int, ...] | list[int], clients: np.ndarray | None = None
) -> np.ndarray:
    """Distance from each client to its nearest open site.

    ``clients`` restricts the evaluation to a subset of client indices;
    the default is every client.  Work is O(|clients| * |open_sites|).
    """
    if len(open_sites) == 0:
        raise InstanceError("allocation over an empty site set")
    pts = inst.clients if clients is None else inst.clients[np.asarray(clients, dtype=np.int64)]
    best = None
    for j in open_sites:
        sj = inst.sites[j]
        d = _rounded_norm(pts[:, 0] - sj[0], pts[:, 1] - sj[1])
        best = d if best is None else np.minimum(best, d)
    return best


def radius(
    inst: Instance, sol: Solution | tuple[int, ...], clients: np.ndarray | None = None
) -> int:
    """Covering radius of a solution: the largest client allocation distance."""
    open_sites = sol.open_sites if isinstance(sol, Solution) else tuple(sol)
    if clients is not None and len(np.asarray(clients)) == 0:
        raise InstanceError("radius over an empty client subset")
    return int(allocation_distances(inst, open_sites, clients).max())


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def parse_tsplib(text: str, name: str | None = None) -> Instance:
    """Parse a TSPLib node-coordinate file into an instance.

    Only EDGE_WEIGHT_TYPE EUC_2D is supported.  Every city acts both as a
    client and as a candidate site, so the returned instance has N == M and
    coincident point lists.  ``p`` is left unset.
    """
    header: dict[str, str] = {}
    coords: list[tuple[float, float]] = []
    dimension: int | None = None
    in_coords = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.upper() == "EOF":
            break
        if in_coords:
            parts = line.split()
            if len(parts) != 3:
                raise InstanceError(
                    f"line {lineno}: expected 'index x y', got {raw!r}"
                )
            try:
                coords.append((float(parts[1]), float(parts[2])))
            except ValueError as exc:
                raise InstanceError(f"line {lineno}: bad coordinate in {raw!r}") from exc
            continue
        if ":" in line:
            key, _, value = line.partition(":")
            header[key.strip().upper()] = value.strip()
            continue
        if line.upper() == "NODE_COORD_SECTION":
            ewt = header.get("EDGE_WEIGHT_TYPE", "").upper()
            if ewt != "EUC_2D":
                raise InstanceError(
                    f"line {lineno}: unsupported EDGE_WEIGHT_TYPE {ewt or '(missing)'};"
                    " only EUC_2D is handled"
                )
            if "DIMENSION" in header:
                try:
                    dimension = int(header["DIMENSION"])
                except ValueError as exc:
                    raise InstanceError(
                        f"DIMENSION is not an integer: {header['DIMENSION']!r}"
                    ) from exc
            in_coords = True
            continue
        # Unknown section or stray content outside the coordinate block.
        raise InstanceError(f"line {lineno}: unexpected content {raw!r}")
    if not in_coords:
        raise InstanceError("no NODE_COORD_SECTION found")
    if dimension is not None and len(coords) != dimension:
        raise InstanceError(
            f"DIMENSION says {dimension} nodes but the coordinate section has {len(coords)}"
        )
    pts = np.array(coords, dtype=np.float64)
    return Instance(name=name or header.get("NAME", "tsplib"), clients=pts, sites=pts.copy())


def parse_native(text: str) -> Instance:
    """Parse the native JSON instance format.

    The record is a single JSON object with ``clients`` and ``sites`` as
    lists of [x, y] pairs, an optional ``p`` and an optional ``name``.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"invalid JSON instance: {exc}") from exc
    if not isinstance(obj, dict) or "clients" not in obj or "sites" not in obj:
        raise InstanceError("native instance needs 'clients' and 'sites' keys")
    return Instance(
        name=str(obj.get("name", "native")),
        clients=np.array(obj["clients"], dtype=np.float64),
        sites=np.array(obj["sites"], dtype=np.float64),
        p=obj.get("p"),
    )


def to_native(inst: Instance) -> str:
    """Serialise an instance to the native JSON format."""
    obj = {
        "name": inst.name,
        "clients": inst.clients.tolist(),
        "sites": inst.sites.tolist(),
    }
    if inst.p is not None:
        obj["p"] = inst.p
    return json.dumps(obj)


def load_instance(path: str, p: int | None = None) -> Instance:
    """Load a .tsp (TSPLib) or .json (native) instance from disk."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    stem = path.rsplit("/", 1)[-1]
    if path.lower().endswith((".json", ".js")):
        inst = parse_native(text)
    else:
        inst = parse_tsplib(text, name=stem.rsplit(".", 1)[0])
    if p is not None:
        inst = inst.with_p(p)
    return inst


# ---------------------------------------------------------------------------
# Exhaustive oracle
# ---------------------------------------------------------------------------

def brute_force_optimum(inst: Instance) -> tuple[int, Solution]:
    """Optimal radius by enumerating every p-subset of sites.

    Only usable when C(M, p) is small (hard limit 1e7 subsets).  Ties are
    broken toward the lexicographically smallest site set.  Intended as a
    test oracle, so it allows itself a full distance matrix.
    """
    if inst.p is None:
        raise InstanceError("brute force needs p to be set on the instance")
    p, m = inst.p, inst.m
    if math.comb(m, p) > BRUTE_FORCE_SUBSET_LIMIT:
        raise InstanceError(
            f"C({m}, {p}) = {math.comb(m, p)} exceeds the enumeration limit"
        )
    dist = np.vstack([client_row(inst, i) for i in range(inst.n)])
    best_radius: int | None = None
    best_combo: tuple[int, ...] | None = None
    chunk: list[tuple[int, ...]] = []
    CHUNK = 131072

    def flush(chunk: list[tuple[int, ...]]) -> None:
        nonlocal best_radius, best_combo
        idx = np.array(chunk, dtype=np.int64)
        radii = dist[:, idx].min(axis=2).max(axis=0)
        k = int(np.argmin(radii))
        if best_radius is None or radii[k] < best_radius:
            best_radius = int(radii[k])
            best_combo = tuple(int(j) for j in idx[k])

    for combo in itertools.combinations(range(m), p):
        chunk.append(combo)
        if len(chunk) == CHUNK:
            flush(chunk)
            chunk = []
    if chunk:
        flush(chunk)
    assert best_radius is not None and best_combo is not None
    return best_radius, Solution(open_sites=best_combo, true_radius=best_radius)
