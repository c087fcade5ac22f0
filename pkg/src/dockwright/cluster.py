"""Exact density clustering over embedding vectors.

Hierarchical DBSCAN: mutual-reachability metric, minimum spanning tree,
condensed hierarchy, excess-of-mass cluster extraction. No approximation
anywhere; every tie is broken deterministically (lowest index wins) so
assignments are reproducible run to run:

  - spanning tree grown from vertex 0; next vertex is the lowest index
    among weight ties; the tree-side endpoint is the earliest-added
    vertex attaining the minimum
  - merge order is edges ascending by (weight, min index, max index)
  - lambda = 1 / max(weight, 1e-12); the clamp covers duplicate vectors
  - excess-of-mass keeps a parent over its children when its stability
    is >= the children's sum; the root counts as a candidate cluster iff
    it holds at least min_cluster_size points
  - final cluster ids ordered by ascending minimum member index

The full distance matrix is materialized only up to MATERIALIZE_LIMIT
points; beyond that distances stream one row at a time. Both paths
produce bit-identical trees.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

LAMBDA_CLAMP = 1e-12
MATERIALIZE_LIMIT = 4096


@dataclass(frozen=True)
class ClusteringParams:
    """Hyperparameters: cluster size floor and the core-distance k.

    The metric is fixed to Euclidean; k must not exceed the number of
    points being clustered (checked where the points are known).
    """

    min_cluster_size: int = 3
    min_samples: int = 3

    def __post_init__(self):
        if self.min_cluster_size < 2:
            raise ValidationError("min_cluster_size must be >= 2")
        if self.min_samples < 1:
            raise ValidationError("min_samples must be >= 1")


@dataclass(frozen=True)
class ClusterAssignment:
    """Per-point labels (-1 = noise, 0..C-1 = clusters), per-cluster
    stabilities, and the parameters that produced them."""

    labels: tuple[int, ...]
    stabilities: dict[int, float]
    params: ClusteringParams

    @property
    def n_points(self) -> int:
        return len(self.labels)

    @property
    def cluster_count(self) -> int:
        return len(self.stabilities)

    @property
    def clustered_fraction(self) -> float:
        if not self.labels:
            return 0.0
        return sum(1 for l in self.labels if l != -1) / len(self.labels)

    @property
    def noise_fraction(self) -> float:
        if not self.labels:
            return 0.0
        return sum(1 for l in self.labels if l == -1) / len(self.labels)

    def members(self, cluster_id: int) -> list[int]:
        return [i for i, l in enumerate(self.labels) if l == cluster_id]


@dataclass(frozen=True)
class GridSearchReport:
    """Every evaluated configuration with its outcome, plus the index of
    the selected one."""

    evaluated: tuple[tuple[ClusteringParams, float, int], ...]
    best: int

    @property
    def best_params(self) -> ClusteringParams:
        return self.evaluated[self.best][0]


def _as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=np.float64)
    if arr.size == 0:
        return arr.reshape(0, arr.shape[1] if arr.ndim == 2 else 0)
    if arr.ndim != 2:
        raise ValidationError(f"points must be a 2-D array, got shape {arr.shape}")
    return arr


def core_distances(points, k: int) -> np.ndarray:
    """Distance from each point to its k-th nearest neighbor, with the
    point itself counted as the 0th."""
    pts = _as_points(points)
    n = len(pts)
    if k < 1:
        raise ValidationError("min_samples k must be >= 1")
    if k > n:
        raise ValidationError(f"min_samples k={k} exceeds point count {n}")
    idx = min(k, n - 1)
    if n <= MATERIALIZE_LIMIT:
        sq = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1)
        return np.sort(np.sqrt(sq), axis=1)[:, idx]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        row = np.sqrt(((pts - pts[i]) ** 2).sum(axis=1))
        out[i] = np.sort(row)[idx]
    return out


class MutualReachability:
    """Pairwise metric max(core_a, core_b, d(a, b)).

    Materializes the full matrix for small inputs; larger inputs stream
    one row at a time with identical floating-point results.
    """

    def __init__(self, points, cores, materialize_limit: int = MATERIALIZE_LIMIT):
        self._pts = _as_points(points)
        self._cores = np.asarray(cores, dtype=np.float64)
        if len(self._cores) != len(self._pts):
            raise ValidationError("cores length must match point count")
        self.n = len(self._pts)
        self.matrix: np.ndarray | None = None
        if self.n <= materialize_limit:
            sq = ((self._pts[:, None, :] - self._pts[None, :, :]) ** 2).sum(axis=-1)
            dmat = np.sqrt(sq)
            mmat = np.maximum(
                np.maximum(self._cores[:, None], self._cores[None, :]), dmat
            )
            np.fill_diagonal(mmat, 0.0)
            self.matrix = mmat

    def row(self, i: int) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix[i]
        d = np.sqrt(((self._pts - self._pts[i]) ** 2).sum(axis=1))
        out = np.maximum(np.maximum(self._cores[i], self._cores), d)
        out[i] = 0.0
        return out

    def __call__(self, i: int, j: int) -> float:
        return float(self.row(i)[j])


def mutual_reachability(points, cores) -> MutualReachability:
    return MutualReachability(points, cores)


def build_mst(points, mreach: MutualReachability) -> list[tuple[int, int, float]]:
    """Minimum spanning tree under the mutual-reachability metric.

    Prim's algorithm from vertex 0. Ties on the next vertex go to the
    lowest index; ties on the tree-side endpoint go to the earliest
    added vertex (updates only on strict improvement).
    """
    n = mreach.n
    if n <= 1:
        return []
    in_tree = np.zeros(n, dtype=bool)
    dist = mreach.row(0).astype(np.float64, copy=True)
    pred = np.zeros(n, dtype=np.int64)
    in_tree[0] = True
    dist[0] = np.inf
    edges: list[tuple[int, int, float]] = []
    for _ in range(n - 1):
        v = int(np.argmin(dist))
        edges.append((int(pred[v]), v, float(dist[v])))
        in_tree[v] = True
        row = mreach.row(v)
        better = (~in_tree) & (row < dist)
        pred[better] = v
        dist[better] = row[better]
        dist[v] = np.inf
    return edges


def extract_clusters(
    mst, params: ClusteringParams, n_points: int | None = None
) -> ClusterAssignment:
    """Condense the single-linkage hierarchy and pick clusters by
    excess of mass."""
    n = n_points if n_points is not None else (len(mst) + 1 if mst else 1)
    mcs = params.min_cluster_size
    if n == 0:
        return ClusterAssignment((), {}, params)
    if n == 1 or not mst:
        return ClusterAssignment((-1,) * n, {}, params)

    # single-linkage dendrogram: leaves 0..n-1, internal nodes n..2n-2
    parent = list(range(2 * n - 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    children: dict[int, tuple[int, int]] = {}
    height: dict[int, float] = {}
    size = [1] * (2 * n - 1)
    nxt = n
    for a, b, w in sorted(mst, key=lambda e: (e[2], min(e[0], e[1]), max(e[0], e[1]))):
        ra, rb = find(a), find(b)
        children[nxt] = (ra, rb)
        height[nxt] = w
        size[nxt] = size[ra] + size[rb]
        parent[ra] = nxt
        parent[rb] = nxt
        nxt += 1
    root = nxt - 1

    def leaves(node: int) -> list[int]:
        out = []
        todo = [node]
        while todo:
            x = todo.pop()
            if x < n:
                out.append(x)
            else:
                todo.extend(children[x])
        return out

    # condense: walk down; sides smaller than min_cluster_size fall out
    birth = {0: 0.0}
    members = {0: n}
    stability = {0: 0.0}
    parent_cluster: dict[int, int | None] = {0: None}
    kids: dict[int, list[int]] = {0: []}
    fall_out: dict[int, int] = {}
    next_cluster = 1
    walk: list[tuple[int, int]] = [(root, 0)]
    while walk:
        node, cid = walk.pop()
        lam = 1.0 / max(height[node], LAMBDA_CLAMP)
        left, right = children[node]
        nl, nr = size[left], size[right]
        if nl >= mcs and nr >= mcs:
            stability[cid] += size[node] * (lam - birth[cid])
            for child in (left, right):
                new = next_cluster
                next_cluster += 1
                birth[new] = lam
                members[new] = size[child]
                stability[new] = 0.0
                parent_cluster[new] = cid
                kids[new] = []
                kids[cid].append(new)
                walk.append((child, new))
        elif nl >= mcs or nr >= mcs:
            big, small = (left, right) if nl >= nr else (right, left)
            dropped = leaves(small)
            stability[cid] += len(dropped) * (lam - birth[cid])
            for p in dropped:
                fall_out[p] = cid
            walk.append((big, cid))
        else:
            dropped = leaves(node)
            stability[cid] += len(dropped) * (lam - birth[cid])
            for p in dropped:
                fall_out[p] = cid

    # excess-of-mass selection, children before parents
    subtree_mass: dict[int, float] = {}
    selected: dict[int, bool] = {}
    for cid in sorted(stability, reverse=True):
        kid_sum = sum(subtree_mass[c] for c in kids[cid])
        eligible = cid != 0 or members[0] >= mcs
        if eligible and (not kids[cid] or stability[cid] >= kid_sum):
            subtree_mass[cid] = stability[cid]
            selected[cid] = True
            todo = list(kids[cid])
            while todo:
                d = todo.pop()
                selected[d] = False
                todo.extend(kids[d])
        else:
            subtree_mass[cid] = max(stability[cid], kid_sum) if eligible else kid_sum
            selected[cid] = False

    chosen = {c for c, on in selected.items() if on}
    raw = [-1] * n
    for p in range(n):
        c: int | None = fall_out[p]
        while c is not None:
            if c in chosen:
                raw[p] = c
                break
            c = parent_cluster[c]

    first_member: dict[int, int] = {}
    for p, c in enumerate(raw):
        if c != -1 and c not in first_member:
            first_member[c] = p
    order = sorted(first_member, key=first_member.get)
    remap = {c: i for i, c in enumerate(order)}
    labels = tuple(remap[c] if c != -1 else -1 for c in raw)
    stabilities = {remap[c]: stability[c] for c in order}
    return ClusterAssignment(labels, stabilities, params)


def hdbscan(points, params: ClusteringParams | None = None) -> ClusterAssignment:
    """Cluster embedding vectors; the full pipeline in one call."""
    params = params or ClusteringParams()
    pts = _as_points(points)
    n = len(pts)
    if n == 0:
        return ClusterAssignment((), {}, params)
    cores = core_distances(pts, params.min_samples)
    mreach = mutual_reachability(pts, cores)
    mst = build_mst(pts, mreach)
    return extract_clusters(mst, params, n_points=n)


def _default_grid() -> tuple[ClusteringParams, ...]:
    out = []
    for mcs in (2, 3, 4, 5, 6, 8, 10, 15):
        for k in (1, 2, 3, 5):
            out.append(ClusteringParams(min_cluster_size=mcs, min_samples=k))
    return tuple(out)


DEFAULT_GRID: tuple[ClusteringParams, ...] = _default_grid()


def grid_search(points, grid=None) -> GridSearchReport:
    """Evaluate every configuration and pick the one that clusters the
    most points, requiring at least two clusters whenever any
    configuration produces two.

    Configurations whose k exceeds the point count are recorded as
    (params, 0.0, 0) rather than skipped, so reports always cover the
    whole grid. Ties prefer smaller min_cluster_size, then smaller k,
    then grid order.
    """
    grid = tuple(DEFAULT_GRID if grid is None else grid)
    if not grid:
        raise ValidationError("grid must be non-empty")
    pts = _as_points(points)
    n = len(pts)
    evaluated = []
    for params in grid:
        if params.min_samples > n:
            evaluated.append((params, 0.0, 0))
            continue
        assignment = hdbscan(pts, params)
        evaluated.append(
            (params, assignment.clustered_fraction, assignment.cluster_count)
        )
    feasible = [i for i, row in enumerate(evaluated) if row[2] >= 2]
    pool = feasible if feasible else list(range(len(evaluated)))
    best = min(
        pool,
        key=lambda i: (
            -evaluated[i][1],
            evaluated[i][0].min_cluster_size,
            evaluated[i][0].min_samples,
            i,
        ),
    )
    return GridSearchReport(tuple(evaluated), best)
