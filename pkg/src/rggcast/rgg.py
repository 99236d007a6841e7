"""Unit-disk graph over a point set, connected components, extended clusters.

Adjacency uses the closed ball: points at distance exactly r are connected.
The default boundary is free (no wraparound); torus mode wraps distances and
is only meant to reduce edge effects in large-window convergence checks.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .pointproc import PointSet

NO_CLUSTER = -1


@dataclass
class Rgg:
    """Immutable unit-disk graph: cell-list spatial index plus CSR adjacency."""

    points: PointSet
    cell_grid: dict
    edges: np.ndarray  # (E, 2), u < v, lexicographically sorted
    indptr: np.ndarray
    indices: np.ndarray
    torus: bool = False

    @property
    def n_points(self) -> int:
        return self.points.n_points

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def source_index(self) -> int:
        return self.points.source_index

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def degree(self, i: int) -> int:
        return int(self.indptr[i + 1] - self.indptr[i])


@dataclass
class ClusterLabeling:
    """Per-point component label (smallest member index), NO_CLUSTER if inactive."""

    label: np.ndarray
    sizes: dict = field(default_factory=dict)
    largest_id: int = NO_CLUSTER


def build_rgg(points: PointSet, torus: bool = False) -> Rgg:
    """Build exact adjacency with a cell list of side r (9-cell neighborhoods)."""
    dom = points.domain
    m = dom.side_m
    r = dom.radius_r
    n = points.n_points
    xs = np.ascontiguousarray(points.coords[:, 0])
    ys = np.ascontiguousarray(points.coords[:, 1])
    if torus:
        ncells = int(round(m / r))
        if ncells < 3 or abs(ncells * r - m) > 1e-9 * m:
            raise ValueError("torus mode requires side_m to be an integer multiple >= 3 of radius_r")
        period = m
    else:
        ncells = max(1, int(np.ceil(m / r)))
        period = 0.0
    half = m / 2.0
    cx = np.minimum((xs + half) / r, ncells - 1).astype(np.int64)
    cy = np.minimum((ys + half) / r, ncells - 1).astype(np.int64)
    np.maximum(cx, 0, out=cx)
    np.maximum(cy, 0, out=cy)
    cid = cx * ncells + cy
    order = np.argsort(cid, kind="stable")
    count = np.bincount(cid, minlength=ncells * ncells)
    start = np.zeros_like(count)
    np.cumsum(count[:-1], out=start[1:])
    eu, ev = _kernels.cell_list_pairs(
        xs, ys, order, start, count, ncells, ncells, r * r, period
    )
    lo = np.minimum(eu, ev)
    hi = np.maximum(eu, ev)
    perm = np.lexsort((hi, lo))
    edges = np.column_stack([lo[perm], hi[perm]])

    both_u = np.concatenate([edges[:, 0], edges[:, 1]])
    both_v = np.concatenate([edges[:, 1], edges[:, 0]])
    deg = np.bincount(both_u, minlength=n)
    indptr = np.zeros(n + 1, np.int64)
    np.cumsum(deg, out=indptr[1:])
    adj_order = np.lexsort((both_v, both_u))
    indices = both_v[adj_order]

    cell_grid = {}
    pos = 0
    for c in np.flatnonzero(count):
        k = count[c]
        members = np.sort(order[start[c] : start[c] + k])
        cell_grid[(int(c // ncells), int(c % ncells))] = members
    return Rgg(
        points=points,
        cell_grid=cell_grid,
        edges=edges,
        indptr=indptr,
        indices=indices,
        torus=torus,
    )


def components(graph: Rgg, active: np.ndarray | None = None) -> ClusterLabeling:
    """Union-find component labels; only edges with both endpoints active count.

    Inactive points get label NO_CLUSTER and contribute no component. Labels
    are canonical: each component is named by its smallest point index.
    largest_id is the label of a maximum-size component (ties: smallest label).
    """
    n = graph.n_points
    if active is None:
        active_arr = np.ones(n, dtype=bool)
    else:
        active_arr = np.asarray(active, dtype=bool)
        if active_arr.shape != (n,):
            raise ValueError("active mask length must equal the point count")
    roots = _kernels.union_find_roots(
        n, graph.edges[:, 0], graph.edges[:, 1], active_arr
    )
    label = _kernels.canonicalize_roots(roots)
    label[~active_arr] = NO_CLUSTER
    active_labels = label[active_arr]
    sizes_arr = np.bincount(active_labels) if active_labels.size else np.zeros(0, np.int64)
    ids = np.flatnonzero(sizes_arr)
    sizes = {int(i): int(sizes_arr[i]) for i in ids}
    if ids.size:
        best = sizes_arr[ids].max()
        largest_id = int(ids[sizes_arr[ids] == best].min())
    else:
        largest_id = NO_CLUSTER
    return ClusterLabeling(label=label, sizes=sizes, largest_id=largest_id)


def extended_cluster(graph: Rgg, labeling: ClusterLabeling, cluster_id: int) -> np.ndarray:
    """Cluster members plus every point adjacent (in the full graph) to one.

    Returns sorted point indices. Raises KeyError for an unknown cluster id.
    """
    if cluster_id not in labeling.sizes:
        raise KeyError(f"unknown cluster id {cluster_id}")
    members = labeling.label == cluster_id
    ext = _kernels.neighbor_or(members, graph.indptr, graph.indices)
    return np.flatnonzero(ext)


def extended_mask(graph: Rgg, members: np.ndarray) -> np.ndarray:
    """Boolean form of the extended set: members plus all their neighbors."""
    return _kernels.neighbor_or(np.asarray(members, dtype=bool), graph.indptr, graph.indices)


def largest_component_fraction(graph: Rgg) -> float:
    """|largest connected component| / |all points|."""
    if graph.n_points == 0:
        raise ValueError("graph has no points")
    labeling = components(graph)
    return labeling.sizes[labeling.largest_id] / graph.n_points
