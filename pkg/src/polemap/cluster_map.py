"""Semantic cluster data model and planar spatial queries.

A cluster map stores labeled landmark clusters addressable by integer id and
answers 2D centroid queries through a kd-tree that is rebuilt lazily after
mutations. Readers may share a map freely; mutation requires exclusive access.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree


@dataclass(frozen=True)
class SemanticLabel:
    """Point or cluster class. Only pole and trunk are landmark-eligible."""

    kind: str
    category: int = -1

    @property
    def is_landmark(self) -> bool:
        return self.kind in ("pole", "trunk")

    def __str__(self) -> str:
        if self.kind == "other":
            return f"other:{self.category}"
        return self.kind


POLE = SemanticLabel("pole")
TRUNK = SemanticLabel("trunk")


def other_label(category: int) -> SemanticLabel:
    """Label for a point class that never becomes a landmark."""
    return SemanticLabel("other", category)


@dataclass(frozen=True, slots=True)
class LabeledPoint:
    x: float
    y: float
    z: float
    label: SemanticLabel

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError("non-finite point coordinate")


@dataclass(frozen=True)
class Frame:
    """One labeled scan: a timestamp plus points in the sensor frame."""

    timestamp: float
    points: tuple[LabeledPoint, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))


def points_array(points) -> np.ndarray:
    """Stack LabeledPoints into an (n, 3) float array."""
    if len(points) == 0:
        return np.empty((0, 3))
    return np.array([[p.x, p.y, p.z] for p in points], dtype=float)


def compute_centroids(points) -> tuple[np.ndarray, np.ndarray]:
    """Arithmetic mean of the points, returned as (3D centroid, XY centroid)."""
    if len(points) == 0:
        raise ValueError("empty cluster")
    arr = points_array(points)
    centroid3d = arr.mean(axis=0)
    return centroid3d, centroid3d[:2].copy()


@dataclass
class Cluster:
    """A group of same-landmark points with cached centroids.

    Treated as immutable outside ClusterMap; registration appends points
    through the owning map so the centroids and index stay consistent.
    """

    cluster_id: int
    label: SemanticLabel
    points: list[LabeledPoint] = field(repr=False)
    centroid3d: np.ndarray = field(repr=False)
    centroid2d: np.ndarray = field(repr=False)

    @classmethod
    def from_points(cls, cluster_id: int, label: SemanticLabel, points) -> "Cluster":
        if not label.is_landmark:
            raise ValueError(f"cluster label must be pole or trunk, got {label}")
        c3, c2 = compute_centroids(points)
        return cls(cluster_id, label, list(points), c3, c2)

    def point_array(self) -> np.ndarray:
        return points_array(self.points)

    @property
    def n_points(self) -> int:
        return len(self.points)


class ClusterMap:
    """Id-addressable cluster store with 2D nearest-neighbor queries."""

    def __init__(self):
        self._clusters: dict[int, Cluster] = {}
        self._next_id = 0
        self._tree: cKDTree | None = None
        self._tree_ids: np.ndarray | None = None
        self._dirty = True

    def __len__(self) -> int:
        return len(self._clusters)

    def __contains__(self, cluster_id: int) -> bool:
        return cluster_id in self._clusters

    def __iter__(self):
        for cid in sorted(self._clusters):
            yield self._clusters[cid]

    def ids(self) -> list[int]:
        return sorted(self._clusters)

    def get(self, cluster_id: int) -> Cluster:
        return self._clusters[cluster_id]

    def add(self, label: SemanticLabel, points) -> Cluster:
        """Create a cluster from points, assign the next free id, store it."""
        cluster = Cluster.from_points(self._next_id, label, points)
        self._clusters[cluster.cluster_id] = cluster
        self._next_id += 1
        self._dirty = True
        return cluster

    def insert(self, cluster: Cluster) -> None:
        """Store a pre-built cluster under its own id (used when loading)."""
        if cluster.cluster_id in self._clusters:
            raise ValueError(f"duplicate cluster id {cluster.cluster_id}")
        self._clusters[cluster.cluster_id] = cluster
        self._next_id = max(self._next_id, cluster.cluster_id + 1)
        self._dirty = True

    def remove(self, cluster_id: int) -> None:
        del self._clusters[cluster_id]
        self._dirty = True

    def merge_points(self, cluster_id: int, new_points) -> Cluster:
        """Append points to an existing cluster and recompute its centroids."""
        cluster = self._clusters[cluster_id]
        cluster.points.extend(new_points)
        cluster.centroid3d, cluster.centroid2d = compute_centroids(cluster.points)
        self._dirty = True
        return cluster

    def centroids_2d(self) -> tuple[np.ndarray, np.ndarray]:
        """Snapshot of (ids, 2D centroids) in ascending id order."""
        ids = self.ids()
        if not ids:
            return np.empty(0, dtype=int), np.empty((0, 2))
        cents = np.array([self._clusters[i].centroid2d for i in ids])
        return np.array(ids), cents

    def refresh_index(self) -> None:
        ids, cents = self.centroids_2d()
        self._tree = cKDTree(cents) if len(ids) else None
        self._tree_ids = ids
        self._dirty = False

    def _ensure_index(self) -> None:
        if self._dirty:
            self.refresh_index()

    def radius_search(self, center, radius: float, exclude: int | None = None) -> list[int]:
        """Ids of clusters whose 2D centroid lies within radius of center.

        The cutoff is inclusive. Results come back sorted by (distance, id);
        pass exclude to drop the querying cluster itself.
        """
        if not self._clusters:
            return []
        self._ensure_index()
        center = np.asarray(center, dtype=float).reshape(2)
        idx = self._tree.query_ball_point(center, radius)
        hits = []
        for i in idx:
            cid = int(self._tree_ids[i])
            if cid == exclude:
                continue
            dist = float(np.linalg.norm(self._clusters[cid].centroid2d - center))
            hits.append((dist, cid))
        hits.sort()
        return [cid for _, cid in hits]

    def nearest(self, center) -> tuple[int, float] | None:
        """Closest cluster to a 2D point as (id, distance), ties to lowest id."""
        if not self._clusters:
            return None
        self._ensure_index()
        center = np.asarray(center, dtype=float).reshape(2)
        k = min(8, len(self._clusters))
        dists, idx = self._tree.query(center, k=k)
        dists = np.atleast_1d(dists)
        idx = np.atleast_1d(idx)
        best = dists[0]
        tied = [int(self._tree_ids[i]) for d, i in zip(dists, idx) if d == best]
        return min(tied), float(best)
