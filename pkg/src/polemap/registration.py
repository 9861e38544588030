"""Growing a global cluster map from posed frames.

Each frame's clusters are moved into the map frame and either merged into the
nearest existing cluster (within merge_radius) or inserted as new landmarks.
A merged cluster keeps the map side's id and label; the incoming points are
absorbed and the centroid becomes the mass-weighted mean of all members.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .cluster_map import Cluster, ClusterMap, LabeledPoint
from .geometry import PoseSE3


@dataclass(frozen=True)
class RegistrationParams:
    merge_radius: float = 1.0
    # Require matching labels before merging instead of adopting the map label.
    strict_labels: bool = False

    def __post_init__(self):
        if self.merge_radius <= 0:
            raise ValueError("merge_radius must be positive")


@dataclass(frozen=True)
class RegistrationStats:
    inserted: int
    merged: int


def transform_clusters(clusters, pose: PoseSE3) -> list[Cluster]:
    """Map clusters rigidly into another frame, ids and labels untouched."""
    pose.require_valid()
    out = []
    for cluster in clusters:
        moved = pose.apply(cluster.point_array())
        pts = [
            LabeledPoint(float(p[0]), float(p[1]), float(p[2]), orig.label)
            for p, orig in zip(moved, cluster.points)
        ]
        c3 = pose.apply(cluster.centroid3d)
        out.append(Cluster(cluster.cluster_id, cluster.label, pts, c3, c3[:2].copy()))
    return out


def _nearest_in_snapshot(tree: cKDTree, ids: np.ndarray, cents: np.ndarray, center) -> tuple[int, float]:
    k = min(8, len(ids))
    dists, idx = tree.query(center, k=k)
    dists = np.atleast_1d(dists)
    idx = np.atleast_1d(idx)
    best = dists[0]
    tied = [int(ids[i]) for d, i in zip(dists, idx) if d == best]
    return min(tied), float(best)


def register_frame(
    cluster_map: ClusterMap,
    frame_clusters,
    pose: PoseSE3,
    params: RegistrationParams | None = None,
) -> RegistrationStats:
    """Merge or insert one frame's clusters; returns insert/merge counts.

    Nearest-neighbor lookups run against a snapshot of the map taken at frame
    entry, so merges within the same frame do not shift the search targets.
    """
    params = params or RegistrationParams()
    pose.require_valid()
    ids, cents = cluster_map.centroids_2d()
    tree = cKDTree(cents) if len(ids) else None
    inserted = 0
    merged = 0
    for cluster in transform_clusters(frame_clusters, pose):
        target = None
        if tree is not None:
            cid, dist = _nearest_in_snapshot(tree, ids, cents, cluster.centroid2d)
            if dist <= params.merge_radius:
                if not params.strict_labels or cluster_map.get(cid).label == cluster.label:
                    target = cid
        if target is None:
            cluster_map.add(cluster.label, cluster.points)
            inserted += 1
        else:
            cluster_map.merge_points(target, cluster.points)
            merged += 1
    return RegistrationStats(inserted=inserted, merged=merged)


def build_local_map(frame_clusters, pose: PoseSE3) -> ClusterMap:
    """Fresh map holding one frame's clusters posed into the odometry frame."""
    local = ClusterMap()
    for cluster in transform_clusters(frame_clusters, pose):
        local.add(cluster.label, cluster.points)
    return local
