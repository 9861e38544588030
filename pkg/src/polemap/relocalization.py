"""Pose recovery from associated cluster pairs.

The accepted pipeline is association, pairwise-distance consistency
filtering, RANSAC over cluster centroids, a closed-form rigid fit, and
point-to-point ICP refinement over the member points of the surviving pairs.
The returned pose maps local-map coordinates into global-map coordinates.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .association import AssociationParams, MatchPair, associate_maps
from .cluster_map import ClusterMap
from .geometry import PoseSE3

log = logging.getLogger(__name__)

FAILURE_NO_MATCHES = "no-matches"
FAILURE_CONSISTENCY = "consistency-collapse"
FAILURE_RANSAC = "ransac-failure"
FAILURE_DEGENERATE = "degenerate-fit"


class RelocalizationFailure(Exception):
    """Relocalization could not produce a pose; reason names the stage."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class RelocParams:
    consistency_tolerance: float = 0.5
    ransac_threshold: float = 0.5
    ransac_iterations: int = 200
    min_pairs: int = 4
    icp_max_iterations: int = 30
    icp_convergence: float = 1e-4
    seed: int = 0
    # Run RANSAC before the consistency filter instead of after it.
    ransac_first: bool = False

    def __post_init__(self):
        if self.min_pairs < 3:
            raise ValueError("min_pairs must be at least 3")
        if self.ransac_iterations < 1:
            raise ValueError("ransac_iterations must be at least 1")


@dataclass(frozen=True)
class RelocResult:
    pose: PoseSE3
    inlier_pairs: tuple[MatchPair, ...]
    residual_rms: float

    def __post_init__(self):
        object.__setattr__(self, "inlier_pairs", tuple(self.inlier_pairs))


def _pair_centroids(pairs, local_map: ClusterMap, global_map: ClusterMap) -> tuple[np.ndarray, np.ndarray]:
    src = np.array([local_map.get(p.local_id).centroid3d for p in pairs])
    dst = np.array([global_map.get(p.global_id).centroid3d for p in pairs])
    return src.reshape(len(pairs), 3), dst.reshape(len(pairs), 3)


def geometric_consistency_filter(
    pairs,
    local_map: ClusterMap,
    global_map: ClusterMap,
    tolerance: float = 0.5,
) -> list[MatchPair]:
    """Largest found subset of pairs with mutually consistent distances.

    Two pairs are compatible when the centroid distance between their local
    clusters matches the distance between their global clusters within the
    tolerance. A greedy clique expansion from the highest-degree vertex keeps
    one pairwise-compatible subset; with fewer than two pairs the input is
    returned unchanged. Output order is canonical (sorted by local id).
    """
    pairs = sorted(pairs, key=lambda p: (p.local_id, p.global_id))
    n = len(pairs)
    if n < 2:
        return pairs
    src, dst = _pair_centroids(pairs, local_map, global_map)
    d_local = np.linalg.norm(src[:, None, :] - src[None, :, :], axis=2)
    d_global = np.linalg.norm(dst[:, None, :] - dst[None, :, :], axis=2)
    adj = np.abs(d_local - d_global) <= tolerance
    np.fill_diagonal(adj, False)
    degree = adj.sum(axis=1)
    seed = int(np.argmax(degree))  # ties resolve to the lowest index
    clique = [seed]
    candidates = set(np.nonzero(adj[seed])[0].tolist())
    while candidates:
        pick = max(candidates, key=lambda v: (degree[v], -v))
        clique.append(pick)
        candidates &= set(np.nonzero(adj[pick])[0].tolist())
    clique.sort()
    return [pairs[i] for i in clique]


def estimate_rigid_transform(src: np.ndarray, dst: np.ndarray) -> PoseSE3:
    """Least-squares rigid transform with dst ~= R @ src + t.

    Requires at least three correspondences spanning a non-degenerate
    configuration; collinear or coincident points raise.
    """
    src = np.asarray(src, dtype=float).reshape(-1, 3)
    dst = np.asarray(dst, dtype=float).reshape(-1, 3)
    if len(src) != len(dst) or len(src) < 3:
        raise ValueError("degenerate correspondences")
    c_src = src.mean(axis=0)
    c_dst = dst.mean(axis=0)
    h = (src - c_src).T @ (dst - c_dst)
    u, s, vt = np.linalg.svd(h)
    if s[0] <= 0.0 or s[1] <= 1e-9 * s[0]:
        raise ValueError("degenerate correspondences")
    d = np.sign(np.linalg.det(vt.T @ u.T))
    rot = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    return PoseSE3(rot, c_dst - rot @ c_src)


def ransac_filter(
    pairs,
    local_map: ClusterMap,
    global_map: ClusterMap,
    params: RelocParams | None = None,
) -> list[MatchPair]:
    """Largest inlier subset of pairs under a sampled rigid transform.

    Samples of three centroid correspondences seed candidate transforms; a
    pair is an inlier when its global centroid sits within ransac_threshold
    of the transformed local centroid. Deterministic for a given seed.
    """
    params = params or RelocParams()
    pairs = list(pairs)
    if len(pairs) < 3:
        raise ValueError("insufficient pairs")
    src, dst = _pair_centroids(pairs, local_map, global_map)
    rng = np.random.default_rng(params.seed)
    best_mask: np.ndarray | None = None
    for _ in range(params.ransac_iterations):
        sample = rng.choice(len(pairs), size=3, replace=False)
        try:
            pose = estimate_rigid_transform(src[sample], dst[sample])
        except ValueError:
            continue
        residuals = np.linalg.norm(dst - pose.apply(src), axis=1)
        mask = residuals < params.ransac_threshold
        if best_mask is None or mask.sum() > best_mask.sum():
            best_mask = mask
    if best_mask is None or best_mask.sum() < 3:
        raise ValueError("insufficient pairs")
    return [p for p, keep in zip(pairs, best_mask) if keep]


def coarse_align(pairs, local_map: ClusterMap, global_map: ClusterMap) -> PoseSE3:
    """Closed-form rigid fit over the centroids of the surviving pairs."""
    src, dst = _pair_centroids(list(pairs), local_map, global_map)
    return estimate_rigid_transform(src, dst)


def _stacked_points(pairs, local_map: ClusterMap, global_map: ClusterMap) -> tuple[np.ndarray, np.ndarray]:
    src = [local_map.get(p.local_id).point_array() for p in pairs]
    dst = [global_map.get(p.global_id).point_array() for p in pairs]
    src = np.vstack(src) if src else np.empty((0, 3))
    dst = np.vstack(dst) if dst else np.empty((0, 3))
    return src, dst


def fine_align(
    pairs,
    local_map: ClusterMap,
    global_map: ClusterMap,
    init: PoseSE3,
    params: RelocParams | None = None,
) -> tuple[PoseSE3, float]:
    """Point-to-point ICP over the member points of the matched clusters.

    Starts at init and never returns a residual above the starting one. With
    no member points available the initial pose is returned with a centroid
    residual and a logged warning.
    """
    params = params or RelocParams()
    pairs = list(pairs)
    src, dst = _stacked_points(pairs, local_map, global_map)
    if len(src) == 0 or len(dst) == 0:
        log.warning("fine_align: no member points, falling back to initial pose")
        c_src, c_dst = _pair_centroids(pairs, local_map, global_map)
        residual = float(np.sqrt(np.mean(np.sum((c_dst - init.apply(c_src)) ** 2, axis=1))))
        return init, residual

    tree = cKDTree(dst)

    def rms(pose: PoseSE3) -> float:
        d, _ = tree.query(pose.apply(src))
        return float(np.sqrt(np.mean(d * d)))

    best_pose = init
    best_rms = rms(init)
    prev = best_rms
    pose = init
    for _ in range(params.icp_max_iterations):
        moved = pose.apply(src)
        _, idx = tree.query(moved)
        try:
            delta = estimate_rigid_transform(moved, dst[idx])
        except ValueError:
            break
        pose = delta @ pose
        current = rms(pose)
        if current < best_rms:
            best_pose, best_rms = pose, current
        if current > prev or prev - current < params.icp_convergence:
            break
        prev = current
    return best_pose, best_rms


def relocalize(
    local_map: ClusterMap,
    global_map: ClusterMap,
    assoc_params: AssociationParams | None = None,
    reloc_params: RelocParams | None = None,
) -> RelocResult:
    """Full relocalization of a local map inside a global map.

    Raises RelocalizationFailure with an enumerated reason when any stage
    leaves fewer than min_pairs correspondences or the fit degenerates.
    """
    assoc_params = assoc_params or AssociationParams()
    params = reloc_params or RelocParams()
    pairs: list[MatchPair] = associate_maps(local_map, global_map, assoc_params)
    if len(pairs) < params.min_pairs:
        raise RelocalizationFailure(FAILURE_NO_MATCHES)

    stages = ["consistency", "ransac"]
    if params.ransac_first:
        stages.reverse()
    for stage in stages:
        if stage == "consistency":
            pairs = geometric_consistency_filter(
                pairs, local_map, global_map, params.consistency_tolerance
            )
            if len(pairs) < params.min_pairs:
                raise RelocalizationFailure(FAILURE_CONSISTENCY)
        else:
            try:
                pairs = ransac_filter(pairs, local_map, global_map, params)
            except ValueError:
                raise RelocalizationFailure(FAILURE_RANSAC) from None
            if len(pairs) < params.min_pairs:
                raise RelocalizationFailure(FAILURE_RANSAC)

    try:
        coarse = coarse_align(pairs, local_map, global_map)
    except ValueError:
        raise RelocalizationFailure(FAILURE_DEGENERATE) from None
    pose, residual = fine_align(pairs, local_map, global_map, coarse, params)
    return RelocResult(pose=pose, inlier_pairs=tuple(pairs), residual_rms=residual)
