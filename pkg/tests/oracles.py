"""Brute-force reference implementations used to cross-check the package.

Everything here favors clarity over speed: linear scans instead of spatial
indexes, union-find instead of sparse graph components, and an association
routine written as plain nested loops over explicit feature tuples. The
production code must agree with these exactly on the same inputs.
"""

from __future__ import annotations

import math


def circ_diff(a: float, b: float) -> float:
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


def embed(d: float, theta_deg: float) -> tuple[float, float]:
    """Sub-edge feature as a plane vector; clockwise angles point down."""
    t = math.radians(theta_deg)
    return (d * math.cos(t), -d * math.sin(t))


def embedding_distance(d1: float, t1: float, d2: float, t2: float) -> float:
    x1, y1 = embed(d1, t1)
    x2, y2 = embed(d2, t2)
    return math.hypot(x1 - x2, y1 - y2)


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def oracle_components(coords, threshold: float) -> list[list[int]]:
    """Connected components under pairwise distance <= threshold.

    coords is a sequence of (x, y, z) triples. Groups come back ordered by
    their smallest member index, members ascending.
    """
    n = len(coords)
    uf = UnionFind(n)
    for i in range(n):
        xi, yi, zi = coords[i]
        for j in range(i + 1, n):
            xj, yj, zj = coords[j]
            dist = math.sqrt((xi - xj) ** 2 + (yi - yj) ** 2 + (zi - zj) ** 2)
            if dist <= threshold:
                uf.union(i, j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(uf.find(i), []).append(i)
    return [groups[root] for root in sorted(groups)]


def oracle_radius_search(centroids, center, radius: float):
    """ids within radius of center (inclusive), ordered by distance then id.

    centroids is a mapping id -> (x, y).
    """
    hits = []
    for cid, (x, y) in centroids.items():
        dist = math.hypot(x - center[0], y - center[1])
        if dist <= radius:
            hits.append((dist, cid))
    hits.sort()
    return [cid for _, cid in hits]


class _Star:
    """One cluster's edges with relative-angle tables, all precomputed."""

    def __init__(self, neighbor_ids, lengths, phis, label_codes):
        self.neighbor_ids = neighbor_ids
        self.lengths = lengths
        self.phis = phis
        self.label_codes = label_codes
        self.count = len(lengths)
        # theta[i][p]: clockwise angle of edge p measured from edge i
        self.theta = [
            [(phis[i] - phis[p]) % 360.0 for p in range(self.count)]
            for i in range(self.count)
        ]
        self.vec = [
            [embed(lengths[p], self.theta[i][p]) for p in range(self.count)]
            for i in range(self.count)
        ]


def _label_code(label) -> int:
    if (label.kind, label.category) == ("pole", -1):
        return 0
    if (label.kind, label.category) == ("trunk", -1):
        return 1
    return 2 + label.category


def _build_stars(cluster_map, search_radius: float) -> dict[int, _Star]:
    clusters = list(cluster_map)
    stars = {}
    for anchor in clusters:
        ax, ay = float(anchor.centroid2d[0]), float(anchor.centroid2d[1])
        edges = []
        for other in clusters:
            if other.cluster_id == anchor.cluster_id:
                continue
            dx = float(other.centroid2d[0]) - ax
            dy = float(other.centroid2d[1]) - ay
            length = math.hypot(dx, dy)
            if length == 0.0 or length > search_radius:
                continue
            phi = math.degrees(math.atan2(dy, dx))
            edges.append((length, other.cluster_id, phi, _label_code(other.label)))
        edges.sort(key=lambda e: (e[0], e[1]))
        stars[anchor.cluster_id] = _Star(
            [e[1] for e in edges],
            [e[0] for e in edges],
            [e[2] for e in edges],
            [e[3] for e in edges],
        )
    return stars


def _static_pairs(local: _Star, global_: _Star, length_tolerance: float):
    """Sub-edge pairs passing the anchor-independent label and length tests."""
    pairs = []
    for p in range(local.count):
        for q in range(global_.count):
            if local.label_codes[p] != global_.label_codes[q]:
                continue
            if abs(local.lengths[p] - global_.lengths[q]) >= length_tolerance:
                continue
            pairs.append((p, q))
    return pairs


def _oracle_candidate_distance(local, global_, static_pairs, i, j, params):
    """Score one local edge against one global candidate, or None."""
    if local.count - 1 < params.min_sub_edge_matches:
        return None
    if global_.count - 1 < params.min_sub_edge_matches:
        return None
    scored = []
    for p, q in static_pairs:
        if p == i or q == j:
            continue
        if circ_diff(local.theta[i][p], global_.theta[j][q]) >= params.angle_tolerance:
            continue
        lx, ly = local.vec[i][p]
        gx, gy = global_.vec[j][q]
        dist = math.hypot(lx - gx, ly - gy)
        if dist >= params.sub_edge_tolerance:
            continue
        scored.append((dist, p, q))
    scored.sort()
    used_p: set[int] = set()
    used_q: set[int] = set()
    k_se = 0
    total = 0.0
    for dist, p, q in scored:
        if p in used_p or q in used_q:
            continue
        used_p.add(p)
        used_q.add(q)
        k_se += 1
        total += dist
    if k_se < params.min_sub_edge_matches:
        return None
    return math.log((local.count - 1) / k_se) * total / k_se


def _oracle_match(local: _Star, global_: _Star, params) -> tuple[bool, int]:
    static_pairs = _static_pairs(local, global_, params.length_tolerance)
    matched = 0
    for i in range(local.count):
        order = sorted(
            range(global_.count),
            key=lambda j: abs(global_.lengths[j] - local.lengths[i]),
        )
        best = None
        for j in order[: params.candidate_count]:
            d = _oracle_candidate_distance(local, global_, static_pairs, i, j, params)
            if d is not None and (best is None or d < best):
                best = d
        if best is not None and best < params.edge_tolerance:
            matched += 1
    return matched >= params.min_edge_matches, matched


def oracle_associate(local_map, global_map, params) -> set[tuple[int, int, int]]:
    """Reference association: set of (local_id, global_id, matched_edges)."""
    local_stars = _build_stars(local_map, params.search_radius)
    global_stars = _build_stars(global_map, params.search_radius)
    out = set()
    for lc in local_map:
        best = None  # (matched_edges, global_id)
        for gc in global_map:
            if gc.label != lc.label:
                continue
            ok, k_e = _oracle_match(
                local_stars[lc.cluster_id], global_stars[gc.cluster_id], params
            )
            if ok and (best is None or k_e > best[0]):
                best = (k_e, gc.cluster_id)
        if best is not None:
            out.add((lc.cluster_id, best[1], best[0]))
    return out
